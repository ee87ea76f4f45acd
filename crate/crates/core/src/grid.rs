//! Vertex-centered tensor grid on `[-a, a] × [0, λ]` and the scalar field
//! container shared by every solver.
//!
//! Node `(i, j)` sits at `x = -a + i·hx`, `z = j·hz` and is stored at
//! `i·nz + j`, so z-lines are contiguous.

use crate::error::{Error, Result};

/// Smallest node count per direction.
pub const MIN_NODES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripGrid {
    a: f64,
    lambda: f64,
    nx: usize,
    nz: usize,
}

pub fn make_grid(a: f64, lambda: f64, nx: usize, nz: usize) -> Result<StripGrid> {
    StripGrid::new(a, lambda, nx, nz)
}

impl StripGrid {
    pub fn new(a: f64, lambda: f64, nx: usize, nz: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Config(format!("half-length a must be positive, got {a}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("width lambda must be positive, got {lambda}")));
        }
        if nx < MIN_NODES || nz < MIN_NODES {
            return Err(Error::Config(format!(
                "need nx, nz >= {MIN_NODES}, got nx={nx}, nz={nz}"
            )));
        }
        Ok(StripGrid { a, lambda, nx, nz })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn hx(&self) -> f64 {
        2.0 * self.a / (self.nx - 1) as f64
    }
    pub fn hz(&self) -> f64 {
        self.lambda / (self.nz - 1) as f64
    }
    pub fn len(&self) -> usize {
        self.nx * self.nz
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn area(&self) -> f64 {
        2.0 * self.a * self.lambda
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    /// Node abscissa; endpoints are exactly `±a`.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.a
        } else {
            -self.a + 2.0 * self.a * i as f64 / (self.nx - 1) as f64
        }
    }

    pub fn z(&self, j: usize) -> f64 {
        if j == self.nz - 1 {
            self.lambda
        } else {
            self.lambda * j as f64 / (self.nz - 1) as f64
        }
    }

    /// Trapezoid weight of column `i` (half a cell at either end).
    pub fn wx(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.hx()
        } else {
            self.hx()
        }
    }

    pub fn wz(&self, j: usize) -> f64 {
        if j == 0 || j == self.nz - 1 {
            0.5 * self.hz()
        } else {
            self.hz()
        }
    }

    /// Index of the first column with `x >= 0`.
    pub fn first_nonnegative_column(&self) -> usize {
        (0..self.nx).find(|&i| self.x(i) >= -1e-12 * self.a).unwrap_or(self.nx - 1)
    }

    /// Same geometry with both node counts doubled minus one, so every
    /// node of `self` is a node of the result.
    pub fn refined(&self) -> StripGrid {
        StripGrid { nx: 2 * self.nx - 1, nz: 2 * self.nz - 1, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum XBoundary {
    Dirichlet(f64),
    NeumannZero,
    /// Both ends must be periodic; column `nx-1` duplicates column 0.
    Periodic,
    /// No constraint: derived quantities such as gradients.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZBoundary {
    DirichletZero,
    NeumannZero,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryKind {
    pub x_left: XBoundary,
    pub x_right: XBoundary,
    pub z_walls: ZBoundary,
}

impl BoundaryKind {
    /// Burnt on the left, fresh on the right, insulating walls.
    pub fn temperature() -> Self {
        BoundaryKind {
            x_left: XBoundary::Dirichlet(1.0),
            x_right: XBoundary::Dirichlet(0.0),
            z_walls: ZBoundary::NeumannZero,
        }
    }

    /// Homogeneous Dirichlet on all four sides (vorticity, streamfunction).
    pub fn dirichlet_zero() -> Self {
        BoundaryKind {
            x_left: XBoundary::Dirichlet(0.0),
            x_right: XBoundary::Dirichlet(0.0),
            z_walls: ZBoundary::DirichletZero,
        }
    }

    pub fn neumann() -> Self {
        BoundaryKind {
            x_left: XBoundary::NeumannZero,
            x_right: XBoundary::NeumannZero,
            z_walls: ZBoundary::NeumannZero,
        }
    }

    pub fn periodic_neumann() -> Self {
        BoundaryKind {
            x_left: XBoundary::Periodic,
            x_right: XBoundary::Periodic,
            z_walls: ZBoundary::NeumannZero,
        }
    }

    pub fn free() -> Self {
        BoundaryKind { x_left: XBoundary::Free, x_right: XBoundary::Free, z_walls: ZBoundary::Free }
    }

    pub fn x_periodic(&self) -> bool {
        self.x_left == XBoundary::Periodic
    }

    /// Same boundary types with all Dirichlet values set to zero.
    pub fn homogeneous(&self) -> Self {
        let h = |b: XBoundary| match b {
            XBoundary::Dirichlet(_) => XBoundary::Dirichlet(0.0),
            other => other,
        };
        BoundaryKind { x_left: h(self.x_left), x_right: h(self.x_right), z_walls: self.z_walls }
    }

    pub fn validate(&self) -> Result<()> {
        let lp = self.x_left == XBoundary::Periodic;
        let rp = self.x_right == XBoundary::Periodic;
        if lp != rp {
            return Err(Error::Config("periodic x boundary must be set on both ends".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: StripGrid,
    values: Vec<f64>,
    bc: BoundaryKind,
}

impl ScalarField {
    pub fn zeros(grid: StripGrid, bc: BoundaryKind) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()], bc }
    }

    pub fn constant(grid: StripGrid, bc: BoundaryKind, value: f64) -> Self {
        ScalarField { grid, values: vec![value; grid.len()], bc }
    }

    pub fn from_fn(grid: StripGrid, bc: BoundaryKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x(i);
            for j in 0..grid.nz() {
                values.push(f(x, grid.z(j)));
            }
        }
        ScalarField { grid, values, bc }
    }

    pub fn from_values(grid: StripGrid, bc: BoundaryKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values, bc })
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }
    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn with_bc(mut self, bc: BoundaryKind) -> Self {
        self.bc = bc;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nz + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.grid.nz + j] = v;
    }

    /// The contiguous z-line at column `i`.
    pub fn column(&self, i: usize) -> &[f64] {
        let nz = self.grid.nz;
        &self.values[i * nz..(i + 1) * nz]
    }

    pub fn column_max(&self, i: usize) -> f64 {
        self.column(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn column_min(&self, i: usize) -> f64 {
        self.column(i).iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), bc: self.bc }
    }

    /// Pointwise `f(self, other)`; keeps the bc of `self`.
    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField { grid: self.grid, values, bc: self.bc }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// Overwrites boundary nodes with the values the bc prescribes.
    pub fn enforce_bc(&mut self) {
        let (nx, nz) = (self.grid.nx, self.grid.nz);
        if let XBoundary::Dirichlet(v) = self.bc.x_left {
            self.values[..nz].fill(v);
        }
        if let XBoundary::Dirichlet(v) = self.bc.x_right {
            self.values[(nx - 1) * nz..].fill(v);
        }
        if self.bc.x_periodic() {
            let (head, tail) = self.values.split_at_mut((nx - 1) * nz);
            tail.copy_from_slice(&head[..nz]);
        }
        if self.bc.z_walls == ZBoundary::DirichletZero {
            for i in 0..nx {
                self.values[i * nz] = 0.0;
                self.values[i * nz + nz - 1] = 0.0;
            }
        }
    }

    /// Largest deviation of a boundary node from its prescribed value.
    pub fn bc_violation(&self) -> f64 {
        let mut fixed = self.clone();
        fixed.enforce_bc();
        self.values.iter().zip(&fixed.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Shifts every column `k` places toward `-a`; vacated columns on the
    /// right are set to `fill`.
    pub fn shift_left(&mut self, k: usize, fill: f64) {
        let (nx, nz) = (self.grid.nx, self.grid.nz);
        let k = k.min(nx);
        self.values.copy_within(k * nz.., 0);
        self.values[(nx - k) * nz..].fill(fill);
    }

    pub fn norm_l1(&self) -> f64 {
        integrate(&self.map(f64::abs))
    }

    pub fn norm_l2(&self) -> f64 {
        integrate(&self.map(|v| v * v)).sqrt()
    }
}

/// Trapezoidal double integral over the strip.
pub fn integrate(field: &ScalarField) -> f64 {
    let g = field.grid;
    let mut total = 0.0;
    for i in 0..g.nx {
        let col: f64 = field.column(i).iter().enumerate().map(|(j, v)| g.wz(j) * v).sum();
        total += g.wx(i) * col;
    }
    total
}

/// Trapezoidal integral of the pointwise product.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    integrate(&f.zip_map(g, |a, b| a * b))
}

/// `∫|∇f|²` with the module difference stencils and trapezoid weights.
pub fn grad_sq_norm(field: &ScalarField) -> f64 {
    let fx = dx(field);
    let fz = dz(field);
    integrate(&fx.zip_map(&fz, |a, b| a * a + b * b))
}

/// `∫|∇f|²` from forward differences on cell edges, weighted so that
/// `Σ w f Δ_h f = -dirichlet_energy(f)` whenever `f` vanishes on Dirichlet
/// boundaries (discrete integration by parts).
pub fn dirichlet_energy(field: &ScalarField) -> f64 {
    let g = field.grid;
    let (hx, hz) = (g.hx(), g.hz());
    let mut ex = 0.0;
    for i in 0..g.nx - 1 {
        for j in 0..g.nz {
            let d = field.get(i + 1, j) - field.get(i, j);
            ex += g.wz(j) * d * d;
        }
    }
    let mut ez = 0.0;
    for i in 0..g.nx {
        let col = field.column(i);
        let s: f64 = col.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        ez += g.wx(i) * s;
    }
    ex / hx + ez / hz
}

fn x_neighbors(bc: &BoundaryKind, nx: usize, i: usize) -> Option<(usize, usize)> {
    if i > 0 && i < nx - 1 {
        Some((i - 1, i + 1))
    } else if bc.x_periodic() {
        // column nx-1 duplicates column 0
        Some((nx - 2, 1))
    } else {
        None
    }
}

/// `∂f/∂x`: centered in the interior, one-sided second order at `x = ±a`
/// (wrapped for periodic fields).
pub fn dx(field: &ScalarField) -> ScalarField {
    let g = field.grid;
    let (nx, nz) = (g.nx, g.nz);
    let ih2 = 1.0 / (2.0 * g.hx());
    let mut out = ScalarField::zeros(g, BoundaryKind::free());
    for i in 0..nx {
        match x_neighbors(&field.bc, nx, i) {
            Some((m, p)) => {
                for j in 0..nz {
                    out.values[i * nz + j] = (field.get(p, j) - field.get(m, j)) * ih2;
                }
            }
            None if i == 0 => {
                for j in 0..nz {
                    out.values[j] =
                        (-3.0 * field.get(0, j) + 4.0 * field.get(1, j) - field.get(2, j)) * ih2;
                }
            }
            None => {
                for j in 0..nz {
                    out.values[i * nz + j] = (3.0 * field.get(i, j) - 4.0 * field.get(i - 1, j)
                        + field.get(i - 2, j))
                        * ih2;
                }
            }
        }
    }
    out
}

/// `∂f/∂z`: centered in the interior, one-sided second order at the walls.
pub fn dz(field: &ScalarField) -> ScalarField {
    let g = field.grid;
    let nz = g.nz;
    let ih2 = 1.0 / (2.0 * g.hz());
    let mut out = ScalarField::zeros(g, BoundaryKind::free());
    for (src, dst) in field.values.chunks(nz).zip(out.values.chunks_mut(nz)) {
        dst[0] = (-3.0 * src[0] + 4.0 * src[1] - src[2]) * ih2;
        for j in 1..nz - 1 {
            dst[j] = (src[j + 1] - src[j - 1]) * ih2;
        }
        dst[nz - 1] = (3.0 * src[nz - 1] - 4.0 * src[nz - 2] + src[nz - 3]) * ih2;
    }
    out
}

/// Five-point Laplacian under the field's bc. Neumann sides use the
/// reflected ghost; Dirichlet boundary nodes get 0.
pub fn laplacian(field: &ScalarField) -> ScalarField {
    let g = field.grid;
    let (nx, nz) = (g.nx, g.nz);
    let (ihx2, ihz2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hz() * g.hz()));
    let bc = field.bc;
    let mut out = ScalarField::zeros(g, BoundaryKind::free());
    let z_dirichlet = bc.z_walls == ZBoundary::DirichletZero;
    for i in 0..nx {
        let (m, p) = if i > 0 && i < nx - 1 {
            (i - 1, i + 1)
        } else if bc.x_periodic() {
            (nx - 2, 1)
        } else {
            let side = if i == 0 { bc.x_left } else { bc.x_right };
            match side {
                XBoundary::NeumannZero => {
                    let n = if i == 0 { 1 } else { nx - 2 };
                    (n, n)
                }
                _ => continue,
            }
        };
        for j in 0..nz {
            if z_dirichlet && (j == 0 || j == nz - 1) {
                continue;
            }
            let c = field.get(i, j);
            let (jm, jp) = if j == 0 {
                (1, 1)
            } else if j == nz - 1 {
                (nz - 2, nz - 2)
            } else {
                (j - 1, j + 1)
            };
            let lx = (field.get(p, j) - 2.0 * c + field.get(m, j)) * ihx2;
            let lz = (field.get(i, jp) - 2.0 * c + field.get(i, jm)) * ihz2;
            out.values[i * nz + j] = lx + lz;
        }
    }
    if bc.x_periodic() {
        let (head, tail) = out.values.split_at_mut((nx - 1) * nz);
        tail.copy_from_slice(&head[..nz]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(a: f64, l: f64, nx: usize, nz: usize) -> StripGrid {
        make_grid(a, l, nx, nz).unwrap()
    }

    #[test]
    fn spacings() {
        let g = grid(10.0, 2.0, 11, 5);
        assert_eq!(g.hx(), 2.0);
        assert_eq!(g.hz(), 0.5);
        let g = grid(1.0, 1.0, 8, 8);
        assert!((g.hx() - 2.0 / 7.0).abs() < 1e-15);
        assert!((g.hz() - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(g.x(0), -1.0);
        assert_eq!(g.x(7), 1.0);
    }

    #[test]
    fn bad_grids_rejected() {
        assert!(make_grid(-1.0, 1.0, 10, 10).is_err());
        assert!(make_grid(1.0, 0.0, 10, 10).is_err());
        assert!(make_grid(1.0, 1.0, 4, 10).is_err());
        assert!(make_grid(1.0, 1.0, 10, 3).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = grid(10.0, 2.0, 41, 17);
        let one = ScalarField::constant(g, BoundaryKind::neumann(), 1.0);
        assert!((integrate(&one) - 40.0).abs() < 1e-12);
        let c = ScalarField::from_fn(g, BoundaryKind::neumann(), |_, z| (PI * z / 2.0).cos());
        assert!(integrate(&c).abs() < 1e-12);
        let x = ScalarField::from_fn(g, BoundaryKind::neumann(), |x, _| x);
        assert!(integrate(&x).abs() < 1e-12);
    }

    #[test]
    fn integrate_exact_for_bilinear() {
        let g = grid(1.5, 0.7, 9, 12);
        let f = ScalarField::from_fn(g, BoundaryKind::free(), |x, z| 2.0 + 3.0 * x - z + 0.5 * x * z);
        // ∫∫ over [-a,a]×[0,λ]: the odd-in-x terms drop.
        let (a, l) = (1.5, 0.7);
        let exact = 2.0 * 2.0 * a * l - 2.0 * a * l * l / 2.0;
        assert!((integrate(&f) - exact).abs() < 1e-12);
    }

    #[test]
    fn grad_sq_norm_examples() {
        let (a, l) = (3.0, 2.0);
        let g = grid(a, l, 33, 9);
        let ramp = ScalarField::from_fn(g, BoundaryKind::temperature(), |x, _| x / (2.0 * a) + 0.5);
        assert!((grad_sq_norm(&ramp) - l / (2.0 * a)).abs() < 1e-12);
        let g = grid(1.0, 1.0, 16, 64);
        let c = ScalarField::from_fn(g, BoundaryKind::neumann(), |_, z| (PI * z).cos());
        assert!((grad_sq_norm(&c) - PI * PI).abs() < 0.02 * PI * PI);
        assert_eq!(grad_sq_norm(&ScalarField::constant(g, BoundaryKind::neumann(), 3.0)), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let g = grid(2.0, 1.0, 17, 9);
        let x = ScalarField::from_fn(g, BoundaryKind::free(), |x, _| x);
        let d = dx(&x);
        for i in 1..16 {
            for j in 0..9 {
                assert!((d.get(i, j) - 1.0).abs() < 1e-14);
            }
        }
        let c = ScalarField::constant(g, BoundaryKind::free(), 2.5);
        assert!(dx(&c).values().iter().all(|&v| v == 0.0));
        assert!(dz(&c).values().iter().all(|&v| v == 0.0));
    }

    fn max_err(f: &ScalarField, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let g = f.grid();
        let mut e: f64 = 0.0;
        for i in 0..g.nx() {
            for j in 0..g.nz() {
                e = e.max((f.get(i, j) - exact(g.x(i), g.z(j))).abs());
            }
        }
        e
    }

    #[test]
    fn refinement_ratios() {
        let (a, l) = (1.0, 1.0);
        let f = |x: f64, z: f64| (0.7 * x).sin() * (PI * z / l).cos() + 0.3 * x * x * z;
        let fx = |x: f64, z: f64| 0.7 * (0.7 * x).cos() * (PI * z / l).cos() + 0.6 * x * z;
        let fz = |x: f64, z: f64| -(PI / l) * (0.7 * x).sin() * (PI * z / l).sin() + 0.3 * x * x;
        let mut ex = vec![];
        let mut ez = vec![];
        let mut en = vec![];
        // ∫∫ |∇f|² by a fine tensor Gauss-free oracle: trapezoid on a much finer grid
        // of the analytic gradient.
        let fine = grid(a, l, 2049, 1025);
        let exact_norm = integrate(&ScalarField::from_fn(fine, BoundaryKind::free(), |x, z| {
            fx(x, z).powi(2) + fz(x, z).powi(2)
        }));
        for n in [17usize, 33, 65] {
            let g = grid(a, l, n, n);
            let s = ScalarField::from_fn(g, BoundaryKind::free(), f);
            ex.push(max_err(&dx(&s), fx));
            ez.push(max_err(&dz(&s), fz));
            en.push((grad_sq_norm(&s) - exact_norm).abs());
        }
        for e in [&ex, &ez, &en] {
            for k in 0..2 {
                let r = e[k] / e[k + 1];
                assert!((3.6..=4.4).contains(&r), "ratio {r} from {e:?}");
            }
        }
    }

    #[test]
    fn dz_of_cosine_converges() {
        let mut errs = vec![];
        for nz in [17usize, 33, 65] {
            let g = grid(1.0, 2.0, 9, nz);
            let c = ScalarField::from_fn(g, BoundaryKind::neumann(), |_, z| (PI * z / 2.0).cos());
            errs.push(max_err(&dz(&c), |_, z| -(PI / 2.0) * (PI * z / 2.0).sin()));
        }
        for k in 0..2 {
            let r = errs[k] / errs[k + 1];
            assert!((3.6..=4.4).contains(&r), "{errs:?}");
        }
    }

    #[test]
    fn dirichlet_energy_is_summation_by_parts() {
        let g = grid(2.0, 1.0, 21, 13);
        for bc in [BoundaryKind::dirichlet_zero(), BoundaryKind::neumann(), BoundaryKind::periodic_neumann()] {
            let mut f = ScalarField::from_fn(g, bc, |x, z| {
                (1.3 * x).sin() * (2.0 * z).cos() + 0.2 * (x * z).cos() + (PI * x / 2.0).cos()
            });
            f.enforce_bc();
            let lhs = -inner(&f, &laplacian(&f));
            let rhs = dirichlet_energy(&f);
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "{bc:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn shift_moves_columns() {
        let g = grid(1.0, 1.0, 9, 8);
        let mut f = ScalarField::from_fn(g, BoundaryKind::free(), |x, z| x + 10.0 * z);
        let orig = f.clone();
        f.shift_left(3, 0.0);
        for i in 0..6 {
            assert_eq!(f.column(i), orig.column(i + 3));
        }
        assert!(f.column(6).iter().chain(f.column(8)).all(|&v| v == 0.0));
    }

    proptest! {
        #[test]
        fn integrate_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0, p in 0.1f64..3.0) {
            let g = grid(2.0, 1.5, 13, 9);
            let f = ScalarField::from_fn(g, BoundaryKind::free(), |x, z| (p * x).sin() + z * z);
            let h = ScalarField::from_fn(g, BoundaryKind::free(), |x, z| (x * z * p).exp());
            let comb = f.zip_map(&h, |u, v| alpha * u + beta * v);
            let lhs = integrate(&comb);
            let rhs = alpha * integrate(&f) + beta * integrate(&h);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs().max(rhs.abs()).max(1.0)));
        }

        #[test]
        fn mixed_differences_commute(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = grid(1.0, 1.0, 10, 9);
            let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = ScalarField::from_values(g, BoundaryKind::free(), vals).unwrap();
            let a = dz(&dx(&f));
            let b = dx(&dz(&f));
            let scale = 1.0 / (g.hx() * g.hz());
            for i in 1..g.nx() - 1 {
                for j in 1..g.nz() - 1 {
                    prop_assert!((a.get(i, j) - b.get(i, j)).abs() <= 8.0 * f64::EPSILON * scale);
                }
            }
        }

        #[test]
        fn derivative_translation_matches_shift(k in 1usize..5) {
            let g = grid(3.0, 1.0, 25, 8);
            let f = ScalarField::from_fn(g, BoundaryKind::free(), |x, z| (x * 0.8).sin() * (1.0 + z));
            let mut shifted = f.clone();
            shifted.shift_left(k, 0.0);
            let d0 = dx(&f);
            let d1 = dx(&shifted);
            for i in 1..g.nx() - 1 - k - 1 {
                for j in 0..g.nz() {
                    prop_assert_eq!(d1.get(i, j), d0.get(i + k, j));
                }
            }
        }
    }
}
