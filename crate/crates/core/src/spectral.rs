//! Fast direct solvers for `Δ_h u = r` and `(I - sΔ_h)u = r` on the strip.
//!
//! The 5-point Laplacian separates into 1D second differences whose
//! eigenvectors are discrete sines (Dirichlet), cosines (Neumann with a
//! reflected ghost) or Fourier modes (periodic). Each direction is
//! diagonalized by the matching transform, evaluated through an FFT of the
//! odd/even extension.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, ScalarField, StripGrid, XBoundary, ZBoundary};
use crate::par::{self, Exec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Sine,
    Cosine,
    Fourier,
}

#[derive(Clone)]
struct Axis {
    kind: TransformKind,
    /// Number of unknowns along the axis.
    m: usize,
    /// Node index of the first unknown.
    offset: usize,
    eig: Vec<f64>,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Axis {
    fn new(kind: TransformKind, n: usize, h: f64, planner: &mut FftPlanner<f64>) -> Axis {
        let (m, offset, len) = match kind {
            TransformKind::Sine => (n - 2, 1, 2 * (n - 1)),
            TransformKind::Cosine => (n, 0, 2 * (n - 1)),
            TransformKind::Fourier => (n - 1, 0, n - 1),
        };
        let c = 4.0 / (h * h);
        let eig = (0..m)
            .map(|k| {
                let s = match kind {
                    TransformKind::Sine => (std::f64::consts::PI * (k + 1) as f64 / (2 * (m + 1)) as f64).sin(),
                    TransformKind::Cosine => (std::f64::consts::PI * k as f64 / (2 * (n - 1)) as f64).sin(),
                    TransformKind::Fourier => (std::f64::consts::PI * k as f64 / m as f64).sin(),
                };
                -c * s * s
            })
            .collect();
        Axis {
            kind,
            m,
            offset,
            eig,
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    /// Unnormalized sine or cosine transform of one line; applying it twice
    /// multiplies by `1 / inverse_scale`.
    fn real_transform(&self, x: &[f64], out: &mut [f64], buf: &mut [Complex64]) {
        let m = self.m;
        match self.kind {
            TransformKind::Sine => {
                buf[0] = Complex64::new(0.0, 0.0);
                buf[m + 1] = Complex64::new(0.0, 0.0);
                for k in 1..=m {
                    buf[k] = Complex64::new(x[k - 1], 0.0);
                    buf[self.len - k] = Complex64::new(-x[k - 1], 0.0);
                }
                self.fwd.process(buf);
                for k in 1..=m {
                    out[k - 1] = -0.5 * buf[k].im;
                }
            }
            TransformKind::Cosine => {
                for j in 0..m {
                    buf[j] = Complex64::new(x[j], 0.0);
                }
                for j in 1..m - 1 {
                    buf[self.len - j] = Complex64::new(x[j], 0.0);
                }
                self.fwd.process(buf);
                for k in 0..m {
                    out[k] = 0.5 * buf[k].re;
                }
            }
            TransformKind::Fourier => unreachable!("Fourier lines are handled in complex form"),
        }
    }

    fn inverse_scale(&self) -> f64 {
        match self.kind {
            TransformKind::Sine => 2.0 / (self.m + 1) as f64,
            TransformKind::Cosine => 2.0 / (self.m - 1) as f64,
            TransformKind::Fourier => 1.0 / self.m as f64,
        }
    }

    /// Applies `line ↦ T⁻¹ diag(g_k) T line` in place.
    fn filter_line(&self, line: &mut [f64], g: impl Fn(usize) -> f64, buf: &mut [Complex64], tmp: &mut [f64]) {
        match self.kind {
            TransformKind::Fourier => {
                for (b, &v) in buf.iter_mut().zip(line.iter()) {
                    *b = Complex64::new(v, 0.0);
                }
                self.fwd.process(buf);
                for (k, b) in buf.iter_mut().enumerate() {
                    *b *= g(k);
                }
                self.inv.process(buf);
                let s = self.inverse_scale();
                for (v, b) in line.iter_mut().zip(buf.iter()) {
                    *v = b.re * s;
                }
            }
            _ => {
                self.real_transform(line, tmp, buf);
                for (k, t) in tmp.iter_mut().enumerate() {
                    *t *= g(k);
                }
                self.real_transform(tmp, line, buf);
                let s = self.inverse_scale();
                line.iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    /// Discrete eigenvector `k` sampled at node `j` (including boundary nodes).
    fn mode(&self, k: usize, j: usize) -> f64 {
        use std::f64::consts::PI;
        match self.kind {
            TransformKind::Sine => (PI * (k + 1) as f64 * j as f64 / (self.m + 1) as f64).sin(),
            TransformKind::Cosine => (PI * k as f64 * j as f64 / (self.m - 1) as f64).cos(),
            TransformKind::Fourier => (2.0 * PI * k as f64 * j as f64 / self.m as f64).cos(),
        }
    }
}

/// Precomputed transforms and eigenvalues for one boundary configuration.
#[derive(Clone)]
pub struct EllipticPlan {
    grid: StripGrid,
    bc: BoundaryKind,
    x: Axis,
    z: Axis,
    exec: Exec,
}

impl std::fmt::Debug for EllipticPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticPlan")
            .field("grid", &self.grid)
            .field("bc", &self.bc)
            .field("transform_x", &self.x.kind)
            .field("transform_z", &self.z.kind)
            .finish()
    }
}

fn x_kind(bc: &BoundaryKind) -> Result<TransformKind> {
    match (bc.x_left, bc.x_right) {
        (XBoundary::Dirichlet(_), XBoundary::Dirichlet(_)) => Ok(TransformKind::Sine),
        (XBoundary::NeumannZero, XBoundary::NeumannZero) => Ok(TransformKind::Cosine),
        (XBoundary::Periodic, XBoundary::Periodic) => Ok(TransformKind::Fourier),
        other => Err(Error::Config(format!("no fast transform for x boundaries {other:?}"))),
    }
}

fn z_kind(bc: &BoundaryKind) -> Result<TransformKind> {
    match bc.z_walls {
        ZBoundary::DirichletZero => Ok(TransformKind::Sine),
        ZBoundary::NeumannZero => Ok(TransformKind::Cosine),
        ZBoundary::Free => Err(Error::Config("no fast transform for free z boundaries".into())),
    }
}

impl EllipticPlan {
    pub fn new(grid: StripGrid, bc: BoundaryKind) -> Result<Self> {
        bc.validate()?;
        let mut planner = FftPlanner::new();
        let x = Axis::new(x_kind(&bc)?, grid.nx(), grid.hx(), &mut planner);
        let z = Axis::new(z_kind(&bc)?, grid.nz(), grid.hz(), &mut planner);
        Ok(EllipticPlan { grid, bc, x, z, exec: Exec::default() })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }
    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }
    pub fn transform_kind(&self) -> (TransformKind, TransformKind) {
        (self.x.kind, self.z.kind)
    }
    pub fn eigenvalues_x(&self) -> &[f64] {
        &self.x.eig
    }
    pub fn eigenvalues_z(&self) -> &[f64] {
        &self.z.eig
    }

    pub fn eigenvalue(&self, kx: usize, kz: usize) -> f64 {
        self.x.eig[kx] + self.z.eig[kz]
    }

    pub fn has_zero_mode(&self) -> bool {
        self.x.eig[0] == 0.0 && self.z.eig[0] == 0.0
    }

    /// The `(kx, kz)` eigenvector of `Δ_h` under this plan's (homogeneous) bc.
    pub fn eigenmode(&self, kx: usize, kz: usize) -> ScalarField {
        let g = self.grid;
        let mut f = ScalarField::zeros(g, self.bc.homogeneous());
        for i in 0..g.nx() {
            let mx = self.x.mode(kx, i);
            for j in 0..g.nz() {
                f.set(i, j, mx * self.z.mode(kz, j));
            }
        }
        f.enforce_bc();
        f
    }

    /// Applies `g(μ)` to every eigen-component of the unknown-node values of
    /// `f`. Boundary nodes of the result follow the homogeneous bc.
    pub fn apply_multiplier(&self, f: &ScalarField, g: impl Fn(f64) -> f64 + Sync) -> ScalarField {
        assert_eq!(f.grid(), &self.grid, "field and plan grids differ");
        let (mx, mz) = (self.x.m, self.z.m);
        let (ox, oz) = (self.x.offset, self.z.offset);
        let zax = &self.z;
        let xax = &self.x;

        // z-transform of every x-line of unknowns, stored [i][kz].
        let mut a = vec![0.0; mx * mz];
        par::for_each_chunk(self.exec, &mut a, mz, |i, out| {
            let mut buf = vec![Complex64::new(0.0, 0.0); zax.len];
            let col = &f.column(ox + i)[oz..oz + mz];
            zax.real_transform(col, out, &mut buf);
        });

        let mut b = transpose(&a, mx, mz);
        let zeig = &zax.eig;
        par::for_each_chunk(self.exec, &mut b, mx, |kz, line| {
            let mut buf = vec![Complex64::new(0.0, 0.0); xax.len];
            let mut tmp = vec![0.0; mx];
            let mu_z = zeig[kz];
            xax.filter_line(line, |kx| g(xax.eig[kx] + mu_z), &mut buf, &mut tmp);
        });
        let mut a = transpose(&b, mz, mx);

        let zscale = zax.inverse_scale();
        par::for_each_chunk(self.exec, &mut a, mz, |_, line| {
            let mut buf = vec![Complex64::new(0.0, 0.0); zax.len];
            let mut tmp = vec![0.0; mz];
            zax.real_transform(line, &mut tmp, &mut buf);
            for (v, t) in line.iter_mut().zip(&tmp) {
                *v = t * zscale;
            }
        });

        let mut out = ScalarField::zeros(self.grid, self.bc.homogeneous());
        let nz = self.grid.nz();
        let vals = out.values_mut();
        for i in 0..mx {
            let dst = &mut vals[(ox + i) * nz + oz..(ox + i) * nz + oz + mz];
            dst.copy_from_slice(&a[i * mz..(i + 1) * mz]);
        }
        out.enforce_bc();
        out
    }

    /// Solves `Δ_h u = rhs` at unknown nodes with homogeneous boundary data.
    pub fn poisson(&self, rhs: &ScalarField) -> Result<ScalarField> {
        if self.has_zero_mode() {
            return Err(Error::Config("Poisson problem is singular for all-Neumann/periodic plans".into()));
        }
        Ok(self.apply_multiplier(rhs, |mu| 1.0 / mu))
    }

    /// Solves `(I - sΔ_h)u = rhs`, with the inhomogeneous x-Dirichlet data of
    /// the plan's bc handled by the linear lift.
    pub fn helmholtz(&self, rhs: &ScalarField, s: f64) -> Result<ScalarField> {
        if !(s >= 0.0) {
            return Err(Error::Config(format!("helmholtz shift must be nonnegative, got {s}")));
        }
        let lift = dirichlet_lift(&self.grid, &self.bc);
        let reduced = rhs.zip_map(&lift, |r, l| r - l);
        let v = self.apply_multiplier(&reduced, |mu| 1.0 / (1.0 - s * mu));
        let mut u = v.zip_map(&lift, |a, b| a + b).with_bc(self.bc);
        u.enforce_bc();
        Ok(u)
    }

    /// `Δ_h f` evaluated in the eigenbasis; used to cross-check the stencil.
    pub fn spectral_laplacian(&self, f: &ScalarField) -> ScalarField {
        self.apply_multiplier(f, |mu| mu)
    }
}

fn transpose(src: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut dst = vec![0.0; src.len()];
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
    dst
}

/// The field that is linear in x, constant in z, and carries the
/// x-Dirichlet values of `bc` (zero for any other x boundary type).
/// It is annihilated by `Δ_h`.
pub fn dirichlet_lift(grid: &StripGrid, bc: &BoundaryKind) -> ScalarField {
    let (l, r) = match (bc.x_left, bc.x_right) {
        (XBoundary::Dirichlet(l), XBoundary::Dirichlet(r)) => (l, r),
        _ => (0.0, 0.0),
    };
    let a = grid.a();
    ScalarField::from_fn(*grid, BoundaryKind::free(), |x, _| {
        let s = (x + a) / (2.0 * a);
        l * (1.0 - s) + r * s
    })
}

/// `ψ` with `Δ_h ψ = rhs` in the interior and `ψ = 0` on the boundary.
pub fn poisson_dirichlet(rhs: &ScalarField) -> ScalarField {
    let plan = EllipticPlan::new(*rhs.grid(), BoundaryKind::dirichlet_zero()).expect("dirichlet plan");
    plan.poisson(rhs).expect("dirichlet Poisson is nonsingular")
}

pub fn helmholtz_solve(rhs: &ScalarField, s: f64, bc: BoundaryKind) -> Result<ScalarField> {
    EllipticPlan::new(*rhs.grid(), bc)?.helmholtz(rhs, s)
}

/// `1/sqrt|μ|` for the smallest-magnitude nonzero eigenvalue `μ` of `Δ_h`.
pub fn poincare_mode_constant(bc: &BoundaryKind, grid: &StripGrid) -> Result<f64> {
    let plan = EllipticPlan::new(*grid, *bc)?;
    if plan.x.eig[0] == 0.0 && plan.z.eig[0] == 0.0 && plan.x.m * plan.z.m > 0 {
        let nonzero_x = plan.x.eig.iter().any(|&e| e != 0.0);
        let nonzero_z = plan.z.eig.iter().any(|&e| e != 0.0);
        if !(nonzero_x || nonzero_z) {
            return Err(Error::Config("no nonzero eigenvalue".into()));
        }
        if matches!(plan.x.kind, TransformKind::Cosine | TransformKind::Fourier)
            && plan.z.kind == TransformKind::Cosine
        {
            return Err(Error::Config("Poincaré constant needs a Dirichlet direction".into()));
        }
    }
    let mut best = f64::INFINITY;
    for &ex in &plan.x.eig {
        for &ez in &plan.z.eig {
            let mu = (ex + ez).abs();
            if mu > 0.0 && mu < best {
                best = mu;
            }
        }
    }
    Ok(1.0 / best.sqrt())
}
