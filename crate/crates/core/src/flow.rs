//! Velocity recovery from vorticity and the vorticity right-hand side.
//!
//! `ψ` solves `Δ_h ψ = -ω` with `ψ = 0` on the whole boundary, and
//! `u = (v, w) = (ψ_z, -ψ_x)`. Advection uses Arakawa's Jacobian
//! `J(a, b) = a_x b_z - a_z b_x`, so that `u·∇q = -J(ψ, q)` and
//! `Σ q J(ψ, q) = 0` holds discretely.

use crate::error::{Error, Result};
use crate::grid::{self, BoundaryKind, ScalarField, StripGrid};
use crate::spectral::EllipticPlan;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GravityDir {
    e1: f64,
    e2: f64,
}

impl GravityDir {
    pub fn new(e1: f64, e2: f64) -> Result<Self> {
        let n = (e1 * e1 + e2 * e2).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Config("gravity direction must be a nonzero vector".into()));
        }
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("gravity direction must have unit norm, got {n}")));
        }
        Ok(GravityDir { e1, e2 })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(e1: f64, e2: f64) -> Result<Self> {
        let n = (e1 * e1 + e2 * e2).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Config("gravity direction must be a nonzero vector".into()));
        }
        Ok(GravityDir { e1: e1 / n, e2: e2 / n })
    }

    pub fn from_degrees(angle: f64) -> Self {
        let r = angle.to_radians();
        GravityDir { e1: r.cos(), e2: r.sin() }
    }

    pub fn e1(&self) -> f64 {
        self.e1
    }
    pub fn e2(&self) -> f64 {
        self.e2
    }

    /// Gravity along the strip axis: planar fronts are not excluded.
    pub fn is_axial(&self) -> bool {
        self.e2.abs() < 1e-12
    }
}

/// Reflection parity of a field across the walls `z = 0, λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub omega: ScalarField,
    pub psi: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
}

impl FlowState {
    pub fn zero(grid: StripGrid) -> Self {
        let z = ScalarField::zeros(grid, BoundaryKind::dirichlet_zero());
        FlowState { omega: z.clone(), psi: z.clone(), v: z.clone(), w: z }
    }

    pub fn grid(&self) -> &StripGrid {
        self.omega.grid()
    }

    /// `max |v|` over grid nodes.
    pub fn v_sup(&self) -> f64 {
        self.v.max_abs()
    }

    /// `max |u|` over grid nodes.
    pub fn u_sup(&self) -> f64 {
        self.v
            .values()
            .iter()
            .zip(self.w.values())
            .fold(0.0, |m, (a, b)| m.max((a * a + b * b).sqrt()))
    }

    /// `∫₀^λ v dz` at column `i` with the edge quadrature matching `v = ψ_z`.
    pub fn column_flux(&self, i: usize) -> f64 {
        let c = self.psi.column(i);
        c.windows(2).map(|p| p[1] - p[0]).sum()
    }

    /// Largest `|dx(v) + dz(w)|` over interior nodes.
    pub fn divergence_max(&self) -> f64 {
        let d = grid::dx(&self.v).zip_map(&grid::dz(&self.w), |a, b| a + b);
        let g = self.grid();
        let mut m: f64 = 0.0;
        for i in 1..g.nx() - 1 {
            for j in 1..g.nz() - 1 {
                m = m.max(d.get(i, j).abs());
            }
        }
        m
    }
}

pub fn velocity_from_vorticity(omega: &ScalarField) -> FlowState {
    let plan = EllipticPlan::new(*omega.grid(), BoundaryKind::dirichlet_zero()).expect("dirichlet plan");
    velocity_with_plan(&plan, omega)
}

/// As [`velocity_from_vorticity`], reusing a Dirichlet plan on the same grid.
pub fn velocity_with_plan(plan: &EllipticPlan, omega: &ScalarField) -> FlowState {
    let psi = plan
        .poisson(&omega.scale(-1.0))
        .expect("dirichlet Poisson is nonsingular")
        .with_bc(BoundaryKind::dirichlet_zero());
    let v = grid::dz(&psi);
    let w = grid::dx(&psi).scale(-1.0);
    let mut omega = omega.clone().with_bc(BoundaryKind::dirichlet_zero());
    omega.enforce_bc();
    FlowState { omega, psi, v, w }
}

/// Neighbor offsets in the order used by [`arakawa_stencil`].
pub const STENCIL: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

#[inline]
fn psi_at(psi: &ScalarField, i: usize, j: isize) -> f64 {
    let nz = psi.grid().nz() as isize;
    if j < 0 {
        -psi.get(i, (-j) as usize)
    } else if j >= nz {
        -psi.get(i, (2 * (nz - 1) - j) as usize)
    } else {
        psi.get(i, j as usize)
    }
}

/// Coefficients `c_n` with `J(ψ, q)(i, j) = Σ c_n q(neighbor n)`, neighbors in
/// [`STENCIL`] order. Ghost values of `ψ` across the walls are odd
/// reflections; `i` must be an interior column.
pub fn arakawa_stencil(psi: &ScalarField, i: usize, j: usize) -> [f64; 8] {
    let g = psi.grid();
    let s = 1.0 / (12.0 * g.hx() * g.hz());
    let j = j as isize;
    let a = |di: isize, dj: isize| psi_at(psi, (i as isize + di) as usize, j + dj);
    let (ae, aw, an, as_) = (a(1, 0), a(-1, 0), a(0, 1), a(0, -1));
    let (ane, anw, ase, asw) = (a(1, 1), a(-1, 1), a(1, -1), a(-1, -1));
    [
        s * (-(an - as_) - (ane - ase)),
        s * ((an - as_) + (anw - asw)),
        s * ((ae - aw) + (ane - anw)),
        s * (-(ae - aw) - (ase - asw)),
        s * (ae - an),
        s * (an - aw),
        s * (as_ - ae),
        s * (aw - as_),
    ]
}

/// Node index and reflection sign of neighbor `(di, dj)` of `(i, j)`.
#[inline]
pub fn neighbor(grid: &StripGrid, i: usize, j: usize, di: isize, dj: isize, parity: Parity) -> (usize, usize, f64) {
    let nz = grid.nz() as isize;
    let ii = (i as isize + di) as usize;
    let jj = j as isize + dj;
    if jj < 0 {
        (ii, (-jj) as usize, parity.sign())
    } else if jj >= nz {
        (ii, (2 * (nz - 1) - jj) as usize, parity.sign())
    } else {
        (ii, jj as usize, 1.0)
    }
}

/// `J(ψ, q)` at interior columns. Rows on the walls are included when `q`
/// is a wall unknown (`Parity::Even`, Neumann); otherwise they are zero.
pub fn arakawa(psi: &ScalarField, q: &ScalarField, parity: Parity) -> ScalarField {
    let g = *psi.grid();
    let (nx, nz) = (g.nx(), g.nz());
    let mut out = ScalarField::zeros(g, BoundaryKind::free());
    let (jlo, jhi) = match parity {
        Parity::Even => (0, nz),
        Parity::Odd => (1, nz - 1),
    };
    for i in 1..nx - 1 {
        for j in jlo..jhi {
            let c = arakawa_stencil(psi, i, j);
            let mut acc = 0.0;
            for (k, &(di, dj)) in STENCIL.iter().enumerate() {
                let (ii, jj, s) = neighbor(&g, i, j, di, dj, parity);
                acc += c[k] * s * q.get(ii, jj);
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// `u·∇q = -J(ψ, q)`.
pub fn advection(flow: &FlowState, q: &ScalarField, parity: Parity) -> ScalarField {
    arakawa(&flow.psi, q, parity).scale(-1.0)
}

/// Buoyancy torque `e₂T_x − e₁T_z` at interior nodes, zero on the boundary.
pub fn buoyancy(t: &ScalarField, ehat: GravityDir) -> ScalarField {
    let mut f = grid::dx(t).zip_map(&grid::dz(t), |tx, tz| ehat.e2 * tx - ehat.e1 * tz);
    zero_boundary(&mut f);
    f.with_bc(BoundaryKind::dirichlet_zero())
}

fn zero_boundary(f: &mut ScalarField) {
    let g = *f.grid();
    let (nx, nz) = (g.nx(), g.nz());
    for i in 0..nx {
        for j in 0..nz {
            if i == 0 || i == nx - 1 || j == 0 || j == nz - 1 {
                f.set(i, j, 0.0);
            }
        }
    }
}

/// `c ω_x − u·∇ω + σΔ_h ω + τρ(e₂T_x − e₁T_z)` at interior nodes (the time
/// derivative of ω in a frame moving with speed `c`); zero on the boundary.
pub fn vorticity_rhs(
    state: &FlowState,
    t: &ScalarField,
    rho: f64,
    sigma: f64,
    ehat: GravityDir,
    c: f64,
    tau: f64,
) -> ScalarField {
    let omega = &state.omega;
    let jac = arakawa(&state.psi, omega, Parity::Odd);
    let lap = grid::laplacian(omega);
    let wx = grid::dx(omega);
    let force = buoyancy(t, ehat);
    let g = *omega.grid();
    let mut out = ScalarField::zeros(g, BoundaryKind::dirichlet_zero());
    for i in 1..g.nx() - 1 {
        for j in 1..g.nz() - 1 {
            let v = c * wx.get(i, j) + jac.get(i, j) + sigma * lap.get(i, j) + tau * rho * force.get(i, j);
            out.set(i, j, v);
        }
    }
    out
}
