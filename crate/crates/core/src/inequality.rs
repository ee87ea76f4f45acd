//! Functional-inequality checks on the strip: the Nash-type ratio, the
//! implicit decay rate `n(t)`, and L¹→L∞ decay of a passive scalar under
//! incompressible flows.
//!
//! Decay runs are periodic in x with Neumann walls. Advection is donor-cell
//! in flux form with face fluxes taken from the streamfunction at cell
//! corners, so the discrete flow is exactly divergence-free, mass is
//! conserved and positivity is kept; diffusion is implicit and spectral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{self, BoundaryKind, ScalarField, StripGrid};
use crate::par::{self, Exec};
use crate::spectral::EllipticPlan;

/// `‖∇ψ‖₂²(‖ψ‖₁⁴ + λ³‖ψ‖₁‖ψ‖₂³)/(λ²‖ψ‖₂⁶)`.
pub fn nash_ratio(psi: &ScalarField, lambda: f64) -> Result<f64> {
    let l1 = psi.norm_l1();
    let l2 = psi.norm_l2();
    if !(l2 > 0.0) {
        return Err(Error::Config("nash ratio of a zero field".into()));
    }
    let grad = grid::dirichlet_energy(psi);
    Ok(grad * (l1.powi(4) + lambda.powi(3) * l1 * l2.powi(3)) / (lambda * lambda * l2.powi(6)))
}

/// The root of `n⁴/(1 + n³λ³) = C/(σλ²t)`.
pub fn solve_n_of_t(t: f64, lambda: f64, sigma: f64, c: f64) -> f64 {
    let target = c / (sigma * lambda * lambda * t);
    let g = |n: f64| n.powi(4) / (1.0 + (n * lambda).powi(3));
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest `C` with `n(t; C) >= y` at every `(t, y)`: inverting the
/// defining relation gives `C = σλ²t·y⁴/(1 + y³λ³)` pointwise.
pub fn fit_c(points: &[(f64, f64)], lambda: f64, sigma: f64) -> f64 {
    points
        .iter()
        .map(|&(t, y)| sigma * lambda * lambda * t * y.powi(4) / (1.0 + (y * lambda).powi(3)))
        .fold(0.0, f64::max)
}

/// Frozen incompressible flows given by their streamfunction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowSampler {
    Zero,
    /// `v = A cos(πz/λ)`, `w = 0`.
    Shear { amplitude: f64 },
    /// Convection rolls, `cells_x` across the period and `cells_z` across the
    /// strip, with `max|v| = A`.
    Cellular { amplitude: f64, cells_x: usize, cells_z: usize },
}

impl FlowSampler {
    pub fn psi(&self, grid: &StripGrid, x: f64, z: f64) -> f64 {
        let (a, l) = (grid.a(), grid.lambda());
        match *self {
            FlowSampler::Zero => 0.0,
            FlowSampler::Shear { amplitude } => amplitude * l / PI * (PI * z / l).sin(),
            FlowSampler::Cellular { amplitude, cells_x, cells_z } => {
                let kx = PI * cells_x as f64 / (2.0 * a);
                let kz = PI * cells_z as f64 / l;
                amplitude / kz * (kx * (x + a)).sin() * (kz * z).sin()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FlowSampler::Cellular { cells_x, cells_z, .. } if cells_x % 2 == 1 || cells_x == 0 || cells_z == 0 => {
                Err(Error::Config("cellular flow needs an even, nonzero cells_x and cells_z >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            FlowSampler::Zero => "zero".into(),
            FlowSampler::Shear { amplitude } => format!("shear({amplitude})"),
            FlowSampler::Cellular { amplitude, cells_x, cells_z } => format!("cellular({amplitude},{cells_x},{cells_z})"),
        }
    }
}

/// Volume fluxes through the faces of the control volumes around each node.
/// `fx[i][j]` crosses the face between columns `i` and `i+1` (mod m),
/// `fz[i][j]` the face between rows `j` and `j+1`.
pub struct FaceFluxes {
    m: usize,
    nz: usize,
    fx: Vec<f64>,
    fz: Vec<f64>,
}

impl FaceFluxes {
    pub fn new(grid: &StripGrid, flow: &FlowSampler) -> Self {
        let (nx, nz) = (grid.nx(), grid.nz());
        let m = nx - 1;
        let (hx, hz) = (grid.hx(), grid.hz());
        // corner z-levels: the walls and the midpoints between rows
        let zc: Vec<f64> = (0..=nz)
            .map(|k| if k == 0 { 0.0 } else if k == nz { grid.lambda() } else { grid.z(k) - 0.5 * hz })
            .collect();
        let mut corner = vec![0.0; m * (nz + 1)];
        for i in 0..m {
            let x = grid.x(i) + 0.5 * hx;
            for (k, &z) in zc.iter().enumerate() {
                corner[i * (nz + 1) + k] = flow.psi(grid, x, z);
            }
        }
        let c = |i: usize, k: usize| corner[i * (nz + 1) + k];
        let mut fx = vec![0.0; m * nz];
        let mut fz = vec![0.0; m * nz];
        for i in 0..m {
            let im = (i + m - 1) % m;
            for j in 0..nz {
                fx[i * nz + j] = c(i, j + 1) - c(i, j);
                if j + 1 < nz {
                    fz[i * nz + j] = -(c(i, j + 1) - c(im, j + 1));
                }
            }
        }
        FaceFluxes { m, nz, fx, fz }
    }

    /// Net outflow of each control volume; zero up to round-off.
    pub fn divergence(&self) -> Vec<f64> {
        let (m, nz) = (self.m, self.nz);
        let mut out = vec![0.0; m * nz];
        for i in 0..m {
            let im = (i + m - 1) % m;
            for j in 0..nz {
                let mut d = self.fx[i * nz + j] - self.fx[im * nz + j] + self.fz[i * nz + j];
                if j > 0 {
                    d -= self.fz[i * nz + j - 1];
                }
                out[i * nz + j] = d;
            }
        }
        out
    }

    /// Largest stable step: the outgoing flux of any volume moves at most
    /// half its content.
    pub fn max_dt(&self, grid: &StripGrid) -> f64 {
        let (m, nz) = (self.m, self.nz);
        let mut dt = f64::INFINITY;
        for i in 0..m {
            let im = (i + m - 1) % m;
            for j in 0..nz {
                let mut out = self.fx[i * nz + j].max(0.0) + (-self.fx[im * nz + j]).max(0.0);
                out += self.fz[i * nz + j].max(0.0);
                if j > 0 {
                    out += (-self.fz[i * nz + j - 1]).max(0.0);
                }
                if out > 0.0 {
                    dt = dt.min(0.5 * grid.hx() * grid.wz(j) / out);
                }
            }
        }
        dt
    }

    /// `q ← q − dt·div(q u)` with upwind face values.
    fn advect(&self, grid: &StripGrid, q: &mut ScalarField, dt: f64) {
        let (m, nz) = (self.m, self.nz);
        let old: Vec<f64> = q.values()[..m * nz].to_vec();
        let up = |f: f64, a: f64, b: f64| if f > 0.0 { f * a } else { f * b };
        let mut px = vec![0.0; m * nz];
        let mut pz = vec![0.0; m * nz];
        for i in 0..m {
            let ip = (i + 1) % m;
            for j in 0..nz {
                let k = i * nz + j;
                px[k] = up(self.fx[k], old[k], old[ip * nz + j]);
                if j + 1 < nz {
                    pz[k] = up(self.fz[k], old[k], old[k + 1]);
                }
            }
        }
        let vals = q.values_mut();
        for i in 0..m {
            let im = (i + m - 1) % m;
            for j in 0..nz {
                let k = i * nz + j;
                let mut d = px[k] - px[im * nz + j] + pz[k];
                if j > 0 {
                    d -= pz[k - 1];
                }
                vals[k] = old[k] - dt * d / (grid.hx() * grid.wz(j));
            }
        }
        q.enforce_bc();
    }
}

/// Gaussian initial data, normalized to unit discrete L¹ norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blob {
    pub x0: f64,
    pub z0: f64,
    pub wx: f64,
    pub wz: f64,
}

impl Blob {
    pub fn sample(&self, grid: StripGrid) -> Result<ScalarField> {
        let f = ScalarField::from_fn(grid, BoundaryKind::periodic_neumann(), |x, z| {
            (-((x - self.x0) / self.wx).powi(2) / 2.0 - ((z - self.z0) / self.wz).powi(2) / 2.0).exp()
        });
        let mass = f.norm_l1();
        if !(mass > 0.0) {
            return Err(Error::Config("initial blob has zero mass on this grid".into()));
        }
        let mut f = f.scale(1.0 / mass);
        f.enforce_bc();
        Ok(f)
    }
}

#[derive(Clone, Debug)]
pub struct DecayExperiment {
    pub grid: StripGrid,
    pub flow: FlowSampler,
    pub psi0: Blob,
    pub sigma: f64,
    pub t_end: f64,
    /// Upper bound on the step; the advective limit may lower it.
    pub dt: f64,
    pub exec: Exec,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecaySample {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
    pub l1: f64,
}

impl DecayExperiment {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        if !(self.sigma > 0.0 && self.t_end >= 0.0 && self.dt > 0.0) {
            return Err(Error::Config("decay experiment needs sigma > 0, t_end >= 0, dt > 0".into()));
        }
        Ok(())
    }
}

/// Evolves the passive scalar and records its norms after every step.
pub fn decay_experiment(exp: &DecayExperiment) -> Result<Vec<DecaySample>> {
    decay_run(exp).map(|r| r.0)
}

/// As [`decay_experiment`], also returning the final field.
pub fn decay_run(exp: &DecayExperiment) -> Result<(Vec<DecaySample>, ScalarField)> {
    exp.validate()?;
    let g = exp.grid;
    let plan = EllipticPlan::new(g, BoundaryKind::periodic_neumann())?.with_exec(exp.exec);
    let faces = FaceFluxes::new(&g, &exp.flow);
    let dt_max = exp.dt.min(faces.max_dt(&g));
    let mut q = exp.psi0.sample(g)?;
    let record = |t: f64, q: &ScalarField| DecaySample { t, linf: q.max_abs(), l2: q.norm_l2(), l1: q.norm_l1() };
    let mut out = vec![record(0.0, &q)];
    let mut t = 0.0;
    while t < exp.t_end {
        let remaining = exp.t_end - t;
        let dt = if dt_max >= remaining * (1.0 - 1e-9) { remaining } else { dt_max };
        faces.advect(&g, &mut q, dt);
        q = plan.helmholtz(&q, exp.sigma * dt)?;
        t = if dt == remaining { exp.t_end } else { t + dt };
        if !q.is_finite() {
            return Err(Error::BlowUp { t });
        }
        out.push(record(t, &q));
    }
    Ok((out, q))
}

/// `‖ψ(t)‖∞` of the semi-discrete heat flow, evaluated exactly in the
/// eigenbasis of the periodic/Neumann Laplacian.
pub fn heat_semigroup_linf(grid: StripGrid, psi0: &Blob, sigma: f64, times: &[f64]) -> Result<Vec<f64>> {
    let plan = EllipticPlan::new(grid, BoundaryKind::periodic_neumann())?;
    let q0 = psi0.sample(grid)?;
    Ok(times.iter().map(|&t| plan.apply_multiplier(&q0, |mu| (sigma * t * mu).exp()).max_abs()).collect())
}

/// `sup λ√(σt)‖ψ(t)‖∞/‖ψ₀‖₁` over samples with `t ∈ [t_lo, t_hi]`.
pub fn decay_constant(series: &[DecaySample], lambda: f64, sigma: f64, t_lo: f64, t_hi: f64) -> f64 {
    let m0 = series[0].l1;
    series
        .iter()
        .filter(|s| s.t >= t_lo && s.t <= t_hi)
        .map(|s| lambda * (sigma * s.t).sqrt() * s.linf / m0)
        .fold(0.0, f64::max)
}

/// Constants `K` with `‖ψ(t)‖∞ <= K n²(t)‖ψ₀‖₁` and `<= K n²(t/2)‖ψ₀‖₁`
/// over `[t_lo, t_hi]`.
pub fn linf_constants(series: &[DecaySample], lambda: f64, sigma: f64, c: f64, t_lo: f64, t_hi: f64) -> (f64, f64) {
    let m0 = series[0].l1;
    let (mut k1, mut k2) = (0.0f64, 0.0f64);
    for s in series.iter().filter(|s| s.t >= t_lo && s.t <= t_hi) {
        let n = solve_n_of_t(s.t, lambda, sigma, c);
        let nh = solve_n_of_t(s.t / 2.0, lambda, sigma, c);
        k1 = k1.max(s.linf / (n * n * m0));
        k2 = k2.max(s.linf / (nh * nh * m0));
    }
    (k1, k2)
}

/// Random smooth nonnegative fields: sums of one to four anisotropic
/// Gaussian bumps, each modulated by `1 + ε cos(kπz/λ)` with `|ε| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzField {
    bumps: Vec<[f64; 7]>,
}

impl FuzzField {
    pub fn corpus(seed: u64, count: usize, a: f64, lambda: f64) -> Vec<FuzzField> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let n = rng.gen_range(1..=4);
                let bumps = (0..n)
                    .map(|_| {
                        [
                            rng.gen_range(0.1..1.0),
                            rng.gen_range(-a / 2.0..a / 2.0),
                            rng.gen_range(0.0..lambda),
                            rng.gen_range(0.3..a / 8.0),
                            rng.gen_range(0.15 * lambda..2.0 * lambda),
                            rng.gen_range(-0.9..0.9),
                            rng.gen_range(0..4) as f64,
                        ]
                    })
                    .collect();
                FuzzField { bumps }
            })
            .collect()
    }

    pub fn sample(&self, grid: StripGrid) -> ScalarField {
        let l = grid.lambda();
        ScalarField::from_fn(grid, BoundaryKind::neumann(), |x, z| {
            self.bumps
                .iter()
                .map(|&[amp, x0, z0, wx, wz, eps, k]| {
                    let g = (-((x - x0) / wx).powi(2) / 2.0 - ((z - z0) / wz).powi(2) / 2.0).exp();
                    amp * g * (1.0 + eps * (k * PI * z / l).cos())
                })
                .sum()
        })
    }
}

/// Minimum Nash ratio over a corpus on one grid.
pub fn nash_minimum(corpus: &[FuzzField], grid: StripGrid, exec: Exec) -> Result<f64> {
    let ratios = par::map(exec, corpus, |f| nash_ratio(&f.sample(grid), grid.lambda()));
    ratios.into_iter().try_fold(f64::INFINITY, |m, r| Ok(m.min(r?)))
}
