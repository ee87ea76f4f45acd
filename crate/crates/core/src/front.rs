//! Steady traveling fronts on the truncated strip by continuation in the
//! homotopy parameter τ.
//!
//! At each τ the pair `(T, c)` is found by Newton's method on the bordered
//! system formed by the temperature equation and the normalization
//! `max_{x>=0} T = θ₀`, with the flow frozen; the vorticity is updated by a
//! damped fixed-point loop around it. After every accepted τ the fixed-`c`
//! solver [`solve_steady`] is run at both ends of the a priori speed bracket
//! to confirm that the normalization residual changes sign across it.

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::flow::{self, arakawa_stencil, neighbor, FlowState, GravityDir, Parity, STENCIL};
use crate::grid::{BoundaryKind, ScalarField, StripGrid};
use crate::reaction::ReactionModel;
use crate::spectral::EllipticPlan;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Continuation {
    /// Number of uniform τ increments from 0 to 1.
    pub tau_steps: usize,
    pub picard_damping: f64,
    pub inner_tol: f64,
    pub c_tol: f64,
    pub max_inner: usize,
    /// Step halvings allowed before a τ increment is declared failed.
    pub max_halvings: usize,
    /// Run the bracket-sign monitor after each accepted τ.
    pub check_bracket: bool,
}

impl Default for Continuation {
    fn default() -> Self {
        Continuation {
            tau_steps: 10,
            picard_damping: 0.8,
            inner_tol: 1e-9,
            c_tol: 1e-9,
            max_inner: 400,
            max_halvings: 4,
            check_bracket: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrontProblem {
    pub grid: StripGrid,
    pub reaction: ReactionModel,
    pub rho: f64,
    pub sigma: f64,
    pub ehat: GravityDir,
    pub continuation: Continuation,
}

impl FrontProblem {
    pub fn new(grid: StripGrid, reaction: ReactionModel, rho: f64, sigma: f64, ehat: GravityDir) -> Self {
        FrontProblem { grid, reaction, rho, sigma, ehat, continuation: Continuation::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let k = &self.continuation;
        if !(self.rho >= 0.0 && self.sigma > 0.0) {
            return Err(Error::Config("need rho >= 0 and sigma > 0".into()));
        }
        if k.tau_steps == 0 || !(k.picard_damping > 0.0 && k.picard_damping <= 1.0) {
            return Err(Error::Config("need tau_steps >= 1 and picard_damping in (0, 1]".into()));
        }
        if !(k.inner_tol > 0.0 && k.c_tol > 0.0) || k.max_inner == 0 {
            return Err(Error::Config("continuation tolerances must be positive".into()));
        }
        if self.grid.nx() % 2 == 0 {
            return Err(Error::Config("front problems need odd nx so that x = 0 is a node".into()));
        }
        Ok(())
    }
}

/// Bracket check performed after an accepted τ.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketRecord {
    pub tau: f64,
    pub c: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub residual_lo: f64,
    pub residual_hi: f64,
    pub outer_iterations: usize,
}

impl BracketRecord {
    /// The normalization residual is positive at `c_lo`, negative at `c_hi`,
    /// and the accepted speed lies strictly between.
    pub fn is_monotone(&self) -> bool {
        self.residual_lo > 0.0 && self.residual_hi < 0.0 && self.c_lo < self.c && self.c < self.c_hi
    }
}

#[derive(Clone, Debug)]
pub struct FrontSolution {
    pub c: f64,
    pub t: ScalarField,
    pub omega: ScalarField,
    pub flow: FlowState,
    pub tau: f64,
    /// Max-norm residual of the steady temperature equation.
    pub residual_t: f64,
    pub residual_omega: f64,
    /// `max_{x>=0} T − θ₀`.
    pub normalization_residual: f64,
    pub log: Vec<BracketRecord>,
}

/// `T₀^c(x) = (e^{-cx} − e^{-ca})/(e^{ca} − e^{-ca})`, the τ = 0 profile.
pub fn linear_profile(c: f64, a: f64, x: f64) -> f64 {
    if c.abs() < 1e-8 {
        // limit profile plus its first-order correction, keeping T₀^c(0)
        // strictly monotone in c across the cutoff
        return (a - x) / (2.0 * a) - c * (a * a - x * x) / (4.0 * a);
    }
    if c < 0.0 {
        return 1.0 - linear_profile(-c, a, -x);
    }
    (-c * (x + a)).exp() * (-(-c * (a - x)).exp_m1()) / (-(-2.0 * c * a).exp_m1())
}

/// The speed with `T₀^c(0) = θ₀`, by bisection on `[-50, 50]`.
pub fn tau0_speed(theta0: f64, a: f64) -> f64 {
    let (mut lo, mut hi) = (-50.0, 50.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if linear_profile(mid, a, 0.0) > theta0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max_{x>=0} T − θ₀` over grid nodes.
pub fn front_residual(t: &ScalarField, theta0: f64) -> f64 {
    let g = t.grid();
    let i0 = g.first_nonnegative_column();
    (i0..g.nx()).map(|i| t.column_max(i)).fold(f64::NEG_INFINITY, f64::max) - theta0
}

fn argmax_right(t: &[f64], g: &StripGrid) -> usize {
    let i0 = g.first_nonnegative_column();
    let start = g.idx(i0, 0);
    let mut best = start;
    for k in start..t.len() {
        if t[k] > t[best] {
            best = k;
        }
    }
    best
}

/// Shared assembly and solve machinery for one problem.
struct Stencils<'a> {
    p: &'a FrontProblem,
    g: StripGrid,
    plan: EllipticPlan,
}

impl<'a> Stencils<'a> {
    fn new(p: &'a FrontProblem) -> Result<Self> {
        let plan = EllipticPlan::new(p.grid, BoundaryKind::dirichlet_zero())?;
        Ok(Stencils { p, g: p.grid, plan })
    }

    fn band(&self) -> usize {
        self.g.nz() + 1
    }

    /// `-Δ_h − c∂_x + τu·∇` with Dirichlet rows at `x = ±a`, optionally
    /// shifted by `-τ diag(f'(T))` (Newton) or `+κ I` (stabilized Picard).
    fn assemble_t(&self, c: f64, tau: f64, psi: &ScalarField, diag: Option<&[f64]>) -> BandedMatrix {
        let g = &self.g;
        let (nx, nz) = (g.nx(), g.nz());
        let (hx, hz) = (g.hx(), g.hz());
        let (ix2, iz2) = (1.0 / (hx * hx), 1.0 / (hz * hz));
        let mut m = BandedMatrix::zeros(g.len(), self.band(), self.band());
        let advect = tau != 0.0 && psi.max_abs() > 0.0;
        for i in 0..nx {
            for j in 0..nz {
                let r = g.idx(i, j);
                if i == 0 || i == nx - 1 {
                    m.add(r, r, 1.0);
                    continue;
                }
                m.add(r, r, 2.0 * ix2 + 2.0 * iz2 + diag.map_or(0.0, |d| d[r]));
                m.add(r, g.idx(i + 1, j), -ix2 - c / (2.0 * hx));
                m.add(r, g.idx(i - 1, j), -ix2 + c / (2.0 * hx));
                if j == 0 {
                    m.add(r, g.idx(i, 1), -2.0 * iz2);
                } else if j == nz - 1 {
                    m.add(r, g.idx(i, nz - 2), -2.0 * iz2);
                } else {
                    m.add(r, g.idx(i, j + 1), -iz2);
                    m.add(r, g.idx(i, j - 1), -iz2);
                }
                if advect {
                    let coef = arakawa_stencil(psi, i, j);
                    for (k, &(di, dj)) in STENCIL.iter().enumerate() {
                        let (ii, jj, s) = neighbor(g, i, j, di, dj, Parity::Even);
                        m.add(r, g.idx(ii, jj), -tau * coef[k] * s);
                    }
                }
            }
        }
        m
    }

    /// `-σΔ_h − c∂_x + u·∇` with identity rows on the whole boundary.
    fn assemble_omega(&self, c: f64, psi: &ScalarField) -> BandedMatrix {
        let g = &self.g;
        let (nx, nz) = (g.nx(), g.nz());
        let (hx, hz) = (g.hx(), g.hz());
        let s = self.p.sigma;
        let (ix2, iz2) = (s / (hx * hx), s / (hz * hz));
        let mut m = BandedMatrix::zeros(g.len(), self.band(), self.band());
        for i in 0..nx {
            for j in 0..nz {
                let r = g.idx(i, j);
                if i == 0 || i == nx - 1 || j == 0 || j == nz - 1 {
                    m.add(r, r, 1.0);
                    continue;
                }
                m.add(r, r, 2.0 * ix2 + 2.0 * iz2);
                m.add(r, g.idx(i + 1, j), -ix2 - c / (2.0 * hx));
                m.add(r, g.idx(i - 1, j), -ix2 + c / (2.0 * hx));
                m.add(r, g.idx(i, j + 1), -iz2);
                m.add(r, g.idx(i, j - 1), -iz2);
                let coef = arakawa_stencil(psi, i, j);
                for (k, &(di, dj)) in STENCIL.iter().enumerate() {
                    m.add(r, g.idx((i as isize + di) as usize, (j as isize + dj) as usize), -coef[k]);
                }
            }
        }
        m
    }

    fn is_interior_t(&self, r: usize) -> bool {
        let i = r / self.g.nz();
        i != 0 && i != self.g.nx() - 1
    }

    /// Reaction seen by the normalized solve: the normalization keeps
    /// `T <= θ₀` on `x >= 0`, so the reaction is switched off there. This
    /// keeps the pinned node, which sits exactly at θ₀, off the jump of a
    /// discontinuous `f`.
    fn pinned_reaction(&self, r: usize, t: f64) -> (f64, f64) {
        if r >= self.g.idx(self.g.first_nonnegative_column(), 0) {
            (0.0, 0.0)
        } else {
            (self.p.reaction.f(t), self.p.reaction.df(t))
        }
    }

    /// Full residual `A(c,ψ)T − τf(T) − b` of the temperature equation.
    fn t_residual(&self, a: &BandedMatrix, t: &[f64], tau: f64, pinned: bool) -> Vec<f64> {
        let mut f = a.matvec(t);
        let nz = self.g.nz();
        let n = t.len();
        for (r, v) in f.iter_mut().enumerate() {
            if self.is_interior_t(r) {
                let fr = if pinned { self.pinned_reaction(r, t[r]).0 } else { self.p.reaction.f(t[r]) };
                *v -= tau * fr;
            } else if r < nz {
                *v -= 1.0;
            } else {
                debug_assert!(r >= n - nz);
            }
        }
        f
    }

    fn omega_rhs(&self, t: &[f64], tau: f64) -> Vec<f64> {
        let tf = ScalarField::from_values(self.g, BoundaryKind::temperature(), t.to_vec()).unwrap();
        let b = flow::buoyancy(&tf, self.p.ehat);
        b.values().iter().map(|v| tau * self.p.rho * v).collect()
    }

    fn solve_omega(&self, c: f64, psi: &ScalarField, t: &[f64], tau: f64) -> Result<Vec<f64>> {
        if tau * self.p.rho == 0.0 {
            return Ok(vec![0.0; self.g.len()]);
        }
        let lu = self.assemble_omega(c, psi).factor()?;
        let mut b = self.omega_rhs(t, tau);
        lu.solve(&mut b);
        Ok(b)
    }

    fn flow_of(&self, omega: &[f64]) -> FlowState {
        let w = ScalarField::from_values(self.g, BoundaryKind::dirichlet_zero(), omega.to_vec()).unwrap();
        flow::velocity_with_plan(&self.plan, &w)
    }

    /// Newton on `(T, c)` with `ψ` frozen.
    fn newton_tc(&self, t: &mut [f64], c: &mut f64, tau: f64, psi: &ScalarField) -> Result<usize> {
        let g = &self.g;
        let th = self.p.reaction.theta0();
        let (nx, nz) = (g.nx(), g.nz());
        let ihx = 1.0 / (2.0 * g.hx());
        let max_it = 40;
        let mut history = Vec::new();
        for it in 0..max_it {
            let a = self.assemble_t(*c, tau, psi, None);
            let f = self.t_residual(&a, t, tau, true);
            let diag: Vec<f64> = (0..t.len())
                .map(|r| if self.is_interior_t(r) { -tau * self.pinned_reaction(r, t[r]).1 } else { 0.0 })
                .collect();
            let lu: BandedLu = self.assemble_t(*c, tau, psi, Some(&diag)).factor()?;
            let mut y1: Vec<f64> = f.iter().map(|v| -v).collect();
            lu.solve(&mut y1);
            let mut y2 = vec![0.0; t.len()];
            for i in 1..nx - 1 {
                for j in 0..nz {
                    y2[g.idx(i, j)] = -(t[g.idx(i + 1, j)] - t[g.idx(i - 1, j)]) * ihx;
                }
            }
            lu.solve(&mut y2);
            let p = argmax_right(t, g);
            let gp = t[p] - th;
            if y2[p] == 0.0 {
                return Err(Error::Continuation { tau, reason: "phase condition is degenerate".into() });
            }
            let dc = (y1[p] + gp) / y2[p];
            let dt: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - dc * b).collect();
            let step = dt.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(dc.abs() / 4.0);
            let s = if step > 0.5 { 0.5 / step } else { 1.0 };
            for (u, d) in t.iter_mut().zip(&dt) {
                *u += s * d;
            }
            *c += s * dc;
            history.push(step);
            if !c.is_finite() {
                break;
            }
            if s == 1.0 && step < 1e-11 && dc.abs() < 0.1 * self.p.continuation.c_tol {
                return Ok(it + 1);
            }
        }
        Err(Error::NonConvergence { iterations: history.len(), last: *history.last().unwrap_or(&f64::NAN), history })
    }

    /// Solves the coupled steady problem at fixed τ for `(T, ω, c)`.
    fn solve_at_tau(&self, tau: f64, t0: &[f64], omega0: &[f64], c0: f64) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
        let k = &self.p.continuation;
        let mut t = t0.to_vec();
        let mut omega = omega0.to_vec();
        let mut c = c0;
        let mut history = Vec::new();
        for outer in 0..k.max_inner {
            let flow = self.flow_of(&omega);
            let t_prev = t.clone();
            let c_prev = c;
            self.newton_tc(&mut t, &mut c, tau, &flow.psi)?;
            let omega_new = self.solve_omega(c, &flow.psi, &t, tau)?;
            let wmax = omega_new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dw = omega_new.iter().zip(&omega).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let rel_w = if wmax > 0.0 { dw / wmax } else { 0.0 };
            let dt = t.iter().zip(&t_prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let d = k.picard_damping;
            for (o, n) in omega.iter_mut().zip(&omega_new) {
                *o += d * (n - *o);
            }
            let upd = rel_w.max(dt);
            history.push(upd);
            if upd < k.inner_tol && (c - c_prev).abs() < k.c_tol {
                return Ok((t, omega_new, c, outer + 1));
            }
        }
        Err(Error::NonConvergence { iterations: history.len(), last: *history.last().unwrap_or(&f64::NAN), history })
    }

    fn finish(&self, mut t: Vec<f64>, omega: Vec<f64>, c: f64, tau: f64, log: Vec<BracketRecord>) -> FrontSolution {
        let th = self.p.reaction.theta0();
        let g = &self.g;
        let i0 = g.first_nonnegative_column();
        // the normalization holds to round-off; make it hold exactly so that
        // no node right of the origin sits on the reactive side of θ₀
        for v in &mut t[g.idx(i0, 0)..] {
            if *v > th && *v - th < 1e-9 {
                *v = th;
            }
        }
        for v in &mut t {
            *v = v.clamp(0.0, 1.0);
        }
        let flow = self.flow_of(&omega);
        let (residual_t, residual_omega) = self.residuals(&t, &flow, c, tau);
        let tf = ScalarField::from_values(*g, BoundaryKind::temperature(), t).unwrap();
        FrontSolution {
            c,
            normalization_residual: front_residual(&tf, th),
            t: tf,
            omega: flow.omega.clone(),
            flow,
            tau,
            residual_t,
            residual_omega,
            log,
        }
    }

    fn residuals(&self, t: &[f64], flow: &FlowState, c: f64, tau: f64) -> (f64, f64) {
        let a = self.assemble_t(c, tau, &flow.psi, None);
        let rt = self.t_residual(&a, t, tau, false).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let aw = self.assemble_omega(c, &flow.psi);
        let mut rw = aw.matvec(flow.omega.values());
        let b = self.omega_rhs(t, tau);
        for (r, bv) in rw.iter_mut().zip(&b) {
            *r -= bv;
        }
        (rt, rw.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Fixed-`c` damped Picard iteration; see [`solve_steady`].
    fn picard(&self, c: f64, tau: f64, t0: &[f64], omega0: &[f64], max_inner: usize) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let k = &self.p.continuation;
        let r = &self.p.reaction;
        // shift making the frozen-f iteration monotone
        let kappa = if r.is_lipschitz() { tau * r.k() } else { tau * r.k_eff() };
        let mut t = t0.to_vec();
        let mut omega = omega0.to_vec();
        let mut history = Vec::new();
        let diag = vec![kappa; t.len()];
        let nz = self.g.nz();
        let n = t.len();
        let mut cached: Option<BandedLu> = None;
        for it in 0..max_inner {
            let flow = self.flow_of(&omega);
            let lu = match (&cached, tau * self.p.rho == 0.0) {
                (Some(lu), true) => lu.clone(),
                _ => {
                    let lu = self.assemble_t(c, tau, &flow.psi, Some(&diag)).factor()?;
                    if tau * self.p.rho == 0.0 {
                        cached = Some(lu.clone());
                    }
                    lu
                }
            };
            let mut b: Vec<f64> = (0..n)
                .map(|q| {
                    if q < nz {
                        1.0
                    } else if q >= n - nz {
                        0.0
                    } else {
                        tau * r.f(t[q]) + kappa * t[q]
                    }
                })
                .collect();
            lu.solve(&mut b);
            b.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            let omega_new = self.solve_omega(c, &flow.psi, &b, tau)?;
            let tmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dt = b.iter().zip(&t).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / tmax.max(1e-300);
            let wmax = omega_new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dw = omega_new.iter().zip(&omega).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let rel_w = if wmax > 0.0 { dw / wmax } else { 0.0 };
            let d = k.picard_damping;
            for (u, v) in t.iter_mut().zip(&b) {
                *u += d * (v - *u);
            }
            for (u, v) in omega.iter_mut().zip(&omega_new) {
                *u += d * (v - *u);
            }
            let upd = dt.max(rel_w);
            history.push(upd);
            if upd < k.inner_tol {
                return Ok((t, omega, it + 1));
            }
        }
        Err(Error::NonConvergence { iterations: history.len(), last: *history.last().unwrap_or(&f64::NAN), history })
    }

    fn bracket(&self, sol: &FrontSolution) -> (f64, f64) {
        let tau = sol.tau;
        let v = sol.flow.v_sup();
        let lo = -(1.0 + tau * v) * 1.1;
        let hi = (1.0 + self.p.reaction.m() * tau + tau * v) * 1.1;
        (lo, hi)
    }

    fn check_bracket(&self, sol: &FrontSolution, outer: usize) -> Result<BracketRecord> {
        let (c_lo, c_hi) = self.bracket(sol);
        let th = self.p.reaction.theta0();
        let max_inner = self.p.continuation.max_inner.max(2000);
        let side = |c: f64| -> Result<f64> {
            let (t, _, _) = self.picard(c, sol.tau, sol.t.values(), sol.omega.values(), max_inner)?;
            let tf = ScalarField::from_values(self.g, BoundaryKind::temperature(), t).unwrap();
            Ok(front_residual(&tf, th))
        };
        let rec = BracketRecord {
            tau: sol.tau,
            c: sol.c,
            c_lo,
            c_hi,
            residual_lo: side(c_lo)?,
            residual_hi: side(c_hi)?,
            outer_iterations: outer,
        };
        if !rec.is_monotone() {
            return Err(Error::Continuation {
                tau: sol.tau,
                reason: format!(
                    "normalization residual not sign-definite across bracket: c in [{:.6}, {:.6}], r(lo) = {:.3e}, r(hi) = {:.3e}, c = {:.6}",
                    rec.c_lo, rec.c_hi, rec.residual_lo, rec.residual_hi, rec.c
                ),
            });
        }
        Ok(rec)
    }
}

/// Damped Picard iteration for the steady problem at fixed `(c, τ)`:
/// recover `u` from ω, solve the temperature equation with `f` frozen at
/// the previous iterate, solve the vorticity equation with the fresh `T`,
/// relax both, clamp `T` to `[0, 1]`. The frozen-`f` solve carries the
/// shift `κ(T − T_prev)` with `κ = τK` so that the iteration is monotone.
pub fn solve_steady(problem: &FrontProblem, c: f64, tau: f64, init: &FrontSolution) -> Result<FrontSolution> {
    problem.validate()?;
    let s = Stencils::new(problem)?;
    let (t, omega, _) = s.picard(c, tau, init.t.values(), init.omega.values(), problem.continuation.max_inner)?;
    Ok(s.finish(t, omega, c, tau, Vec::new()))
}

/// The closed-form τ = 0 state for speed `c`, as an initial guess.
pub fn linear_state(grid: StripGrid, c: f64) -> FrontSolution {
    let a = grid.a();
    let t = ScalarField::from_fn(grid, BoundaryKind::temperature(), |x, _| linear_profile(c, a, x));
    let flow = FlowState::zero(grid);
    FrontSolution {
        c,
        t,
        omega: flow.omega.clone(),
        flow,
        tau: 0.0,
        residual_t: f64::NAN,
        residual_omega: f64::NAN,
        normalization_residual: f64::NAN,
        log: Vec::new(),
    }
}

/// Solves only the τ = 0 endpoint of the homotopy.
pub fn tau0_front(problem: &FrontProblem) -> Result<FrontSolution> {
    problem.validate()?;
    let s = Stencils::new(problem)?;
    let c0 = tau0_speed(problem.reaction.theta0(), problem.grid.a());
    let init = linear_state(problem.grid, c0);
    let (t, w, c, _) = s.solve_at_tau(0.0, init.t.values(), init.omega.values(), c0)?;
    Ok(s.finish(t, w, c, 0.0, Vec::new()))
}

/// Continuation from the closed-form τ = 0 front to τ = 1.
pub fn find_front(problem: &FrontProblem) -> Result<FrontSolution> {
    find_front_with(problem, |_| {})
}

/// As [`find_front`], reporting every accepted τ-stage.
pub fn find_front_with(problem: &FrontProblem, mut on_stage: impl FnMut(&FrontSolution)) -> Result<FrontSolution> {
    problem.validate()?;
    let s = Stencils::new(problem)?;
    let k = problem.continuation;
    let c0 = tau0_speed(problem.reaction.theta0(), problem.grid.a());
    let init = linear_state(problem.grid, c0);
    let (t, w, c, outer) = s.solve_at_tau(0.0, init.t.values(), init.omega.values(), c0)?;
    let mut sol = s.finish(t, w, c, 0.0, Vec::new());
    let mut log = Vec::new();
    if k.check_bracket {
        log.push(s.check_bracket(&sol, outer)?);
    }
    on_stage(&sol);

    let base = 1.0 / k.tau_steps as f64;
    let mut tau = 0.0;
    while tau < 1.0 {
        let mut step = base;
        let mut attempt = 0;
        let (t, w, c, outer, target) = loop {
            let target = if tau + step > 1.0 - 1e-12 { 1.0 } else { tau + step };
            match s.solve_at_tau(target, sol.t.values(), sol.omega.values(), sol.c) {
                Ok((t, w, c, outer)) => break (t, w, c, outer, target),
                Err(e) => {
                    attempt += 1;
                    if attempt > k.max_halvings {
                        return Err(Error::Continuation { tau: target, reason: e.to_string() });
                    }
                    step *= 0.5;
                }
            }
        };
        sol = s.finish(t, w, c, target, Vec::new());
        if k.check_bracket {
            log.push(s.check_bracket(&sol, outer)?);
        }
        tau = target;
        on_stage(&sol);
    }
    sol.log = log;
    Ok(sol)
}
