//! Bulk observables of a temperature/flow snapshot, their running time
//! averages, and discrete forms of the integral identities they obey.

use crate::error::{Error, Result};
use crate::flow::{self, FlowState, Parity};
use crate::front::FrontSolution;
use crate::grid::{self, ScalarField};
use crate::laminar::LaminarProfile;
use crate::reaction::ReactionModel;

/// `V = ∫f(T)/λ`.
pub fn burning_rate(t: &ScalarField, reaction: &ReactionModel) -> f64 {
    grid::integrate(&t.map(|v| reaction.f(v))) / t.grid().lambda()
}

/// `N = ∫|∇T|²/λ`.
pub fn nusselt(t: &ScalarField) -> f64 {
    grid::grad_sq_norm(t) / t.grid().lambda()
}

/// `‖v‖∞` over grid nodes.
pub fn u_sup(flow: &FlowState) -> f64 {
    flow.v_sup()
}

/// `‖T_z‖₂²`.
pub fn nz_norm(t: &ScalarField) -> f64 {
    grid::integrate(&grid::dz(t).map(|v| v * v))
}

/// `‖ω‖₂²`.
pub fn omega2(omega: &ScalarField) -> f64 {
    grid::integrate(&omega.map(|v| v * v))
}

/// `R = ∫T(1 − T)/λ`.
pub fn winn_functional(t: &ScalarField) -> f64 {
    grid::integrate(&t.map(|v| v * (1.0 - v))) / t.grid().lambda()
}

/// Largest `x` with `max_z T(x, ·) >= level`, interpolated linearly between
/// columns; `-a` when no column reaches `level`.
pub fn front_position(t: &ScalarField, level: f64) -> f64 {
    let g = t.grid();
    let nx = g.nx();
    let Some(i) = (0..nx).rev().find(|&i| t.column_max(i) >= level) else {
        return -g.a();
    };
    if i == nx - 1 {
        return g.a();
    }
    let (m0, m1) = (t.column_max(i), t.column_max(i + 1));
    g.x(i) + g.hx() * (m0 - level) / (m0 - m1)
}

/// Instantaneous observables at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub v: f64,
    pub n: f64,
    pub u_sup: f64,
    pub nz: f64,
    pub omega2: f64,
    pub r_winn: f64,
    pub front_pos: f64,
}

impl Sample {
    /// Observables of a snapshot; `front_pos` is `front_position(T, 1/2)`
    /// plus `shift`.
    pub fn measure(time: f64, t: &ScalarField, flow: &FlowState, reaction: &ReactionModel, shift: f64) -> Self {
        Sample {
            t: time,
            v: burning_rate(t, reaction),
            n: nusselt(t),
            u_sup: u_sup(flow),
            nz: nz_norm(t),
            omega2: omega2(&flow.omega),
            r_winn: winn_functional(t),
            front_pos: front_position(t, 0.5) + shift,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Row {
    pub t: f64,
    pub v: f64,
    pub n: f64,
    pub u_sup: f64,
    pub nz: f64,
    pub omega2: f64,
    pub r_winn: f64,
    pub front_pos: f64,
    pub vbar: f64,
    pub nbar: f64,
    pub ubar: f64,
    pub nzbar: f64,
}

impl Row {
    pub fn sample(&self) -> Sample {
        Sample {
            t: self.t,
            v: self.v,
            n: self.n,
            u_sup: self.u_sup,
            nz: self.nz,
            omega2: self.omega2,
            r_winn: self.r_winn,
            front_pos: self.front_pos,
        }
    }

    /// Values in CSV column order.
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.t, self.v, self.n, self.u_sup, self.nz, self.omega2, self.r_winn, self.front_pos, self.vbar,
            self.nbar, self.ubar, self.nzbar,
        ]
    }

    pub fn from_array(a: [f64; 12]) -> Self {
        Row {
            t: a[0],
            v: a[1],
            n: a[2],
            u_sup: a[3],
            nz: a[4],
            omega2: a[5],
            r_winn: a[6],
            front_pos: a[7],
            vbar: a[8],
            nbar: a[9],
            ubar: a[10],
            nzbar: a[11],
        }
    }
}

/// Observables with running averages `(1/(t − t₀))∫_{t₀}^t · ds`, the
/// integrals accumulated by the trapezoid rule over the rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub rows: Vec<Row>,
    pub metadata: String,
    acc: [f64; 4],
}

impl TimeSeries {
    pub fn new(metadata: impl Into<String>) -> Self {
        TimeSeries { rows: Vec::new(), metadata: metadata.into(), acc: [0.0; 4] }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&Row> {
        self.rows.last()
    }

    pub fn push(&mut self, s: Sample) -> Result<()> {
        let vals = [s.v, s.n, s.u_sup, s.nz];
        let bars = match self.rows.last() {
            None => vals,
            Some(prev) => {
                if !(s.t > prev.t) {
                    return Err(Error::Config(format!("time series needs increasing t: {} after {}", s.t, prev.t)));
                }
                let dt = s.t - prev.t;
                let pv = [prev.v, prev.n, prev.u_sup, prev.nz];
                let span = s.t - self.rows[0].t;
                let mut b = [0.0; 4];
                for k in 0..4 {
                    self.acc[k] += 0.5 * dt * (vals[k] + pv[k]);
                    b[k] = self.acc[k] / span;
                }
                b
            }
        };
        self.rows.push(Row {
            t: s.t,
            v: s.v,
            n: s.n,
            u_sup: s.u_sup,
            nz: s.nz,
            omega2: s.omega2,
            r_winn: s.r_winn,
            front_pos: s.front_pos,
            vbar: bars[0],
            nbar: bars[1],
            ubar: bars[2],
            nzbar: bars[3],
        });
        Ok(())
    }

    /// Rebuilds the series from its samples alone.
    pub fn recomputed(&self) -> TimeSeries {
        let mut out = TimeSeries::new(self.metadata.clone());
        for r in &self.rows {
            out.push(r.sample()).expect("rows already ordered");
        }
        out
    }

    /// Trapezoid integral of a sampled column over `[t_lo, t_hi]`, with
    /// linear interpolation at window ends that fall between rows.
    pub fn integral(&self, col: impl Fn(&Row) -> f64, t_lo: f64, t_hi: f64) -> Result<f64> {
        let (first, last) = match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return Err(Error::Config("empty time series".into())),
        };
        if !(t_lo >= first && t_hi <= last && t_lo <= t_hi) {
            return Err(Error::Config(format!("window [{t_lo}, {t_hi}] outside series range [{first}, {last}]")));
        }
        let mut total = 0.0;
        for w in self.rows.windows(2) {
            let (a, b) = (w[0].t.max(t_lo), w[1].t.min(t_hi));
            if b <= a {
                continue;
            }
            let lerp = |s: f64| {
                let th = (s - w[0].t) / (w[1].t - w[0].t);
                col(&w[0]) * (1.0 - th) + col(&w[1]) * th
            };
            total += 0.5 * (b - a) * (lerp(a) + lerp(b));
        }
        Ok(total)
    }

    pub fn window_average(&self, col: impl Fn(&Row) -> f64, t_lo: f64, t_hi: f64) -> Result<f64> {
        if !(t_hi > t_lo) {
            return Err(Error::Config("averaging window must have positive length".into()));
        }
        Ok(self.integral(col, t_lo, t_hi)? / (t_hi - t_lo))
    }

    /// Least-squares slope of a column against t over a window.
    pub fn slope(&self, col: impl Fn(&Row) -> f64, t_lo: f64, t_hi: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> =
            self.rows.iter().filter(|r| r.t >= t_lo && r.t <= t_hi).map(|r| (r.t, col(r))).collect();
        if pts.len() < 2 {
            return Err(Error::Config(format!("fewer than two rows in [{t_lo}, {t_hi}]")));
        }
        Ok(linear_fit(&pts).0)
    }

    /// A row linearly interpolated at time `t`.
    pub fn at(&self, t: f64) -> Result<Row> {
        let k = self.rows.partition_point(|r| r.t < t);
        if k == self.rows.len() || (k == 0 && self.rows.first().is_none_or(|r| r.t != t)) {
            return Err(Error::Config(format!("t = {t} outside series range")));
        }
        let hi = self.rows[k];
        if hi.t == t || k == 0 {
            return Ok(hi);
        }
        let lo = self.rows[k - 1];
        let th = (t - lo.t) / (hi.t - lo.t);
        let (a, b) = (lo.to_array(), hi.to_array());
        let mut m = [0.0; 12];
        for q in 0..12 {
            m[q] = a[q] * (1.0 - th) + b[q] * th;
        }
        m[0] = t;
        Ok(Row::from_array(m))
    }
}

/// `(slope, intercept)` of the least-squares line through `pts`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let s = sxy / sxx;
    (s, my - s * mx)
}

/// Terms of the steady energy identity obtained by multiplying the
/// temperature equation by `1 − T` and summing with the solver stencils.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyIdentity {
    /// `(c/2)(λ − Σ_j wz_j T_{nx-2,j})`.
    pub speed_term: f64,
    /// `Σ_j wz_j (T_{nx-1,j} − T_{nx-2,j})/hx`, the discrete `∫T_x(a, z)dz`.
    pub boundary_flux: f64,
    pub dissipation: f64,
    /// `τ Σ (1 − T)f(T)`.
    pub reaction: f64,
    /// `τ Σ (1 − T)u·∇T`; zero in the continuum.
    pub advection: f64,
}

impl SteadyIdentity {
    pub fn lhs(&self) -> f64 {
        self.speed_term + self.advection
    }
    pub fn rhs(&self) -> f64 {
        self.boundary_flux + self.dissipation + self.reaction
    }
    pub fn relative_residual(&self) -> f64 {
        (self.lhs() - self.rhs()).abs() / self.lhs().abs().max(1e-8)
    }
}

pub fn steady_identity(sol: &FrontSolution, reaction: &ReactionModel) -> SteadyIdentity {
    let t = &sol.t;
    let g = *t.grid();
    let (nx, nz) = (g.nx(), g.nz());
    let tau = sol.tau;
    let adv = flow::arakawa(&sol.flow.psi, t, Parity::Even);
    let mut react = 0.0;
    let mut advect = 0.0;
    for i in 1..nx - 1 {
        for j in 0..nz {
            let w = g.hx() * g.wz(j);
            let s = 1.0 - t.get(i, j);
            react += w * s * reaction.f(t.get(i, j));
            // u·∇T = −J(ψ, T)
            advect -= w * s * adv.get(i, j);
        }
    }
    let (mut edge, mut flux) = (0.0, 0.0);
    for j in 0..nz {
        edge += g.wz(j) * t.get(nx - 2, j);
        flux += g.wz(j) * (t.get(nx - 1, j) - t.get(nx - 2, j)) / g.hx();
    }
    SteadyIdentity {
        speed_term: 0.5 * sol.c * (g.lambda() - edge),
        boundary_flux: flux,
        dissipation: grid::dirichlet_energy(t),
        reaction: tau * react,
        advection: tau * advect,
    }
}

/// Relative residual of the steady energy identity
/// `cλ/2 = ∫T_x(a,z)dz + ∫|∇T|² + τ∫(1 − T)f(T)` in its discrete form.
pub fn check_steady_identity(sol: &FrontSolution, reaction: &ReactionModel) -> f64 {
    steady_identity(sol, reaction).relative_residual()
}

/// `R(t)/t + V̄(t) − 2N̄(t)`, interpolated between rows.
pub fn check_winn_inequality(series: &TimeSeries, t: f64) -> Result<f64> {
    let r = series.at(t)?;
    if !(t > 0.0) {
        return Err(Error::Config("winn margin needs t > 0".into()));
    }
    Ok(r.r_winn / t + r.vbar - 2.0 * r.nbar)
}

/// Lower and upper envelope margins at one snapshot:
/// `min_x [max_z T − Φ₀(x − c₀t + Ūt + C₀(1+√t)) + C₀/√t]` and
/// `min_x [Φ₀(x − c₀t − Ūt − C₀(1+√t)) + C₀/√t − min_z T]`, with `x` in the
/// lab frame (`x_grid + shift`) and `u_int = ∫₀ᵗ‖v‖∞`. Nonnegative margins
/// mean the envelopes hold. `x0` is the initial front offset of Φ₀.
pub struct Envelope<'a> {
    pub profile: &'a LaminarProfile,
    pub c0: f64,
    pub x0: f64,
}

impl Envelope<'_> {
    pub fn margins(&self, t: &ScalarField, time: f64, shift: f64, u_int: f64, c_const: f64) -> (f64, f64) {
        let g = t.grid();
        let sq = time.sqrt();
        let q = c_const / sq;
        let drift = self.c0 * time + self.x0;
        let spread = u_int + c_const * (1.0 + sq);
        let (mut lo, mut hi) = (f64::INFINITY, f64::INFINITY);
        for i in 0..g.nx() {
            let x = g.x(i) + shift;
            let lower = self.profile.eval(x - drift + spread) - q;
            let upper = self.profile.eval(x - drift - spread) + q;
            lo = lo.min(t.column_max(i) - lower);
            hi = hi.min(upper - t.column_min(i));
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::linear_profile;
    use crate::grid::{make_grid, BoundaryKind, StripGrid};
    use crate::laminar::laminar_speed;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn g() -> StripGrid {
        make_grid(10.0, 2.0, 201, 17).unwrap()
    }

    #[test]
    fn trivial_values() {
        let r = ReactionModel::quad_ignition(0.3, 1.0).unwrap();
        let g = g();
        let cold = ScalarField::constant(g, BoundaryKind::free(), 0.3);
        let hot = ScalarField::constant(g, BoundaryKind::free(), 1.0);
        let half = ScalarField::constant(g, BoundaryKind::free(), 0.5);
        assert_eq!(burning_rate(&cold, &r), 0.0);
        assert_eq!(burning_rate(&hot, &r), 0.0);
        assert_eq!(nusselt(&hot), 0.0);
        assert_eq!(winn_functional(&hot), 0.0);
        assert_eq!(winn_functional(&ScalarField::zeros(g, BoundaryKind::free())), 0.0);
        assert!((winn_functional(&half) - 10.0 / 2.0).abs() < 1e-12);
        assert_eq!(u_sup(&FlowState::zero(g)), 0.0);
        assert_eq!(front_position(&ScalarField::zeros(g, BoundaryKind::free()), 0.5), -10.0);
    }

    #[test]
    fn z_independent_field_has_no_nz() {
        let g = g();
        let t = ScalarField::from_fn(g, BoundaryKind::temperature(), |x, _| 0.5 - 0.5 * x.tanh());
        assert!(nz_norm(&t) < 1e-24);
    }

    #[test]
    fn z_mode_nusselt() {
        let (a, l) = (10.0, 2.0);
        let g = make_grid(a, l, 101, 129).unwrap();
        let t = ScalarField::from_fn(g, BoundaryKind::neumann(), |_, z| (PI * z / l).cos());
        // ∫|∇T|²/λ = (π/λ)² · 2a · (λ/2) / λ
        let exact = a * PI * PI / (l * l);
        assert!((nusselt(&t) - exact).abs() / exact < 2e-3);
    }

    #[test]
    fn manufactured_velocity_amplitude() {
        let (a, l) = (4.0, 1.0);
        let amp = 0.7;
        for n in [65usize, 129] {
            let g = make_grid(a, l, 2 * n - 1, n).unwrap();
            // ψ = (A λ/π) sin(πx/a) sin(πz/λ) has v = ψ_z with sup A·1 at grid nodes near x = a/2
            let omega = ScalarField::from_fn(g, BoundaryKind::dirichlet_zero(), |x, z| {
                let k2 = (PI / a).powi(2) + (PI / l).powi(2);
                amp * l / PI * k2 * (PI * x / a).sin() * (PI * z / l).sin()
            });
            let flow = flow::velocity_from_vorticity(&omega);
            let err = (u_sup(&flow) - amp).abs();
            assert!(err < 20.0 / (n * n) as f64, "n={n} err={err}");
        }
    }

    #[test]
    fn laminar_profile_integrals() {
        let r = ReactionModel::step_linear(0.25, 1.0).unwrap();
        let p = laminar_speed(&r, 1e-10).unwrap();
        let g = make_grid(20.0, 1.0, 4001, 5).unwrap();
        let t = ScalarField::from_fn(g, BoundaryKind::temperature(), |x, _| p.eval(x));
        // traveling-wave identity: ∫f(Φ₀)dx = c₀(Φ(−∞) − Φ(+∞))
        assert!((burning_rate(&t, &r) - 1.5).abs() / 1.5 < 0.02);

        // 1D oracles by Simpson's rule on a fine independent mesh
        let simpson = |h: &dyn Fn(f64) -> f64| {
            let n = 40_000;
            let dx = 40.0 / n as f64;
            let mut s = h(-20.0) + h(20.0);
            for k in 1..n {
                let x = -20.0 + k as f64 * dx;
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * h(x);
            }
            s * dx / 3.0
        };
        let dphi = |x: f64| (p.eval(x + 1e-5) - p.eval(x - 1e-5)) / 2e-5;
        let n_oracle = simpson(&|x| dphi(x).powi(2));
        let r_oracle = simpson(&|x| p.eval(x) * (1.0 - p.eval(x)));
        assert!((nusselt(&t) - n_oracle).abs() / n_oracle < 0.02);
        assert!((winn_functional(&t) - r_oracle).abs() / r_oracle < 0.02);
    }

    #[test]
    fn front_position_inverts_linear_profile() {
        let (a, c) = (20.0, 0.8);
        let g = make_grid(a, 1.0, 401, 5).unwrap();
        let t = ScalarField::from_fn(g, BoundaryKind::temperature(), |x, _| linear_profile(c, a, x));
        let level = linear_profile(c, a, 0.0);
        assert!(front_position(&t, level).abs() < g.hx());
    }

    proptest! {
        #[test]
        fn front_position_shifts_with_data(k in 1usize..30, w in 0.5f64..3.0) {
            let g = make_grid(20.0, 1.0, 201, 5).unwrap();
            let t = ScalarField::from_fn(g, BoundaryKind::temperature(), |x, _| 0.5 - 0.5 * ((x + 5.0) / w).tanh());
            let mut s = ScalarField::zeros(g, BoundaryKind::temperature());
            for i in 0..g.nx() {
                for j in 0..g.nz() {
                    let src = if i >= k { t.get(i - k, j) } else { 1.0 };
                    s.set(i, j, src);
                }
            }
            let d = front_position(&s, 0.5) - front_position(&t, 0.5);
            prop_assert!((d - k as f64 * g.hx()).abs() < 1e-12);
        }

        #[test]
        fn observables_nonnegative(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = make_grid(5.0, 1.0, 21, 9).unwrap();
            let v = (0..g.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let t = ScalarField::from_values(g, BoundaryKind::temperature(), v).unwrap();
            let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
            prop_assert!(burning_rate(&t, &r) >= 0.0);
            prop_assert!(nusselt(&t) >= 0.0);
            prop_assert!(nz_norm(&t) >= 0.0);
            prop_assert!(omega2(&t) >= 0.0);
            let rw = winn_functional(&t);
            prop_assert!(rw >= 0.0 && rw <= g.area() / (4.0 * g.lambda()) + 1e-12);
        }

        #[test]
        fn running_averages_match_recomputation(seed in 0u64..100, n in 2usize..60) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut ts = TimeSeries::new("");
            let mut t = 0.0;
            for _ in 0..n {
                let s = Sample {
                    t, v: rng.gen_range(0.0..2.0), n: rng.gen_range(0.0..2.0), u_sup: rng.gen_range(0.0..1.0),
                    nz: rng.gen_range(0.0..1.0), omega2: 0.0, r_winn: 1.0, front_pos: 0.0,
                };
                ts.push(s).unwrap();
                t += rng.gen_range(0.01..0.5);
            }
            let again = ts.recomputed();
            for (a, b) in ts.rows.iter().zip(&again.rows) {
                prop_assert!((a.vbar - b.vbar).abs() <= 1e-12 * a.vbar.abs().max(1.0));
                prop_assert!((a.nzbar - b.nzbar).abs() <= 1e-12 * a.nzbar.abs().max(1.0));
            }
            // V̄·(t − t₀) equals the trapezoid integral of V
            let last = ts.last().unwrap();
            let integral = ts.integral(|r| r.v, 0.0, last.t).unwrap();
            prop_assert!((last.vbar * last.t - integral).abs() <= 1e-10 * integral.abs().max(1.0));
        }
    }

    #[test]
    fn series_rejects_non_increasing_time() {
        let mut ts = TimeSeries::new("");
        let s = Sample { t: 1.0, v: 0.0, n: 0.0, u_sup: 0.0, nz: 0.0, omega2: 0.0, r_winn: 0.0, front_pos: 0.0 };
        ts.push(s).unwrap();
        assert!(ts.push(s).is_err());
    }

    #[test]
    fn window_average_of_linear_column() {
        let mut ts = TimeSeries::new("");
        for k in 0..=10 {
            let t = k as f64;
            ts.push(Sample { t, v: 2.0 * t, n: 0.0, u_sup: 0.0, nz: 0.0, omega2: 0.0, r_winn: 0.0, front_pos: t })
                .unwrap();
        }
        assert!((ts.window_average(|r| r.v, 2.5, 7.5).unwrap() - 10.0).abs() < 1e-12);
        assert!((ts.slope(|r| r.front_pos, 0.0, 10.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((ts.at(4.5).unwrap().v - 9.0).abs() < 1e-12);
        assert!(ts.at(11.0).is_err());
    }

    #[test]
    fn steady_identity_discriminates() {
        use crate::flow::GravityDir;
        use crate::front::{find_front, tau0_front, FrontProblem};
        let g = make_grid(20.0, 2.0, 257, 5).unwrap();
        let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
        let p = FrontProblem::new(g, r, 0.0, 1.0, GravityDir::from_degrees(45.0));
        let s0 = tau0_front(&p).unwrap();
        assert!(check_steady_identity(&s0, &r) < 1e-3);
        let s1 = find_front(&p).unwrap();
        assert!(check_steady_identity(&s1, &r) < 1e-2);

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut junk = s1.clone();
        for v in junk.t.values_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
        junk.t.enforce_bc();
        assert!(check_steady_identity(&junk, &r) > 0.1);
    }
}
