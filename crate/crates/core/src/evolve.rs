//! Time integration of the coupled temperature/vorticity system from
//! front-like initial data.
//!
//! One step is first-order IMEX: advection, reaction and buoyancy are taken
//! explicitly from the old state, diffusion implicitly through the spectral
//! Helmholtz solver. The front can be held near `x = 0` by shifting whole
//! columns out of the left end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{front_position, Sample, TimeSeries};
use crate::error::{Error, Result};
use crate::flow::{self, FlowState, GravityDir, Parity};
use crate::grid::{self, BoundaryKind, ScalarField, StripGrid};
use crate::par::Exec;
use crate::reaction::ReactionModel;
use crate::spectral::EllipticPlan;

const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Omega0 {
    Zero,
    /// `A sin(kx π(x + a)/2a) sin(kz πz/λ)`.
    SingleMode { amplitude: f64, kx: usize, kz: usize },
    /// Smoothed uniform noise with `‖ω₀‖₂² = energy`.
    Random { seed: u64, energy: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub grid: StripGrid,
    pub reaction: ReactionModel,
    pub rho: f64,
    pub sigma: f64,
    pub ehat: GravityDir,
    /// Half-width of the initial ramp.
    pub r_init: f64,
    pub dt: TimeStep,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub recenter: bool,
    pub omega0: Omega0,
    pub exec: Exec,
}

impl SimConfig {
    pub fn new(grid: StripGrid, reaction: ReactionModel, rho: f64, sigma: f64, ehat: GravityDir) -> Self {
        SimConfig {
            grid,
            reaction,
            rho,
            sigma,
            ehat,
            r_init: 2.0,
            dt: TimeStep::Auto,
            t_end: 10.0,
            cfl_safety: 0.5,
            recenter: true,
            omega0: Omega0::Zero,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(Error::Config(format!("cfl_safety must lie in (0, 1), got {}", self.cfl_safety)));
        }
        if !(self.rho >= 0.0 && self.sigma > 0.0) {
            return Err(Error::Config("need rho >= 0 and sigma > 0".into()));
        }
        if !(self.r_init >= 0.0 && self.r_init < self.grid.a() / 2.0) {
            return Err(Error::Config(format!("ramp half-width R = {} must lie in [0, a/2)", self.r_init)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("fixed dt must be positive, got {dt}")));
            }
        }
        match self.omega0 {
            Omega0::SingleMode { amplitude, .. } if !amplitude.is_finite() => {
                Err(Error::Config("omega0 amplitude must be finite".into()))
            }
            Omega0::Random { energy, .. } if !(energy >= 0.0 && energy.is_finite()) => {
                Err(Error::Config("omega0 energy must be finite and nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub temp: ScalarField,
    pub flow: FlowState,
    pub shift_accum: f64,
}

impl SimState {
    pub fn omega(&self) -> &ScalarField {
        &self.flow.omega
    }
}

/// Cosine ramp from 1 at `x = -R` to 0 at `x = R`, with `R` raised to `hx`.
pub fn initial_temperature(grid: StripGrid, r: f64) -> ScalarField {
    let r = r.max(grid.hx());
    let mut t = ScalarField::from_fn(grid, BoundaryKind::temperature(), |x, _| {
        if x <= -r {
            1.0
        } else if x >= r {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (x + r) / (2.0 * r)).cos())
        }
    });
    t.enforce_bc();
    t
}

pub fn initial_vorticity(grid: StripGrid, spec: Omega0) -> Result<ScalarField> {
    let bc = BoundaryKind::dirichlet_zero();
    let (a, l) = (grid.a(), grid.lambda());
    let pi = std::f64::consts::PI;
    let mut w = match spec {
        Omega0::Zero => ScalarField::zeros(grid, bc),
        Omega0::SingleMode { amplitude, kx, kz } => ScalarField::from_fn(grid, bc, |x, z| {
            amplitude * (kx as f64 * pi * (x + a) / (2.0 * a)).sin() * (kz as f64 * pi * z / l).sin()
        }),
        Omega0::Random { seed, energy } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut noise = ScalarField::from_values(grid, bc, v)?;
            noise.enforce_bc();
            let plan = EllipticPlan::new(grid, bc)?;
            let smooth = plan.helmholtz(&noise, 1.0)?;
            let e = crate::diagnostics::omega2(&smooth);
            if e > 0.0 {
                smooth.scale((energy / e).sqrt())
            } else {
                smooth
            }
        }
    };
    w.enforce_bc();
    Ok(w)
}

pub fn init_front_like(config: &SimConfig) -> Result<SimState> {
    config.validate()?;
    let temp = initial_temperature(config.grid, config.r_init);
    let omega = initial_vorticity(config.grid, config.omega0)?;
    Ok(SimState { t: 0.0, temp, flow: flow::velocity_from_vorticity(&omega), shift_accum: 0.0 })
}

/// `safety · min(hx/(‖v‖∞+ε), hz/(‖w‖∞+ε), 1/K_eff)`.
pub fn cfl_dt(state: &SimState, config: &SimConfig) -> f64 {
    cfl_limit(&state.flow, &config.grid, &config.reaction, config.cfl_safety)
}

fn cfl_limit(flow: &FlowState, g: &StripGrid, r: &ReactionModel, safety: f64) -> f64 {
    let adv = (g.hx() / (flow.v.max_abs() + EPS)).min(g.hz() / (flow.w.max_abs() + EPS));
    let k = r.k_eff();
    let react = if k > 0.0 { 1.0 / k } else { f64::INFINITY };
    safety * adv.min(react)
}

/// Plans and configuration for repeated steps on one grid.
pub struct Evolver {
    pub config: SimConfig,
    t_plan: EllipticPlan,
    w_plan: EllipticPlan,
}

impl Evolver {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let t_plan = EllipticPlan::new(config.grid, BoundaryKind::temperature())?.with_exec(config.exec);
        let w_plan = EllipticPlan::new(config.grid, BoundaryKind::dirichlet_zero())?.with_exec(config.exec);
        Ok(Evolver { config, t_plan, w_plan })
    }

    /// One IMEX step of length `dt`.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let c = &self.config;
        let limit = cfl_limit(&state.flow, &c.grid, &c.reaction, 1.0);
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(Error::Config(format!("dt = {dt} outside (0, {limit}]")));
        }
        let g = c.grid;
        let temp = &state.temp;
        let adv_t = flow::arakawa(&state.flow.psi, temp, Parity::Even);
        let adv_w = flow::arakawa(&state.flow.psi, &state.flow.omega, Parity::Odd);
        let force = flow::buoyancy(temp, c.ehat);

        let mut rhs_t = temp.clone();
        let mut rhs_w = state.flow.omega.clone();
        for i in 1..g.nx() - 1 {
            for j in 0..g.nz() {
                let k = g.idx(i, j);
                // −u·∇q = J(ψ, q)
                rhs_t.values_mut()[k] += dt * (adv_t.values()[k] + c.reaction.f(temp.values()[k]));
                if j > 0 && j < g.nz() - 1 {
                    rhs_w.values_mut()[k] += dt * (adv_w.values()[k] + c.rho * force.values()[k]);
                }
            }
        }
        let mut t_new = self.t_plan.helmholtz(&rhs_t, dt)?;
        let omega = self.w_plan.helmholtz(&rhs_w, c.sigma * dt)?;
        let now = state.t + dt;
        if !(t_new.is_finite() && omega.is_finite()) {
            return Err(Error::BlowUp { t: now });
        }
        for v in t_new.values_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let flow = flow::velocity_with_plan(&self.w_plan, &omega);
        Ok(SimState { t: now, temp: t_new, flow, shift_accum: state.shift_accum })
    }

    /// Shifts the fields left by whole cells once the front passes `x = 0`.
    /// Returns the number of cells moved.
    pub fn recenter(&self, state: &mut SimState) -> Result<usize> {
        let g = self.config.grid;
        let th = self.config.reaction.theta0();
        let pos = front_position(&state.temp, 0.5);
        if pos <= 0.0 {
            return Ok(0);
        }
        let k = (pos / g.hx()).floor() as usize;
        if k == 0 {
            return Ok(0);
        }
        let quarter = (0..g.nx()).find(|&i| g.x(i) >= g.a() / 2.0).unwrap_or(g.nx() - 1);
        let hot = (quarter..g.nx()).map(|i| state.temp.column_max(i)).fold(0.0, f64::max);
        if hot >= th / 10.0 {
            return Err(Error::Monitor {
                t: state.t,
                reason: format!("temperature {hot:.3e} ahead of the front reaches the right quarter"),
            });
        }
        let decile = (0..g.nx()).find(|&i| g.x(i) >= 0.8 * g.a()).unwrap_or(g.nx() - 1);
        let swirl = (decile..g.nx())
            .flat_map(|i| state.flow.omega.column(i).iter().copied())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if swirl >= 1e-3 {
            return Err(Error::Monitor { t: state.t, reason: format!("vorticity {swirl:.3e} in the rightmost decile") });
        }
        state.temp.shift_left(k, 0.0);
        state.temp.enforce_bc();
        let mut omega = state.flow.omega.clone();
        omega.shift_left(k, 0.0);
        omega.enforce_bc();
        state.flow = flow::velocity_with_plan(&self.w_plan, &omega);
        state.shift_accum += k as f64 * g.hx();
        Ok(k)
    }

    pub fn sample(&self, state: &SimState) -> Sample {
        Sample::measure(state.t, &state.temp, &state.flow, &self.config.reaction, state.shift_accum)
    }

    /// Steps to `t_end`, recording a row after every step; see [`run`].
    pub fn run_from(
        &self,
        mut state: SimState,
        mut observer: impl FnMut(&SimState),
    ) -> std::result::Result<(TimeSeries, SimState), RunFailure> {
        let c = &self.config;
        let mut series = TimeSeries::new(describe(c));
        let fail = |error, series: TimeSeries, state: SimState| Err(RunFailure { error, partial: series, last_state: state });
        if let Err(e) = series.push(self.sample(&state)) {
            return fail(e, series, state);
        }
        observer(&state);
        while state.t < c.t_end {
            let remaining = c.t_end - state.t;
            let dt = match c.dt {
                TimeStep::Fixed(dt) => dt,
                TimeStep::Auto => cfl_dt(&state, c),
            };
            // avoid a sliver of a final step
            let dt = if dt >= remaining * (1.0 - 1e-9) { remaining } else { dt.min(remaining) };
            let mut next = match self.step(&state, dt) {
                Ok(s) => s,
                Err(e) => return fail(e, series, state),
            };
            if remaining - dt <= 0.0 {
                next.t = c.t_end;
            }
            if c.recenter {
                if let Err(e) = self.recenter(&mut next) {
                    return fail(e, series, state);
                }
            }
            if let Err(e) = series.push(self.sample(&next)) {
                return fail(e, series, state);
            }
            observer(&next);
            state = next;
        }
        Ok((series, state))
    }
}

/// A run that stopped early, with everything recorded before the failure.
pub struct RunFailure {
    pub error: Error,
    pub partial: TimeSeries,
    pub last_state: SimState,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} rows, t = {})", self.error, self.partial.len(), self.last_state.t)
    }
}

impl std::fmt::Debug for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RunFailure({self})")
    }
}

impl std::error::Error for RunFailure {}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

fn describe(c: &SimConfig) -> String {
    let g = c.grid;
    format!(
        "a={} lambda={} nx={} nz={} reaction={} theta0={} amplitude={} rho={} sigma={} e1={} e2={} R={} dt={:?} t_end={} cfl_safety={} recenter={} omega0={:?}",
        g.a(),
        g.lambda(),
        g.nx(),
        g.nz(),
        c.reaction.kind().name(),
        c.reaction.theta0(),
        c.reaction.amplitude(),
        c.rho,
        c.sigma,
        c.ehat.e1(),
        c.ehat.e2(),
        c.r_init,
        c.dt,
        c.t_end,
        c.cfl_safety,
        c.recenter,
        c.omega0
    )
}

/// Runs from [`init_front_like`] to `t_end`, calling `observer` on the
/// initial state and after every step.
pub fn run(config: &SimConfig, observer: impl FnMut(&SimState)) -> std::result::Result<TimeSeries, RunFailure> {
    let ev = match Evolver::new(config.clone()) {
        Ok(e) => e,
        Err(error) => return Err(early_failure(config, error)),
    };
    let state = match init_front_like(config) {
        Ok(s) => s,
        Err(error) => return Err(early_failure(config, error)),
    };
    ev.run_from(state, observer).map(|(s, _)| s)
}

fn early_failure(config: &SimConfig, error: Error) -> RunFailure {
    let g = config.grid;
    RunFailure {
        error,
        partial: TimeSeries::new(describe(config)),
        last_state: SimState {
            t: 0.0,
            temp: ScalarField::zeros(g, BoundaryKind::temperature()),
            flow: FlowState::zero(g),
            shift_accum: 0.0,
        },
    }
}

/// Terms of the vorticity energy balance over one step from `before` to
/// `after`: `Δ(½‖ω‖²)/dt`, `σ‖∇ω‖²` at the new time, and the buoyancy work
/// `ρ∫ω(e₂T_x − e₁T_z)` with the old temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBudget {
    pub rate: f64,
    pub dissipation: f64,
    pub work: f64,
    pub enstrophy: f64,
}

impl EnergyBudget {
    pub fn residual(&self) -> f64 {
        self.rate + self.dissipation - self.work
    }

    /// `|residual| / (1 + ‖ω‖²)`.
    pub fn scaled_residual(&self) -> f64 {
        self.residual().abs() / (1.0 + self.enstrophy)
    }
}

pub fn energy_budget(before: &SimState, after: &SimState, config: &SimConfig) -> EnergyBudget {
    let dt = after.t - before.t;
    let e0 = grid::integrate(&before.flow.omega.map(|v| v * v));
    let e1 = grid::integrate(&after.flow.omega.map(|v| v * v));
    let force = flow::buoyancy(&before.temp, config.ehat);
    EnergyBudget {
        rate: 0.5 * (e1 - e0) / dt,
        dissipation: config.sigma * grid::dirichlet_energy(&after.flow.omega),
        work: config.rho * grid::inner(&after.flow.omega, &force),
        enstrophy: e1,
    }
}
