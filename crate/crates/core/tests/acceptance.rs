//! One line per acceptance criterion. Fronts and Cauchy runs are computed
//! once and shared by the criteria that inspect them.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bfl::diagnostics::{check_steady_identity, nz_norm, TimeSeries};
use bfl::evolve::{energy_budget, init_front_like, Evolver, Omega0, SimConfig, TimeStep};
use bfl::flow::GravityDir;
use bfl::front::{find_front, find_front_with, linear_profile, tau0_front, FrontProblem, FrontSolution};
use bfl::grid::{dirichlet_energy, grad_sq_norm, StripGrid};
use bfl::harness::{
    manufactured_residuals, verify_decay, verify_nash, verify_thm_1_1, verify_thm_1_2, verify_thm_1_3, CauchySweep,
    DecaySuite, NarrowSweep, Report, Verdict,
};
use bfl::io::checkpoint::Checkpoint;
use bfl::io::csv::timeseries_to_string;
use bfl::laminar::laminar_speed;
use bfl::par::Exec;
use bfl::reaction::{ReactionKind, ReactionModel};

#[derive(Default)]
struct Tally {
    lines: Vec<(u32, bool, String)>,
}

impl Tally {
    fn line(&mut self, n: u32, ok: bool, elapsed: Duration, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        let text = format!("criterion {n:>2}: {tag} [{:.1} s] {detail}", elapsed.as_secs_f64());
        self.lines.push((n, ok, text));
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn diag45() -> GravityDir {
    GravityDir::from_degrees(45.0)
}

fn report_value(rep: &Report, key: &str) -> f64 {
    rep.value(key).unwrap_or(f64::NAN)
}

fn c1_laminar(t: &mut Tally) {
    let start = Instant::now();
    let theta0 = 0.25;
    let c0 = laminar_speed(&ReactionModel::step_linear(theta0, 1.0).unwrap(), 1e-10).unwrap().c0;
    let el = start.elapsed();
    let exact = (1.0 - theta0) / theta0.sqrt();
    let err = (c0 - exact).abs();
    t.line(1, err <= 1e-3 && el.as_secs_f64() < 1.0, el, format!("c0 = {c0:.9}, |c0 - 1.5| = {err:.2e}"));
}

fn c2_tau0(t: &mut Tally) {
    let (a, theta0) = (10.0, 0.2);
    // T₀^c(0) = 1/(e^{ca} + 1) = θ₀
    let c_exact = (1.0 / theta0 - 1.0_f64).ln() / a;
    let r = ReactionModel::quad_ignition(theta0, 1.0).unwrap();
    let mut errs = Vec::new();
    let mut speed_err = f64::NAN;
    let mut el = Duration::ZERO;
    for nx in [129, 257, 513] {
        let g = StripGrid::new(a, 1.0, nx, 5).unwrap();
        let start = Instant::now();
        let sol = tau0_front(&FrontProblem::new(g, r, 0.0, 1.0, diag45())).unwrap();
        el = start.elapsed();
        let mut e: f64 = 0.0;
        for i in 0..nx {
            for j in 0..5 {
                e = e.max((sol.t.get(i, j) - linear_profile(sol.c, a, g.x(i))).abs());
            }
        }
        errs.push(e);
        speed_err = (sol.c - c_exact).abs();
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ok = speed_err <= 1e-6 && ratios.iter().all(|q| (3.6..=4.4).contains(q)) && el.as_secs_f64() < 5.0;
    t.line(
        2,
        ok,
        el,
        format!("|c - c_exact| = {speed_err:.2e} at nx=513, profile errors {}, ratios {ratios:.3?}", sci(&errs)),
    );
}

fn c3_decoupled(t: &mut Tally) -> FrontSolution {
    let g = StripGrid::new(40.0, 4.0, 3201, 5).unwrap();
    let r = ReactionModel::step_linear(0.25, 1.0).unwrap();
    let start = Instant::now();
    let sol = find_front(&FrontProblem::new(g, r, 0.0, 1.0, diag45())).unwrap();
    let el = start.elapsed();
    let tz = nz_norm(&sol.t).sqrt();
    let ok = (sol.c - 1.5).abs() <= 0.05 && tz <= 1e-10 && el.as_secs_f64() < 60.0;
    t.line(3, ok, el, format!("c = {:.6}, ||T_z||_2 = {tz:.2e}", sol.c));
    sol
}

fn convective_problem() -> FrontProblem {
    let g = StripGrid::new(40.0, 4.0, 321, 17).unwrap();
    let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
    FrontProblem::new(g, r, 0.3, 1.0, GravityDir::normalized(1.0, 1.0).unwrap())
}

fn c5_convective(t: &mut Tally) {
    let start = Instant::now();
    let rep = verify_thm_1_1(&convective_problem()).unwrap();
    let el = start.elapsed();
    let ok = rep.verdict == Verdict::Pass && el.as_secs_f64() < 300.0;
    t.line(
        5,
        ok,
        el,
        format!(
            "verdict {}, c = {:.6}, ||T_z||_2 = {:.3e} (floor {:.1e}), ||u||_inf = {:.3e}, tail rate {:.3}",
            rep.verdict,
            report_value(&rep, "c"),
            report_value(&rep, "tz_norm"),
            report_value(&rep, "floor.tz_norm"),
            report_value(&rep, "u_sup"),
            report_value(&rep, "tail_alpha"),
        ),
    );
}

/// All accepted continuation stages of the convective front.
fn convective_stages() -> (FrontProblem, Vec<FrontSolution>) {
    let p = convective_problem();
    let mut stages = Vec::new();
    find_front_with(&p, |s| stages.push(s.clone())).unwrap();
    (p, stages)
}

fn c4_identity(t: &mut Tally, fronts: &[(ReactionModel, &FrontSolution)], el: Duration) {
    let res: Vec<f64> = fronts.iter().map(|(r, s)| check_steady_identity(s, r)).collect();
    let worst = res.iter().cloned().fold(0.0, f64::max);
    t.line(4, worst <= 1e-2, el, format!("{} fronts, worst relative residual {worst:.2e}", res.len()));
}

fn c6_vorticity(t: &mut Tally, p: &FrontProblem, stages: &[FrontSolution], el: Duration) {
    let mut worst: f64 = 0.0;
    for s in stages {
        let lhs = dirichlet_energy(&s.omega).sqrt();
        let rhs = (p.grid.lambda() / std::f64::consts::PI) * s.tau * p.rho * grad_sq_norm(&s.t).sqrt() / p.sigma;
        if rhs == 0.0 {
            worst = worst.max(if lhs == 0.0 { 0.0 } else { f64::INFINITY });
        } else {
            worst = worst.max(lhs / rhs);
        }
    }
    t.line(6, worst <= 1.05, el, format!("{} fronts, max ||grad w|| / bound = {worst:.4}", stages.len()));
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn cauchy_base(lambda: f64, reaction: ReactionModel) -> SimConfig {
    let g = StripGrid::new(32.0, lambda, 513, 65).unwrap();
    let mut c = SimConfig::new(g, reaction, 0.0, 1.0, diag45());
    c.t_end = 60.0;
    c.cfl_safety = 0.2;
    c
}

fn c7_cauchy(t: &mut Tally) -> Vec<TimeSeries> {
    let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
    let start = Instant::now();
    let (rep, runs) = verify_thm_1_2(&CauchySweep {
        base: cauchy_base(4.0, r),
        rhos: vec![0.0, 0.05, 0.1, 0.2],
        window: (30.0, 60.0),
    })
    .unwrap();
    let el = start.elapsed();
    let c0 = laminar_speed(&r, 1e-10).unwrap().c0;
    let base = &runs[0];
    let rel = (base.vbar - c0).abs() / c0;
    let pts: Vec<(f64, f64)> =
        runs[1..].iter().map(|s| ((s.rho + s.rho * s.rho).ln(), (s.vbar - base.vbar).abs().ln())).collect();
    let slope = least_squares_slope(&pts);
    let ok = rel <= 0.05 && (0.8..=2.2).contains(&slope) && rep.verdict == Verdict::Pass && el.as_secs_f64() < 600.0;
    t.line(
        7,
        ok,
        el,
        format!("rho=0: Vbar = {:.5} vs c0 = {c0:.5} ({:.2}%), deviation slope {slope:.3}, report {}", base.vbar, 100.0 * rel, rep.verdict),
    );
    runs.into_iter().map(|s| s.series).collect()
}

fn c9_narrow(t: &mut Tally) -> Vec<TimeSeries> {
    let r = ReactionModel::new(ReactionKind::NarrowCompliant { lambda: 1.0 }, 0.2, 1.0).unwrap();
    let start = Instant::now();
    let (rep, runs) = verify_thm_1_3(&NarrowSweep {
        base: cauchy_base(1.0, r),
        rho1: 0.05,
        rho2: 0.05,
        window: (30.0, 60.0),
        lambda0: 1.0,
        rho0: 0.2,
    })
    .unwrap();
    let el = start.elapsed();
    let ratio = runs[1].nzbar / runs[0].nzbar;
    let change = (runs[2].nzbar / runs[0].nzbar - 1.0).abs();
    let ok = (2.5..=5.5).contains(&ratio) && change <= 0.3 && el.as_secs_f64() < 600.0;
    t.line(9, ok, el, format!("Nz(rho2=0.1)/Nz(0.05) = {ratio:.4}, change under 2 rho1 = {:.2}%, report {}", 100.0 * change, rep.verdict));
    runs.into_iter().map(|s| s.series).collect()
}

fn c8_winn(t: &mut Tally, all: &[TimeSeries], el: Duration) {
    let mut worst = f64::INFINITY;
    let mut rows = 0;
    for s in all {
        for r in s.rows.iter().filter(|r| (10.0..=60.0).contains(&r.t)) {
            let margin = r.r_winn / r.t + r.vbar - 2.0 * r.nbar;
            worst = worst.min(margin + 0.05 * r.nbar);
            rows += 1;
        }
    }
    t.line(8, worst >= 0.0 && rows > 0, el, format!("{} runs, {rows} samples, min (margin + 0.05 Nbar) = {worst:.4e}", all.len()));
}

fn c10_decay(t: &mut Tally) {
    let start = Instant::now();
    let rep = verify_decay(&DecaySuite::standard()).unwrap();
    let el = start.elapsed();
    let constants: Vec<f64> = rep
        .entries
        .iter()
        .filter(|(k, _)| k.ends_with(".decay_constant"))
        .map(|(_, v)| v.parse().unwrap())
        .collect();
    let hi = constants.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let oracle = report_value(&rep, "zero_flow_oracle_error");
    let ok = constants.len() == 4 && hi / lo <= 2.0 && oracle <= 0.05 && el.as_secs_f64() < 180.0;
    t.line(
        10,
        ok,
        el,
        format!("decay constants {constants:.4?}, spread {:.3}, oracle error {:.2e}, report {}", hi / lo, oracle, rep.verdict),
    );
}

fn c11_nash(t: &mut Tally) {
    let start = Instant::now();
    let g = StripGrid::new(20.0, 1.0, 161, 17).unwrap();
    let rep = verify_nash(g, 1, 1000, Exec::Parallel).unwrap();
    let el = start.elapsed();
    t.line(
        11,
        rep.verdict == Verdict::Pass,
        el,
        format!(
            "min ratio {:.5}, refined {:.5}, change {:.3}%, scale error {:.1e}",
            report_value(&rep, "min_ratio"),
            report_value(&rep, "min_ratio_refined"),
            100.0 * report_value(&rep, "refinement_change"),
            report_value(&rep, "scale_invariance_error"),
        ),
    );
}

fn c12_energy(t: &mut Tally) {
    let start = Instant::now();
    let g = StripGrid::new(16.0, 2.0, 129, 33).unwrap();
    let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
    let mut c = SimConfig::new(g, r, 0.2, 1.0, diag45());
    c.omega0 = Omega0::Random { seed: 5, energy: 1e-2 };
    c.dt = TimeStep::Fixed(0.02);
    c.t_end = 1.0;
    c.recenter = false;
    let ev = Evolver::new(c.clone()).unwrap();
    let (_, state) = ev.run_from(init_front_like(&c).unwrap(), |_| {}).unwrap();
    let mut res = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let next = ev.step(&state, dt).unwrap();
        res.push(energy_budget(&state, &next, &c).residual().abs());
    }
    let ratios = [res[0] / res[1], res[1] / res[2]];
    let ok = ratios.iter().all(|q| (1.5..=2.5).contains(q));
    t.line(12, ok, start.elapsed(), format!("residuals {}, ratios {ratios:.3?}", sci(&res)));
}

fn c13_infrastructure(t: &mut Tally) {
    let start = Instant::now();
    let g = StripGrid::new(16.0, 1.0, 129, 17).unwrap();
    let r = ReactionModel::quad_ignition(0.2, 1.0).unwrap();
    let mut c = SimConfig::new(g, r, 0.3, 1.0, diag45());
    c.omega0 = Omega0::Random { seed: 9, energy: 1e-3 };
    c.t_end = 2.0;
    let ev = Evolver::new(c.clone()).unwrap();
    let (series, state) = ev.run_from(init_front_like(&c).unwrap(), |_| {}).unwrap();
    let ck = Checkpoint::from_state(&state);
    let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
    let bits = |f: &bfl::ScalarField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let exact = bits(&back.temp) == bits(&ck.temp)
        && bits(&back.omega) == bits(&ck.omega)
        && back.t.to_bits() == ck.t.to_bits()
        && back.shift_accum.to_bits() == ck.shift_accum.to_bits();
    let (again, _) = ev.run_from(init_front_like(&c).unwrap(), |_| {}).unwrap();
    let deterministic = timeseries_to_string(&series) == timeseries_to_string(&again);
    let (rp, rh) = manufactured_residuals(StripGrid::new(5.0, 2.0, 129, 33).unwrap()).unwrap();
    let ok = exact && deterministic && rp <= 1e-11 && rh <= 1e-11;
    t.line(
        13,
        ok,
        start.elapsed(),
        format!("checkpoint bit-exact {exact}, csv deterministic {deterministic}, residuals {rp:.1e} / {rh:.1e}"),
    );
}

fn main() -> ExitCode {
    // cargo passes libtest flags; only a filter-free listing request needs handling
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut t = Tally::default();
    c1_laminar(&mut t);
    c2_tau0(&mut t);
    let decoupled = c3_decoupled(&mut t);

    let start = Instant::now();
    let (p, stages) = convective_stages();
    let stage_time = start.elapsed();
    let mut fronts: Vec<(ReactionModel, &FrontSolution)> = vec![(decoupled_reaction(), &decoupled)];
    fronts.extend(stages.iter().map(|s| (p.reaction, s)));
    c4_identity(&mut t, &fronts, stage_time);
    c5_convective(&mut t);
    c6_vorticity(&mut t, &p, &stages, stage_time);

    let start = Instant::now();
    let mut series = c7_cauchy(&mut t);
    let narrow = c9_narrow(&mut t);
    series.extend(narrow);
    c8_winn(&mut t, &series, start.elapsed());

    c10_decay(&mut t);
    c11_nash(&mut t);
    c12_energy(&mut t);
    c13_infrastructure(&mut t);

    t.lines.sort_by_key(|l| l.0);
    for (_, _, text) in &t.lines {
        println!("{text}");
    }
    let failed: Vec<u32> = t.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", t.lines.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}

fn decoupled_reaction() -> ReactionModel {
    ReactionModel::step_linear(0.25, 1.0).unwrap()
}
