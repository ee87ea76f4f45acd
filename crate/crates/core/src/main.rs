use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bfl::diagnostics::steady_identity;
use bfl::evolve::run;
use bfl::front::find_front;
use bfl::harness::{self, CauchySweep, DecaySuite, NarrowSweep, Report};
use bfl::io::checkpoint::{write_checkpoint, Checkpoint};
use bfl::io::config::RunConfig;
use bfl::io::csv::{profile_to_string, write_timeseries_csv};
use bfl::io::report::write_report;
use bfl::laminar::laminar_speed;
use bfl::par::Exec;
use bfl::reaction::{ReactionKind, ReactionModel};
use bfl::Error;

#[derive(Parser)]
#[command(name = "bfl", version, about = "Reactive Boussinesq fronts in a slanted strip")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "step_linear")]
    StepLinear,
    #[value(name = "quad_ignition")]
    QuadIgnition,
    #[value(name = "narrow_compliant")]
    NarrowCompliant,
}

#[derive(Subcommand)]
enum Cmd {
    /// Laminar speed c₀ and profile of the 1D front.
    Laminar {
        #[arg(long)]
        theta0: f64,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Strip width, used by narrow_compliant.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Profile CSV path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Traveling front by continuation; writes a checkpoint.
    Front {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cauchy run; writes the time-series CSV.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the final state.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Multi-run verification reports.
    #[command(subcommand)]
    Verify(Verify),
    /// Manufactured-solution and oracle suite.
    Selftest,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and per-run CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verify {
    Thm11(ReportArgs),
    Thm12(ReportArgs),
    Thm13 {
        #[command(flatten)]
        args: ReportArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 0.2)]
        rho0: f64,
    },
    Limita(ReportArgs),
    Nash {
        #[command(flatten)]
        args: ReportArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    Decay {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    VerdictFail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: usage: {}", msg.lines().next().unwrap_or("").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match dispatch(cli.cmd, exec) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFail) => ExitCode::from(1),
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {}", msg.split_whitespace().collect::<Vec<_>>().join(" "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Cmd, exec: Exec) -> bfl::Result<Outcome> {
    match cmd {
        Cmd::Laminar { theta0, kind, amplitude, lambda, tol, out } => {
            let kind = match kind {
                Kind::StepLinear => ReactionKind::StepLinear,
                Kind::QuadIgnition => ReactionKind::QuadIgnition,
                Kind::NarrowCompliant => ReactionKind::NarrowCompliant { lambda },
            };
            if !(tol > 0.0) {
                return Err(Error::Config("tol must be positive".into()));
            }
            let f = ReactionModel::new(kind, theta0, amplitude)?;
            let p = laminar_speed(&f, tol.min(1e-8))?;
            emit(&format!("c0 = {:.6} ± {tol:e}\n", p.c0))?;
            let csv = profile_to_string(&p.samples);
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => emit(&csv)?,
            }
            Ok(Outcome::Ok)
        }
        Cmd::Front { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let problem = cfg.front_problem()?;
            let sol = find_front(&problem)?;
            write_checkpoint(&out, &Checkpoint::from_front(&sol))?;
            let id = steady_identity(&sol, &problem.reaction);
            println!("c = {:.16e}", sol.c);
            println!("identity.lhs = {:.16e}", id.lhs());
            println!("identity.rhs = {:.16e}", id.rhs());
            println!("identity.relative_residual = {:.16e}", id.relative_residual());
            println!("residual_t = {:.16e}", sol.residual_t);
            println!("residual_omega = {:.16e}", sol.residual_omega);
            Ok(Outcome::Ok)
        }
        Cmd::Evolve { config, out, checkpoint } => {
            let cfg = RunConfig::load(&config)?;
            let sim = cfg.sim_config(exec)?;
            let mut last = None;
            let keep_last = checkpoint.is_some();
            let result = run(&sim, |s| {
                if keep_last {
                    last = Some(Checkpoint::from_state(s));
                }
            });
            match result {
                Ok(series) => {
                    write_timeseries_csv(&out, &series)?;
                    if let (Some(path), Some(ck)) = (checkpoint, last) {
                        write_checkpoint(&path, &ck)?;
                    }
                    Ok(Outcome::Ok)
                }
                Err(fail) => {
                    write_timeseries_csv(&out, &fail.partial)?;
                    Err(fail.error)
                }
            }
        }
        Cmd::Verify(v) => verify(v, exec),
        Cmd::Selftest => finish(harness::selftest()?, &[], None),
    }
}

fn sweep_of(cfg: &RunConfig, param: &str) -> bfl::Result<(Vec<f64>, (f64, f64))> {
    match &cfg.sweep {
        Some(s) if s.param == param => Ok((s.values.clone(), (s.window[0], s.window[1]))),
        _ => Err(Error::Config(format!("config needs a [sweep] section with param = \"{param}\""))),
    }
}

fn verify(v: Verify, exec: Exec) -> bfl::Result<Outcome> {
    match v {
        Verify::Thm11(args) => {
            let cfg = RunConfig::load(&args.config)?;
            finish(harness::verify_thm_1_1(&cfg.front_problem()?)?, &[], args.out.as_deref())
        }
        Verify::Thm12(args) => {
            let cfg = RunConfig::load(&args.config)?;
            let (rhos, window) = sweep_of(&cfg, "rho")?;
            let (rep, runs) = harness::verify_thm_1_2(&CauchySweep { base: cfg.sim_config(exec)?, rhos, window })?;
            finish(rep, &runs, args.out.as_deref())
        }
        Verify::Thm13 { args, lambda0, rho0 } => {
            let cfg = RunConfig::load(&args.config)?;
            let window = match &cfg.sweep {
                Some(s) => (s.window[0], s.window[1]),
                None => return Err(Error::Config("config needs a [sweep] window".into())),
            };
            let p = &cfg.physics;
            let sweep = NarrowSweep {
                base: cfg.sim_config(exec)?,
                rho1: p.rho * p.e1,
                rho2: p.rho * p.e2,
                window,
                lambda0,
                rho0,
            };
            let (rep, runs) = harness::verify_thm_1_3(&sweep)?;
            finish(rep, &runs, args.out.as_deref())
        }
        Verify::Limita(args) => {
            let cfg = RunConfig::load(&args.config)?;
            let (lengths, _) = sweep_of(&cfg, "a")?;
            finish(harness::verify_front_limit_a(&cfg.front_problem()?, &lengths)?, &[], args.out.as_deref())
        }
        Verify::Nash { args, seed, count } => {
            let cfg = RunConfig::load(&args.config)?;
            finish(harness::verify_nash(cfg.grid()?, seed, count, exec)?, &[], args.out.as_deref())
        }
        Verify::Decay { out } => {
            let suite = DecaySuite { exec, ..DecaySuite::standard() };
            finish(harness::verify_decay(&suite)?, &[], out.as_deref())
        }
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(s: &str) -> std::io::Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(s.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn finish(rep: Report, runs: &[harness::RunSummary], out: Option<&Path>) -> bfl::Result<Outcome> {
    emit(&rep.to_string())?;
    if let Some(dir) = out {
        write_report(dir, &rep, runs)?;
    }
    Ok(if rep.verdict.is_failure() { Outcome::VerdictFail } else { Outcome::Ok })
}
