//! Run configuration as a TOML document.
//!
//! ```toml
//! [domain]
//! a = 32.0
//! lambda = 4.0
//!
//! [grid]
//! nx = 513
//! nz = 65
//!
//! [physics]
//! rho = 0.2
//! sigma = 1.0
//! theta0 = 0.2
//! reaction_kind = "quad_ignition"
//! amplitude = 1.0
//! e1 = 1.0
//! e2 = 1.0
//!
//! [run]
//! t_end = 60.0
//! dt = "auto"
//! cfl_safety = 0.2
//! recenter = true
//!
//! [sweep]
//! param = "rho"
//! values = [0.0, 0.05, 0.1, 0.2]
//! window = [30.0, 60.0]
//! ```
//!
//! `(e1, e2)` is normalized on load. With `seed` set, ω₀ is smoothed noise
//! of energy `omega0_energy`; without it ω₀ = 0.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{Omega0, SimConfig, TimeStep};
use crate::flow::GravityDir;
use crate::front::FrontProblem;
use crate::grid::StripGrid;
use crate::par::Exec;
use crate::reaction::{ReactionKind, ReactionModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub grid: GridSection,
    pub physics: Physics,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub a: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub nz: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    StepLinear,
    QuadIgnition,
    NarrowCompliant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub rho: f64,
    pub sigma: f64,
    pub theta0: f64,
    pub reaction_kind: KindName,
    pub amplitude: f64,
    pub e1: f64,
    pub e2: f64,
}

/// `dt = "auto"` or a positive number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Word(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: DtSpec,
    #[serde(default = "default_safety")]
    pub cfl_safety: f64,
    #[serde(default = "default_true")]
    pub recenter: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_energy")]
    pub omega0_energy: f64,
    #[serde(default = "default_r_init")]
    pub r_init: f64,
}

fn default_t_end() -> f64 {
    10.0
}
fn default_dt() -> DtSpec {
    DtSpec::Word("auto".into())
}
fn default_safety() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_energy() -> f64 {
    1e-4
}
fn default_r_init() -> f64 {
    2.0
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_end: default_t_end(),
            dt: default_dt(),
            cfl_safety: default_safety(),
            recenter: true,
            seed: None,
            omega0_energy: default_energy(),
            r_init: default_r_init(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// `rho` or `a`.
    pub param: String,
    pub values: Vec<f64>,
    pub window: [f64; 2],
}

impl RunConfig {
    /// Parses, normalizes `(e1, e2)` and validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        let p = &mut cfg.physics;
        let n2 = p.e1 * p.e1 + p.e2 * p.e2;
        if (n2 - 1.0).abs() > 1e-12 {
            let g = GravityDir::normalized(p.e1, p.e2)?;
            p.e1 = g.e1();
            p.e2 = g.e2();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.reaction()?;
        self.time_step()?;
        self.sim_config(Exec::default())?.validate()?;
        if let Some(s) = &self.sweep {
            if s.param != "rho" && s.param != "a" {
                return Err(Error::Config(format!("sweep param must be rho or a, got {:?}", s.param)));
            }
            if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("sweep values must be finite and nonempty".into()));
            }
            if !(s.window[0] >= 0.0 && s.window[1] > s.window[0]) {
                return Err(Error::Config(format!("bad sweep window {:?}", s.window)));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<StripGrid> {
        StripGrid::new(self.domain.a, self.domain.lambda, self.grid.nx, self.grid.nz)
    }

    pub fn reaction(&self) -> Result<ReactionModel> {
        let kind = match self.physics.reaction_kind {
            KindName::StepLinear => ReactionKind::StepLinear,
            KindName::QuadIgnition => ReactionKind::QuadIgnition,
            KindName::NarrowCompliant => ReactionKind::NarrowCompliant { lambda: self.domain.lambda },
        };
        ReactionModel::new(kind, self.physics.theta0, self.physics.amplitude)
    }

    pub fn ehat(&self) -> Result<GravityDir> {
        GravityDir::normalized(self.physics.e1, self.physics.e2)
    }

    pub fn time_step(&self) -> Result<TimeStep> {
        match &self.run.dt {
            DtSpec::Fixed(dt) => Ok(TimeStep::Fixed(*dt)),
            DtSpec::Word(w) if w == "auto" => Ok(TimeStep::Auto),
            DtSpec::Word(w) => Err(Error::Config(format!("dt must be a number or \"auto\", got {w:?}"))),
        }
    }

    pub fn sim_config(&self, exec: Exec) -> Result<SimConfig> {
        let p = &self.physics;
        let mut c = SimConfig::new(self.grid()?, self.reaction()?, p.rho, p.sigma, self.ehat()?);
        c.dt = self.time_step()?;
        c.t_end = self.run.t_end;
        c.cfl_safety = self.run.cfl_safety;
        c.recenter = self.run.recenter;
        c.r_init = self.run.r_init;
        c.omega0 = match self.run.seed {
            Some(seed) => Omega0::Random { seed, energy: self.run.omega0_energy },
            None => Omega0::Zero,
        };
        c.exec = exec;
        Ok(c)
    }

    pub fn front_problem(&self) -> Result<FrontProblem> {
        let p = &self.physics;
        Ok(FrontProblem::new(self.grid()?, self.reaction()?, p.rho, p.sigma, self.ehat()?))
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
