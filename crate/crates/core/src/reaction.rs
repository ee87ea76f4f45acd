//! Ignition-type reaction terms: zero on `[0, θ₀]`, positive on `(θ₀, 1)`,
//! zero at `T = 1`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReactionKind {
    /// `A(1 - T)` above θ₀. Discontinuous at θ₀ but has a closed-form speed.
    StepLinear,
    /// `A(T - θ₀)₊(1 - T)/(1 - θ₀)`.
    QuadIgnition,
    /// `A(T - θ₀)₊²(1 - T)/((1 - θ₀)λ²)` with `A <= 1`, so that
    /// `f(T) <= (T - θ₀)₊²/λ²` holds on `[0, 1]` for the strip width λ.
    NarrowCompliant { lambda: f64 },
}

impl ReactionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReactionKind::StepLinear => "step_linear",
            ReactionKind::QuadIgnition => "quad_ignition",
            ReactionKind::NarrowCompliant { .. } => "narrow_compliant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionModel {
    kind: ReactionKind,
    theta0: f64,
    amplitude: f64,
    m: f64,
    k: f64,
}

impl ReactionModel {
    pub fn new(kind: ReactionKind, theta0: f64, amplitude: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return Err(Error::Config(format!("theta0 must lie in (0, 1), got {theta0}")));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Config(format!("amplitude must be nonnegative, got {amplitude}")));
        }
        if let ReactionKind::NarrowCompliant { lambda } = kind {
            if !(lambda > 0.0) {
                return Err(Error::Config("narrow_compliant needs lambda > 0".into()));
            }
            if amplitude > 1.0 {
                return Err(Error::Config("narrow_compliant needs amplitude <= 1".into()));
            }
        }
        let mut r = ReactionModel { kind, theta0, amplitude, m: 0.0, k: 0.0 };
        r.m = r.derive_m();
        r.k = r.derive_k();
        Ok(r)
    }

    pub fn step_linear(theta0: f64, amplitude: f64) -> Result<Self> {
        Self::new(ReactionKind::StepLinear, theta0, amplitude)
    }

    pub fn quad_ignition(theta0: f64, amplitude: f64) -> Result<Self> {
        Self::new(ReactionKind::QuadIgnition, theta0, amplitude)
    }

    pub fn kind(&self) -> ReactionKind {
        self.kind
    }
    pub fn theta0(&self) -> f64 {
        self.theta0
    }
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `sup f(T)/T` over `(0, 1]`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Lipschitz constant on `[0, 1]`; infinite for `StepLinear`.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Stiffness used for time-step control: `K`, or `A/θ₀` for `StepLinear`.
    pub fn k_eff(&self) -> f64 {
        match self.kind {
            ReactionKind::StepLinear => self.amplitude / self.theta0,
            _ => self.k,
        }
    }

    pub fn is_lipschitz(&self) -> bool {
        self.k.is_finite()
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        let th = self.theta0;
        if t <= th || t >= 1.0 {
            return 0.0;
        }
        let a = self.amplitude;
        match self.kind {
            ReactionKind::StepLinear => a * (1.0 - t),
            ReactionKind::QuadIgnition => a * (t - th) * (1.0 - t) / (1.0 - th),
            ReactionKind::NarrowCompliant { lambda } => {
                a * (t - th) * (t - th) * (1.0 - t) / ((1.0 - th) * lambda * lambda)
            }
        }
    }

    /// The reactive branch of `f` continued to all `T`, i.e. the right limit
    /// at θ₀. Used by integrators that stay on the burning side.
    #[inline]
    pub fn f_active(&self, t: f64) -> f64 {
        let th = self.theta0;
        let a = self.amplitude;
        match self.kind {
            ReactionKind::StepLinear => a * (1.0 - t),
            ReactionKind::QuadIgnition => a * (t - th) * (1.0 - t) / (1.0 - th),
            ReactionKind::NarrowCompliant { lambda } => {
                a * (t - th) * (t - th) * (1.0 - t) / ((1.0 - th) * lambda * lambda)
            }
        }
    }

    /// One-sided derivative `f'(T)` (taken from the right at θ₀).
    #[inline]
    pub fn df(&self, t: f64) -> f64 {
        let th = self.theta0;
        if t < th || t > 1.0 {
            return 0.0;
        }
        let a = self.amplitude;
        match self.kind {
            ReactionKind::StepLinear => {
                if t == th {
                    0.0
                } else {
                    -a
                }
            }
            ReactionKind::QuadIgnition => a * (1.0 + th - 2.0 * t) / (1.0 - th),
            ReactionKind::NarrowCompliant { lambda } => {
                let d = t - th;
                a * (2.0 * d * (1.0 - t) - d * d) / ((1.0 - th) * lambda * lambda)
            }
        }
    }

    /// Coefficients of `f(1 - ψ) = Kψ + Qψ² + O(ψ³)`.
    pub fn expansion_at_one(&self) -> (f64, f64) {
        let th = self.theta0;
        let a = self.amplitude;
        match self.kind {
            ReactionKind::StepLinear => (a, 0.0),
            ReactionKind::QuadIgnition => (a, -a / (1.0 - th)),
            ReactionKind::NarrowCompliant { lambda } => {
                let l2 = lambda * lambda;
                (a * (1.0 - th) / l2, -2.0 * a / l2)
            }
        }
    }

    fn derive_m(&self) -> f64 {
        let th = self.theta0;
        match self.kind {
            ReactionKind::StepLinear => self.amplitude * (1.0 - th) / th,
            _ => {
                let n = 20_000;
                (1..=n)
                    .map(|k| {
                        let t = th + (1.0 - th) * k as f64 / n as f64;
                        self.f(t) / t
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    fn derive_k(&self) -> f64 {
        match self.kind {
            ReactionKind::StepLinear => f64::INFINITY,
            ReactionKind::QuadIgnition => self.amplitude,
            ReactionKind::NarrowCompliant { .. } => {
                let n = 20_000;
                let th = self.theta0;
                (0..=n)
                    .map(|k| self.df(th + (1.0 - th) * k as f64 / n as f64).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// True when `f` vanishes identically on `(θ₀, 1)`.
    pub fn is_trivial(&self) -> bool {
        self.amplitude == 0.0
    }
}
