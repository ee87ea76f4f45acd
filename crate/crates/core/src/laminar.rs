//! One-dimensional laminar front `Φ'' + cΦ' + f(Φ) = 0`, `Φ(-∞) = 1`,
//! `Φ(+∞) = 0`, normalized by `Φ(0) = θ₀`.
//!
//! The speed is found by shooting from the nonreactive tail `θ₀e^{-cx}`
//! toward `-∞` and bisecting on the overshoot/undershoot classification.
//! The profile is then traced in the opposite direction, from the burnt
//! state along its unstable manifold, which is the numerically stable way
//! to follow the heteroclinic orbit.

use crate::error::{Error, Result};
use crate::reaction::ReactionModel;

const STEP: f64 = 0.005;
const MAX_SHOOT_LENGTH: f64 = 2000.0;
/// Distance from the burnt state at which the profile leaves the
/// asymptotic expansion.
const MANIFOLD_EPS: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct LaminarProfile {
    pub c0: f64,
    pub theta0: f64,
    /// `(x, Φ₀(x))` on a uniform grid ending at `x = 0`.
    pub samples: Vec<(f64, f64)>,
    /// Raw abscissa of the θ₀ crossing before normalization.
    pub shift: f64,
    left_mu: f64,
    left_beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shot {
    Overshoot,
    Undershoot,
    Undecided,
}

fn rk4(y: [f64; 2], h: f64, rhs: impl Fn([f64; 2]) -> [f64; 2]) -> [f64; 2] {
    let k1 = rhs(y);
    let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Integrates from the tail point `x_start >= 0` toward `-∞` at trial speed `c`.
pub fn shoot(f: &ReactionModel, c: f64, x_start: f64) -> Shot {
    let th = f.theta0();
    let phi = th * (-c * x_start).exp();
    // state (Φ, Φ') advanced in s = -x
    let rhs = |y: [f64; 2]| [-y[1], c * y[1] + f.f_active(y[0])];
    let tail = |y: [f64; 2]| [-y[1], c * y[1]];
    let mut y = [phi, -c * phi];
    let h = STEP.min(0.05 / c.max(1e-12));
    if x_start > 0.0 {
        let n = (x_start / h).ceil() as usize;
        let hs = x_start / n as f64;
        for _ in 0..n {
            y = rk4(y, hs, tail);
        }
        y[0] = th;
    }
    let mut s = 0.0;
    while s < MAX_SHOOT_LENGTH {
        y = rk4(y, h, rhs);
        s += h;
        if y[0] > 1.0 {
            return Shot::Overshoot;
        }
        if y[1] >= 0.0 {
            return Shot::Undershoot;
        }
    }
    Shot::Undecided
}

pub fn laminar_speed(f: &ReactionModel, tol: f64) -> Result<LaminarProfile> {
    laminar_speed_from(f, tol, 0.0)
}

/// As [`laminar_speed`], starting the shot at `x_start` on the exact tail.
pub fn laminar_speed_from(f: &ReactionModel, tol: f64, x_start: f64) -> Result<LaminarProfile> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::Config(format!("tolerance must lie in (0, 1e-2], got {tol}")));
    }
    if f.is_trivial() {
        return Err(Error::NoFront);
    }
    let (mut lo, mut hi) = (1e-6, 10.0 + f.m());
    if shoot(f, lo, x_start) != Shot::Undershoot || shoot(f, hi, x_start) != Shot::Overshoot {
        return Err(Error::Bracketing { lo, hi });
    }
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        match shoot(f, mid, x_start) {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
            Shot::Undecided => {
                lo = mid;
                hi = mid;
            }
        }
    }
    Ok(trace_profile(f, 0.5 * (lo + hi)))
}

fn trace_profile(f: &ReactionModel, c: f64) -> LaminarProfile {
    let th = f.theta0();
    let (k, q) = f.expansion_at_one();
    let mu = 0.5 * (-c + (c * c + 4.0 * k).sqrt());
    let beta = q / (3.0 * mu * mu + c * mu);
    let eps = MANIFOLD_EPS;
    let y0 = [1.0 - eps - beta * eps * eps, -(mu * eps + 2.0 * mu * beta * eps * eps)];
    let rhs = |y: [f64; 2]| [y[1], -c * y[1] - f.f_active(y[0])];

    // first pass: locate the θ₀ crossing
    let mut y = y0;
    let mut x = 0.0;
    let mut x_cross = loop {
        let next = rk4(y, STEP, rhs);
        if next[0] <= th {
            break x + STEP * (y[0] - th) / (y[0] - next[0]);
        }
        y = next;
        x += STEP;
        assert!(x < 1e5, "profile trace did not reach theta0");
    };
    // refine so that a uniform grid lands on the crossing
    let mut samples = Vec::new();
    for _ in 0..3 {
        let n = (x_cross / STEP).ceil().max(1.0) as usize;
        let h = x_cross / n as f64;
        samples.clear();
        let mut y = y0;
        samples.push(y[0]);
        for _ in 0..n {
            y = rk4(y, h, rhs);
            samples.push(y[0]);
        }
        x_cross += (y[0] - th) / (-y[1]);
    }
    let n = samples.len() - 1;
    let h = x_cross / n as f64;
    *samples.last_mut().unwrap() = th;
    let samples = samples
        .into_iter()
        .enumerate()
        .map(|(k, v)| (k as f64 * h - x_cross, v))
        .collect::<Vec<_>>();
    let mut p = LaminarProfile { c0: c, theta0: th, samples, shift: x_cross, left_mu: mu, left_beta: beta };
    p.samples.last_mut().unwrap().0 = 0.0;
    p
}

impl LaminarProfile {
    pub fn spacing(&self) -> f64 {
        self.samples[1].0 - self.samples[0].0
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            return self.theta0 * (-self.c0 * x).exp();
        }
        let x0 = self.samples[0].0;
        if x <= x0 {
            let e = MANIFOLD_EPS * (self.left_mu * (x - x0)).exp();
            return (1.0 - e - self.left_beta * e * e).min(1.0);
        }
        let h = self.spacing();
        let k = (((x - x0) / h).floor() as usize).min(self.samples.len() - 2);
        let (xa, fa) = self.samples[k];
        let (_, fb) = self.samples[k + 1];
        let t = (x - xa) / h;
        fa + t * (fb - fa)
    }
}

pub fn profile_eval(p: &LaminarProfile, x: f64) -> f64 {
    p.eval(x)
}
