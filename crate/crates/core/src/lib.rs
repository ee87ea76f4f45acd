//! Numerical laboratory for reactive Boussinesq fronts in a slanted strip.
//!
//! The crate computes laminar and convective traveling fronts of the
//! reaction–diffusion–Boussinesq system on the truncated strip
//! `[-a, a] × [0, λ]`, evolves the Cauchy problem in vorticity form, and
//! evaluates the bulk diagnostics (burning rate, Nusselt number, flow
//! amplitude) together with the integral identities and a priori bounds
//! they obey.
//!
//! Module map:
//!
//! * [`grid`]: strip discretization, scalar fields, quadrature and stencils.
//! * [`spectral`]: sine/cosine/Fourier diagonalization of the 5-point Laplacian.
//! * [`reaction`], [`laminar`]: ignition nonlinearities and the 1D laminar front.
//! * [`flow`]: streamfunction recovery and the vorticity right-hand side.
//! * [`front`]: steady traveling fronts by continuation in the homotopy parameter.
//! * [`evolve`]: IMEX time integration of the coupled Cauchy problem.
//! * [`diagnostics`]: bulk observables, running averages, identity residuals.
//! * [`inequality`]: strip Nash inequality and flow-uniform decay experiments.
//! * [`harness`]: multi-run experiments and verdict reports.
//! * [`io`]: configuration, CSV, checkpoints and the command-line driver.

pub mod banded;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod flow;
pub mod front;
pub mod grid;
pub mod harness;
pub mod inequality;
pub mod io;
pub mod laminar;
pub mod par;
pub mod reaction;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{BoundaryKind, ScalarField, StripGrid, XBoundary, ZBoundary};
