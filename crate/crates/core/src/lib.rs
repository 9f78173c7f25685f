//! Shooting solver for positive radial solutions of the Hénon equation
//! `-Δu + u = |x|^α u^p` on the unit ball with Neumann boundary conditions,
//! and of its generalization `-Δu + u = φ(|x|) f(u)`.
//!
//! The pipeline is: [`problem`] defines the radial ODE and its barrier
//! curve, [`integrator`] shoots from the origin with `u(0) = γ`,
//! [`shooting`] bisects on `γ` until the `n`-th stationary point sits at
//! `r = 1`, and [`analysis`] checks the qualitative properties a radial
//! solution must have. [`experiments`] reproduces the published numerical
//! runs and [`cli`] exposes everything on the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod export;
pub mod integrator;
pub mod problem;
pub mod shooting;

pub use error::{Error, Result};
pub use integrator::{integrate, IntegratorOptions, Trajectory};
pub use problem::{GeneralSpec, HenonSpec, ProblemSpec};
pub use shooting::{shoot, ShootOptions, ShootingResult};
