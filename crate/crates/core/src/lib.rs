//! Bound states of a coupled nonlinear Schrödinger / Korteweg-de Vries system
//!
//! ```text
//! -u'' + λ1 u = u^3 + β u v
//! -v'' + λ2 v = v^2 / 2 + β u^2 / 2
//! ```
//!
//! on a truncated line `[-L, L]` with homogeneous Dirichlet data: energies and
//! the Nehari constraint, constrained descent to ground states, the threshold
//! `Λ(λ1, λ2)` separating the regimes where the semi-trivial state `(0, V2)`
//! is or is not a ground state, continuation of `(U1, V2)` in `β`, and a
//! split-step evolution of the time-dependent system.

pub mod continuation;
pub mod energy;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod model;
pub mod nehari;
pub mod sampling;
pub mod threshold;

pub use continuation::{continue_in_beta, newton_solve, Branch, BranchPoint, NewtonOptions};
pub use energy::EnergyBreakdown;
pub use error::{Error, Result};
pub use grid::{Grid, PairField, RealField};
pub use model::{Params, WaveParams};
pub use nehari::{
    ground_state, minimize_on_nehari, DescentOptions, GroundOptions, GroundReport, SolveReport,
};
pub use threshold::{lambda_threshold, EigenMethod, ThresholdOptions, ThresholdReport};
