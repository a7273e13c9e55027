//! Numerical toolkit for mean-field games on the unit interval with
//! absorbing boundaries.
//!
//! Players diffuse on [0,1] and leave the game the first time they touch a
//! boundary point, so population measures are *subprobability* measures:
//! mass decays instead of being conserved. The crate provides
//!
//! - [`measures`]: subprobability measures, empirical measures with
//!   absorption, and the exact flat (generalized Wasserstein) metric;
//! - [`pde1d`]: finite-difference kernels (backward HJB, forward
//!   Fokker-Planck with Dirichlet absorption, exponential transform);
//! - [`mfg`]: the forward-backward fixed point, the value map
//!   `U(t0, x, m0)`, and its measure derivative via the linearized system;
//! - [`toy_model`]: a closed-form benchmark (quadratic Hamiltonian, product
//!   terminal cost) solved by Fourier series and a scalar fixed point;
//! - [`particles`]: seeded Monte-Carlo simulation of the absorbed N-player
//!   game and cost evaluation;
//! - [`nash_small`]: the exact two-player Nash system on a 2-D grid and its
//!   comparison against measure-space projections;
//! - [`harness`]: experiment orchestration, rate fitting and deterministic
//!   CSV/JSON/SVG emission.

pub mod error;
pub mod harness;
pub mod measures;
pub mod mfg;
pub mod nash_small;
pub mod particles;
pub mod pde1d;
pub mod toy_model;

pub use error::{Error, Result};
pub use measures::{empirical_measure, flat_distance, EmpiricalState, SubProbMeasure};
pub use pde1d::{Coefficients, Grid1D, Hamiltonian, SpaceTimeField};
