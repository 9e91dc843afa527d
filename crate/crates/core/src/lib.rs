//! Estimation and feedback control of a harmonic oscillator under continuous
//! position measurement.
//!
//! The crate is organized around the two exact descriptions of the
//! conditioned state:
//!
//! * [`gaussian`] carries the five Gaussian moments, which is all a linear
//!   system with Gaussian initial conditions ever needs;
//! * [`fock`] integrates the full stochastic master equation for the density
//!   matrix on a truncated number basis and serves as a reference for the
//!   first.
//!
//! [`lqg`] designs optimal linear gains, [`feedback`] closes the loop for
//! single trajectories and ensembles, and [`model`] holds the physical
//! constants and the conversion from cavity parameters to the measurement
//! strength.

pub mod cli;
pub mod error;
pub mod feedback;
pub mod fock;
pub mod gaussian;
pub mod lqg;
pub mod model;
pub mod noise;

pub use error::{Error, Result};
pub use gaussian::{Control, Covariances, GaussianState};
pub use lqg::{ControlDesign, CostAccumulator, CostWeights};
pub use model::{CavityCoupling, CavitySetup, PhysicalParams, RegimeNumbers};
