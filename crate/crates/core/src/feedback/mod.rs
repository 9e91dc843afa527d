//! Closing the loop around the conditioned Gaussian state.
//!
//! [`sim`] runs single trajectories under estimation feedback
//! (`u = -K <x>`), direct feedback (a Hamiltonian proportional to the
//! measurement current) or both, [`ensemble`] runs many of them in parallel,
//! [`excess`] holds the closed-form spread of the conditional means, and
//! [`twin`] is the classical Kalman-filter counterpart.

pub mod controller;
pub mod ensemble;
pub mod excess;
pub mod sim;
pub mod twin;

pub use controller::{direct_feedback_mean_terms, noise_cancelling_gains, ControllerSpec, DirectMeanTerms, FeedbackMode};
pub use ensemble::{analytic_excess, run_ensemble, EnsembleOptions, EnsembleStats};
pub use excess::{excess_cov_derivative, excess_cov_steady_state, total_covariances, DampingVariant, ExcessCovariances};
pub use sim::{simulate_trajectory, simulate_with_increments, FeedbackLoop, TrajectoryRecord};
pub use twin::{classical_twin_step, ClassicalTwin, TwinRun};
