//! Direct feedback of the measurement record with the noise-cancelling
//! gains `(alpha, beta) = (2C, -2 V_x)`.
//!
//! Runs the density-matrix ensemble with and without feedback on the same
//! noise streams and compares the spread of the conditional means.
//!
//! Usage: `direct_feedback [n_traj]`

use qfeedback::feedback::{direct_feedback_mean_terms, noise_cancelling_gains, ControllerSpec};
use qfeedback::fock::{run_fock_ensemble, FockEnsembleConfig, SmeOptions};
use qfeedback::gaussian::steady_state_covariances;
use qfeedback::{GaussianState, PhysicalParams};

fn main() -> anyhow::Result<()> {
    let n_traj: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(200);
    let params = PhysicalParams::nondimensional(0.1, 1.0)?;
    let cov = steady_state_covariances(&params)?;
    let (alpha, beta) = noise_cancelling_gains(&cov);
    let terms = direct_feedback_mean_terms(&ControllerSpec::direct(alpha, beta), &params, &cov);
    println!("gains alpha = {alpha:.6}, beta = {beta:.6}");
    println!("mean diffusion with these gains: ({}, {})", terms.diffusion[0], terms.diffusion[1]);

    let mut cfg = FockEnsembleConfig {
        params,
        dim: 20,
        dt: 1e-3,
        horizon: 2.0,
        init: GaussianState::new(0.0, 0.0, cov)?,
        alpha,
        beta,
        n_traj,
        base_seed: 11,
        options: SmeOptions::default(),
        sample_interval: 0.25,
    };
    let cancel = run_fock_ensemble(&cfg)?;
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
    let reference = run_fock_ensemble(&cfg)?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "var x (fb)", "var x (ref)", "var p (fb)", "var p (ref)");
    for (i, t) in cancel.times.iter().enumerate() {
        println!(
            "{t:>6.2} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            cancel.var_x[i], reference.var_x[i], cancel.var_p[i], reference.var_p[i]
        );
    }
    Ok(())
}
