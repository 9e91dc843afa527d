//! Spread of the conditional means under estimate feedback, from an
//! ensemble of trajectories, next to the closed-form prediction.
//!
//! Usage: `ensemble_excess [n_traj] [gamma]`

use qfeedback::feedback::{analytic_excess, run_ensemble, ControllerSpec, EnsembleOptions};
use qfeedback::gaussian::steady_state_covariances;
use qfeedback::{GaussianState, PhysicalParams};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_traj: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let gamma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    // r = 1
    let params = PhysicalParams::nondimensional(0.5, 1.0)?;
    let controller = ControllerSpec::damping(gamma, gamma);
    let init = GaussianState::new(0.0, 0.0, steady_state_covariances(&params)?)?;
    let opts = EnsembleOptions { tail_start: Some(5.0) };
    let stats = run_ensemble(&params, &controller, init, 10.0, 6e-4, n_traj, 5, opts)?;
    let (variant, predicted) = analytic_excess(&params, &controller)?.expect("damping controller");

    let se = stats.standard_error_tilde.map(|s| s.as_array()).unwrap_or([f64::NAN; 3]);
    println!("{variant:?}, Gamma = {gamma}, {n_traj} trajectories");
    println!("{:>6} {:>10} {:>10} {:>10}", "", "ensemble", "std err", "predicted");
    for (i, name) in ["Ve_x", "Ve_p", "Ce"].iter().enumerate() {
        println!(
            "{name:>6} {:>10.5} {:>10.5} {:>10.5}",
            stats.excess_tilde.as_array()[i],
            se[i],
            predicted.as_array()[i]
        );
    }
    Ok(())
}
