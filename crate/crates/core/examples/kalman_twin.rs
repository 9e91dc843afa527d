//! A classical oscillator with the same noise budget as the measured
//! quantum one. Its Kalman filter estimate is driven by the classical
//! readout; the estimation error stays within the filter covariance.

use qfeedback::feedback::{ClassicalTwin, ControllerSpec, TwinRun};
use qfeedback::gaussian::steady_state_covariances;
use qfeedback::{GaussianState, PhysicalParams};

fn main() -> anyhow::Result<()> {
    let params = PhysicalParams::nondimensional(0.5, 1.0)?;
    let cov = steady_state_covariances(&params)?;
    let est = GaussianState::new(0.0, 0.0, cov)?;
    let mut run = TwinRun::new(ClassicalTwin::new(0.0, 0.0, est), 1e-3, 17, 0);
    let controller = ControllerSpec::damping(0.5, 0.5);
    let n = 2_000_000;
    let (mut sxx, mut spp, mut sxp) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let out = run.step(&params, 1e-3, &controller)?;
        let ex = out.twin.x_c - out.twin.estimate.mean_x;
        let ep = out.twin.p_c - out.twin.estimate.mean_p;
        sxx += ex * ex;
        spp += ep * ep;
        sxp += ex * ep;
    }
    let n = n as f64;
    println!("{:>4} {:>10} {:>10}", "", "error", "filter");
    println!("{:>4} {:>10.4} {:>10.4}", "xx", sxx / n, cov.v_x);
    println!("{:>4} {:>10.4} {:>10.4}", "pp", spp / n, cov.v_p);
    println!("{:>4} {:>10.4} {:>10.4}", "xp", sxp / n, cov.c);
    Ok(())
}
