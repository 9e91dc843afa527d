//! One closed-loop trajectory under the optimal gain, starting displaced
//! from a thermal state. Prints a thinned table of the estimate and the
//! accumulated cost.

use qfeedback::feedback::{simulate_trajectory, ControllerSpec};
use qfeedback::lqg::ControlDesign;
use qfeedback::{Covariances, GaussianState, PhysicalParams};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let params = PhysicalParams::nondimensional(0.5, 0.8)?;
    let design = ControlDesign::harmonic(&params, 0.3)?;
    let controller = ControllerSpec::from_design(&design);
    let init = GaussianState::new(3.0, 0.0, Covariances::thermal(&params, 2.0))?;
    let rec = simulate_trajectory(&params, &controller, init, 10.0, 1e-4, seed)?;

    println!("{:>6} {:>9} {:>9} {:>8} {:>8} {:>8} {:>9}", "t", "<x>", "<p>", "V_x", "V_p", "C", "cost");
    for i in (0..rec.len()).step_by(5000) {
        let s = &rec.states[i];
        println!(
            "{:>6.2} {:>9.4} {:>9.4} {:>8.4} {:>8.4} {:>8.4} {:>9.4}",
            rec.times[i],
            s.mean_x,
            s.mean_p,
            s.v_x,
            s.v_p,
            s.c,
            rec.costs[i].total()
        );
    }
    println!("final cost {:.6}", rec.cost.total());
    Ok(())
}
