//! Optimal feedback gains for the energy cost over a range of control
//! weights, for full actuation and for a force-only actuator.

use qfeedback::lqg::ControlDesign;
use qfeedback::PhysicalParams;

fn main() -> anyhow::Result<()> {
    let params = PhysicalParams::nondimensional(0.5, 1.0)?;
    println!("{:>8} {:>12} {:>12} {:>12} {:>24}", "q", "K_xx", "K_pp", "K_px (force)", "closed-loop poles (force)");
    for q in [0.01, 0.03, 0.1, 0.3, 1.0, 3.0] {
        let full = ControlDesign::harmonic(&params, q)?;
        let force = ControlDesign::position_only(&params, q)?;
        let poles = force.closed_loop.map(|z| format!("{:.3}{:+.3}i", z.re, z.im));
        println!(
            "{q:>8} {:>12.4} {:>12.4} {:>12.4} {:>24}",
            full.k_gain[(0, 0)],
            full.k_gain[(1, 1)],
            force.k_gain[(1, 0)],
            poles.join(" ")
        );
    }
    Ok(())
}
