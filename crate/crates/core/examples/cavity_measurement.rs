//! Measurement strength produced by a bad-cavity read-out of a moving
//! mirror, as a function of the intracavity photon number, and the
//! resulting steady conditional state.

use qfeedback::gaussian::steady_state_covariances;
use qfeedback::model::{measurement_constant, regime_numbers};
use qfeedback::{CavityCoupling, CavitySetup, PhysicalParams};

fn main() -> anyhow::Result<()> {
    let hbar = 1.0;
    let setup = CavitySetup {
        gamma: 50.0,
        omega0: 1e3,
        laser_power: 0.0,
        coupling: CavityCoupling::Mirror { g_m: 0.5 },
        beta_homodyne: 1.0,
    };
    println!("{:>10} {:>10} {:>8} {:>10} {:>8}", "photons", "k", "r", "V_x", "purity");
    for photons in [1.0, 10.0, 100.0, 1e3, 1e4] {
        let s = setup.with_intracavity_photons(photons, hbar);
        let k = measurement_constant(&s, hbar)?;
        let params = PhysicalParams::new(1.0, 1.0, hbar, k, 0.9)?;
        let cov = steady_state_covariances(&params)?;
        println!(
            "{photons:>10} {k:>10.4} {:>8.4} {:>10.5} {:>8.4}",
            regime_numbers(&params)?.r,
            cov.v_x,
            cov.purity(hbar)?
        );
    }
    Ok(())
}
