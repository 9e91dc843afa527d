//! Steady conditional state across measurement strengths: the covariances
//! in ground-state units, the purity, and the time the covariance flow
//! takes to settle from a thermal start.

use qfeedback::gaussian::{converge_covariances, steady_state_covariances};
use qfeedback::model::regime_numbers;
use qfeedback::{Covariances, PhysicalParams};

fn main() -> anyhow::Result<()> {
    let eta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    println!("eta = {eta}");
    println!("{:>8} {:>8} {:>10} {:>10} {:>10} {:>8} {:>8}", "r", "k", "V_x~", "V_p~", "C~", "purity", "settle");
    for r in [0.1, 0.3, 1.0, 3.0, 10.0] {
        let params = PhysicalParams::nondimensional(1.0 / (2.0 * eta * r), eta)?;
        let cov = steady_state_covariances(&params)?;
        let t = cov.to_tilde(&params);
        let (_, settle) = converge_covariances(&params, Covariances::thermal(&params, 10.0), 1e-8, 1e3)?;
        assert!((regime_numbers(&params)?.r - r).abs() < 1e-12);
        println!(
            "{r:>8} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>8.4} {:>8.2}",
            params.k,
            t.v_x,
            t.v_p,
            t.c,
            cov.purity(params.hbar)?,
            settle
        );
    }
    Ok(())
}
