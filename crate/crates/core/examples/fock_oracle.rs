//! Compares the exact density-matrix evolution with the Gaussian moment
//! equations on shared noise paths, at two step sizes.
//!
//! Usage: `fock_oracle [seed] [paths]`

use qfeedback::fock::verify::{verify, VerifyConfig};
use qfeedback::PhysicalParams;

fn main() -> anyhow::Result<()> {
    let params = PhysicalParams::nondimensional(0.1, 1.0)?;
    let mut cfg = VerifyConfig::standard(params)?;
    let mut args = std::env::args().skip(1);
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse()?;
    }
    if let Some(paths) = args.next() {
        cfg.paths = paths.parse()?;
    }
    let report = verify(&cfg)?;
    for p in &report.paths {
        println!("path {}:", p.seed);
        for run in [&p.coarse, &p.fine] {
            let e = &run.errors;
            println!(
                "  dt = {:.1e}: max rel error {:.3e} (x {:.1e}, p {:.1e}, Vx {:.1e}, Vp {:.1e}, C {:.1e}), \
                 first-order loop {:.1e}, min eigenvalue {:.1e}",
                run.dt, run.max_error, e.mean_x, e.mean_p, e.v_x, e.v_p, e.c, run.loop_max_error, run.min_eigenvalue
            );
        }
        println!("  ratio {:.2}", p.order_ratio);
    }
    println!(
        "mean max error {:.3e} -> {:.3e}, ratio {:.2} (need >= 2), worst {:.3e} (tolerance {:.0e})",
        report.mean_coarse_error, report.mean_fine_error, report.order_ratio, report.max_error, report.tolerance
    );
    println!("{}", if report.passed { "PASS" } else { "FAIL" });
    Ok(())
}
