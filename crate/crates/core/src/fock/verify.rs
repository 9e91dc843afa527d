//! Oracle-versus-filter comparison on a shared noise path.
//!
//! The Gaussian moment equations and the density-matrix equation are driven
//! by the same Wiener increments (with their time integrals). The
//! comparison is repeated with half the step, the coarse increments being
//! built from pairs of fine ones, so both runs follow the same Brownian
//! path. Errors are measured relative to the filter value, with the
//! ground-state scale of each moment as a floor so that moments passing
//! through zero do not blow up the ratio.
//!
//! Both sides are integrated to strong order 1.5, so halving the step cuts
//! the discrepancy by about `2^1.5`. The first-order loop used in ensembles
//! is run alongside and its deviation reported for information.

use serde::{Deserialize, Serialize};

use super::prepare::from_gaussian;
use super::sme::{SmeIntegrator, SmeOptions, SmeScheme};
use super::{build_operators, moments, Moments};
use crate::error::{Error, Result};
use crate::feedback::controller::ControllerSpec;
use crate::feedback::sim::FeedbackLoop;
use crate::gaussian::{covariance_derivative, rk4_covariances, GaussianState};
use crate::model::PhysicalParams;
use crate::noise::{coarsen_with_area, compensated_sum, Brownian, WienerIncrement};
use rayon::prelude::*;
use nalgebra::{Matrix2, Vector2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub params: PhysicalParams,
    pub dim: usize,
    pub dt: f64,
    pub horizon: f64,
    pub init: GaussianState,
    /// Direct-feedback gains; zero for plain measurement.
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub options: SmeOptions,
    /// Moments are compared every `sample_interval` time units.
    pub sample_interval: f64,
    pub tolerance: f64,
    /// Number of independent noise paths (streams `seed`, `seed + 1`, ...).
    /// The reported errors are averages over paths of the per-path maxima.
    pub paths: usize,
}

impl VerifyConfig {
    /// Ground-state start, `N = 40`, `dt = 1e-4`, `t <= 5`, tolerance `1e-3`,
    /// order-1.5 oracle, four noise paths.
    pub fn standard(params: PhysicalParams) -> Result<Self> {
        let init = GaussianState::new(0.0, 0.0, crate::gaussian::Covariances::ground(&params))?;
        Ok(VerifyConfig {
            params,
            dim: 40,
            dt: 1e-4,
            horizon: 5.0,
            init,
            alpha: 0.0,
            beta: 0.0,
            seed: 0,
            options: SmeOptions {
                scheme: SmeScheme::StrongTaylor,
                ..SmeOptions::default()
            },
            sample_interval: 1e-2,
            tolerance: 1e-3,
            paths: 4,
        })
    }
}

/// Per-moment maxima of the relative error over the run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentErrors {
    pub mean_x: f64,
    pub mean_p: f64,
    pub v_x: f64,
    pub v_p: f64,
    pub c: f64,
}

impl MomentErrors {
    pub fn max(&self) -> f64 {
        [self.mean_x, self.mean_p, self.v_x, self.v_p, self.c].into_iter().fold(0.0, f64::max)
    }

    fn update(&mut self, e: [f64; 5]) {
        self.mean_x = self.mean_x.max(e[0]);
        self.mean_p = self.mean_p.max(e[1]);
        self.v_x = self.v_x.max(e[2]);
        self.v_p = self.v_p.max(e[3]);
        self.c = self.c.max(e[4]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub dt: f64,
    pub steps: usize,
    pub errors: MomentErrors,
    pub max_error: f64,
    /// Largest relative deviation of the first-order feedback loop from the
    /// oracle on the same path.
    pub loop_max_error: f64,
    /// Largest `|Tr[rho^2] - purity(V)|` seen.
    pub purity_gap: f64,
    pub min_eigenvalue: f64,
    pub max_top_population: f64,
    pub final_oracle: Moments,
    pub final_filter: GaussianState,
}

/// Coarse and fine comparison on one noise path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub seed: u64,
    pub coarse: ComparisonRun,
    pub fine: ComparisonRun,
    pub order_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub paths: Vec<PathComparison>,
    /// Largest error at the nominal step over all paths and moments.
    pub max_error: f64,
    /// Path averages of the per-path maximum errors at `dt` and `dt/2`.
    pub mean_coarse_error: f64,
    pub mean_fine_error: f64,
    /// `mean_coarse_error / mean_fine_error`; about 2.8 for order-1.5
    /// agreement, required to be at least 2.
    pub order_ratio: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub order_consistent: bool,
    pub passed: bool,
}

fn scales(params: &PhysicalParams) -> [f64; 5] {
    let PhysicalParams { m, omega, hbar, .. } = *params;
    [
        (hbar / (2.0 * m * omega)).sqrt(),
        (hbar * m * omega / 2.0).sqrt(),
        hbar / (2.0 * m * omega),
        hbar * m * omega / 2.0,
        hbar / 2.0,
    ]
}

fn filter_moments(g: &GaussianState) -> [f64; 5] {
    [g.mean_x, g.mean_p, g.v_x, g.v_p, g.c]
}

/// Gaussian moment equations with direct feedback, advanced to strong
/// order 1.5. The covariances are deterministic and take an RK4 step; the
/// means follow the linear SDE `dm = A m dt + g(t) dW`.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceFilter {
    params: PhysicalParams,
    a: Matrix2<f64>,
    alpha: f64,
    beta: f64,
    pub state: GaussianState,
}

impl ReferenceFilter {
    pub fn new(params: PhysicalParams, alpha: f64, beta: f64, init: GaussianState) -> Self {
        let PhysicalParams { m, omega, k, eta, .. } = params;
        let r = 4.0 * eta * k;
        let a = Matrix2::new(r * beta, 1.0 / m, -m * omega * omega - r * alpha, 0.0);
        ReferenceFilter {
            params,
            a,
            alpha,
            beta,
            state: init,
        }
    }

    pub fn step(&mut self, dt: f64, inc: &WienerIncrement) {
        let s = self.params.record_noise();
        let st = &self.state;
        let cov = st.covariances();
        let rates = covariance_derivative(&cov, &self.params);
        let g = s * Vector2::new(2.0 * st.v_x + self.beta, 2.0 * st.c - self.alpha);
        let g_dot = s * Vector2::new(2.0 * rates.dv_x, 2.0 * rates.dc);
        let m = st.means();
        let am = self.a * m;
        let WienerIncrement { dw, dz } = *inc;
        let next = m + am * dt + g * dw + self.a * am * (0.5 * dt * dt) + self.a * g * dz + g_dot * (dt * dw - dz);
        let t = st.t + dt;
        self.state = st.with_means(next).with_covariances(rk4_covariances(&cov, &self.params, dt));
        self.state.t = t;
    }
}

fn relative_errors(o: [f64; 5], f: [f64; 5], sc: &[f64; 5]) -> [f64; 5] {
    std::array::from_fn(|j| (o[j] - f[j]).abs() / f[j].abs().max(sc[j]))
}

/// Runs oracle, reference filter and feedback loop on the given increments
/// (one per step of `dt`).
pub fn compare_on_path(cfg: &VerifyConfig, dt: f64, increments: &[WienerIncrement]) -> Result<ComparisonRun> {
    let params = cfg.params;
    let ops = build_operators(cfg.dim, &params)?;
    let mut rho = from_gaussian(cfg.dim, &params, &cfg.init, cfg.options.leak_tol)?;
    let mut sme = SmeIntegrator::with_feedback(&ops, &params, cfg.alpha, cfg.beta, cfg.options)?;
    let controller = if cfg.alpha != 0.0 || cfg.beta != 0.0 {
        ControllerSpec::direct(cfg.alpha, cfg.beta)
    } else {
        ControllerSpec::none()
    };
    let mut filter = ReferenceFilter::new(params, cfg.alpha, cfg.beta, cfg.init);
    let mut lp = FeedbackLoop::new(params, controller, cfg.init, dt)?;
    let sc = scales(&params);
    let every = ((cfg.sample_interval / dt).round() as usize).max(1);

    let mut errors = MomentErrors::default();
    let mut loop_errors = MomentErrors::default();
    let mut purity_gap: f64 = 0.0;
    let mut min_eigenvalue = f64::INFINITY;
    let mut max_top: f64 = rho.top_population();
    let mut last = moments(&rho, &ops);
    for (i, inc) in increments.iter().enumerate() {
        sme.step_increment(&mut rho, dt, inc).map_err(|e| e.at_step(i))?;
        filter.step(dt, inc);
        lp.step(inc.dw)?;
        max_top = max_top.max(rho.top_population());
        if (i + 1) % every == 0 || i + 1 == increments.len() {
            let mo = moments(&rho, &ops);
            let g = &filter.state;
            let o = mo.as_array();
            errors.update(relative_errors(o, filter_moments(g), &sc));
            loop_errors.update(relative_errors(o, filter_moments(lp.state()), &sc));
            let gp = 0.5 * params.hbar / (g.v_x * g.v_p - g.c * g.c).sqrt();
            purity_gap = purity_gap.max((mo.purity - gp).abs());
            last = mo;
        }
        if (i + 1) % (every * 50) == 0 {
            min_eigenvalue = min_eigenvalue.min(rho.min_eigenvalue());
        }
    }
    min_eigenvalue = min_eigenvalue.min(rho.min_eigenvalue());
    Ok(ComparisonRun {
        dt,
        steps: increments.len(),
        max_error: errors.max(),
        loop_max_error: loop_errors.max(),
        errors,
        purity_gap,
        min_eigenvalue,
        max_top_population: max_top,
        final_oracle: last,
        final_filter: filter.state,
    })
}

/// Full check: compare at `dt` and `dt/2` on shared Brownian paths.
pub fn verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if !(cfg.dt > 0.0 && cfg.horizon > 0.0) {
        return Err(Error::invalid("dt", "dt and horizon must be > 0"));
    }
    if cfg.paths == 0 {
        return Err(Error::invalid("paths", "must be >= 1"));
    }
    let n = (cfg.horizon / cfg.dt).round() as usize;
    let fine_dt = 0.5 * cfg.dt;
    let paths = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| {
            let fine = Brownian::seeded(cfg.seed, i, fine_dt).path_with_area(2 * n);
            let coarse = coarsen_with_area(&fine, fine_dt);
            let coarse = compare_on_path(cfg, cfg.dt, &coarse)?;
            let fine = compare_on_path(cfg, fine_dt, &fine)?;
            Ok(PathComparison {
                seed: cfg.seed.wrapping_add(i),
                order_ratio: coarse.max_error / fine.max_error,
                coarse,
                fine,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = paths.len() as f64;
    let mean_coarse_error = compensated_sum(paths.iter().map(|p| p.coarse.max_error)) / count;
    let mean_fine_error = compensated_sum(paths.iter().map(|p| p.fine.max_error)) / count;
    let max_error = paths.iter().map(|p| p.coarse.max_error).fold(0.0, f64::max);
    let order_ratio = mean_coarse_error / mean_fine_error;
    let within_tolerance = max_error <= cfg.tolerance;
    let order_consistent = order_ratio >= 2.0;
    Ok(VerifyReport {
        paths,
        max_error,
        mean_coarse_error,
        mean_fine_error,
        order_ratio,
        tolerance: cfg.tolerance,
        within_tolerance,
        order_consistent,
        passed: within_tolerance && order_consistent,
    })
}
