//! Many density-matrix trajectories on independent noise streams.
//!
//! Trajectory `i` uses stream `base_seed + i`. Per-trajectory results are
//! reduced in index order, so the statistics do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::prepare::from_gaussian;
use super::sme::{SmeIntegrator, SmeOptions, SmeScheme};
use super::{build_operators, moments, CMatrix, FockState, OperatorSet};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::model::PhysicalParams;
use crate::noise::{compensated_sum, Brownian, WienerIncrement};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockEnsembleConfig {
    pub params: PhysicalParams,
    pub dim: usize,
    pub dt: f64,
    pub horizon: f64,
    pub init: GaussianState,
    pub alpha: f64,
    pub beta: f64,
    pub n_traj: usize,
    pub base_seed: u64,
    pub options: SmeOptions,
    pub sample_interval: f64,
}

/// Ensemble statistics of the conditional means at the sample times, and
/// the trajectory average of the final density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FockEnsembleStats {
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    /// Unbiased sample variances over trajectories.
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    pub average_rho: CMatrix,
    pub min_eigenvalue: f64,
    pub max_top_population: f64,
    pub n_traj: usize,
}

struct TrajectoryOutput {
    means: Vec<[f64; 2]>,
    rho: CMatrix,
    min_eigenvalue: f64,
    max_top: f64,
}

fn run_one(
    cfg: &FockEnsembleConfig,
    ops: &OperatorSet,
    init: &FockState,
    n: usize,
    every: usize,
    index: u64,
) -> Result<TrajectoryOutput> {
    let mut sme = SmeIntegrator::with_feedback(ops, &cfg.params, cfg.alpha, cfg.beta, cfg.options)?;
    let mut state = init.clone();
    let mut noise = Brownian::seeded(cfg.base_seed, index, cfg.dt);
    let mut means = Vec::with_capacity(n / every + 1);
    let mut max_top = state.top_population();
    for i in 0..n {
        let inc = if cfg.options.scheme == SmeScheme::StrongTaylor {
            noise.next_with_area()
        } else {
            WienerIncrement {
                dw: noise.next_increment(),
                dz: 0.0,
            }
        };
        sme.step_increment(&mut state, cfg.dt, &inc).map_err(|e| e.at_step(i))?;
        max_top = max_top.max(state.top_population());
        if (i + 1) % every == 0 {
            let mo = moments(&state, ops);
            means.push([mo.mean_x, mo.mean_p]);
        }
    }
    Ok(TrajectoryOutput {
        means,
        min_eigenvalue: state.min_eigenvalue(),
        max_top,
        rho: state.rho,
    })
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (values.len() - 1) as f64
}

pub fn run_fock_ensemble(cfg: &FockEnsembleConfig) -> Result<FockEnsembleStats> {
    if cfg.n_traj == 0 {
        return Err(Error::invalid("n_traj", "must be >= 1"));
    }
    if !(cfg.dt > 0.0 && cfg.horizon > 0.0 && cfg.sample_interval > 0.0) {
        return Err(Error::invalid("dt", "dt, horizon and sample interval must be > 0"));
    }
    let n = (cfg.horizon / cfg.dt).round() as usize;
    let every = ((cfg.sample_interval / cfg.dt).round() as usize).clamp(1, n.max(1));
    let ops = build_operators(cfg.dim, &cfg.params)?;
    let init = from_gaussian(cfg.dim, &cfg.params, &cfg.init, cfg.options.leak_tol)?;
    let runs = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| run_one(cfg, &ops, &init, n, every, i))
        .collect::<Result<Vec<_>>>()?;

    let samples = runs[0].means.len();
    let count = runs.len() as f64;
    let mut stats = FockEnsembleStats {
        times: (1..=samples).map(|s| cfg.init.t + (s * every) as f64 * cfg.dt).collect(),
        mean_x: Vec::with_capacity(samples),
        mean_p: Vec::with_capacity(samples),
        var_x: Vec::with_capacity(samples),
        var_p: Vec::with_capacity(samples),
        average_rho: CMatrix::zeros(cfg.dim, cfg.dim),
        min_eigenvalue: runs.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min),
        max_top_population: runs.iter().map(|r| r.max_top).fold(0.0, f64::max),
        n_traj: runs.len(),
    };
    for s in 0..samples {
        let xs: Vec<f64> = runs.iter().map(|r| r.means[s][0]).collect();
        let ps: Vec<f64> = runs.iter().map(|r| r.means[s][1]).collect();
        let mx = compensated_sum(xs.iter().cloned()) / count;
        let mp = compensated_sum(ps.iter().cloned()) / count;
        stats.var_x.push(sample_variance(&xs, mx));
        stats.var_p.push(sample_variance(&ps, mp));
        stats.mean_x.push(mx);
        stats.mean_p.push(mp);
    }
    for r in &runs {
        stats.average_rho += &r.rho;
    }
    stats.average_rho /= num_complex::Complex64::new(count, 0.0);
    Ok(stats)
}
