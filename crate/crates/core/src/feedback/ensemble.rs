use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{ControllerSpec, FeedbackMode};
use super::excess::{excess_cov_steady_state, DampingVariant, ExcessCovariances};
use super::sim::{check_step_size, step_count, FeedbackLoop};
use crate::error::{Error, Result};
use crate::gaussian::{converge_covariances, steady_state_covariances, Covariances, GaussianState};
use crate::lqg::CostAccumulator;
use crate::model::{regime_numbers, PhysicalParams};
use crate::noise::{compensated_sum, Brownian, NeumaierSum};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnsembleOptions {
    /// Start of the averaging window. Defaults to
    /// `max(5/Gamma, 5/omega, covariance settling time)`.
    pub tail_start: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub base_seed: u64,
    pub dt: f64,
    pub horizon: f64,
    pub tail_start: f64,
    pub tail_steps: usize,
    /// Covariance of the conditional means over trajectories and tail
    /// times, in physical units.
    pub excess: ExcessCovariances,
    /// The same in tilde units.
    pub excess_tilde: ExcessCovariances,
    /// Standard errors from the spread of per-trajectory tail averages;
    /// `None` for a single trajectory.
    pub standard_error: Option<ExcessCovariances>,
    pub standard_error_tilde: Option<ExcessCovariances>,
    /// Ensemble mean of `(<x>, <p>)` over the tail.
    pub mean: [f64; 2],
    /// Conditional covariances at the end of the run (identical for every
    /// trajectory).
    pub conditional: Covariances,
    pub conditional_tilde: Covariances,
    pub mean_cost: CostAccumulator,
}

#[derive(Debug, Clone, Copy)]
struct TrajectorySummary {
    // tail time averages of x, p, x^2, p^2, x p
    m: [f64; 5],
    cost: CostAccumulator,
    conditional: Covariances,
}

/// Slowest feedback damping rate, if the estimate is fed back at all.
fn slowest_damping(controller: &ControllerSpec) -> Option<f64> {
    if !controller.uses_estimate() {
        return None;
    }
    [controller.gamma_x, controller.gamma_p]
        .into_iter()
        .filter(|g| *g > 0.0)
        .min_by(f64::total_cmp)
}

pub fn default_tail_start(params: &PhysicalParams, controller: &ControllerSpec, init: &GaussianState, horizon: f64) -> f64 {
    let mut t: f64 = 0.0;
    if let Some(gamma) = slowest_damping(controller) {
        t = t.max(5.0 / gamma);
    }
    if params.omega > 0.0 {
        t = t.max(5.0 / params.omega);
    }
    if params.k > 0.0 {
        if let Ok((_, settle)) = converge_covariances(params, init.covariances(), 1e-6, horizon) {
            t = t.max(settle);
        }
    }
    t
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    params: &PhysicalParams,
    controller: &ControllerSpec,
    init: GaussianState,
    dt: f64,
    n_steps: usize,
    tail_from: usize,
    seed: u64,
    index: u64,
) -> Result<TrajectorySummary> {
    let mut noise = Brownian::seeded(seed, index, dt);
    let mut lp = FeedbackLoop::new(*params, controller.clone(), init, dt)?;
    let mut acc = [NeumaierSum::default(); 5];
    for i in 0..n_steps {
        lp.step(noise.next_increment())?;
        if i + 1 >= tail_from {
            let s = lp.state();
            let vals = [s.mean_x, s.mean_p, s.mean_x * s.mean_x, s.mean_p * s.mean_p, s.mean_x * s.mean_p];
            for (a, v) in acc.iter_mut().zip(vals) {
                a.add(v);
            }
        }
    }
    let count = (n_steps + 1 - tail_from) as f64;
    Ok(TrajectorySummary {
        m: acc.map(|a| a.value() / count),
        cost: lp.cost(),
        conditional: lp.state().covariances(),
    })
}

/// Runs `n_traj` independent closed-loop trajectories in parallel and
/// reports the covariance of the conditional means over the stationary
/// tail. Trajectory `i` uses noise stream `base_seed + i`; the reduction is
/// done in index order so the result does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    params: &PhysicalParams,
    controller: &ControllerSpec,
    init: GaussianState,
    horizon: f64,
    dt: f64,
    n_traj: usize,
    base_seed: u64,
    options: EnsembleOptions,
) -> Result<EnsembleStats> {
    params.validate()?;
    controller.validate()?;
    if n_traj == 0 {
        return Err(Error::invalid("n_traj", "must be >= 1"));
    }
    let n_steps = step_count(horizon, dt)?;
    check_step_size(params, controller, &init, dt, n_steps)?;
    let tail_start = match options.tail_start {
        Some(t) => t,
        None => default_tail_start(params, controller, &init, horizon),
    };
    // first step index (1-based) inside the window
    let tail_from = ((tail_start / dt).ceil() as usize).max(1);
    if tail_from > n_steps {
        return Err(Error::invalid(
            "horizon",
            format!("horizon {horizon} leaves no stationary tail after t = {tail_start}"),
        ));
    }

    let runs: Vec<TrajectorySummary> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| run_one(params, controller, init, dt, n_steps, tail_from, base_seed, i))
        .collect::<Result<_>>()?;

    let n = n_traj as f64;
    let avg = |j: usize| compensated_sum(runs.iter().map(|r| r.m[j])) / n;
    let (mx, mp) = (avg(0), avg(1));
    let excess = ExcessCovariances::new(avg(2) - mx * mx, avg(3) - mp * mp, avg(4) - mx * mp);

    let standard_error = (n_traj >= 2).then(|| {
        let se = |f: &dyn Fn(&TrajectorySummary) -> f64, mean: f64| {
            let ss = compensated_sum(runs.iter().map(|r| (f(r) - mean).powi(2)));
            (ss / (n - 1.0) / n).sqrt()
        };
        // per-trajectory centred second moments
        let cxx = |r: &TrajectorySummary| r.m[2] - 2.0 * mx * r.m[0] + mx * mx;
        let cpp = |r: &TrajectorySummary| r.m[3] - 2.0 * mp * r.m[1] + mp * mp;
        let cxp = |r: &TrajectorySummary| r.m[4] - mx * r.m[1] - mp * r.m[0] + mx * mp;
        ExcessCovariances::new(se(&cxx, excess.ve_x), se(&cpp, excess.ve_p), se(&cxp, excess.ce))
    });

    let [fx, fp, fc] = params.tilde_factors();
    let tilde = |e: &ExcessCovariances| ExcessCovariances::new(e.ve_x * fx, e.ve_p * fp, e.ce * fc);
    let mean_cost = CostAccumulator {
        j_state: compensated_sum(runs.iter().map(|r| r.cost.j_state)) / n,
        j_control: compensated_sum(runs.iter().map(|r| r.cost.j_control)) / n,
        j_floor: compensated_sum(runs.iter().map(|r| r.cost.j_floor)) / n,
    };
    let conditional = runs[0].conditional;
    Ok(EnsembleStats {
        n_traj,
        base_seed,
        dt,
        horizon,
        tail_start,
        tail_steps: n_steps + 1 - tail_from,
        excess,
        excess_tilde: tilde(&excess),
        standard_error,
        standard_error_tilde: standard_error.as_ref().map(tilde),
        mean: [mx, mp],
        conditional,
        conditional_tilde: conditional.to_tilde(params),
        mean_cost,
    })
}

/// Closed-form prediction for an estimation controller of damping type:
/// equal diagonal gains give the full-damping forms, a zero first row the
/// momentum-only forms. `None` for anything else.
pub fn analytic_excess(params: &PhysicalParams, controller: &ControllerSpec) -> Result<Option<(DampingVariant, ExcessCovariances)>> {
    if controller.mode != FeedbackMode::Estimation || params.k == 0.0 || params.omega == 0.0 {
        return Ok(None);
    }
    let k = controller.k_gain;
    let rn = regime_numbers(params)?;
    let cond = steady_state_covariances(params)?.to_tilde(params);
    let (variant, gamma) = if k[(0, 1)] == 0.0 && k[(1, 0)] == 0.0 && k[(0, 0)] == k[(1, 1)] && k[(0, 0)] > 0.0 {
        (DampingVariant::FullDamping, k[(0, 0)])
    } else if k[(0, 0)] == 0.0 && k[(0, 1)] == 0.0 && k[(1, 1)] > 0.0 {
        (DampingVariant::PositionOnly, k[(1, 1)])
    } else {
        return Ok(None);
    };
    let q_factor = params.omega / (2.0 * gamma);
    Ok(Some((variant, excess_cov_steady_state(&cond, q_factor, rn.r, variant)?)))
}
