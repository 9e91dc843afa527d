use serde::{Deserialize, Serialize};

use super::controller::ControllerSpec;
use crate::error::{Error, Result};
use crate::gaussian::{
    check_uncertainty, innovation_step, record_increment, step_covariances, step_size_limit, Control,
    GaussianState,
};
use crate::lqg::{cost_increment, CostAccumulator};
use crate::model::PhysicalParams;
use crate::noise::Brownian;

/// Output of a single closed-loop step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopStep {
    pub dw: f64,
    pub dq: f64,
    pub u: Control,
}

/// Measure-then-actuate loop for one trajectory.
///
/// Each step forms the record from the current estimate and the supplied
/// Wiener increment, updates the estimate with it, applies any direct
/// feedback (which acts through the record itself), then computes the
/// estimation control from the *updated* estimate and applies it over the
/// same step.
#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    params: PhysicalParams,
    controller: ControllerSpec,
    dt: f64,
    t0: f64,
    steps: usize,
    state: GaussianState,
    cost: CostAccumulator,
}

impl FeedbackLoop {
    pub fn new(params: PhysicalParams, controller: ControllerSpec, init: GaussianState, dt: f64) -> Result<Self> {
        params.validate()?;
        controller.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        Ok(FeedbackLoop {
            params,
            controller,
            dt,
            t0: init.t,
            steps: 0,
            state: init,
            cost: CostAccumulator::default(),
        })
    }

    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    pub fn cost(&self) -> CostAccumulator {
        self.cost
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn step(&mut self, dw: f64) -> Result<LoopStep> {
        let step = self.steps;
        let dq = record_increment(&self.state, &self.params, self.dt, dw).dq;
        let mut next = innovation_step(&self.state, &self.params, self.dt, dq, Control::zeros())
            .map_err(|e| e.at_step(step))?;
        if self.controller.uses_record() {
            next.mean_x += self.controller.beta * dq;
            next.mean_p -= self.controller.alpha * dq;
        }
        let u = self.controller.control(&next);
        if let Some(w) = &self.controller.cost {
            self.cost += cost_increment(&next, &u, w, self.dt);
        }
        next.mean_x += u[0] * self.dt;
        next.mean_p += u[1] * self.dt;
        self.steps += 1;
        next.t = self.t0 + self.steps as f64 * self.dt;
        check_uncertainty(&next, &self.params, self.dt).map_err(|e| e.at_step(step))?;
        self.state = next;
        Ok(LoopStep { dw, dq, u })
    }
}

/// Largest position variance the deterministic covariance flow reaches in
/// `n_steps` Euler steps from `init`.
pub fn max_position_variance(params: &PhysicalParams, init: &GaussianState, dt: f64, n_steps: usize) -> f64 {
    let mut cov = init.covariances();
    let mut max = cov.v_x;
    for _ in 0..n_steps {
        cov = step_covariances(&cov, params, dt);
        max = max.max(cov.v_x);
    }
    max
}

/// Enforces `dt <= 1e-3 / (fastest rate)` over the whole run.
pub fn check_step_size(
    params: &PhysicalParams,
    controller: &ControllerSpec,
    init: &GaussianState,
    dt: f64,
    n_steps: usize,
) -> Result<()> {
    let v_max = max_position_variance(params, init, dt, n_steps);
    let limit = step_size_limit(params, v_max, controller.gain_rate(params));
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::StepTooLarge { dt, limit });
    }
    Ok(())
}

pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::invalid("horizon", "must be >= 0"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    Ok((horizon / dt).round() as usize)
}

/// Time series of one closed-loop run. Row `i` holds the state after step
/// `i + 1`, the record increment and control of that step, and the cost
/// accumulated up to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub records: Vec<f64>,
    pub controls: Vec<[f64; 2]>,
    pub costs: Vec<CostAccumulator>,
    pub cost: CostAccumulator,
    pub seed: u64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs the loop on an explicit sequence of Wiener increments.
pub fn simulate_with_increments(
    params: &PhysicalParams,
    controller: &ControllerSpec,
    init: GaussianState,
    dt: f64,
    increments: &[f64],
) -> Result<TrajectoryRecord> {
    let mut lp = FeedbackLoop::new(*params, controller.clone(), init, dt)?;
    let n = increments.len();
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        records: Vec::with_capacity(n),
        controls: Vec::with_capacity(n),
        costs: Vec::with_capacity(n),
        cost: CostAccumulator::default(),
        seed: 0,
    };
    for &dw in increments {
        let out = lp.step(dw)?;
        rec.times.push(lp.state().t);
        rec.states.push(*lp.state());
        rec.records.push(out.dq);
        rec.controls.push([out.u[0], out.u[1]]);
        rec.costs.push(lp.cost());
    }
    rec.cost = lp.cost();
    Ok(rec)
}

/// One closed-loop trajectory driven by the noise stream of `seed`.
pub fn simulate_trajectory(
    params: &PhysicalParams,
    controller: &ControllerSpec,
    init: GaussianState,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let n = step_count(horizon, dt)?;
    params.validate()?;
    check_step_size(params, controller, &init, dt, n)?;
    let increments = Brownian::seeded(seed, 0, dt).path(n);
    let mut rec = simulate_with_increments(params, controller, init, dt, &increments)?;
    rec.seed = seed;
    Ok(rec)
}
