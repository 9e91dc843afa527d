//! A classical oscillator with white-noise forcing and noisy position
//! readout. Its Kalman-Bucy filter has exactly the update rule of the
//! conditioned quantum means, which this module exercises directly: the
//! twin's estimate is advanced with [`innovation_step`] on the classical
//! record.

use super::controller::ControllerSpec;
use crate::error::Result;
use crate::gaussian::{innovation, innovation_step, Control, GaussianState};
use crate::model::PhysicalParams;
use crate::noise::{trajectory_rng, TrajectoryRng};
use rand_distr::{Distribution, StandardNormal};

/// True classical state and its running estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalTwin {
    pub x_c: f64,
    pub p_c: f64,
    pub estimate: GaussianState,
}

/// What one step of the twin produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinStep {
    pub twin: ClassicalTwin,
    /// Classical record increment `4 eta k x_c dt + sqrt(2 eta k) dzeta_2`.
    pub dq: f64,
    /// Innovation `(dq - 4 eta k <x_c> dt) / sqrt(2 eta k)`.
    pub dw: f64,
    pub u: Control,
}

impl ClassicalTwin {
    pub fn new(x_c: f64, p_c: f64, estimate: GaussianState) -> Self {
        ClassicalTwin { x_c, p_c, estimate }
    }
}

/// One Euler-Maruyama step of the twin.
///
/// `dzeta1` drives the momentum with strength `sqrt(2k) hbar`, matching the
/// `2 k hbar^2` momentum diffusion of the quantum covariance flow;
/// `dzeta2` is the readout noise. Both are Wiener increments of variance
/// `dt`. The control is computed from the updated estimate and applied to
/// truth and estimate alike.
pub fn classical_twin_step(
    twin: &ClassicalTwin,
    params: &PhysicalParams,
    dt: f64,
    controller: &ControllerSpec,
    dzeta1: f64,
    dzeta2: f64,
) -> Result<TwinStep> {
    let PhysicalParams { m, omega, hbar, k, eta } = *params;
    let est = &twin.estimate;
    let dq = 4.0 * eta * k * twin.x_c * dt + params.record_noise() * dzeta2;
    let dw = if params.record_noise() == 0.0 {
        dzeta2
    } else {
        innovation(est.mean_x, params, dt, dq)
    };
    let mut next = innovation_step(est, params, dt, dq, Control::zeros())?;
    let u = controller.control(&next);
    next.mean_x += u[0] * dt;
    next.mean_p += u[1] * dt;
    let x_c = twin.x_c + (twin.p_c / m + u[0]) * dt;
    let p_c = twin.p_c + (-m * omega * omega * twin.x_c + u[1]) * dt + (2.0 * k).sqrt() * hbar * dzeta1;
    Ok(TwinStep {
        twin: ClassicalTwin { x_c, p_c, estimate: next },
        dq,
        dw,
        u,
    })
}

/// Twin with its own noise source, two independent normals per step.
#[derive(Debug, Clone)]
pub struct TwinRun {
    pub twin: ClassicalTwin,
    rng: TrajectoryRng,
    sqrt_dt: f64,
}

impl TwinRun {
    pub fn new(twin: ClassicalTwin, dt: f64, base_seed: u64, index: u64) -> Self {
        TwinRun {
            twin,
            rng: trajectory_rng(base_seed, index),
            sqrt_dt: dt.sqrt(),
        }
    }

    pub fn step(&mut self, params: &PhysicalParams, dt: f64, controller: &ControllerSpec) -> Result<TwinStep> {
        let z1: f64 = StandardNormal.sample(&mut self.rng);
        let z2: f64 = StandardNormal.sample(&mut self.rng);
        let out = classical_twin_step(&self.twin, params, dt, controller, z1 * self.sqrt_dt, z2 * self.sqrt_dt)?;
        self.twin = out.twin;
        Ok(out)
    }
}
