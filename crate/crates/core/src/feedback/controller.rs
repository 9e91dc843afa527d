use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{Control, Covariances, GaussianState};
use crate::lqg::{ControlDesign, CostWeights};
use crate::model::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// Measure only.
    None,
    /// `u = -K (<x>, <p>)` from the post-measurement estimate.
    Estimation,
    /// Feedback Hamiltonian `I(t) (alpha x + beta p)` driven by the raw
    /// record.
    Direct,
    /// Both of the above.
    Combined,
}

/// Everything the loop needs to turn an estimate and a record increment into
/// an actuation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    pub mode: FeedbackMode,
    pub k_gain: Matrix2<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Diagonal of `k_gain`: the damping rates of `<x>` and `<p>`.
    pub gamma_x: f64,
    pub gamma_p: f64,
    /// Weights for the accumulated cost. `None` accumulates nothing.
    pub cost: Option<CostWeights>,
}

impl ControllerSpec {
    pub fn none() -> Self {
        ControllerSpec {
            mode: FeedbackMode::None,
            k_gain: Matrix2::zeros(),
            alpha: 0.0,
            beta: 0.0,
            gamma_x: 0.0,
            gamma_p: 0.0,
            cost: None,
        }
    }

    /// Estimation feedback `K = diag(gamma_x, gamma_p)`.
    pub fn damping(gamma_x: f64, gamma_p: f64) -> Self {
        ControllerSpec {
            mode: FeedbackMode::Estimation,
            k_gain: Matrix2::new(gamma_x, 0.0, 0.0, gamma_p),
            gamma_x,
            gamma_p,
            ..Self::none()
        }
    }

    pub fn estimation(k_gain: Matrix2<f64>) -> Self {
        ControllerSpec {
            mode: FeedbackMode::Estimation,
            k_gain,
            gamma_x: k_gain[(0, 0)],
            gamma_p: k_gain[(1, 1)],
            ..Self::none()
        }
    }

    /// Estimation feedback with the gain and cost weights of a solved
    /// design.
    pub fn from_design(design: &ControlDesign) -> Self {
        ControllerSpec {
            cost: Some(design.cost_weights()),
            ..Self::estimation(design.k_gain)
        }
    }

    pub fn direct(alpha: f64, beta: f64) -> Self {
        ControllerSpec {
            mode: FeedbackMode::Direct,
            alpha,
            beta,
            ..Self::none()
        }
    }

    pub fn combined(k_gain: Matrix2<f64>, alpha: f64, beta: f64) -> Self {
        ControllerSpec {
            mode: FeedbackMode::Combined,
            alpha,
            beta,
            ..Self::estimation(k_gain)
        }
    }

    pub fn with_cost(mut self, cost: CostWeights) -> Self {
        self.cost = Some(cost);
        self
    }

    pub fn uses_estimate(&self) -> bool {
        matches!(self.mode, FeedbackMode::Estimation | FeedbackMode::Combined)
    }

    pub fn uses_record(&self) -> bool {
        matches!(self.mode, FeedbackMode::Direct | FeedbackMode::Combined)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.k_gain.iter().all(|v| v.is_finite())
            && [self.alpha, self.beta, self.gamma_x, self.gamma_p].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("controller", "non-finite gain"));
        }
        if self.gamma_x < 0.0 {
            return Err(Error::invalid("gamma_x", "must be >= 0"));
        }
        if self.gamma_p < 0.0 {
            return Err(Error::invalid("gamma_p", "must be >= 0"));
        }
        if self.uses_estimate() {
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
            if !close(self.gamma_x, self.k_gain[(0, 0)]) || !close(self.gamma_p, self.k_gain[(1, 1)]) {
                return Err(Error::invalid(
                    "controller",
                    "gamma_x/gamma_p disagree with the diagonal of k_gain",
                ));
            }
        }
        if self.mode == FeedbackMode::Combined {
            if self.k_gain == Matrix2::zeros() {
                return Err(Error::invalid("k_gain", "combined mode needs a nonzero estimation gain"));
            }
            if self.alpha == 0.0 && self.beta == 0.0 {
                return Err(Error::invalid("alpha", "combined mode needs nonzero direct gains"));
            }
        }
        Ok(())
    }

    /// Control `u = -K (<x>, <p>)`; zero unless the estimate is fed back.
    pub fn control(&self, state: &GaussianState) -> Control {
        if self.uses_estimate() {
            -(self.k_gain * state.means())
        } else {
            Control::zeros()
        }
    }

    /// Rate that the feedback adds to the mean dynamics, used by the
    /// step-size rule.
    pub fn gain_rate(&self, params: &PhysicalParams) -> f64 {
        let mut rate = 0.0;
        if self.uses_estimate() {
            rate += spectral_radius(&self.k_gain);
        }
        if self.uses_record() {
            rate += 4.0 * params.eta * params.k * self.beta.abs();
        }
        rate
    }
}

fn spectral_radius(m: &Matrix2<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Extra drift and total noise of the means under direct feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectMeanTerms {
    /// Added drift matrix acting on `(<x>, <p>)`; only its first column is
    /// nonzero.
    pub drift: Matrix2<f64>,
    /// Coefficients of `dW` in `d<x>` and `d<p>`.
    pub diffusion: Vector2<f64>,
}

/// Direct feedback adds `4 eta k beta <x> dt` to `d<x>` and
/// `-4 eta k alpha <x> dt` to `d<p>`, and shifts the noise coefficients to
/// `sqrt(2 eta k) (2 V_x + beta)` and `sqrt(2 eta k) (2 C - alpha)`.
pub fn direct_feedback_mean_terms(
    controller: &ControllerSpec,
    params: &PhysicalParams,
    cov: &Covariances,
) -> DirectMeanTerms {
    let s = params.record_noise();
    let (alpha, beta) = if controller.uses_record() {
        (controller.alpha, controller.beta)
    } else {
        (0.0, 0.0)
    };
    let g = 4.0 * params.eta * params.k;
    DirectMeanTerms {
        drift: Matrix2::new(g * beta, 0.0, -g * alpha, 0.0),
        diffusion: Vector2::new(s * (2.0 * cov.v_x + beta), s * (2.0 * cov.c - alpha)),
    }
}

/// Direct gains that cancel the measurement noise on the means:
/// `(alpha, beta) = (2C, -2V_x)`.
pub fn noise_cancelling_gains(cov: &Covariances) -> (f64, f64) {
    (2.0 * cov.c, -2.0 * cov.v_x)
}
