//! Excess covariances: the spread of the conditional means across the
//! ensemble, on top of the conditional covariances. All quantities here are
//! in tilde units (`2 m omega / hbar` for position variances and so on).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::Covariances;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExcessCovariances {
    pub ve_x: f64,
    pub ve_p: f64,
    pub ce: f64,
}

impl ExcessCovariances {
    pub fn new(ve_x: f64, ve_p: f64, ce: f64) -> Self {
        ExcessCovariances { ve_x, ve_p, ce }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.ve_x, self.ve_p, self.ce]
    }

    /// Whether this is the covariance matrix of a real random vector, up to
    /// `tol` (absolute).
    pub fn is_valid(&self, tol: f64) -> bool {
        self.ve_x >= -tol && self.ve_p >= -tol && self.ve_x * self.ve_p - self.ce * self.ce >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingVariant {
    /// `Gamma_x = Gamma_p = Gamma`.
    FullDamping,
    /// Feedback on the momentum only, valid for `omega q << 1`.
    PositionOnly,
}

/// Time derivative of the excess covariances under damping rates
/// `(gamma_x, gamma_p)` with the conditional covariances `cond` (tilde
/// units) held fixed.
pub fn excess_cov_derivative(
    ex: &ExcessCovariances,
    cond: &Covariances,
    gamma_x: f64,
    gamma_p: f64,
    omega: f64,
    r: f64,
) -> ExcessCovariances {
    let s = 2.0 * omega / r;
    ExcessCovariances {
        ve_x: -2.0 * gamma_x * ex.ve_x + 2.0 * omega * ex.ce + s * cond.v_x * cond.v_x,
        ve_p: -2.0 * gamma_p * ex.ve_p - 2.0 * omega * ex.ce + s * cond.c * cond.c,
        ce: -(gamma_x + gamma_p) * ex.ce - omega * (ex.ve_x - ex.ve_p) + s * cond.c * cond.v_x,
    }
}

/// Closed-form stationary excess covariances for `Q = omega / (2 Gamma)`.
pub fn excess_cov_steady_state(
    cond: &Covariances,
    q_factor: f64,
    r: f64,
    variant: DampingVariant,
) -> Result<ExcessCovariances> {
    if !(q_factor.is_finite() && q_factor > 0.0) {
        return Err(Error::invalid("q_factor", "must be > 0"));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", "must be > 0"));
    }
    let (vx, c) = (cond.v_x, cond.c);
    let q = q_factor;
    Ok(match variant {
        DampingVariant::FullDamping => {
            let pre = 2.0 * q / (r * (1.0 + 4.0 * q * q));
            ExcessCovariances {
                ve_x: pre * ((1.0 + 2.0 * q * q) * vx * vx + 2.0 * q * q * c * c + 2.0 * q * c * vx),
                ve_p: pre * (2.0 * q * q * vx * vx + (1.0 + 2.0 * q * q) * c * c - 2.0 * q * c * vx),
                ce: pre * (-q * vx * vx + q * c * c + c * vx),
            }
        }
        DampingVariant::PositionOnly => {
            if q > 0.1 {
                log::warn!("position-only closed form assumes Q << 1; got Q = {q}");
            }
            ExcessCovariances {
                ve_x: (vx * vx + 4.0 * q * q * c * c + 4.0 * q * c * vx) / r,
                ve_p: (vx * vx + 2.0 * q * c * c) / r,
                ce: -vx * vx / r,
            }
        }
    })
}

/// Unconditional covariances (conditional plus excess) and their purity.
/// Both arguments in tilde units, so the purity is `1/sqrt(det)`.
pub fn total_covariances(cond: &Covariances, ex: &ExcessCovariances) -> Result<(Covariances, f64)> {
    let total = Covariances::new(cond.v_x + ex.ve_x, cond.v_p + ex.ve_p, cond.c + ex.ce);
    let det = total.det();
    if !(det > 0.0) {
        return Err(Error::InvalidCovariance { det });
    }
    Ok((total, 1.0 / det.sqrt()))
}
