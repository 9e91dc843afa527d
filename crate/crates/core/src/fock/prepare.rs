//! Initial density matrices on the number basis.

use num_complex::Complex64;

use super::{CMatrix, FockState};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::model::PhysicalParams;

pub fn ground_state(dim: usize) -> Result<FockState> {
    if dim < 4 {
        return Err(Error::invalid("dim", "must be >= 4"));
    }
    let mut rho = CMatrix::zeros(dim, dim);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    FockState::new(rho)
}

/// Coherent state with means `(x0, p0)`, built from the Poisson amplitudes
/// and renormalized on the truncated basis.
pub fn coherent_state(dim: usize, params: &PhysicalParams, x0: f64, p0: f64) -> Result<FockState> {
    if dim < 4 {
        return Err(Error::invalid("dim", "must be >= 4"));
    }
    let PhysicalParams { m, omega, hbar, .. } = *params;
    let alpha = Complex64::new(x0 * (m * omega / (2.0 * hbar)).sqrt(), p0 / (2.0 * hbar * m * omega).sqrt());
    let mut amp = Vec::with_capacity(dim);
    let mut a = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        amp.push(a);
        a = a * alpha / ((n + 1) as f64).sqrt();
    }
    let norm: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
    let rho = CMatrix::from_fn(dim, dim, |i, j| amp[i] * amp[j].conj() / norm);
    FockState::new(rho)
}

/// Hermite functions `psi_n(x)` for `n < dim` at the points `xs`, with
/// length unit `s = sqrt(hbar / (m omega))`. Row `n`, column = point.
fn hermite_functions(dim: usize, s: f64, xs: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; xs.len()]; dim];
    let norm0 = (std::f64::consts::PI * s * s).powf(-0.25);
    for (k, &x) in xs.iter().enumerate() {
        let u = x / s;
        let mut prev = 0.0;
        let mut cur = norm0 * (-0.5 * u * u).exp();
        out[0][k] = cur;
        for n in 0..dim - 1 {
            let next = (2.0 / (n + 1) as f64).sqrt() * u * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
            prev = cur;
            cur = next;
            out[n + 1][k] = cur;
        }
    }
    out
}

/// Projects the Gaussian state with the given means and covariances onto
/// the first `dim` number states.
///
/// The position-space density matrix of a Gaussian state is
/// `rho(X + y/2, X - y/2) = N(X; x0, V_x) exp(i y mu(X) / hbar)
/// exp(-y^2 s2 / (2 hbar^2))`, with `mu(X) = p0 + (C/V_x)(X - x0)` and
/// `s2 = V_p - C^2/V_x`; its matrix elements are computed by trapezoidal
/// quadrature on a grid fine enough for the highest Hermite function kept.
/// Fails if more than `leak_tol` of the trace falls outside the basis.
pub fn from_gaussian(dim: usize, params: &PhysicalParams, g: &GaussianState, leak_tol: f64) -> Result<FockState> {
    if dim < 4 {
        return Err(Error::invalid("dim", "must be >= 4"));
    }
    let PhysicalParams { m, omega, hbar, .. } = *params;
    if omega <= 0.0 {
        return Err(Error::invalid("omega", "number basis needs omega > 0"));
    }
    let det = g.v_x * g.v_p - g.c * g.c;
    if !(g.v_x > 0.0) || det < 0.25 * hbar * hbar * (1.0 - 1e-12) {
        return Err(Error::InvalidCovariance { det });
    }
    let s = (hbar / (m * omega)).sqrt();
    let reach = 1.2 * (2.0 * dim as f64 + 1.0).sqrt() * s + 4.0 * s;
    let half = reach.max(g.mean_x.abs() + 12.0 * g.v_x.sqrt());
    let h = s / 24.0;
    let npts = (2.0 * half / h).ceil() as usize + 1;
    let xs: Vec<f64> = (0..npts).map(|i| -half + i as f64 * h).collect();
    let psi = hermite_functions(dim, s, &xs);

    let s2 = g.v_p - g.c * g.c / g.v_x;
    let slope = g.c / g.v_x;
    let kernel = CMatrix::from_fn(npts, npts, |i, j| {
        let (x, xp) = (xs[i], xs[j]);
        let big = 0.5 * (x + xp) - g.mean_x;
        let y = x - xp;
        let amp = (-(big * big) / (2.0 * g.v_x) - y * y * s2 / (2.0 * hbar * hbar)).exp()
            / (2.0 * std::f64::consts::PI * g.v_x).sqrt();
        let phase = y * (g.mean_p + slope * big) / hbar;
        Complex64::from_polar(amp, phase)
    });
    let basis = CMatrix::from_fn(dim, npts, |n, k| Complex64::new(psi[n][k] * h, 0.0));
    let mut rho = &basis * kernel * basis.transpose();
    let tr = rho.trace().re;
    if 1.0 - tr > leak_tol {
        return Err(Error::Leakage {
            dim,
            population: 1.0 - tr,
            tolerance: leak_tol,
        });
    }
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5 / tr, 0.0);
    let mut state = FockState::new(rho)?;
    state.t = g.t;
    Ok(state)
}
