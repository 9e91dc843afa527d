//! Conditioned Gaussian state of the measured oscillator.
//!
//! The conditioned state stays Gaussian under position measurement and
//! quadratic Hamiltonians, so it is carried entirely by two means and three
//! covariances. The covariance flow is a deterministic Riccati system that
//! never sees the means or the record; the means obey a linear SDE driven by
//! the innovation. This is the same pair of equations a Kalman-Bucy filter
//! would produce for the classical twin in [`crate::feedback::twin`].

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{regime_numbers, PhysicalParams};

/// Additive drift on the means, `(u_x, u_p)` per unit time.
pub type Control = Vector2<f64>;

/// Position variance, momentum variance and symmetrized covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariances {
    pub v_x: f64,
    pub v_p: f64,
    pub c: f64,
}

impl Covariances {
    pub fn new(v_x: f64, v_p: f64, c: f64) -> Self {
        Covariances { v_x, v_p, c }
    }

    /// Free-oscillator ground state `(hbar / 2 m omega, hbar m omega / 2, 0)`.
    pub fn ground(params: &PhysicalParams) -> Self {
        Self::thermal(params, 0.0)
    }

    /// Thermal state with mean occupation `nbar`:
    /// `V_x = (nbar + 1/2) hbar / (m omega)`, `V_p = (nbar + 1/2) hbar m omega`.
    pub fn thermal(params: &PhysicalParams, nbar: f64) -> Self {
        let s = nbar + 0.5;
        let mw = params.m * params.omega;
        Covariances {
            v_x: s * params.hbar / mw,
            v_p: s * params.hbar * mw,
            c: 0.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.v_x * self.v_p - self.c * self.c
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.v_x, self.c, self.c, self.v_p)
    }

    /// Dimensionless tilde scaling.
    pub fn to_tilde(&self, params: &PhysicalParams) -> Self {
        let [fx, fp, fc] = params.tilde_factors();
        Covariances::new(self.v_x * fx, self.v_p * fp, self.c * fc)
    }

    pub fn from_tilde(&self, params: &PhysicalParams) -> Self {
        let [fx, fp, fc] = params.tilde_factors();
        Covariances::new(self.v_x / fx, self.v_p / fp, self.c / fc)
    }

    pub fn purity(&self, hbar: f64) -> Result<f64> {
        purity(self.v_x, self.v_p, self.c, hbar)
    }
}

/// Time derivatives of `(V_x, V_p, C)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceRates {
    pub dv_x: f64,
    pub dv_p: f64,
    pub dc: f64,
}

impl CovarianceRates {
    pub fn max_abs(&self) -> f64 {
        self.dv_x.abs().max(self.dv_p.abs()).max(self.dc.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean_x: f64,
    pub mean_p: f64,
    pub v_x: f64,
    pub v_p: f64,
    pub c: f64,
    pub t: f64,
}

impl GaussianState {
    pub fn new(mean_x: f64, mean_p: f64, cov: Covariances) -> Result<Self> {
        let s = GaussianState {
            mean_x,
            mean_p,
            v_x: cov.v_x,
            v_p: cov.v_p,
            c: cov.c,
            t: 0.0,
        };
        s.check_positive()?;
        Ok(s)
    }

    pub fn covariances(&self) -> Covariances {
        Covariances::new(self.v_x, self.v_p, self.c)
    }

    pub fn means(&self) -> Vector2<f64> {
        Vector2::new(self.mean_x, self.mean_p)
    }

    pub fn with_covariances(mut self, cov: Covariances) -> Self {
        self.v_x = cov.v_x;
        self.v_p = cov.v_p;
        self.c = cov.c;
        self
    }

    pub fn with_means(mut self, means: Vector2<f64>) -> Self {
        self.mean_x = means[0];
        self.mean_p = means[1];
        self
    }

    fn check_positive(&self) -> Result<()> {
        if !(self.v_x > 0.0) {
            return Err(Error::NonPositiveVariance {
                quantity: "v_x",
                value: self.v_x,
            });
        }
        if !(self.v_p > 0.0) {
            return Err(Error::NonPositiveVariance {
                quantity: "v_p",
                value: self.v_p,
            });
        }
        Ok(())
    }
}

/// One step of the scaled measurement record together with the noise that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordIncrement {
    pub dq: f64,
    pub dw: f64,
}

/// Right-hand side of the conditioned covariance equations for a harmonic
/// oscillator under position measurement.
pub fn covariance_derivative(cov: &Covariances, params: &PhysicalParams) -> CovarianceRates {
    let PhysicalParams {
        m,
        omega,
        hbar,
        k,
        eta,
    } = *params;
    let g = 8.0 * k * eta;
    let mw2 = m * omega * omega;
    CovarianceRates {
        dv_x: 2.0 * cov.c / m - g * cov.v_x * cov.v_x,
        dv_p: -2.0 * mw2 * cov.c - g * cov.c * cov.c + 2.0 * k * hbar * hbar,
        dc: cov.v_p / m - mw2 * cov.v_x - g * cov.c * cov.v_x,
    }
}

/// Explicit Euler step of the covariance flow.
pub fn step_covariances(cov: &Covariances, params: &PhysicalParams, dt: f64) -> Covariances {
    let d = covariance_derivative(cov, params);
    Covariances::new(cov.v_x + d.dv_x * dt, cov.v_p + d.dv_p * dt, cov.c + d.dc * dt)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("dt", "must be > 0"))
    }
}

fn advance(state: &GaussianState, params: &PhysicalParams, dt: f64, dx: f64, dp: f64) -> Result<GaussianState> {
    let cov = step_covariances(&state.covariances(), params, dt);
    let next = GaussianState {
        mean_x: state.mean_x + dx,
        mean_p: state.mean_p + dp,
        v_x: cov.v_x,
        v_p: cov.v_p,
        c: cov.c,
        t: state.t + dt,
    };
    next.check_positive()?;
    Ok(next)
}

/// Euler-Maruyama step of the conditioned state driven by the Wiener
/// increment `dw`.
pub fn step_conditioned(
    state: &GaussianState,
    params: &PhysicalParams,
    dt: f64,
    dw: f64,
    u: Control,
) -> Result<GaussianState> {
    check_dt(dt)?;
    let kick = 2.0 * params.record_noise() * dw;
    let dx = (state.mean_p / params.m + u[0]) * dt + kick * state.v_x;
    let dp = (-params.m * params.omega * params.omega * state.mean_x + u[1]) * dt + kick * state.c;
    advance(state, params, dt, dx, dp)
}

/// The same step written in terms of the measured record increment `dq`
/// instead of the noise. This is the form a real-time estimator runs.
pub fn innovation_step(
    state: &GaussianState,
    params: &PhysicalParams,
    dt: f64,
    dq: f64,
    u: Control,
) -> Result<GaussianState> {
    check_dt(dt)?;
    let g = 8.0 * params.eta * params.k * state.mean_x * dt;
    let dx = (state.mean_p / params.m + u[0]) * dt - g * state.v_x + 2.0 * state.v_x * dq;
    let dp = (-params.m * params.omega * params.omega * state.mean_x + u[1]) * dt - g * state.c
        + 2.0 * state.c * dq;
    advance(state, params, dt, dx, dp)
}

/// Record increment `dq = 4 eta k <x> dt + sqrt(2 eta k) dw`.
pub fn record_increment(state: &GaussianState, params: &PhysicalParams, dt: f64, dw: f64) -> RecordIncrement {
    RecordIncrement {
        dq: 4.0 * params.eta * params.k * state.mean_x * dt + params.record_noise() * dw,
        dw,
    }
}

/// Inverse of [`record_increment`]: recovers the innovation from a record.
pub fn innovation(mean_x: f64, params: &PhysicalParams, dt: f64, dq: f64) -> f64 {
    let s = params.record_noise();
    if s == 0.0 {
        0.0
    } else {
        (dq - 4.0 * params.eta * params.k * mean_x * dt) / s
    }
}

/// Closed-form fixed point of the covariance flow.
pub fn steady_state_covariances(params: &PhysicalParams) -> Result<Covariances> {
    let rn = regime_numbers(params)?;
    let PhysicalParams {
        m,
        omega,
        hbar,
        eta,
        ..
    } = *params;
    let s = (rn.xi + 1.0).sqrt();
    let root2eta = (2.0 * eta).sqrt();
    Ok(Covariances {
        v_x: hbar / (root2eta * m * omega) / s,
        v_p: hbar * m * omega / root2eta * rn.xi / s,
        c: hbar / (2.0 * eta.sqrt()) * (rn.xi - 1.0).sqrt() / s,
    })
}

/// Purity `Tr[rho^2] = (hbar/2) (v_x v_p - c^2)^(-1/2)` of a Gaussian state.
pub fn purity(v_x: f64, v_p: f64, c: f64, hbar: f64) -> Result<f64> {
    let det = v_x * v_p - c * c;
    if !(det > 0.0) || !(v_x > 0.0) {
        return Err(Error::InvalidCovariance { det });
    }
    Ok(0.5 * hbar / det.sqrt())
}

/// Largest rate in the conditioned dynamics at position variance `v_x_max`
/// with an extra feedback rate `gain_rate`.
pub fn fastest_rate(params: &PhysicalParams, v_x_max: f64, gain_rate: f64) -> f64 {
    params
        .omega
        .max(8.0 * params.eta * params.k * v_x_max)
        .max(gain_rate.abs())
}

/// Step-size rule for Euler-Maruyama integration: `1e-3` of the fastest
/// time scale. Infinite when nothing moves.
pub fn step_size_limit(params: &PhysicalParams, v_x_max: f64, gain_rate: f64) -> f64 {
    let rate = fastest_rate(params, v_x_max, gain_rate);
    if rate > 0.0 {
        1e-3 / rate
    } else {
        f64::INFINITY
    }
}

/// Schrodinger-Robertson check with the discretization allowance
/// `10 dt (8 eta k V_x + omega)` (relative).
pub fn check_uncertainty(state: &GaussianState, params: &PhysicalParams, dt: f64) -> Result<()> {
    let det = state.covariances().det();
    let slack = 10.0 * dt * (8.0 * params.eta * params.k * state.v_x + params.omega);
    let bound = 0.25 * params.hbar * params.hbar * (1.0 - slack);
    if det >= bound {
        Ok(())
    } else {
        Err(Error::UncertaintyViolation { det, bound })
    }
}

/// Integrates the covariance flow with classical RK4 until every rate is
/// below `rel_tol` times the matching covariance scale (per unit of the
/// fastest time scale). Returns the converged covariances and the elapsed
/// time.
pub fn converge_covariances(
    params: &PhysicalParams,
    init: Covariances,
    rel_tol: f64,
    max_time: f64,
) -> Result<(Covariances, f64)> {
    let mut cov = init;
    let mut t = 0.0;
    loop {
        let rate = fastest_rate(params, cov.v_x, 0.0).max(8.0 * params.eta * params.k * cov.v_x);
        if rate == 0.0 {
            return Ok((cov, t));
        }
        let d = covariance_derivative(&cov, params);
        let scale_x = cov.v_x.abs();
        let scale_p = cov.v_p.abs();
        let scale_c = (cov.v_x * cov.v_p).sqrt();
        if d.dv_x.abs() <= rel_tol * rate * scale_x
            && d.dv_p.abs() <= rel_tol * rate * scale_p
            && d.dc.abs() <= rel_tol * rate * scale_c
        {
            return Ok((cov, t));
        }
        if t > max_time {
            return Err(Error::NotConverged {
                residual: d.max_abs(),
                tolerance: rel_tol,
            });
        }
        let h = 0.01 / rate;
        cov = rk4_covariances(&cov, params, h);
        if !(cov.v_x > 0.0 && cov.v_p > 0.0) {
            return Err(Error::NonPositiveVariance {
                quantity: "v_x",
                value: cov.v_x,
            });
        }
        t += h;
    }
}

/// Classical fourth-order Runge-Kutta step of the covariance flow.
pub fn rk4_covariances(cov: &Covariances, params: &PhysicalParams, h: f64) -> Covariances {
    let f = |c: &Covariances| covariance_derivative(c, params);
    let add = |c: &Covariances, d: &CovarianceRates, s: f64| {
        Covariances::new(c.v_x + s * d.dv_x, c.v_p + s * d.dv_p, c.c + s * d.dc)
    };
    let k1 = f(cov);
    let k2 = f(&add(cov, &k1, 0.5 * h));
    let k3 = f(&add(cov, &k2, 0.5 * h));
    let k4 = f(&add(cov, &k3, h));
    Covariances::new(
        cov.v_x + h / 6.0 * (k1.dv_x + 2.0 * k2.dv_x + 2.0 * k3.dv_x + k4.dv_x),
        cov.v_p + h / 6.0 * (k1.dv_p + 2.0 * k2.dv_p + 2.0 * k3.dv_p + k4.dv_p),
        cov.c + h / 6.0 * (k1.dc + 2.0 * k2.dc + 2.0 * k3.dc + k4.dc),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(k: f64, eta: f64) -> PhysicalParams {
        PhysicalParams::nondimensional(k, eta).unwrap()
    }

    fn state(mx: f64, mp: f64, vx: f64, vp: f64, c: f64) -> GaussianState {
        GaussianState::new(mx, mp, Covariances::new(vx, vp, c)).unwrap()
    }

    #[test]
    fn derivative_example() {
        let d = covariance_derivative(&Covariances::new(0.5, 0.5, 0.0), &unit(1.0, 1.0));
        assert_eq!((d.dv_x, d.dv_p, d.dc), (-2.0, 2.0, 0.0));
    }

    #[test]
    fn ground_state_is_stationary_without_measurement() {
        let p = PhysicalParams::new(2.0, 3.0, 0.7, 0.0, 1.0).unwrap();
        let d = covariance_derivative(&Covariances::ground(&p), &p);
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn steady_state_is_fixed_point() {
        for &(m, w, h, k, eta) in &[
            (1.0, 1.0, 1.0, 0.5, 1.0),
            (2.0, 0.3, 0.1, 7.0, 0.3),
            (0.5, 4.0, 2.0, 0.01, 0.9),
        ] {
            let p = PhysicalParams::new(m, w, h, k, eta).unwrap();
            let cov = steady_state_covariances(&p).unwrap();
            let d = covariance_derivative(&cov, &p);
            // each rate is a difference of terms of this size
            let scale = (2.0 * k * h * h).max(cov.v_p / m);
            assert!(d.max_abs() <= 1e-12 * scale, "{d:?}");
        }
    }

    #[test]
    fn steady_state_tilde_example() {
        let p = unit(0.5, 1.0);
        let t = steady_state_covariances(&p).unwrap().to_tilde(&p);
        assert_relative_eq!(t.v_x, 0.7861514, epsilon = 1e-7);
        assert_relative_eq!(t.v_p, 1.7578879, epsilon = 1e-7);
        assert_relative_eq!(t.c, 0.6180340, epsilon = 1e-7);
    }

    #[test]
    fn steady_state_matches_integrated_flow() {
        // forward Euler from the ground state to t = 50 / omega
        let p = unit(0.5, 1.0);
        let mut cov = Covariances::ground(&p);
        let dt = 1e-4;
        for _ in 0..500_000 {
            let d = covariance_derivative(&cov, &p);
            cov = Covariances::new(cov.v_x + d.dv_x * dt, cov.v_p + d.dv_p * dt, cov.c + d.dc * dt);
        }
        let ss = steady_state_covariances(&p).unwrap();
        assert_relative_eq!(cov.v_x, ss.v_x, max_relative = 1e-9);
        assert_relative_eq!(cov.v_p, ss.v_p, max_relative = 1e-9);
        assert_relative_eq!(cov.c, ss.c, max_relative = 1e-9);
    }

    #[test]
    fn weak_measurement_limit_is_ground_state() {
        let p = PhysicalParams::new(1.3, 0.8, 0.9, 1e-10, 1.0).unwrap();
        let ss = steady_state_covariances(&p).unwrap();
        let g = Covariances::ground(&p);
        assert_relative_eq!(ss.v_x, g.v_x, max_relative = 1e-6);
        assert_relative_eq!(ss.v_p, g.v_p, max_relative = 1e-6);
        assert!(ss.c.abs() < 1e-4);
    }

    #[test]
    fn steady_state_determinant() {
        for eta in [0.1, 0.25, 0.6, 1.0] {
            let p = PhysicalParams::new(1.7, 0.4, 0.3, 2.0, eta).unwrap();
            let ss = steady_state_covariances(&p).unwrap();
            assert_relative_eq!(ss.det(), p.hbar * p.hbar / (4.0 * eta), max_relative = 1e-12);
        }
        assert!(steady_state_covariances(&unit(0.0, 1.0)).is_err());
    }

    #[test]
    fn purity_examples() {
        let p = PhysicalParams::new(2.0, 3.0, 0.7, 0.0, 1.0).unwrap();
        assert_relative_eq!(Covariances::ground(&p).purity(p.hbar).unwrap(), 1.0, epsilon = 1e-15);
        // det = hbar^2
        assert_relative_eq!(purity(0.7, 0.7, 0.0, 0.7).unwrap(), 0.5, epsilon = 1e-15);
        let q = unit(3.0, 0.25);
        let ss = steady_state_covariances(&q).unwrap();
        assert_relative_eq!(ss.purity(1.0).unwrap(), 0.5, epsilon = 1e-12);
        assert!(purity(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(purity(1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn one_step_conditioned() {
        let s = state(1.0, 0.0, 0.5, 0.5, 0.0);
        let next = step_conditioned(&s, &unit(1.0, 1.0), 0.01, 0.1, Control::zeros()).unwrap();
        assert_relative_eq!(next.mean_x, 1.1414214, epsilon = 1e-7);
        assert_relative_eq!(next.t, 0.01);
    }

    #[test]
    fn one_step_innovation() {
        let s = state(0.0, 0.0, 0.5, 0.5, 0.0);
        let next = innovation_step(&s, &unit(1.0, 1.0), 0.01, 0.2, Control::zeros()).unwrap();
        assert_relative_eq!(next.mean_x, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn zero_innovation_is_pure_drift() {
        let p = PhysicalParams::new(1.5, 0.7, 1.0, 0.8, 0.6).unwrap();
        let s = state(0.4, -0.3, 0.6, 0.9, 0.1);
        let dt = 1e-3;
        let u = Control::new(0.2, -0.1);
        let dq = 4.0 * p.eta * p.k * s.mean_x * dt;
        let next = innovation_step(&s, &p, dt, dq, u).unwrap();
        assert_relative_eq!(next.mean_x, s.mean_x + (s.mean_p / p.m + u[0]) * dt, epsilon = 1e-15);
        assert_relative_eq!(
            next.mean_p,
            s.mean_p + (-p.m * p.omega * p.omega * s.mean_x + u[1]) * dt,
            epsilon = 1e-15
        );
    }

    #[test]
    fn tiny_step_leaves_state_unchanged() {
        let p = unit(1.0, 1.0);
        let s = state(0.3, 0.2, 0.5, 0.5, 0.1);
        let next = step_conditioned(&s, &p, 1e-15, 0.0, Control::zeros()).unwrap();
        assert!((next.mean_x - s.mean_x).abs() < 1e-14);
        assert!((next.v_p - s.v_p).abs() < 1e-14);
        assert!(step_conditioned(&s, &p, 0.0, 0.0, Control::zeros()).is_err());
    }

    #[test]
    fn quarter_period_rotation() {
        let p = PhysicalParams::new(2.0, 3.0, 1.0, 0.0, 1.0).unwrap();
        let x0 = 1.5;
        let mut s = GaussianState::new(x0, 0.0, Covariances::ground(&p)).unwrap();
        let n = 100_000;
        let dt = std::f64::consts::FRAC_PI_2 / p.omega / n as f64;
        for _ in 0..n {
            s = step_conditioned(&s, &p, dt, 0.0, Control::zeros()).unwrap();
        }
        let scale = p.m * p.omega * x0;
        assert!(s.mean_x.abs() < 1e-3 * x0);
        assert!((s.mean_p + scale).abs() < 1e-3 * scale);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = unit(100.0, 1.0);
        let s = state(0.0, 0.0, 1.0, 1.0, 0.0);
        match step_conditioned(&s, &p, 1.0, 0.0, Control::zeros()) {
            Err(Error::NonPositiveVariance { quantity, .. }) => assert_eq!(quantity, "v_x"),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn record_examples() {
        let p = unit(1.0, 1.0);
        assert_eq!(record_increment(&state(0.0, 0.0, 1.0, 1.0, 0.0), &p, 0.01, 0.0).dq, 0.0);
        assert_relative_eq!(
            record_increment(&state(1.0, 0.0, 1.0, 1.0, 0.0), &p, 0.01, 0.0).dq,
            0.04,
            epsilon = 1e-16
        );
        let q = unit(2.0, 0.5);
        assert_relative_eq!(
            record_increment(&state(0.0, 0.0, 1.0, 1.0, 0.0), &q, 0.37, 1.0).dq,
            2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn converges_from_thermal_state() {
        let p = unit(0.5, 1.0);
        let (cov, t) = converge_covariances(&p, Covariances::thermal(&p, 10.0), 1e-12, 1e4).unwrap();
        let ss = steady_state_covariances(&p).unwrap();
        assert!(t > 0.0);
        assert_relative_eq!(cov.v_x, ss.v_x, max_relative = 1e-10);
        assert_relative_eq!(cov.c, ss.c, max_relative = 1e-10);
    }

    #[test]
    fn uncertainty_check() {
        let p = unit(1.0, 1.0);
        assert!(check_uncertainty(&state(0.0, 0.0, 0.5, 0.5, 0.0), &p, 1e-3).is_ok());
        assert!(check_uncertainty(&state(0.0, 0.0, 0.4, 0.5, 0.0), &p, 1e-3).is_err());
    }

    #[test]
    fn tilde_round_trip() {
        let p = PhysicalParams::new(1.3, 0.8, 0.9, 1.0, 1.0).unwrap();
        let c = Covariances::new(0.3, 0.7, -0.1);
        let back = c.to_tilde(&p).from_tilde(&p);
        assert_relative_eq!(back.v_x, c.v_x, epsilon = 1e-15);
        assert_relative_eq!(back.v_p, c.v_p, epsilon = 1e-15);
        assert_relative_eq!(back.c, c.c, epsilon = 1e-15);
        let g = Covariances::ground(&p).to_tilde(&p);
        assert_relative_eq!(g.v_x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(g.v_p, 1.0, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = PhysicalParams> {
            (0.2f64..5.0, 0.2f64..5.0, 0.2f64..5.0, 0.0f64..3.0, 0.05f64..=1.0)
                .prop_map(|(m, w, h, k, eta)| PhysicalParams::new(m, w, h, k, eta).unwrap())
        }

        proptest! {
            #[test]
            fn innovation_form_equals_noise_form(
                p in params(),
                mx in -3.0f64..3.0, mp in -3.0f64..3.0,
                nbar in 0.0f64..3.0,
                dw in -0.05f64..0.05,
                ux in -1.0f64..1.0, up in -1.0f64..1.0,
            ) {
                let s = GaussianState::new(mx, mp, Covariances::thermal(&p, nbar)).unwrap();
                let dt = 1e-4;
                let u = Control::new(ux, up);
                let rec = record_increment(&s, &p, dt, dw);
                let a = step_conditioned(&s, &p, dt, dw, u).unwrap();
                let b = innovation_step(&s, &p, dt, rec.dq, u).unwrap();
                let tol = 1e-14 * (1.0 + mx.abs() + mp.abs());
                prop_assert!((a.mean_x - b.mean_x).abs() <= tol);
                prop_assert!((a.mean_p - b.mean_p).abs() <= tol * p.m * p.omega.max(1.0));
                prop_assert_eq!(a.covariances(), b.covariances());
            }

            #[test]
            fn covariance_rates_ignore_means(p in params(), mx in -5.0f64..5.0, mp in -5.0f64..5.0) {
                let cov = Covariances::thermal(&p, 1.0);
                let a = step_conditioned(&GaussianState::new(mx, mp, cov).unwrap(), &p, 1e-4, 0.01, Control::zeros()).unwrap();
                let b = step_conditioned(&GaussianState::new(0.0, 0.0, cov).unwrap(), &p, 1e-4, -0.02, Control::zeros()).unwrap();
                prop_assert_eq!(a.covariances(), b.covariances());
            }
        }
    }
}
