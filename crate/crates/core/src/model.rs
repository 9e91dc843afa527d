//! Physical parameters of the measured oscillator and the conversion from
//! cavity read-out parameters to the measurement constant `k`.
//!
//! Every formula here carries its units explicitly; nothing assumes
//! `hbar = m = omega = 1`. [`PhysicalParams::nondimensional`] is only a
//! convenience constructor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Oscillator and measurement constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    /// Measurement constant: rate of position information gain per unit
    /// length squared.
    pub k: f64,
    /// Detection efficiency.
    pub eta: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, omega: f64, hbar: f64, k: f64, eta: f64) -> Result<Self> {
        let params = PhysicalParams {
            m,
            omega,
            hbar,
            k,
            eta,
        };
        params.validate()?;
        Ok(params)
    }

    /// Units with `hbar = m = omega = 1`.
    pub fn nondimensional(k: f64, eta: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, k, eta)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.m.is_finite() && self.m > 0.0, "m", "must be > 0")?;
        check(self.omega.is_finite() && self.omega >= 0.0, "omega", "must be >= 0")?;
        check(self.hbar.is_finite() && self.hbar > 0.0, "hbar", "must be > 0")?;
        check(self.k.is_finite() && self.k >= 0.0, "k", "must be >= 0")?;
        check(
            self.eta.is_finite() && self.eta > 0.0 && self.eta <= 1.0,
            "eta",
            "must lie in (0, 1]",
        )
    }

    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::new(self.m, self.omega, self.hbar, k, self.eta)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.m, self.omega, self.hbar, self.k, eta)
    }

    /// `sqrt(2 eta k)`, the amplitude of the white noise on the scaled record.
    pub fn record_noise(&self) -> f64 {
        (2.0 * self.eta * self.k).sqrt()
    }

    /// Multipliers taking `(V_x, V_p, C)` to the dimensionless tilde scaling
    /// `(2 m omega / hbar, 2 / (hbar m omega), 2 / hbar)`.
    pub fn tilde_factors(&self) -> [f64; 3] {
        let mw = self.m * self.omega;
        [2.0 * mw / self.hbar, 2.0 / (self.hbar * mw), 2.0 / self.hbar]
    }
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(field, reason))
    }
}

/// Which object the cavity light reads out, with the coupling constants
/// specific to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CavityCoupling {
    /// Moving end mirror; `g_m = omega0 / L`.
    Mirror { g_m: f64 },
    /// Atom trapped between node and antinode of the mode.
    Atom { g0: f64, k0: f64, delta: f64 },
}

/// Experimental read-out parameters of a bad-cavity position measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySetup {
    /// Cavity decay rate through the output mirror.
    pub gamma: f64,
    /// Optical mode frequency.
    pub omega0: f64,
    pub laser_power: f64,
    pub coupling: CavityCoupling,
    /// Homodyne gain; only used to rescale the raw photocurrent.
    #[serde(default = "one")]
    pub beta_homodyne: f64,
}

fn one() -> f64 {
    1.0
}

impl CavitySetup {
    pub fn validate(&self) -> Result<()> {
        check(self.gamma.is_finite() && self.gamma > 0.0, "gamma", "must be > 0")?;
        check(self.omega0.is_finite() && self.omega0 > 0.0, "omega0", "must be > 0")?;
        check(
            self.laser_power.is_finite() && self.laser_power >= 0.0,
            "laser_power",
            "must be >= 0",
        )?;
        match self.coupling {
            CavityCoupling::Mirror { g_m } => check(g_m.is_finite(), "g_m", "must be finite"),
            CavityCoupling::Atom { g0, k0, delta } => {
                check(g0.is_finite(), "g0", "must be finite")?;
                check(k0.is_finite(), "k0", "must be finite")?;
                check(delta.is_finite() && delta != 0.0, "delta", "must be non-zero")
            }
        }
    }

    /// Drive strength `E = sqrt(gamma P / (hbar omega0))`.
    pub fn drive(&self, hbar: f64) -> f64 {
        (self.gamma * self.laser_power / (hbar * self.omega0)).sqrt()
    }

    /// Mean intracavity photon number `|alpha|^2` with `|alpha| = 2E / gamma`.
    pub fn intracavity_photons(&self, hbar: f64) -> f64 {
        4.0 * self.laser_power / (self.gamma * hbar * self.omega0)
    }

    /// Sets the laser power that produces `photons = |alpha|^2`.
    pub fn with_intracavity_photons(mut self, photons: f64, hbar: f64) -> Self {
        self.laser_power = photons * self.gamma * hbar * self.omega0 / 4.0;
        self
    }

    /// Converts a raw homodyne increment into the scaled record
    /// `dQ = 4 eta k <x> dt + sqrt(2 eta k) dW`.
    pub fn scale_record(&self, raw: f64, k: f64) -> f64 {
        raw * (2.0 * k / (self.beta_homodyne * self.beta_homodyne * self.gamma)).sqrt()
    }
}

/// Measurement constant produced by a cavity read-out.
pub fn measurement_constant(setup: &CavitySetup, hbar: f64) -> Result<f64> {
    setup.validate()?;
    check(hbar.is_finite() && hbar > 0.0, "hbar", "must be > 0")?;
    let photons = setup.intracavity_photons(hbar);
    let k = match setup.coupling {
        CavityCoupling::Mirror { g_m } => 2.0 * g_m * g_m * photons / setup.gamma,
        CavityCoupling::Atom { g0, k0, delta } => {
            2.0 * k0 * k0 * g0.powi(4) * photons / (setup.gamma * delta * delta)
        }
    };
    Ok(k)
}

/// Dimensionless numbers fixing the steady-state shape of the conditioned
/// state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeNumbers {
    /// `m omega^2 / (2 hbar eta k)`; large means weak measurement.
    pub r: f64,
    /// `sqrt(1 + 4 / (eta r^2))`, always `>= 1`.
    pub xi: f64,
}

pub fn regime_numbers(params: &PhysicalParams) -> Result<RegimeNumbers> {
    params.validate()?;
    check(params.k > 0.0, "k", "must be > 0 (use the ground state for k = 0)")?;
    check(params.omega > 0.0, "omega", "must be > 0")?;
    let p = params;
    let r = p.m * p.omega * p.omega / (2.0 * p.hbar * p.eta * p.k);
    let xi = (1.0 + 4.0 / (p.eta * r * r)).sqrt();
    Ok(RegimeNumbers { r, xi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mirror(g_m: f64, gamma: f64) -> CavitySetup {
        CavitySetup {
            gamma,
            omega0: 3.0,
            laser_power: 0.0,
            coupling: CavityCoupling::Mirror { g_m },
            beta_homodyne: 1.0,
        }
    }

    #[test]
    fn mirror_constant() {
        let setup = mirror(1.0, 2.0).with_intracavity_photons(1.0, 1.0);
        assert_relative_eq!(setup.intracavity_photons(1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(measurement_constant(&setup, 1.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn atom_constant() {
        let setup = CavitySetup {
            gamma: 1.0,
            omega0: 5.0,
            laser_power: 0.0,
            coupling: CavityCoupling::Atom {
                g0: 1.0,
                k0: 1.0,
                delta: 1.0,
            },
            beta_homodyne: 1.0,
        }
        .with_intracavity_photons(4.0, 1.0);
        assert_relative_eq!(measurement_constant(&setup, 1.0).unwrap(), 8.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_power_gives_zero_k() {
        let setup = mirror(0.7, 2.0);
        assert_eq!(measurement_constant(&setup, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_cavity() {
        let mut setup = mirror(1.0, 0.0);
        assert!(measurement_constant(&setup, 1.0).is_err());
        setup.gamma = 1.0;
        setup.coupling = CavityCoupling::Atom {
            g0: 1.0,
            k0: 1.0,
            delta: 0.0,
        };
        assert!(measurement_constant(&setup, 1.0).is_err());
    }

    #[test]
    fn drive_matches_photon_number() {
        let setup = mirror(1.0, 2.5).with_intracavity_photons(3.0, 0.5);
        let e = setup.drive(0.5);
        assert_relative_eq!((2.0 * e / setup.gamma).powi(2), 3.0, epsilon = 1e-13);
    }

    #[test]
    fn record_rescaling_undoes_homodyne_gain() {
        // raw = beta sqrt(gamma / 2k) * dQ
        let setup = CavitySetup {
            beta_homodyne: 3.0,
            ..mirror(1.0, 2.0)
        };
        let k = 0.4;
        let dq = 0.123;
        let raw = setup.beta_homodyne * (setup.gamma / (2.0 * k)).sqrt() * dq;
        assert_relative_eq!(setup.scale_record(raw, k), dq, epsilon = 1e-15);
    }

    #[test]
    fn regime_examples() {
        let rn = regime_numbers(&PhysicalParams::nondimensional(0.5, 1.0).unwrap()).unwrap();
        assert_relative_eq!(rn.r, 1.0, epsilon = 1e-15);
        assert_relative_eq!(rn.xi, 2.2360680, epsilon = 1e-7);

        let rn = regime_numbers(&PhysicalParams::nondimensional(2.0, 0.25).unwrap()).unwrap();
        assert_relative_eq!(rn.r, 1.0, epsilon = 1e-15);
        assert_relative_eq!(rn.xi, 4.1231056, epsilon = 1e-7);

        let weak = regime_numbers(&PhysicalParams::nondimensional(1e-9, 1.0).unwrap()).unwrap();
        assert!(weak.r > 1e8);
        assert_relative_eq!(weak.xi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn regime_rejects_degenerate() {
        assert!(regime_numbers(&PhysicalParams::nondimensional(0.0, 1.0).unwrap()).is_err());
        let p = PhysicalParams::new(1.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(regime_numbers(&p).is_err());
    }

    #[test]
    fn param_validation() {
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 1.5).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, -1.0, 1.0).is_err());
        match PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 1.5) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "eta"),
            other => panic!("unexpected {other:?}"),
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn xi_at_least_one_and_decreasing_in_r(k in 1e-4f64..1e3, eta in 0.01f64..=1.0) {
                let p = PhysicalParams::nondimensional(k, eta).unwrap();
                let a = regime_numbers(&p).unwrap();
                let b = regime_numbers(&p.with_k(k * 0.5).unwrap()).unwrap();
                prop_assert!(a.xi >= 1.0);
                prop_assert!(b.r > a.r);
                prop_assert!(b.xi < a.xi);
            }

            #[test]
            fn k_is_linear_in_photon_number(photons in 0.01f64..100.0, atom in any::<bool>()) {
                let coupling = if atom {
                    CavityCoupling::Atom { g0: 0.8, k0: 1.3, delta: -2.0 }
                } else {
                    CavityCoupling::Mirror { g_m: 0.6 }
                };
                let setup = CavitySetup { gamma: 1.7, omega0: 2.0, laser_power: 0.0, coupling, beta_homodyne: 1.0 };
                let k1 = measurement_constant(&setup.with_intracavity_photons(photons, 1.0), 1.0).unwrap();
                let k2 = measurement_constant(&setup.with_intracavity_photons(2.0 * photons, 1.0), 1.0).unwrap();
                prop_assert!((k2 - 2.0 * k1).abs() <= 1e-12 * k2);
            }

            #[test]
            fn regime_numbers_are_unit_free(
                m in 0.1f64..10.0, omega in 0.1f64..10.0, hbar in 0.1f64..10.0,
                r in 0.05f64..20.0, eta in 0.05f64..=1.0,
            ) {
                // pick k so that the dimensionful set has regime number r
                let k = m * omega * omega / (2.0 * hbar * eta * r);
                let dimful = PhysicalParams::new(m, omega, hbar, k, eta).unwrap();
                let dimless = PhysicalParams::nondimensional(1.0 / (2.0 * eta * r), eta).unwrap();
                let a = regime_numbers(&dimful).unwrap();
                let b = regime_numbers(&dimless).unwrap();
                prop_assert!((a.r - b.r).abs() <= 1e-12 * a.r);
                prop_assert!((a.xi - b.xi).abs() <= 1e-12 * a.xi);
            }
        }
    }
}
