//! Reference solution: the measured oscillator's density matrix on a
//! truncated number basis, evolved with the full stochastic master
//! equation. Nothing here assumes the state is Gaussian.

mod band;
pub mod ensemble;
pub mod prepare;
pub mod sme;
pub mod verify;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhysicalParams;

pub(crate) use band::Band;
pub use ensemble::{run_fock_ensemble, FockEnsembleConfig, FockEnsembleStats};
pub use prepare::{coherent_state, from_gaussian, ground_state};
pub use sme::{direct_feedback_sme_step, sme_step, SmeIntegrator, SmeOptions, SmeScheme};

pub type CMatrix = DMatrix<Complex64>;

/// Default population allowed in the top two levels.
pub const DEFAULT_LEAK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub dim: usize,
    pub rho: CMatrix,
    pub t: f64,
}

impl FockState {
    pub fn new(rho: CMatrix) -> Result<Self> {
        let dim = rho.nrows();
        if dim != rho.ncols() {
            return Err(Error::invalid("rho", "must be square"));
        }
        Ok(FockState { dim, rho, t: 0.0 })
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `Tr[rho^2]` for Hermitian `rho`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Population in the top two number states.
    pub fn top_population(&self) -> f64 {
        let n = self.dim;
        self.rho[(n - 1, n - 1)].re + self.rho[(n - 2, n - 2)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn check_leakage(&self, tol: f64) -> Result<()> {
        let population = self.top_population();
        if population >= tol {
            return Err(Error::Leakage {
                dim: self.dim,
                population,
                tolerance: tol,
            });
        }
        Ok(())
    }
}

/// Position, momentum and Hamiltonian on the truncated basis, plus the
/// products needed for moments.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub dim: usize,
    pub x_op: CMatrix,
    pub p_op: CMatrix,
    pub hamiltonian: CMatrix,
    pub(crate) x2: CMatrix,
    pub(crate) p2: CMatrix,
    pub(crate) xp_sym: CMatrix,
}

/// Ladder construction `x = sqrt(hbar/2 m omega)(a + a^dag)`,
/// `p = i sqrt(hbar m omega / 2)(a^dag - a)`, `H = p^2/2m + m omega^2 x^2/2`
/// with the squares taken of the truncated matrices.
pub fn build_operators(dim: usize, params: &PhysicalParams) -> Result<OperatorSet> {
    if dim < 4 {
        return Err(Error::invalid("dim", "must be >= 4"));
    }
    params.validate()?;
    if params.omega <= 0.0 {
        return Err(Error::invalid("omega", "number basis needs omega > 0"));
    }
    let PhysicalParams { m, omega, hbar, .. } = *params;
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    let x_op = (&a + &ad) * Complex64::new((hbar / (2.0 * m * omega)).sqrt(), 0.0);
    let p_op = (&ad - &a) * Complex64::new(0.0, (hbar * m * omega / 2.0).sqrt());
    let x2 = &x_op * &x_op;
    let p2 = &p_op * &p_op;
    let xp = &x_op * &p_op;
    let xp_sym = (&xp + xp.adjoint()) * Complex64::new(0.5, 0.0);
    let hamiltonian = &p2 * Complex64::new(0.5 / m, 0.0) + &x2 * Complex64::new(0.5 * m * omega * omega, 0.0);
    Ok(OperatorSet {
        dim,
        x_op,
        p_op,
        hamiltonian,
        x2,
        p2,
        xp_sym,
    })
}

/// `Tr[A rho]`.
pub fn expect(a: &CMatrix, rho: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * rho[(j, i)];
        }
    }
    s
}

/// Means, symmetrized covariances and purity of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub v_x: f64,
    pub v_p: f64,
    pub c: f64,
    pub purity: f64,
}

impl Moments {
    pub fn as_array(&self) -> [f64; 5] {
        [self.mean_x, self.mean_p, self.v_x, self.v_p, self.c]
    }
}

pub fn moments(state: &FockState, ops: &OperatorSet) -> Moments {
    let rho = &state.rho;
    let mean_x = expect(&ops.x_op, rho).re;
    let mean_p = expect(&ops.p_op, rho).re;
    Moments {
        mean_x,
        mean_p,
        v_x: expect(&ops.x2, rho).re - mean_x * mean_x,
        v_p: expect(&ops.p2, rho).re - mean_p * mean_p,
        c: expect(&ops.xp_sym, rho).re - mean_x * mean_p,
        purity: state.purity(),
    }
}
