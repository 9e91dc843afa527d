//! Stochastic master equation for position measurement with optional direct
//! feedback of the measurement current:
//!
//! ```text
//! d rho = -(i/hbar)[H, rho] dt + 2k D[x] rho dt
//!         + (1/eta) D[F] rho dt - i sqrt(2k) [F, x rho + rho x] dt
//!         + H[sqrt(2 eta k) x - (i/sqrt(eta)) F] rho dW
//! ```
//!
//! with `F = sqrt(2k) eta (alpha x + beta p) / hbar`,
//! `D[c] rho = c rho c^dag - {c^dag c, rho}/2` and
//! `H[c] rho = c rho + rho c^dag - Tr(c rho + rho c^dag) rho`. Without
//! feedback (`F = 0`) this is the plain measurement equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::band::{flat, flat_mut};
use super::{Band, CMatrix, FockState, OperatorSet, DEFAULT_LEAK_TOL};
use crate::error::{Error, Result};
use crate::model::PhysicalParams;
use crate::noise::WienerIncrement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmeScheme {
    EulerMaruyama,
    /// Euler-Maruyama plus the `(dW^2 - dt)` correction; strong order one
    /// for this single-noise equation.
    #[default]
    Milstein,
    /// Ito-Taylor scheme of strong order 1.5, driven by the increment and
    /// its time integral.
    StrongTaylor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmeOptions {
    pub scheme: SmeScheme,
    /// Abort when the top two levels hold at least this much population.
    pub leak_tol: f64,
}

impl Default for SmeOptions {
    fn default() -> Self {
        SmeOptions {
            scheme: SmeScheme::default(),
            leak_tol: DEFAULT_LEAK_TOL,
        }
    }
}

const TRACE_DRIFT_TOL: f64 = 1e-6;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Copies the conjugated upper triangle onto the lower one and clears the
/// imaginary part of the diagonal.
fn mirror_upper(m: &mut CMatrix) {
    let n = m.nrows();
    let d = m.as_mut_slice();
    for j in 0..n {
        for i in 0..j {
            d[j + i * n] = d[i + j * n].conj();
        }
        d[j + j * n].im = 0.0;
    }
}

/// `out += s x`.
fn axpy(out: &mut CMatrix, x: &CMatrix, s: f64) {
    for (o, v) in flat_mut(out).iter_mut().zip(flat(x)) {
        *o += v * s;
    }
}

fn re_trace(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

struct Feedback {
    f: Band,
    /// `F / sqrt(eta)`
    f_eta: Band,
    comm: f64,
    /// `x X + X x` for the current drift argument.
    s: CMatrix,
}

/// Precomputed operators and scratch space for repeated steps.
pub struct SmeIntegrator {
    options: SmeOptions,
    x: Band,
    /// `sqrt(2k) x`
    xk: Band,
    /// `-(i/hbar) H - k x^2 - F^2 / (2 eta)`
    m: Band,
    /// measurement operator `sqrt(2 eta k) x - (i/sqrt(eta)) F`
    l: Band,
    feedback: Option<Feedback>,
    /// Bandwidth of the factors applied on both sides of `X` in the drift.
    reach: usize,
    cols: [Vec<f64>; 2],
    /// Drift, diffusion and higher-order terms of the current step.
    terms: [CMatrix; 6],
}

impl SmeIntegrator {
    pub fn new(ops: &OperatorSet, params: &PhysicalParams, options: SmeOptions) -> Result<Self> {
        Self::with_feedback(ops, params, 0.0, 0.0, options)
    }

    /// Integrator for the feedback equation with gains `(alpha, beta)`.
    /// Zero gains give exactly the plain measurement integrator.
    pub fn with_feedback(
        ops: &OperatorSet,
        params: &PhysicalParams,
        alpha: f64,
        beta: f64,
        options: SmeOptions,
    ) -> Result<Self> {
        params.validate()?;
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid("alpha", "direct gains must be finite"));
        }
        if !(options.leak_tol > 0.0) {
            return Err(Error::invalid("leak_tol", "must be > 0"));
        }
        let PhysicalParams { hbar, k, eta, .. } = *params;
        let n = ops.dim;
        let mut m = &ops.hamiltonian * c(0.0, -1.0 / hbar) - &ops.x2 * c(k, 0.0);
        let mut l = &ops.x_op * c((2.0 * eta * k).sqrt(), 0.0);
        let feedback = if alpha != 0.0 || beta != 0.0 {
            let f = (&ops.x_op * c(alpha, 0.0) + &ops.p_op * c(beta, 0.0)) * c((2.0 * k).sqrt() * eta / hbar, 0.0);
            m -= (&f * &f) * c(0.5 / eta, 0.0);
            l -= &f * c(0.0, 1.0 / eta.sqrt());
            Some(Feedback {
                f: Band::from_dense(&f),
                f_eta: Band::from_dense(&(&f * c(1.0 / eta.sqrt(), 0.0))),
                comm: (2.0 * k).sqrt(),
                s: CMatrix::zeros(n, n),
            })
        } else {
            None
        };
        let xk = Band::from_dense(&(&ops.x_op * c((2.0 * k).sqrt(), 0.0)));
        let reach = feedback.as_ref().map_or(0, |fb| fb.f_eta.bandwidth()).max(xk.bandwidth());
        Ok(SmeIntegrator {
            options,
            x: Band::from_dense(&ops.x_op),
            xk,
            reach,
            m: Band::from_dense(&m),
            l: Band::from_dense(&l),
            feedback,
            cols: std::array::from_fn(|_| vec![0.0; 2 * n]),
            terms: std::array::from_fn(|_| CMatrix::zeros(n, n)),
        })
    }

    pub fn options(&self) -> SmeOptions {
        self.options
    }

    /// `out = L X` for the linear drift generator `L`. `X` must be
    /// Hermitian; so is the result, whose upper triangle is built column by
    /// column and then mirrored.
    fn drift(&mut self, x: &CMatrix, out: &mut CMatrix) {
        let dim = x.nrows();
        let n = 2 * dim;
        let xs = flat(x);
        if let Some(fb) = &mut self.feedback {
            let s = flat_mut(&mut fb.s);
            s.fill(0.0);
            for (j, o) in s.chunks_exact_mut(n).enumerate() {
                self.x.left_col(&xs[j * n..(j + 1) * n], o);
                self.x.right_col(xs, j, o);
            }
        }
        let [t, u] = &mut self.cols;
        let dst = flat_mut(out);
        dst.fill(0.0);
        for (j, o) in dst.chunks_exact_mut(n).enumerate() {
            let o = &mut o[..2 * (j + 1)];
            // rows below the block reached by the two-sided factors
            let below = 2 * (j + 1 + self.reach).min(dim);
            // M X + X M^dag carries the Hamiltonian and the anticommutators
            self.m.left_col(&xs[j * n..(j + 1) * n], o);
            self.m.right_adjoint_col(xs, j, o);
            // 2k x X x
            let t = &mut t[..below];
            t.fill(0.0);
            self.xk.right_col(xs, j, t);
            self.xk.left_col(t, o);
            if let Some(fb) = &self.feedback {
                // (1/eta) F X F
                t.fill(0.0);
                fb.f_eta.right_col(xs, j, t);
                fb.f_eta.left_col(t, o);
                // -i sqrt(2k) [F, S]
                let s = flat(&fb.s);
                let t = &mut t[..o.len()];
                let u = &mut u[..o.len()];
                t.fill(0.0);
                u.fill(0.0);
                fb.f.left_col(&s[j * n..(j + 1) * n], t);
                fb.f.right_col(s, j, u);
                for ((o, t), u) in o.chunks_exact_mut(2).zip(t.chunks_exact(2)).zip(u.chunks_exact(2)) {
                    o[0] += fb.comm * (t[1] - u[1]);
                    o[1] -= fb.comm * (t[0] - u[0]);
                }
            }
        }
        mirror_upper(out);
    }

    /// `out = L X + X L^dag` for the measurement operator; returns its
    /// trace.
    fn meas(&mut self, x: &CMatrix, out: &mut CMatrix) -> f64 {
        let n = 2 * x.nrows();
        let xs = flat(x);
        let dst = flat_mut(out);
        dst.fill(0.0);
        let mut tr = 0.0;
        for (j, o) in dst.chunks_exact_mut(n).enumerate() {
            let o = &mut o[..2 * (j + 1)];
            self.l.left_col(&xs[j * n..(j + 1) * n], o);
            tr += o[2 * j];
            self.l.right_adjoint_col(xs, j, o);
        }
        mirror_upper(out);
        2.0 * tr
    }

    /// Advances `state` by one step of length `dt` with Wiener increment
    /// `dw`, then symmetrizes and renormalizes. The order-1.5 scheme needs
    /// the area of the increment and is only reachable through
    /// [`SmeIntegrator::step_increment`].
    pub fn step(&mut self, state: &mut FockState, dt: f64, dw: f64) -> Result<()> {
        if self.options.scheme == SmeScheme::StrongTaylor {
            return Err(Error::invalid("scheme", "strong_taylor needs the increment area"));
        }
        self.step_increment(state, dt, &WienerIncrement { dw, dz: 0.0 })
    }

    pub fn step_increment(&mut self, state: &mut FockState, dt: f64, inc: &WienerIncrement) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        state.check_leakage(self.options.leak_tol)?;
        let rho = &state.rho;
        let WienerIncrement { dw, dz } = *inc;
        let [mut a, mut b, mut bb, mut t, mut u, mut next] = std::mem::take(&mut self.terms);

        self.drift(rho, &mut a);
        let tau = self.meas(rho, &mut b);
        axpy(&mut b, rho, -tau);
        next.copy_from(rho);
        axpy(&mut next, &a, dt);
        axpy(&mut next, &b, dw);

        if self.options.scheme != SmeScheme::EulerMaruyama {
            // b'b = M b - tau(b) rho - tau(rho) b
            let tau_b = self.meas(&b, &mut bb);
            axpy(&mut bb, rho, -tau_b);
            axpy(&mut bb, &b, -tau);
            axpy(&mut next, &bb, 0.5 * (dw * dw - dt));

            if self.options.scheme == SmeScheme::StrongTaylor {
                // The drift is linear, so L1 a = L b and L0 a = L a enter
                // through one application of L.
                u.copy_from(&a);
                u *= c(0.5 * dt * dt, 0.0);
                axpy(&mut u, &b, dz);
                self.drift(&u, &mut t);
                axpy(&mut next, &t, 1.0);
                // L0 b = M a - tau(a) rho - tau(rho) a - tau(b) b
                let tau_a = self.meas(&a, &mut t);
                axpy(&mut t, rho, -tau_a);
                axpy(&mut t, &a, -tau);
                axpy(&mut t, &b, -tau_b);
                axpy(&mut next, &t, dw * dt - dz);
                // G = L1 L1 b = M(b'b) - tau(b'b) rho - tau(rho) b'b - 2 tau(b) b
                let tau_bb = self.meas(&bb, &mut u);
                axpy(&mut u, rho, -tau_bb);
                axpy(&mut u, &bb, -tau);
                axpy(&mut u, &b, -2.0 * tau_b);
                axpy(&mut next, &u, 0.5 * (dw * dw / 3.0 - dt) * dw);
            }
        }
        let tr = re_trace(&next);
        if !((tr - 1.0).abs() <= TRACE_DRIFT_TOL) {
            self.terms = [a, b, bb, t, u, next];
            return Err(Error::TraceDrift { drift: tr - 1.0 });
        }
        self.terms = [a, b, bb, t, u, std::mem::replace(&mut state.rho, next)];
        let next = &mut state.rho;
        mirror_upper(next);
        *next /= c(tr, 0.0);
        state.t += dt;
        Ok(())
    }
}

/// One step of the measurement equation with default options.
pub fn sme_step(state: &FockState, ops: &OperatorSet, params: &PhysicalParams, dt: f64, dw: f64) -> Result<FockState> {
    let mut next = state.clone();
    SmeIntegrator::new(ops, params, SmeOptions::default())?.step(&mut next, dt, dw)?;
    Ok(next)
}

/// One step of the direct-feedback equation with default options.
#[allow(clippy::too_many_arguments)]
pub fn direct_feedback_sme_step(
    state: &FockState,
    ops: &OperatorSet,
    params: &PhysicalParams,
    alpha: f64,
    beta: f64,
    dt: f64,
    dw: f64,
) -> Result<FockState> {
    let mut next = state.clone();
    SmeIntegrator::with_feedback(ops, params, alpha, beta, SmeOptions::default())?.step(&mut next, dt, dw)?;
    Ok(next)
}
