//! LQG controller synthesis: the continuous algebraic Riccati equation
//!
//! ```text
//! 0 = P + A^T U + U A - U B Q^-1 B^T U,      K = Q^-1 B^T U
//! ```
//!
//! and the quadratic trajectory cost.
//!
//! [`solve_care`] takes the stable invariant subspace of the Hamiltonian
//! matrix `[[A, -B Q^-1 B^T], [-P, -A^T]]` from its eigenvectors and then
//! polishes the result with Newton (Kleinman) steps. Control weights are
//! always passed in their effective form; the oscillator designs use
//! `q^2 Q`, which reduces to the bare `Q` at `q = 1`.

use itertools::Itertools;
use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{Control, GaussianState};
use crate::model::PhysicalParams;

type CMatrix = DMatrix<Complex64>;

/// Result of a Riccati solve.
#[derive(Debug, Clone)]
pub struct CareSolution {
    /// Stabilizing symmetric positive semidefinite solution.
    pub u: DMatrix<f64>,
    /// `||P + A^T U + U A - U S U||_F / ||P||_F` (absolute when `P = 0`).
    pub relative_residual: f64,
    /// Eigenvalues of `A - B Q^-1 B^T U`.
    pub closed_loop: Vec<Complex64>,
    /// How many real symmetric PSD solutions the equation has, counted over
    /// all invariant subspaces of the Hamiltonian. `None` when the
    /// Hamiltonian spectrum is degenerate and the count is not attempted.
    pub psd_solutions: Option<usize>,
}

const RESIDUAL_TOL: f64 = 1e-9;

fn frob(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

fn care_residual(a: &DMatrix<f64>, s: &DMatrix<f64>, p: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    p + a.transpose() * u + u * a - u * s * u
}

fn relative(residual: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let scale = frob(p);
    if scale > 0.0 {
        frob(residual) / scale
    } else {
        frob(residual)
    }
}

fn symmetrize(u: &DMatrix<f64>) -> DMatrix<f64> {
    (u + u.transpose()) * 0.5
}

/// Smallest singular value of a complex matrix relative to its largest.
fn relative_rank_gap(m: CMatrix) -> f64 {
    let sv = m.svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}

/// PBH test on every eigenvalue of `a` with non-negative real part (up to
/// `tol`): `[A - lambda I, B]` must have full row rank.
fn pbh_check(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Option<Complex64> {
    let n = a.nrows();
    let scale = frob(a).max(1.0);
    for lambda in a.clone().complex_eigenvalues().iter() {
        if lambda.re < -tol * scale {
            continue;
        }
        let mut m = CMatrix::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(a[(i, j)], 0.0);
            }
            m[(i, i)] -= lambda;
            for j in 0..b.ncols() {
                m[(i, n + j)] = Complex64::new(b[(i, j)], 0.0);
            }
        }
        if relative_rank_gap(m) < 1e-10 {
            return Some(*lambda);
        }
    }
    None
}

/// Orthonormal basis of the approximate null space of `m` of dimension
/// `dim`, with the ratio of the largest discarded-from-null singular value
/// to the largest overall.
fn null_space(m: CMatrix, dim: usize) -> (Vec<nalgebra::DVector<Complex64>>, f64) {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let n = sv.len();
    let max = sv[0].max(f64::MIN_POSITIVE);
    let vecs = (n - dim..n).map(|k| v_t.row(k).adjoint()).collect();
    (vecs, sv[n - 1] / max)
}

struct Spectrum {
    vectors: Vec<nalgebra::DVector<Complex64>>,
    degenerate: bool,
}

/// Eigenpairs of a real matrix, grouping numerically equal eigenvalues and
/// taking a null-space basis per group.
fn eigenpairs(h: &DMatrix<f64>, only_stable: Option<f64>) -> Result<Spectrum> {
    let n = h.nrows();
    let mut eig: Vec<Complex64> = h.clone().complex_eigenvalues().iter().cloned().collect();
    if let Some(tol) = only_stable {
        eig.retain(|l| l.re < -tol);
    }
    eig.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let scale = eig.iter().map(|l| l.norm()).fold(frob(h) / (n as f64).sqrt(), f64::max);
    let hc = to_complex(h);
    let mut used = vec![false; eig.len()];
    let mut vectors = Vec::new();
    let mut degenerate = false;
    for i in 0..eig.len() {
        if used[i] {
            continue;
        }
        let group: Vec<usize> = (i..eig.len())
            .filter(|&j| !used[j] && (eig[j] - eig[i]).norm() <= 1e-7 * scale)
            .collect();
        for &j in &group {
            used[j] = true;
        }
        degenerate |= group.len() > 1;
        let center = group.iter().map(|&j| eig[j]).sum::<Complex64>() / group.len() as f64;
        let mut m = hc.clone();
        for d in 0..n {
            m[(d, d)] -= center;
        }
        let (vecs, gap) = null_space(m, group.len());
        if gap > 1e-6 {
            return Err(Error::NoStabilizingSolution(format!(
                "eigenvalue {center} is defective; no eigenvector basis for its invariant subspace"
            )));
        }
        vectors.extend(vecs);
    }
    Ok(Spectrum {
        vectors,
        degenerate,
    })
}

/// `U = X2 X1^-1` from a basis `[X1; X2]` of an n-dimensional invariant
/// subspace. Returns `None` when `X1` is singular.
fn graph_solution(cols: &[&nalgebra::DVector<Complex64>], n: usize) -> Option<(DMatrix<f64>, f64)> {
    let mut x = CMatrix::zeros(2 * n, n);
    for (j, v) in cols.iter().enumerate() {
        x.set_column(j, v);
    }
    let x1 = x.rows(0, n).into_owned();
    let x2 = x.rows(n, n).into_owned();
    if relative_rank_gap(x1.clone()) < 1e-10 {
        return None;
    }
    let u = x2 * x1.try_inverse()?;
    let imag = u.map(|z| z.im).norm();
    let real = u.map(|z| z.re);
    let rel_imag = imag / real.norm().max(f64::MIN_POSITIVE);
    Some((real, rel_imag))
}

/// Solves the Lyapunov equation `F^T X + X F = -R` by vectorization.
fn lyapunov(f: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = f.nrows();
    let ft = f.transpose();
    let mut big = DMatrix::<f64>::zeros(n * n, n * n);
    // column-major vec: vec(F^T X) = (I kron F^T) vec X, vec(X F) = (F^T kron I) vec X
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for k in 0..n {
                big[(row, j * n + k)] += ft[(i, k)];
                big[(row, k * n + i)] += f[(k, j)];
            }
        }
    }
    let rhs = DMatrix::from_iterator(n * n, 1, r.iter().map(|v| -v));
    let sol = big.lu().solve(&rhs)?;
    Some(DMatrix::from_iterator(n, n, sol.iter().cloned()))
}

fn newton_refine(a: &DMatrix<f64>, s: &DMatrix<f64>, p: &DMatrix<f64>, mut u: DMatrix<f64>) -> DMatrix<f64> {
    let mut best = frob(&care_residual(a, s, p, &u));
    for _ in 0..8 {
        let f = a - s * &u;
        let r = p + &u * s * &u;
        let Some(next) = lyapunov(&f, &r) else { break };
        let next = symmetrize(&next);
        let res = frob(&care_residual(a, s, p, &next));
        if !(res < best) {
            break;
        }
        best = res;
        u = next;
        if best == 0.0 {
            break;
        }
    }
    u
}

fn is_psd(u: &DMatrix<f64>) -> bool {
    let scale = frob(u);
    u.clone()
        .symmetric_eigenvalues()
        .iter()
        .all(|&l| l >= -1e-9 * scale.max(1e-300))
}

/// Solves `0 = P + A^T U + U A - U B Q^-1 B^T U` for the stabilizing
/// solution. `q` is the effective control weight.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<CareSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || p.shape() != (n, n) || q.shape() != (b.ncols(), b.ncols()) {
        return Err(Error::invalid("care", "inconsistent matrix shapes"));
    }
    if a.iter().chain(b.iter()).chain(p.iter()).chain(q.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("care", "non-finite entries"));
    }
    if frob(&(p - p.transpose())) > 1e-12 * frob(p) || !is_psd(&symmetrize(p)) {
        return Err(Error::invalid("p_weight", "must be symmetric positive semidefinite"));
    }
    let q_inv = symmetrize(q)
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularControlWeight)?;
    let s = b * q_inv * b.transpose();
    let tol = 1e-10;

    let a_eig: Vec<Complex64> = a.clone().complex_eigenvalues().iter().cloned().collect();
    let a_scale = frob(a).max(f64::MIN_POSITIVE);
    if frob(p) == 0.0 && a_eig.iter().all(|l| l.re <= tol * a_scale) {
        // no state cost and nothing unstable: doing nothing is optimal
        let u = DMatrix::zeros(n, n);
        return Ok(CareSolution {
            closed_loop: a_eig,
            relative_residual: 0.0,
            u,
            psd_solutions: None,
        });
    }

    if let Some(ev) = pbh_check(a, b, tol) {
        return Err(Error::NotStabilizable {
            a: "A",
            b: "B",
            property: "stabilizable",
            eigenvalue: ev,
        });
    }
    if let Some(ev) = pbh_check(&a.transpose(), p, tol) {
        return Err(Error::NotStabilizable {
            a: "A",
            b: "P",
            property: "detectable",
            eigenvalue: ev,
        });
    }

    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-p));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let h_scale = frob(&h).max(f64::MIN_POSITIVE);

    let all: Vec<Complex64> = h.clone().complex_eigenvalues().iter().cloned().collect();
    if let Some(l) = all.iter().find(|l| l.re.abs() <= 1e-9 * h_scale) {
        return Err(Error::NoStabilizingSolution(format!(
            "Hamiltonian eigenvalue {l} on the imaginary axis"
        )));
    }
    let stable = eigenpairs(&h, Some(1e-9 * h_scale))?;
    if stable.vectors.len() != n {
        return Err(Error::NoStabilizingSolution(format!(
            "{} stable eigenvectors, expected {n}",
            stable.vectors.len()
        )));
    }
    let cols: Vec<_> = stable.vectors.iter().collect();
    let (u0, rel_imag) = graph_solution(&cols, n)
        .ok_or_else(|| Error::NoStabilizingSolution("stable subspace is not a graph".into()))?;
    if rel_imag > 1e-6 {
        return Err(Error::NoStabilizingSolution(format!(
            "complex solution (relative imaginary part {rel_imag:e})"
        )));
    }
    let u = newton_refine(a, &s, p, symmetrize(&u0));
    let relative_residual = relative(&care_residual(a, &s, p, &u), p);
    if !(relative_residual <= RESIDUAL_TOL) {
        return Err(Error::NotConverged {
            residual: relative_residual,
            tolerance: RESIDUAL_TOL,
        });
    }
    let closed_loop: Vec<Complex64> = (a - &s * &u).complex_eigenvalues().iter().cloned().collect();
    if let Some(l) = closed_loop.iter().find(|l| l.re > tol * h_scale) {
        return Err(Error::UnstableClosedLoop(*l));
    }
    let psd_solutions = count_psd_solutions(&h, a, &s, p, n);
    Ok(CareSolution {
        u,
        relative_residual,
        closed_loop,
        psd_solutions,
    })
}

fn count_psd_solutions(h: &DMatrix<f64>, a: &DMatrix<f64>, s: &DMatrix<f64>, p: &DMatrix<f64>, n: usize) -> Option<usize> {
    let eig = eigenpairs(h, None).ok()?;
    if eig.degenerate || eig.vectors.len() != 2 * n {
        return None;
    }
    let mut count = 0;
    for subset in (0..2 * n).combinations(n) {
        let cols: Vec<_> = subset.iter().map(|&i| &eig.vectors[i]).collect();
        let Some((u, rel_imag)) = graph_solution(&cols, n) else {
            continue;
        };
        if rel_imag > 1e-8 {
            continue;
        }
        let u = symmetrize(&u);
        if is_psd(&u) && relative(&care_residual(a, s, p, &u), p) < 1e-6 {
            count += 1;
        }
    }
    Some(count)
}

fn dm(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

fn m2(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::from_column_slice(m.as_slice())
}

/// Cost weights `(P, Q, q)` of the per-trajectory cost
/// `int <x>^T P <x> + Tr(P V) + q^2 u^T Q u dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub p: Matrix2<f64>,
    pub q: Matrix2<f64>,
    pub q_scalar: f64,
}

impl CostWeights {
    pub fn zero() -> Self {
        CostWeights {
            p: Matrix2::zeros(),
            q: Matrix2::zeros(),
            q_scalar: 0.0,
        }
    }

    /// Oscillator energy weights `P = Q = diag(m omega^2, 1/m)`.
    pub fn energy(params: &PhysicalParams, q_scalar: f64) -> Self {
        let w = energy_weight(params);
        CostWeights {
            p: w,
            q: w,
            q_scalar,
        }
    }
}

pub fn energy_weight(params: &PhysicalParams) -> Matrix2<f64> {
    Matrix2::new(params.m * params.omega * params.omega, 0.0, 0.0, 1.0 / params.m)
}

/// Harmonic drift matrix `[[0, 1/m], [-m omega^2, 0]]`.
pub fn harmonic_drift(params: &PhysicalParams) -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0 / params.m, -params.m * params.omega * params.omega, 0.0)
}

/// A solved LQG design for the two-dimensional oscillator.
#[derive(Debug, Clone)]
pub struct ControlDesign {
    pub a: Matrix2<f64>,
    pub b: Matrix2<f64>,
    pub p_weight: Matrix2<f64>,
    pub q_weight: Matrix2<f64>,
    pub q_scalar: f64,
    pub u_care: Matrix2<f64>,
    pub k_gain: Matrix2<f64>,
    pub relative_residual: f64,
    pub closed_loop: [Complex64; 2],
    pub psd_solutions: Option<usize>,
}

impl ControlDesign {
    /// Solves the Riccati equation with effective control weight
    /// `q_scalar^2 * q_weight` and fills in the gain.
    pub fn new(
        a: Matrix2<f64>,
        b: Matrix2<f64>,
        p_weight: Matrix2<f64>,
        q_weight: Matrix2<f64>,
        q_scalar: f64,
    ) -> Result<Self> {
        if !(q_scalar.is_finite() && q_scalar > 0.0) {
            return Err(Error::invalid("q", "must be > 0"));
        }
        let q_eff = q_weight * (q_scalar * q_scalar);
        let sol = solve_care(&dm(&a), &dm(&b), &dm(&p_weight), &dm(&q_eff))?;
        let mut design = ControlDesign {
            a,
            b,
            p_weight,
            q_weight,
            q_scalar,
            u_care: m2(&sol.u),
            k_gain: Matrix2::zeros(),
            relative_residual: sol.relative_residual,
            closed_loop: [Complex64::default(); 2],
            psd_solutions: sol.psd_solutions,
        };
        feedback_gain(&mut design)?;
        Ok(design)
    }

    /// Energy cost with feedback on both position and momentum (`B = I`).
    pub fn harmonic(params: &PhysicalParams, q_scalar: f64) -> Result<Self> {
        let w = energy_weight(params);
        Self::new(harmonic_drift(params), Matrix2::identity(), w, w, q_scalar)
    }

    /// Energy cost with a force-only actuator, `B = diag(0, 1)`.
    pub fn position_only(params: &PhysicalParams, q_scalar: f64) -> Result<Self> {
        let w = energy_weight(params);
        Self::new(harmonic_drift(params), Matrix2::new(0.0, 0.0, 0.0, 1.0), w, w, q_scalar)
    }

    pub fn effective_control_weight(&self) -> Matrix2<f64> {
        self.q_weight * (self.q_scalar * self.q_scalar)
    }

    pub fn cost_weights(&self) -> CostWeights {
        CostWeights {
            p: self.p_weight,
            q: self.q_weight,
            q_scalar: self.q_scalar,
        }
    }

    /// Mean-drift gain `B K` seen by the estimates.
    pub fn drift_gain(&self) -> Matrix2<f64> {
        self.b * self.k_gain
    }
}

/// `K = Q_eff^-1 B^T U`; stores it in the design and checks closed-loop
/// stability.
pub fn feedback_gain(design: &mut ControlDesign) -> Result<Matrix2<f64>> {
    let q_inv = design
        .effective_control_weight()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::SingularControlWeight)?;
    let k = q_inv * design.b.transpose() * design.u_care;
    let cl = design.a - design.b * k;
    let eig = cl.complex_eigenvalues();
    let scale = cl.norm().max(1.0);
    for l in eig.iter() {
        if l.re > 1e-9 * scale {
            return Err(Error::UnstableClosedLoop(*l));
        }
    }
    design.closed_loop = [eig[0], eig[1]];
    design.k_gain = k;
    Ok(k)
}

/// Optimal gain when only the momentum equation can be actuated. The first
/// row of the result is zero by construction.
pub fn position_only_gain(params: &PhysicalParams, q_scalar: f64) -> Result<Matrix2<f64>> {
    let mut k = ControlDesign::position_only(params, q_scalar)?.k_gain;
    k[(0, 0)] = 0.0;
    k[(0, 1)] = 0.0;
    Ok(k)
}

/// Accumulated trajectory cost, split into its three parts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostAccumulator {
    /// `int <x>^T P <x> dt`
    pub j_state: f64,
    /// `int q^2 u^T Q u dt`
    pub j_control: f64,
    /// `int Tr(P V) dt`, the floor set by the conditional width.
    pub j_floor: f64,
}

impl CostAccumulator {
    pub fn total(&self) -> f64 {
        self.j_state + self.j_control + self.j_floor
    }
}

impl std::ops::Add for CostAccumulator {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        CostAccumulator {
            j_state: self.j_state + o.j_state,
            j_control: self.j_control + o.j_control,
            j_floor: self.j_floor + o.j_floor,
        }
    }
}

impl std::ops::AddAssign for CostAccumulator {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Cost accrued over one step of length `dt`.
pub fn cost_increment(state: &GaussianState, u: &Control, weights: &CostWeights, dt: f64) -> CostAccumulator {
    let x: Vector2<f64> = state.means();
    let v = state.covariances().matrix();
    CostAccumulator {
        j_state: x.dot(&(weights.p * x)) * dt,
        j_control: weights.q_scalar * weights.q_scalar * u.dot(&(weights.q * u)) * dt,
        j_floor: (weights.p * v).trace() * dt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Covariances;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_integrator() {
        // 0 = p - U^2 / qw
        for &(p, qw) in &[(1.0, 1.0), (4.0, 0.25), (0.3, 7.0)] {
            let sol = solve_care(&scalar(0.0), &scalar(1.0), &scalar(p), &scalar(qw)).unwrap();
            let u_expected = (p * qw as f64).sqrt();
            assert_relative_eq!(sol.u[(0, 0)], u_expected, max_relative = 1e-12);
            let k = sol.u[(0, 0)] / qw;
            assert_relative_eq!(k, (p / qw).sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_state_cost() {
        let sol = solve_care(&scalar(0.0), &scalar(1.0), &scalar(0.0), &scalar(1.0)).unwrap();
        assert_eq!(sol.u[(0, 0)], 0.0);
        assert_eq!(sol.relative_residual, 0.0);
    }

    #[test]
    fn harmonic_gain_is_scaled_identity() {
        for q in [1e-3, 1e-1, 1.0, 10.0] {
            let p = PhysicalParams::new(1.7, 0.6, 1.0, 1.0, 1.0).unwrap();
            let d = ControlDesign::harmonic(&p, q).unwrap();
            let expect = Matrix2::identity() / q;
            assert!((d.k_gain - expect).norm() <= 1e-8 * expect.norm(), "q={q}: {}", d.k_gain);
            assert!(d.relative_residual <= 1e-9);
            for l in d.closed_loop {
                assert_relative_eq!(l.re, -1.0 / q, max_relative = 1e-8);
                assert_relative_eq!(l.im.abs(), p.omega, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn zero_input_matrix_gives_zero_gain() {
        let a = Matrix2::new(-1.0, 0.3, 0.0, -2.0);
        let w = Matrix2::identity();
        let d = ControlDesign::new(a, Matrix2::zeros(), w, w, 1.0).unwrap();
        assert_eq!(d.k_gain, Matrix2::zeros());
        // Lyapunov solution: A^T U + U A = -I
        let r = w + a.transpose() * d.u_care + d.u_care * a;
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn uncontrollable_unstable_mode_is_rejected() {
        let a = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let b = Matrix2::new(0.0, 0.0, 0.0, 1.0);
        let w = Matrix2::identity();
        match ControlDesign::new(a, b, w, w, 1.0) {
            Err(Error::NotStabilizable { property, .. }) => assert_eq!(property, "stabilizable"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undetectable_unstable_mode_is_rejected() {
        let a = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let p = Matrix2::new(0.0, 0.0, 0.0, 1.0);
        match ControlDesign::new(a, Matrix2::identity(), p, Matrix2::identity(), 1.0) {
            Err(Error::NotStabilizable { property, .. }) => assert_eq!(property, "detectable"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singular_weight_is_rejected() {
        let w = Matrix2::identity();
        let r = ControlDesign::new(Matrix2::zeros(), w, w, Matrix2::new(1.0, 0.0, 0.0, 0.0), 1.0);
        assert!(matches!(r, Err(Error::SingularControlWeight)));
    }

    #[test]
    fn position_only_structure_and_limits() {
        let p = PhysicalParams::nondimensional(1.0, 1.0).unwrap();
        let q = 1e-3;
        let k = position_only_gain(&p, q).unwrap();
        assert_eq!(k[(0, 0)], 0.0);
        assert_eq!(k[(0, 1)], 0.0);
        assert_relative_eq!(k[(1, 0)], p.m * p.omega / q, max_relative = 0.01);
        assert_relative_eq!(k[(1, 1)], 1.0 / q, max_relative = 0.01);
        let far = position_only_gain(&p, 1e6).unwrap();
        assert!(far.norm() < 1e-5);
    }

    #[test]
    fn position_only_gain_grows_as_q_shrinks() {
        let p = PhysicalParams::new(0.7, 1.3, 1.0, 1.0, 1.0).unwrap();
        let mut prev = position_only_gain(&p, 10.0).unwrap();
        for q in [3.0, 1.0, 0.3, 0.1, 0.03, 0.01, 0.001] {
            let k = position_only_gain(&p, q).unwrap();
            assert!(k[(1, 0)].abs() > prev[(1, 0)].abs());
            assert!(k[(1, 1)].abs() > prev[(1, 1)].abs());
            prev = k;
        }
    }

    #[test]
    fn harmonic_design_reports_solution_count() {
        let p = PhysicalParams::nondimensional(1.0, 1.0).unwrap();
        let d = ControlDesign::harmonic(&p, 0.5).unwrap();
        let count = d.psd_solutions.expect("non-degenerate spectrum");
        assert!(count >= 1);
    }

    #[test]
    fn cost_examples() {
        let st = GaussianState::new(1.0, 0.0, Covariances::new(0.5, 0.5, 0.0)).unwrap();
        let w = CostWeights {
            p: Matrix2::identity(),
            q: Matrix2::identity(),
            q_scalar: 1.0,
        };
        let c = cost_increment(&st, &Control::zeros(), &w, 0.1);
        assert_relative_eq!(c.j_state, 0.1, epsilon = 1e-15);
        assert_relative_eq!(c.j_floor, 0.1, epsilon = 1e-15);
        assert_eq!(c.j_control, 0.0);

        let origin = GaussianState::new(0.0, 0.0, Covariances::new(0.5, 0.5, 0.0)).unwrap();
        let c = cost_increment(&origin, &Control::zeros(), &w, 0.1);
        assert_eq!(c.j_state, 0.0);
        assert!(c.j_floor > 0.0);

        let c = cost_increment(&st, &Control::new(1.0, 2.0), &CostWeights::zero(), 0.1);
        assert_eq!(c, CostAccumulator::default());

        let w2 = CostWeights { q_scalar: 3.0, ..w };
        let c = cost_increment(&st, &Control::new(1.0, 0.0), &w2, 0.1);
        assert_relative_eq!(c.j_control, 0.9, epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_solver() {
        let f = DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -3.0]);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        let x = lyapunov(&f, &r).unwrap();
        let res = f.transpose() * &x + &x * &f + &r;
        assert!(res.norm() < 1e-13);
    }
}
