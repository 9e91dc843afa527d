//! Independent reference computations shared by the integration tests.
//! Nothing here calls the library's solvers.

#![allow(dead_code)]

use nalgebra::Matrix2;
use num_complex::Complex64;

type C = Complex64;

/// Solves the real system `m x = rhs` by Gaussian elimination with partial
/// pivoting.
pub fn solve_dense<const N: usize>(mut m: [[f64; N]; N], mut rhs: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            for k in col..N {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

/// Coefficients `c[0..=4]` of `det(lambda I - h) = sum c_i lambda^i` by the
/// Faddeev-LeVerrier recursion.
fn char_poly(h: &[[f64; 4]; 4]) -> [f64; 5] {
    let mut c = [0.0; 5];
    c[4] = 1.0;
    let mut m = [[0.0; 4]; 4];
    for k in 1..=4 {
        // m <- h m + c[5-k] I
        let mut hm = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                hm[i][j] = (0..4).map(|l| h[i][l] * m[l][j]).sum();
            }
            hm[i][i] += c[5 - k];
        }
        m = hm;
        let mut tr = 0.0;
        for i in 0..4 {
            tr += (0..4).map(|l| h[i][l] * m[l][i]).sum::<f64>();
        }
        c[4 - k] = -tr / k as f64;
    }
    c
}

fn poly_eval(c: &[f64; 5], z: C) -> (C, C) {
    let mut p = C::new(c[4], 0.0);
    let mut dp = C::new(0.0, 0.0);
    for i in (0..4).rev() {
        dp = dp * z + p;
        p = p * z + c[i];
    }
    (p, dp)
}

/// Roots of the monic quartic by Durand-Kerner iteration, polished with
/// Newton steps.
fn quartic_roots(c: &[f64; 5]) -> [C; 4] {
    let bound = 1.0 + c[..4].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = C::new(0.4, 0.9);
    let mut z: [C; 4] = std::array::from_fn(|i| seed.powu(i as u32 + 1) * bound);
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..4 {
            let (p, _) = poly_eval(c, z[i]);
            let mut den = C::new(1.0, 0.0);
            for j in 0..4 {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            let step = p / den;
            z[i] -= step;
            delta = delta.max(step.norm() / z[i].norm().max(1.0));
        }
        if delta < 1e-16 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly_eval(c, *r);
            if dp.norm() > 0.0 {
                *r -= p / dp;
            }
        }
    }
    z
}

/// A null vector of the nearly singular complex matrix `m` by Gaussian
/// elimination with complete pivoting.
fn null_vector(mut m: [[C; 4]; 4]) -> [C; 4] {
    let mut perm = [0, 1, 2, 3];
    for k in 0..3 {
        let mut best = (k, k);
        for i in k..4 {
            for j in k..4 {
                if m[i][j].norm() > m[best.0][best.1].norm() {
                    best = (i, j);
                }
            }
        }
        m.swap(k, best.0);
        for row in m.iter_mut() {
            row.swap(k, best.1);
        }
        perm.swap(k, best.1);
        for i in k + 1..4 {
            let f = m[i][k] / m[k][k];
            for j in k..4 {
                let v = m[k][j];
                m[i][j] -= f * v;
            }
        }
    }
    // the last pivot is the numerically zero one; set its unknown to 1
    let mut y = [C::new(0.0, 0.0); 4];
    y[3] = C::new(1.0, 0.0);
    for k in (0..3).rev() {
        let s: C = (k + 1..4).map(|j| m[k][j] * y[j]).sum();
        y[k] = -s / m[k][k];
    }
    let mut v = [C::new(0.0, 0.0); 4];
    for (k, &p) in perm.iter().enumerate() {
        v[p] = y[k];
    }
    v
}

/// Stabilizing solution of `0 = P + A^T U + U A - U B Q^-1 B^T U` from the
/// stable eigenvectors of the Hamiltonian matrix, for 2x2 systems.
pub fn care_oracle(a: Matrix2<f64>, b: Matrix2<f64>, p: Matrix2<f64>, q: Matrix2<f64>) -> Option<Matrix2<f64>> {
    let s = b * q.try_inverse()? * b.transpose();
    let mut h = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = a[(i, j)];
            h[i][j + 2] = -s[(i, j)];
            h[i + 2][j] = -p[(i, j)];
            h[i + 2][j + 2] = -a[(j, i)];
        }
    }
    let roots = quartic_roots(&char_poly(&h));
    let stable: Vec<C> = roots.iter().cloned().filter(|l| l.re < 0.0).collect();
    if stable.len() != 2 {
        return None;
    }
    let vecs: Vec<[C; 4]> = stable
        .iter()
        .map(|l| {
            let mut m = [[C::new(0.0, 0.0); 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = C::new(h[i][j], 0.0) - if i == j { *l } else { C::new(0.0, 0.0) };
                }
            }
            null_vector(m)
        })
        .collect();
    // U = X2 X1^-1 with X1, X2 the top and bottom halves of [v1 v2]
    let (x11, x12, x21, x22) = (vecs[0][0], vecs[1][0], vecs[0][1], vecs[1][1]);
    let (y11, y12, y21, y22) = (vecs[0][2], vecs[1][2], vecs[0][3], vecs[1][3]);
    let det = x11 * x22 - x12 * x21;
    if det.norm() < 1e-300 {
        return None;
    }
    let (i11, i12, i21, i22) = (x22 / det, -x12 / det, -x21 / det, x11 / det);
    let u = [
        [y11 * i11 + y12 * i21, y11 * i12 + y12 * i22],
        [y21 * i11 + y22 * i21, y21 * i12 + y22 * i22],
    ];
    let scale = u.iter().flatten().fold(0.0f64, |m, z| m.max(z.norm()));
    if u.iter().flatten().any(|z| z.im.abs() > 1e-6 * scale.max(1e-300)) {
        return None;
    }
    Some(Matrix2::new(u[0][0].re, u[0][1].re, u[1][0].re, u[1][1].re))
}

/// Stationary covariance `(Sxx, Spp, Sxp)` of the linear SDE
/// `dm = F m dt + g dW` from `F S + S F^T + g g^T = 0`.
pub fn stationary_covariance(f: Matrix2<f64>, g: [f64; 2]) -> Option<[f64; 3]> {
    let (a, b, c, d) = (f[(0, 0)], f[(0, 1)], f[(1, 0)], f[(1, 1)]);
    // unknowns (Sxx, Spp, Sxp); equations for entries xx, pp, xp
    let m = [
        [2.0 * a, 0.0, 2.0 * b],
        [0.0, 2.0 * d, 2.0 * c],
        [c, b, a + d],
    ];
    solve_dense(m, [-g[0] * g[0], -g[1] * g[1], -g[0] * g[1]])
}
