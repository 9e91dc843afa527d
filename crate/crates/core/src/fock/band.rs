use super::CMatrix;

/// One diagonal `A[i, i + offset]`, real or purely imaginary. `v` holds
/// each coefficient twice so that it lines up with the interleaved real and
/// imaginary parts of a column; for imaginary diagonals the pair is
/// `(-v, v)`.
#[derive(Debug, Clone)]
struct Diag {
    offset: isize,
    imag: bool,
    v: Vec<f64>,
}

/// Banded complex matrix stored by diagonals, each split into its real and
/// imaginary part so that all products are real times complex.
#[derive(Debug, Clone)]
pub struct Band {
    dim: usize,
    diags: Vec<Diag>,
}

pub(crate) fn flat(m: &CMatrix) -> &[f64] {
    bytemuck::cast_slice(m.as_slice())
}

pub(crate) fn flat_mut(m: &mut CMatrix) -> &mut [f64] {
    bytemuck::cast_slice_mut(m.as_mut_slice())
}

/// `o += v * c` on interleaved parts; for imaginary coefficients the parts
/// of `c` are swapped.
#[inline(always)]
fn acc(o: &mut [f64], v: &[f64], c: &[f64], imag: bool) {
    if imag {
        for ((o, v), c) in o.chunks_exact_mut(2).zip(v.chunks_exact(2)).zip(c.chunks_exact(2)) {
            o[0] += v[0] * c[1];
            o[1] += v[1] * c[0];
        }
    } else {
        for ((o, v), c) in o.iter_mut().zip(v).zip(c) {
            *o += v * c;
        }
    }
}

#[inline(always)]
fn acc_scalar(o: &mut [f64], a: f64, c: &[f64], imag: bool) {
    if imag {
        for (o, c) in o.chunks_exact_mut(2).zip(c.chunks_exact(2)) {
            o[0] -= a * c[1];
            o[1] += a * c[0];
        }
    } else {
        for (o, c) in o.iter_mut().zip(c) {
            *o += a * c;
        }
    }
}

impl Band {
    /// Keeps the real and imaginary parts of the diagonals of `m` carrying
    /// any entry above `1e-14` of the largest magnitude; smaller entries are
    /// treated as rounding noise.
    pub fn from_dense(m: &CMatrix) -> Self {
        let n = m.nrows();
        let max = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = 1e-14 * max;
        let mut diags = Vec::new();
        for d in -(n as isize - 1)..(n as isize) {
            for imag in [false, true] {
                let mut v = vec![0.0; 2 * n];
                let mut any = false;
                for (i, slot) in v.chunks_exact_mut(2).enumerate() {
                    let j = i as isize + d;
                    if j < 0 || j >= n as isize {
                        continue;
                    }
                    let z = m[(i, j as usize)];
                    let x = if imag { z.im } else { z.re };
                    if x.abs() > cut {
                        slot[0] = if imag { -x } else { x };
                        slot[1] = x;
                        any = true;
                    }
                }
                if any {
                    diags.push(Diag { offset: d, imag, v });
                }
            }
        }
        Band { dim: n, diags }
    }

    /// `o += A c` for one interleaved column `c`, restricted to the rows
    /// covered by `o`.
    #[inline]
    pub fn left_col(&self, c: &[f64], o: &mut [f64]) {
        let n = 2 * self.dim;
        let m = o.len();
        for Diag { offset, imag, v } in &self.diags {
            let s = 2 * offset.unsigned_abs();
            if *offset >= 0 {
                let len = m.min(n - s);
                acc(&mut o[..len], &v[..len], &c[s..s + len], *imag);
            } else if m > s {
                acc(&mut o[s..m], &v[s..m], &c[..m - s], *imag);
            }
        }
    }

    /// `o += (X A)[:, j]` for the interleaved column-major `x`, again only
    /// over the rows covered by `o`.
    #[inline]
    pub fn right_col(&self, x: &[f64], j: usize, o: &mut [f64]) {
        let n = self.dim;
        for Diag { offset, imag, v } in &self.diags {
            let r = j as isize - offset;
            if r < 0 || r >= n as isize {
                continue;
            }
            let r = r as usize;
            acc_scalar(o, v[2 * r + 1], &x[2 * r * n..2 * (r + 1) * n], *imag);
        }
    }

    /// `o += (X A^dag)[:, j]`.
    #[inline]
    pub fn right_adjoint_col(&self, x: &[f64], j: usize, o: &mut [f64]) {
        let n = self.dim;
        for Diag { offset, imag, v } in &self.diags {
            let r = j as isize + offset;
            if r < 0 || r >= n as isize {
                continue;
            }
            let r = r as usize;
            let a = if *imag { -v[2 * j + 1] } else { v[2 * j + 1] };
            acc_scalar(o, a, &x[2 * r * n..2 * (r + 1) * n], *imag);
        }
    }

    #[cfg(test)]
    /// `out = A m`.
    pub fn left(&self, m: &CMatrix, out: &mut CMatrix) {
        let n = 2 * self.dim;
        let dst = flat_mut(out);
        dst.fill(0.0);
        for (col, o) in flat(m).chunks_exact(n).zip(dst.chunks_exact_mut(n)) {
            self.left_col(col, o);
        }
    }

    #[cfg(test)]
    /// `out = m A`.
    pub fn right(&self, m: &CMatrix, out: &mut CMatrix) {
        let src = flat(m);
        let dst = flat_mut(out);
        dst.fill(0.0);
        for (j, o) in dst.chunks_exact_mut(2 * self.dim).enumerate() {
            self.right_col(src, j, o);
        }
    }

    #[cfg(test)]
    /// `out = m A^dag`.
    pub fn right_adjoint(&self, m: &CMatrix, out: &mut CMatrix) {
        let src = flat(m);
        let dst = flat_mut(out);
        dst.fill(0.0);
        for (j, o) in dst.chunks_exact_mut(2 * self.dim).enumerate() {
            self.right_adjoint_col(src, j, o);
        }
    }

    pub fn bandwidth(&self) -> usize {
        self.diags.iter().map(|d| d.offset.unsigned_abs()).max().unwrap_or(0)
    }
}
