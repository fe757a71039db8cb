//! Dense complex linear algebra for small Hermitian systems.
//!
//! The covariance matrices here are (L+T) x (L+T) with L+T around 10-20, so a
//! plain row-major `Vec<Complex<f64>>` beats anything fancier. The solvers
//! lean on three things: Cholesky factorization (log-det and PD checks),
//! explicit inverses maintained by Sherman-Morrison rank-1 updates, and
//! quadratic forms evaluated on the support window of a delay-shifted
//! signature.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

pub type C64 = num_complex::Complex<f64>;

/// Errors from factorizations and rank-1 updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    /// A Cholesky pivot was not strictly positive.
    NotPositiveDefinite { pivot: usize },
    /// A Sherman-Morrison denominator fell below tolerance.
    SingularUpdate,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix not positive definite (pivot {pivot})")
            }
            LinalgError::SingularUpdate => write!(f, "rank-1 update would make matrix singular"),
        }
    }
}

/// Square row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    /// Real multiple of the identity.
    pub fn scaled_identity(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(value, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Max absolute entry difference to another matrix.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.n, other.n);
        let mut worst = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            let d = math::hypot(a.re - b.re, a.im - b.im);
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Max |A - Aᴴ| entry; zero for an exactly Hermitian matrix.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                let a = self[(i, j)];
                let b = self[(j, i)].conj();
                let d = math::hypot(a.re - b.re, a.im - b.im);
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Force exact Hermitian symmetry by averaging mirrored entries.
    pub fn hermitianize(&mut self) {
        for i in 0..self.n {
            self[(i, i)] = C64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..self.n {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)].conj());
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }

    /// A += c * s sᴴ where `s` is supported on rows/cols [off, off+len).
    pub fn add_scaled_outer_window(&mut self, s: &[C64], off: usize, c: f64) {
        debug_assert!(off + s.len() <= self.n);
        for (i, si) in s.iter().enumerate() {
            let row = (off + i) * self.n + off;
            let left = c * si;
            for (j, sj) in s.iter().enumerate() {
                self.data[row + j] += left * sj.conj();
            }
        }
    }

    /// w = A v for a window vector `v` on [off, off+len); w has full length.
    pub fn matvec_window(&self, v: &[C64], off: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n + off..i * self.n + off + v.len()];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    /// Real part of vᴴ A v for `v` supported on [off, off+len); exact for
    /// Hermitian A.
    pub fn quad_form_window(&self, v: &[C64], off: usize) -> f64 {
        let mut acc = 0.0f64;
        for (i, vi) in v.iter().enumerate() {
            let row = &self.data[(off + i) * self.n + off..(off + i) * self.n + off + v.len()];
            let mut inner = C64::new(0.0, 0.0);
            for (a, vj) in row.iter().zip(v.iter()) {
                inner += a * vj;
            }
            let term = vi.conj() * inner;
            acc += term.re;
        }
        acc
    }

    /// Real part of wᴴ A w for a full-length vector.
    pub fn quad_form(&self, w: &[C64]) -> f64 {
        debug_assert_eq!(w.len(), self.n);
        self.quad_form_window(w, 0)
    }

    /// Plain dense product A B.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Real part of tr(A B).
    pub fn trace_product_re(&self, other: &CMat) -> f64 {
        assert_eq!(self.n, other.n);
        let mut acc = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let term = self[(i, j)] * other[(j, i)];
                acc += term.re;
            }
        }
        acc
    }

    /// Hermitian product scale * Y Yᴴ where Y is given as `rows` x `cols`
    /// row-major data.
    pub fn gram_rows(rows: usize, cols: usize, y: &[C64], scale: f64) -> CMat {
        assert_eq!(y.len(), rows * cols);
        let mut out = CMat::zeros(rows);
        for i in 0..rows {
            let yi = &y[i * cols..(i + 1) * cols];
            for j in i..rows {
                let yj = &y[j * cols..(j + 1) * cols];
                let mut acc = C64::new(0.0, 0.0);
                for (a, b) in yi.iter().zip(yj.iter()) {
                    acc += a * b.conj();
                }
                acc *= scale;
                if i == j {
                    out[(i, i)] = C64::new(acc.re, 0.0);
                } else {
                    out[(i, j)] = acc;
                    out[(j, i)] = acc.conj();
                }
            }
        }
        out
    }

    /// Lower-triangular Cholesky factor of a Hermitian PD matrix.
    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        let n = self.n;
        let mut l = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut diag = self[(j, j)].re;
            for k in 0..j {
                let v = l[j * n + k];
                diag -= v.norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { pivot: j });
            }
            let djj = math::sqrt(diag);
            l[j * n + j] = C64::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut v = self[(i, j)];
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = v / djj;
            }
        }
        Ok(Cholesky { n, l })
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular Cholesky factor.
pub struct Cholesky {
    n: usize,
    l: Vec<C64>,
}

impl Cholesky {
    /// log |A| = 2 * sum of log diagonal factor entries.
    pub fn log_det(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n {
            acc += math::ln(self.l[j * self.n + j].re);
        }
        2.0 * acc
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        // forward: L y = b
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.l[i * n + k] * b[k];
            }
            b[i] = v / self.l[i * n + i].re;
        }
        // backward: Lᴴ x = y
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i].conj() * b[k];
            }
            b[i] = v / self.l[i * n + i].re;
        }
    }

    /// Explicit inverse, hermitianized.
    pub fn inverse(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            col.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.solve_in_place(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out.hermitianize();
        out
    }

    /// Real part of tr(A⁻¹ B).
    pub fn trace_solve_re(&self, b: &CMat) -> f64 {
        let n = self.n;
        assert_eq!(b.dim(), n);
        let mut acc = 0.0;
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            acc += col[j].re;
        }
        acc
    }
}

/// In-place Sherman-Morrison update of `inv` = A⁻¹ to (A + c s sᴴ)⁻¹ for a
/// real scalar `c` and a window vector `s` on [off, off+len).
///
/// Fails when the denominator 1 + c sᴴ A⁻¹ s drops below `tol`, which means
/// the updated matrix would not be positive definite.
pub fn sherman_morrison_update(
    inv: &mut CMat,
    s: &[C64],
    off: usize,
    c: f64,
    tol: f64,
) -> Result<(), LinalgError> {
    if c == 0.0 {
        return Ok(());
    }
    let w = inv.matvec_window(s, off);
    let mut sh_w = 0.0f64;
    for (i, si) in s.iter().enumerate() {
        sh_w += (si.conj() * w[off + i]).re;
    }
    let denom = 1.0 + c * sh_w;
    if denom <= tol {
        return Err(LinalgError::SingularUpdate);
    }
    let factor = c / denom;
    let n = inv.dim();
    for i in 0..n {
        let left = factor * w[i];
        for j in 0..n {
            let delta = left * w[j].conj();
            inv[(i, j)] -= delta;
        }
    }
    Ok(())
}

/// Compensated (Kahan) accumulator for order-stable reductions.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng as StdRng;

    fn random_hpd(n: usize, rng: &mut StdRng) -> CMat {
        // B Bᴴ + I is Hermitian PD
        let mut b = vec![C64::new(0.0, 0.0); n * n];
        for v in b.iter_mut() {
            *v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let mut m = CMat::gram_rows(n, n, &b, 1.0);
        for i in 0..n {
            m[(i, i)] += C64::new(1.0, 0.0);
        }
        m
    }

    fn to_na(m: &CMat) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(m.dim(), m.dim(), |i, j| m[(i, j)])
    }

    #[test]
    fn cholesky_matches_nalgebra_logdet_and_solve() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_hpd(8, &mut rng);
            let chol = a.cholesky().unwrap();
            let na = to_na(&a);
            let na_chol = na.clone().cholesky().unwrap();
            let expected: f64 = na_chol
                .l()
                .diagonal()
                .iter()
                .map(|v| 2.0 * v.re.ln())
                .sum();
            assert!((chol.log_det() - expected).abs() < 1e-9);

            let mut b: Vec<C64> = (0..8)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let rhs = nalgebra::DVector::from_column_slice(&b);
            chol.solve_in_place(&mut b);
            let x = na_chol.solve(&rhs);
            for i in 0..8 {
                assert!((b[i] - x[i]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn inverse_is_hermitian_and_consistent() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_hpd(6, &mut rng);
        let inv = a.cholesky().unwrap().inverse();
        assert_eq!(inv.hermitian_defect(), 0.0);
        // A * inv should be close to identity
        let na = to_na(&a) * to_na(&inv);
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((na[(i, j)].re - expect).abs() < 1e-10);
                assert!(na[(i, j)].im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sherman_morrison_identity_case() {
        // A = I, s = e1, c = 1 -> inverse diag(1/2, 1, ..., 1)
        let mut inv = CMat::scaled_identity(4, 1.0);
        let s = [C64::new(1.0, 0.0)];
        sherman_morrison_update(&mut inv, &s, 0, 1.0, 1e-12).unwrap();
        assert!((inv[(0, 0)].re - 0.5).abs() < 1e-15);
        for i in 1..4 {
            assert!((inv[(i, i)].re - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sherman_morrison_matches_dense_reinversion() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..30 {
            let a = random_hpd(7, &mut rng);
            let mut inv = a.cholesky().unwrap().inverse();
            let len = rng.random_range(1..=7usize);
            let off = rng.random_range(0..=(7 - len));
            let s: Vec<C64> = (0..len)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let c = rng.random_range(-0.2..2.0);

            let mut updated = a.clone();
            updated.add_scaled_outer_window(&s, off, c);
            let Ok(chol) = updated.cholesky() else {
                continue;
            };
            if sherman_morrison_update(&mut inv, &s, off, c, 1e-12).is_err() {
                continue;
            }
            let dense = chol.inverse();
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for (x, y) in inv.data().iter().zip(dense.data().iter()) {
                num += (x - y).norm_sqr();
                den += y.norm_sqr();
            }
            assert!((num / den).sqrt() < 1e-8);
        }
    }

    #[test]
    fn sherman_morrison_c_zero_is_identity_op() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = random_hpd(5, &mut rng);
        let mut inv = a.cholesky().unwrap().inverse();
        let before = inv.clone();
        let s = [C64::new(0.3, -0.4), C64::new(0.0, 1.0)];
        sherman_morrison_update(&mut inv, &s, 1, 0.0, 1e-12).unwrap();
        assert_eq!(inv, before);
    }

    #[test]
    fn sherman_morrison_rejects_singular_downdate() {
        // A = I, s = e1, c = -1 makes A + c s sᴴ singular.
        let mut inv = CMat::scaled_identity(3, 1.0);
        let s = [C64::new(1.0, 0.0)];
        let err = sherman_morrison_update(&mut inv, &s, 0, -1.0, 1e-12).unwrap_err();
        assert_eq!(err, LinalgError::SingularUpdate);
    }

    #[test]
    fn quad_form_window_matches_dense() {
        let mut rng = StdRng::seed_from_u64(23);
        let a = random_hpd(9, &mut rng);
        let s: Vec<C64> = (0..4)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let off = 3;
        let mut full = vec![C64::new(0.0, 0.0); 9];
        full[off..off + 4].copy_from_slice(&s);
        let direct = a.quad_form(&full);
        let windowed = a.quad_form_window(&s, off);
        assert!((direct - windowed).abs() < 1e-12);
    }
}
