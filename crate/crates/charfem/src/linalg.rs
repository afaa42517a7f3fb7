//! Small dense and banded direct solvers.
//!
//! Everything here is desk-scale: dense factorizations for `p x p` blocks
//! (`p <= 8`) and banded factorizations for the slice matrices (bandwidth
//! `p`) and the coupled collocation system (bandwidth `~p^2`).

use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a small dense row-major matrix.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    det: f64,
}

impl DenseLu {
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut piv = vec![0usize; n];
        let mut det = 1.0;
        for j in 0..n {
            let mut jp = j;
            let mut amax = lu[j * n + j].abs();
            for i in j + 1..n {
                let v = lu[i * n + j].abs();
                if v > amax {
                    amax = v;
                    jp = i;
                }
            }
            piv[j] = jp;
            if amax == 0.0 {
                return Err(Error::SingularMatrix(format!(
                    "dense LU: zero pivot at column {j}"
                )));
            }
            if jp != j {
                for c in 0..n {
                    lu.swap(j * n + c, jp * n + c);
                }
                det = -det;
            }
            det *= lu[j * n + j];
            let pivot = lu[j * n + j];
            for i in j + 1..n {
                let m = lu[i * n + j] / pivot;
                lu[i * n + j] = m;
                for c in j + 1..n {
                    lu[i * n + c] -= m * lu[j * n + c];
                }
            }
        }
        Ok(DenseLu { n, lu, piv, det })
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        // the factorization swaps whole rows, so permute first, then solve
        for j in 0..n {
            x.swap(j, self.piv[j]);
        }
        for j in 0..n {
            for i in j + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[j * n + j];
            for i in 0..j {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        x
    }

    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let col = self.solve(&e);
            for r in 0..n {
                inv[r * n + c] = col[r];
            }
        }
        inv
    }
}

/// Infinity norm of a small dense row-major matrix.
pub fn dense_norm_inf(n: usize, a: &[f64]) -> f64 {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General banded matrix, `kl` subdiagonals and `ku` superdiagonals,
/// LAPACK-style column-major band storage.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kl(&self) -> usize {
        self.kl
    }

    pub fn ku(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.in_band(i, j));
        j * (self.kl + self.ku + 1) + (self.ku + i - j)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.data[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    pub fn norm_inf(&self) -> f64 {
        let mut row_sums = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                row_sums[i] += self.data[self.idx(i, j)].abs();
            }
        }
        row_sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute asymmetry `|A - A^T|`, for symmetry diagnostics.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// LU factorization with partial pivoting (banded `getrf`).
    pub fn factor(&self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; n * ldab];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                ab[j * ldab + (kl + ku + i - j)] = self.data[self.idx(i, j)];
            }
        }
        let at = |i: usize, j: usize| j * ldab + (kl + ku + i - j);
        let mut piv = vec![0usize; n];
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = j;
            let mut amax = ab[at(j, j)].abs();
            for i in j + 1..=j + km {
                let v = ab[at(i, j)].abs();
                if v > amax {
                    amax = v;
                    jp = i;
                }
            }
            piv[j] = jp;
            if amax == 0.0 {
                return Err(Error::SingularMatrix(format!(
                    "band LU: zero pivot at column {j}"
                )));
            }
            let cmax = (j + kl + ku).min(n - 1);
            if jp != j {
                for c in j..=cmax {
                    ab.swap(at(j, c), at(jp, c));
                }
            }
            let pivot = ab[at(j, j)];
            for i in j + 1..=j + km {
                ab[at(i, j)] /= pivot;
            }
            for c in j + 1..=cmax {
                let ajc = ab[at(j, c)];
                if ajc != 0.0 {
                    for i in j + 1..=j + km {
                        ab[at(i, c)] -= ab[at(i, j)] * ajc;
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            ku,
            ab,
            piv,
        })
    }
}

/// Factored form produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let at = |i: usize, j: usize| j * ldab + (kl + ku + i - j);
        let mut x = b.to_vec();
        for j in 0..n {
            x.swap(j, self.piv[j]);
            let hi = (j + kl).min(n - 1);
            for i in j + 1..=hi {
                x[i] -= self.ab[at(i, j)] * x[j];
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[at(j, j)];
            let lo = j.saturating_sub(kl + ku);
            for i in lo..j {
                x[i] -= self.ab[at(i, j)] * x[j];
            }
        }
        x
    }

    /// Crude conditioning surrogate: ratio of extreme `|U_jj|` pivots.
    pub fn pivot_ratio(&self) -> f64 {
        let (kl, ku) = (self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for j in 0..self.n {
            let d = self.ab[j * ldab + kl + ku].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

/// Cholesky factorization of a symmetric positive definite band matrix.
/// Uses only the lower band of `a` (which must have `kl == ku`).
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    kb: usize,
    low: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        assert_eq!(a.kl, a.ku, "cholesky needs a symmetric band layout");
        let n = a.n;
        let kb = a.kl;
        let mut low = vec![0.0; n * (kb + 1)];
        let at = |i: usize, j: usize| j * (kb + 1) + (i - j);
        for j in 0..n {
            let mut s = a.get(j, j);
            for k in j.saturating_sub(kb)..j {
                s -= low[at(j, k)] * low[at(j, k)];
            }
            if s <= 0.0 {
                return Err(Error::SingularMatrix(format!(
                    "band Cholesky: nonpositive pivot {s:e} at column {j}"
                )));
            }
            let d = s.sqrt();
            low[at(j, j)] = d;
            let hi = (j + kb).min(n - 1);
            for i in j + 1..=hi {
                let mut s = a.get(i, j);
                for k in i.saturating_sub(kb)..j {
                    s -= low[at(i, k)] * low[at(j, k)];
                }
                low[at(i, j)] = s / d;
            }
        }
        Ok(BandCholesky { n, kb, low })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let (n, kb) = (self.n, self.kb);
        let at = |i: usize, j: usize| j * (kb + 1) + (i - j);
        let mut x = b.to_vec();
        for j in 0..n {
            x[j] /= self.low[at(j, j)];
            let hi = (j + kb).min(n - 1);
            for i in j + 1..=hi {
                x[i] -= self.low[at(i, j)] * x[j];
            }
        }
        for j in (0..n).rev() {
            let hi = (j + kb).min(n - 1);
            for i in j + 1..=hi {
                x[j] -= self.low[at(i, j)] * x[i];
            }
            x[j] /= self.low[at(j, j)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band_to_dense(a: &BandMatrix) -> Vec<f64> {
        let n = a.n();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = a.get(i, j);
            }
        }
        d
    }

    #[test]
    fn dense_lu_solves_and_inverts() {
        let a = [4.0, 1.0, 2.0, 1.0, 5.0, 1.0, 2.0, 1.0, 6.0];
        let lu = DenseLu::factor(3, &a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]);
        // residual check
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert_abs_diff_eq!(r, (i + 1) as f64, epsilon = 1e-13);
        }
        let inv = lu.inverse();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v, expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn dense_lu_rejects_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(DenseLu::factor(2, &a).is_err());
    }

    #[test]
    fn band_lu_matches_dense_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..80 {
            let n = rng.gen_range(3..40);
            let kl = rng.gen_range(0..4.min(n));
            let ku = rng.gen_range(0..4.min(n));
            let mut a = BandMatrix::zeros(n, kl, ku);
            for j in 0..n {
                for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                    a.set(i, j, rng.gen_range(-1.0..1.0));
                }
                // half the trials are diagonally weak so pivoting really runs
                if trial % 2 == 0 {
                    let d = a.get(j, j);
                    a.set(j, j, d + 4.0);
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu = match a.factor() {
                Ok(lu) => lu,
                Err(_) => continue, // genuinely singular draw
            };
            let x = lu.solve(&b);
            let dense = band_to_dense(&a);
            let xd = DenseLu::factor(n, &dense).unwrap().solve(&b);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..n {
                assert_abs_diff_eq!(x[i], xd[i], epsilon = 1e-8 * scale);
            }
            let r = a.mul_vec(&x);
            for i in 0..n {
                assert_abs_diff_eq!(r[i], b[i], epsilon = 1e-8 * scale);
            }
        }
    }

    #[test]
    fn dense_lu_handles_pivoting() {
        // zero on the leading diagonal forces row interchanges
        let a = [0.0, 2.0, 1.0, 1.0, 0.0, 3.0, 2.0, 1.0, 0.0];
        let lu = DenseLu::factor(3, &a).unwrap();
        let x = lu.solve(&[5.0, 4.0, 3.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert_abs_diff_eq!(r, [5.0, 4.0, 3.0][i], epsilon = 1e-12);
        }
    }

    #[test]
    fn band_cholesky_solves_spd_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.gen_range(3..30);
            let kb = rng.gen_range(1..3.min(n));
            // A = L L^T with banded lower L, positive diagonal
            let mut l = BandMatrix::zeros(n, kb, 0);
            for j in 0..n {
                l.set(j, j, rng.gen_range(0.5..2.0));
                for i in j + 1..=(j + kb).min(n - 1) {
                    l.set(i, j, rng.gen_range(-0.5..0.5));
                }
            }
            let mut a = BandMatrix::zeros(n, kb, kb);
            for i in 0..n {
                for j in i.saturating_sub(kb)..=(i + kb).min(n - 1) {
                    let mut s = 0.0;
                    for k in 0..n {
                        s += l.get(i, k) * l.get(j, k);
                    }
                    a.set(i, j, s);
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = BandCholesky::factor(&a).unwrap().solve(&b);
            let r = a.mul_vec(&x);
            for i in 0..n {
                assert_abs_diff_eq!(r[i], b[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let mut a = BandMatrix::zeros(2, 1, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, -1.0);
        assert!(BandCholesky::factor(&a).is_err());
    }

    #[test]
    fn band_lu_rejects_singular() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.set(0, 0, 1.0);
        a.set(2, 2, 1.0);
        // middle row entirely zero
        assert!(a.factor().is_err());
    }
}
