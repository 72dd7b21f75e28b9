//! Small dense complex matrices and a one-sided Jacobi SVD.
//!
//! Everything the simulator factors is tiny (equivalent channels of a few
//! dozen users, per-user channel matrices with a handful of receive
//! antennas), so a plain Jacobi iteration is accurate and fast and avoids
//! an external BLAS/LAPACK dependency. One-sided Jacobi computes small
//! singular values with high relative accuracy, which the precoder
//! condition checks rely on.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows_in: &[Vec<C64>]) -> Self {
        let rows = rows_in.len();
        let cols = rows_in.first().map_or(0, Vec::len);
        assert!(rows_in.iter().all(|r| r.len() == cols), "ragged rows");
        let data = rows_in.iter().flatten().copied().collect();
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> C64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |r, c| self.at(c, r).conj())
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == C64::ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    *out.at_mut(r, c) += a * rhs.at(k, c);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum::<C64>())
            .collect()
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }
}

/// Thin singular value decomposition `a = u * diag(sigma) * v^H` with the
/// singular values sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

/// One-sided Jacobi SVD. Wide inputs are handled by factoring the
/// conjugate transpose and swapping the factors.
pub fn svd(a: &CMat) -> Svd {
    if a.rows() >= a.cols() {
        jacobi_svd_tall(a)
    } else {
        let s = jacobi_svd_tall(&a.hermitian());
        Svd {
            u: s.v,
            sigma: s.sigma,
            v: s.u,
        }
    }
}

fn jacobi_svd_tall(a: &CMat) -> Svd {
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone();
    let mut v = CMat::identity(n);

    // Orthogonalize column pairs until every normalized coupling is at
    // noise level. Convergence is quadratic; 64 sweeps is far beyond what
    // the matrix sizes here ever need.
    for _sweep in 0..64 {
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = C64::ZERO;
                for r in 0..m {
                    let wp = w.at(r, p);
                    let wq = w.at(r, q);
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                let denom = (app * aqq).sqrt();
                if denom == 0.0 {
                    continue;
                }
                let coupling = apq.norm() / denom;
                worst = worst.max(coupling);
                if coupling <= 1e-15 {
                    continue;
                }
                // Diagonal phase followed by a real rotation zeroes the
                // (p, q) entry of the implicit Gram matrix.
                let phic = (apq / apq.norm()).conj();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let wp = w.at(r, p);
                    let wq = w.at(r, q);
                    *w.at_mut(r, p) = wp * c - wq * (phic * s);
                    *w.at_mut(r, q) = wp * s + wq * (phic * c);
                }
                for r in 0..n {
                    let vp = v.at(r, p);
                    let vq = v.at(r, q);
                    *v.at_mut(r, p) = vp * c - vq * (phic * s);
                    *v.at_mut(r, q) = vp * s + vq * (phic * c);
                }
            }
        }
        if worst <= 1e-15 {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n)
        .map(|c| (0..m).map(|r| w.at(r, c).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut u = CMat::zeros(m, n);
    let mut vs = CMat::zeros(n, n);
    let sigma_sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        if s > 0.0 {
            for r in 0..m {
                *u.at_mut(r, dst) = w.at(r, src) / s;
            }
        }
        for r in 0..n {
            *vs.at_mut(r, dst) = v.at(r, src);
        }
    }
    sigma = sigma_sorted;
    Svd { u, sigma, v: vs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(rows, cols, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn reconstruct(s: &Svd) -> CMat {
        let mut sv = CMat::zeros(s.sigma.len(), s.sigma.len());
        for (i, &x) in s.sigma.iter().enumerate() {
            *sv.at_mut(i, i) = C64::new(x, 0.0);
        }
        s.u.matmul(&sv).matmul(&s.v.hermitian())
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        for (rows, cols, seed) in [(8, 5, 1u64), (5, 8, 2), (16, 16, 3), (1, 1, 4), (32, 4, 5)] {
            let a = random_matrix(rows, cols, seed);
            let s = svd(&a);
            let err = a.sub(&reconstruct(&s)).frobenius_norm() / a.frobenius_norm();
            assert!(err < 1e-12, "{rows}x{cols}: relative error {err}");
        }
    }

    #[test]
    fn svd_factors_are_orthonormal() {
        let a = random_matrix(12, 7, 11);
        let s = svd(&a);
        let utu = s.u.hermitian().matmul(&s.u);
        let vtv = s.v.hermitian().matmul(&s.v);
        let id = CMat::identity(7);
        assert!(utu.sub(&id).frobenius_norm() < 1e-12);
        assert!(vtv.sub(&id).frobenius_norm() < 1e-12);
    }

    #[test]
    fn svd_sorts_descending_and_matches_diagonal() {
        let a = CMat::from_fn(3, 3, |r, c| {
            if r == c {
                C64::new([3.0, 7.0, 1.0][r], 0.0)
            } else {
                C64::ZERO
            }
        });
        let s = svd(&a);
        assert!((s.sigma[0] - 7.0).abs() < 1e-12);
        assert!((s.sigma[1] - 3.0).abs() < 1e-12);
        assert!((s.sigma[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_detects_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u: Vec<C64> = (0..6)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let v: Vec<C64> = (0..9)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let a = CMat::from_fn(6, 9, |r, c| u[r] * v[c].conj());
        let s = svd(&a);
        assert!(s.sigma[1] < 1e-12 * s.sigma[0]);
    }

    #[test]
    fn matmul_against_hand_computation() {
        let a = CMat::from_rows(&[
            vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0)],
            vec![C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        ]);
        let b = CMat::from_rows(&[vec![C64::new(1.0, 0.0)], vec![C64::new(0.0, 2.0)]]);
        let c = a.matmul(&b);
        assert_eq!(c.at(0, 0), C64::new(1.0, 5.0));
        assert_eq!(c.at(1, 0), C64::new(0.0, 1.0));
    }

    #[test]
    fn hermitian_transpose_conjugates() {
        let a = random_matrix(4, 6, 31);
        let h = a.hermitian();
        assert_eq!(h.rows(), 6);
        assert_eq!(h.at(2, 3), a.at(3, 2).conj());
    }
}
