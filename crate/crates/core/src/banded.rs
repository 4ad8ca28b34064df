//! Banded storage and LU factorization with partial pivoting.
//!
//! Layout follows the LAPACK `gbtrf` convention: an n×n matrix with `kl`
//! sub-diagonals and `ku` super-diagonals is kept column-major in
//! `2·kl + ku + 1` rows so that row interchanges have room to fill in.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{domain, numeric, Result};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            data: vec![T::zero(); ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Panics if (i, j) lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(domain(format!(
                "vector length {} does not match matrix dimension {}",
                x.len(),
                self.n
            )));
        }
        let mut y = vec![T::zero(); self.n];
        for (j, &xj) in x.iter().enumerate() {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl + 1).min(self.n);
            for (i, yi) in y.iter_mut().enumerate().take(hi).skip(lo) {
                *yi += self.data[self.idx(i, j)] * xj;
            }
        }
        Ok(y)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn lu(mut self) -> Result<BandedLu<T>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = ku + kl;
        let mut pivots = vec![0usize; n];
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.modulus()))
            .max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].modulus();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[k] = p;
            if best <= scale * 1e-300 {
                return Err(numeric(format!("zero pivot in column {k}"), best));
            }
            let jmax = (k + kv).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let piv = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let m = self.data[ik] / piv;
                self.data[ik] = m;
                if m == T::zero() {
                    continue;
                }
                for j in k + 1..=jmax {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= m * kj;
                }
            }
        }
        Ok(BandedLu { factors: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    factors: BandedMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn dim(&self) -> usize {
        self.factors.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) -> Result<()> {
        let f = &self.factors;
        let n = f.n;
        if b.len() != n {
            return Err(domain(format!(
                "right-hand side length {} does not match dimension {n}",
                b.len()
            )));
        }
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            let last = (k + f.kl).min(n - 1);
            for (i, bi) in b.iter_mut().enumerate().take(last + 1).skip(k + 1) {
                *bi -= f.data[f.idx(i, k)] * bk;
            }
        }
        let kv = f.kl + f.ku;
        for k in (0..n).rev() {
            let mut s = b[k];
            let jmax = (k + kv).min(n - 1);
            for (j, &bj) in b.iter().enumerate().take(jmax + 1).skip(k + 1) {
                s -= f.data[f.idx(k, j)] * bj;
            }
            b[k] = s / f.data[f.idx(k, k)];
        }
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> (BandedMatrix<f64>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = BandedMatrix::zeros(n, kl, ku);
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v: f64 = rng.random_range(-1.0..1.0);
                b.set(i, j, v);
                d[(i, j)] = v;
            }
        }
        (b, d)
    }

    #[test]
    fn solve_matches_dense_lu() {
        for (n, kl, ku, seed) in [(1, 0, 0, 1), (5, 1, 1, 2), (30, 2, 1, 3), (40, 3, 2, 4), (17, 0, 2, 5)] {
            let (b, d) = random_banded(n, kl, ku, seed);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let x = b.lu().unwrap().solve(&rhs).unwrap();
            let xd = d.lu().solve(&DVector::from_vec(rhs)).unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-9 * (1.0 + xd[i].abs()), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut b = BandedMatrix::zeros(3, 1, 1);
        b.set(0, 1, 1.0);
        b.set(1, 0, 1.0);
        b.set(1, 2, 2.0);
        b.set(2, 1, 3.0);
        b.set(2, 2, 1.0);
        let x = b.clone().lu().unwrap().solve(&[1.0, 2.0, 3.0]).unwrap();
        let y = b.matvec(&x).unwrap();
        for (a, e) in y.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_solve_roundtrip() {
        let n = 25;
        let mut b = BandedMatrix::<Complex64>::zeros(n, 2, 1);
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 2).min(n) {
                let v = Complex64::new((i * 3 + j) as f64 * 0.1 - 1.0, (i as f64 - j as f64) * 0.3);
                b.set(
                    i,
                    j,
                    v + if i == j {
                        Complex64::new(4.0, 1.0)
                    } else {
                        Complex64::zero()
                    },
                );
            }
        }
        let rhs: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let x = b.clone().lu().unwrap().solve(&rhs).unwrap();
        let y = b.matvec(&x).unwrap();
        for (a, e) in y.iter().zip(&rhs) {
            assert!((a - e).norm() < 1e-11);
        }
    }

    #[test]
    fn singular_matrix_reports_zero_pivot() {
        let b = BandedMatrix::<f64>::zeros(4, 1, 1);
        assert!(b.lu().is_err());
    }

    #[test]
    fn length_mismatch_is_domain_error() {
        let mut b = BandedMatrix::<f64>::zeros(2, 0, 0);
        b.set(0, 0, 1.0);
        b.set(1, 1, 1.0);
        assert!(b.clone().matvec(&[1.0]).is_err());
        assert!(b.lu().unwrap().solve(&[1.0, 2.0, 3.0]).is_err());
    }
}
