//! Small dense complex linear-algebra kernel.
//!
//! Everything downstream reduces to solving `A x = b` or evaluating
//! `b^H A^-1 b` for a Hermitian positive-definite `A`, so that is all this
//! module provides: a row-major [`HermitianMatrix`], its [`Cholesky`]
//! factorization, and a clamped arcsine for the arcsine-law entries.

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type ComplexVector = Vec<C64>;

/// Relative pivot tolerance of the Cholesky factorization.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Dense Hermitian matrix stored row-major.
///
/// Only constructors that enforce `A[n][m] == conj(A[m][n])` are exposed, and
/// the diagonal is kept exactly real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut a = Self::zeros(dim);
        for n in 0..dim {
            a.set_diagonal(n, scale);
        }
        a
    }

    /// Builds the matrix from its upper triangle. `f(n, m)` is called for
    /// `n <= m` only; the lower triangle is mirrored and the imaginary part of
    /// the diagonal is dropped.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut a = Self::zeros(dim);
        for n in 0..dim {
            a.set_diagonal(n, f(n, n).re);
            for m in n + 1..dim {
                a.set_pair(n, m, f(n, m));
            }
        }
        a
    }

    /// Builds a matrix from full rows, checking the Hermitian property to a
    /// relative tolerance of `1e-12`.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        let scale = rows
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        for n in 0..dim {
            for m in 0..dim {
                let (a, b) = (rows[n][m], rows[m][n].conj());
                if !a.re.is_finite() || !a.im.is_finite() {
                    return Err(Error::domain("matrix entries must be finite"));
                }
                if (a - b).norm() > 1e-12 * scale {
                    return Err(Error::domain(format!(
                        "matrix is not Hermitian at ({n}, {m})"
                    )));
                }
            }
        }
        Ok(Self::from_upper(dim, |n, m| rows[n][m]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.data[n * self.dim + m]
    }

    pub fn row(&self, n: usize) -> &[C64] {
        &self.data[n * self.dim..(n + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    #[inline]
    pub(crate) fn set_pair(&mut self, n: usize, m: usize, value: C64) {
        self.data[n * self.dim + m] = value;
        self.data[m * self.dim + n] = value.conj();
    }

    #[inline]
    pub(crate) fn set_diagonal(&mut self, n: usize, value: f64) {
        self.data[n * self.dim + n] = C64::new(value, 0.0);
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn principal_submatrix(&self, indices: &[usize]) -> Self {
        Self::from_upper(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<ComplexVector> {
        check_dim(self.dim, x.len())?;
        Ok((0..self.dim)
            .map(|n| self.row(n).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `w^H A w`, which is real for Hermitian `A`.
    pub fn form(&self, w: &[C64]) -> Result<f64> {
        let aw = self.mul_vec(w)?;
        Ok(w.iter().zip(&aw).map(|(a, b)| (a.conj() * b).re).sum())
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(self)
    }
}

/// Lower-triangular factor `L` with `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<C64>,
}

impl Cholesky {
    pub fn factor(a: &HermitianMatrix) -> Result<Self> {
        let dim = a.dim;
        let max_diag = a.diagonal().into_iter().fold(0.0, f64::max);
        let tolerance = PIVOT_TOLERANCE * max_diag;
        let mut lower = vec![C64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            let (head, tail) = lower.split_at_mut(j * dim);
            let row_j = &mut tail[..dim];
            // Row j of L, left of the diagonal.
            for i in 0..j {
                let row_i = &head[i * dim..i * dim + i + 1];
                let dot: C64 = row_j[..i]
                    .iter()
                    .zip(&row_i[..i])
                    .map(|(a, b)| a * b.conj())
                    .sum();
                row_j[i] = (a.get(j, i) - dot) / row_i[i].re;
            }
            let pivot = a.get(j, j).re - row_j[..j].iter().map(|z| z.norm_sqr()).sum::<f64>();
            if pivot.is_nan() || pivot <= tolerance {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot,
                    tolerance,
                });
            }
            row_j[j] = C64::new(pivot.sqrt(), 0.0);
        }
        Ok(Cholesky { dim, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest diagonal entry of `L`.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim)
            .map(|j| self.lower[j * self.dim + j].re)
            .fold(f64::INFINITY, f64::min)
    }

    /// `L^-1 b`.
    fn forward(&self, b: &[C64]) -> Result<ComplexVector> {
        check_dim(self.dim, b.len())?;
        let mut y = b.to_vec();
        for i in 0..self.dim {
            let row = &self.lower[i * self.dim..i * self.dim + i + 1];
            let dot: C64 = row[..i].iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - dot) / row[i].re;
        }
        Ok(y)
    }

    pub fn solve(&self, b: &[C64]) -> Result<ComplexVector> {
        let mut x = self.forward(b)?;
        // Back substitution with L^H.
        for i in (0..self.dim).rev() {
            let mut acc = x[i];
            for k in i + 1..self.dim {
                acc -= self.lower[k * self.dim + i].conj() * x[k];
            }
            x[i] = acc / self.lower[i * self.dim + i].re;
        }
        Ok(x)
    }

    /// `b^H A^-1 b = ||L^-1 b||^2`, real and non-negative by construction.
    pub fn quadratic_form(&self, b: &[C64]) -> Result<f64> {
        Ok(self.forward(b)?.iter().map(|z| z.norm_sqr()).sum())
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn hermitian_solve(a: &HermitianMatrix, b: &[C64]) -> Result<ComplexVector> {
    check_dim(a.dim, b.len())?;
    a.cholesky()?.solve(b)
}

/// `b^H A^-1 b` for Hermitian positive-definite `A`.
pub fn quadratic_form(a: &HermitianMatrix, b: &[C64]) -> Result<f64> {
    check_dim(a.dim, b.len())?;
    a.cholesky()?.quadratic_form(b)
}

/// `arcsin` with its argument clamped to `[-1, 1]`, absorbing rounding
/// overshoot of normalized correlations.
#[inline]
pub fn clipped_arcsin(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).asin()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// Mean and `s / sqrt(n)` with the unbiased sample variance `s^2`.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_err: (var / n).sqrt(),
        }
    }

    /// Signed distance from `truth` in standard errors. Zero-error estimates
    /// give 0 when exact and infinity otherwise.
    pub fn z_score(&self, truth: f64) -> f64 {
        let diff = self.value - truth;
        if diff == 0.0 {
            0.0
        } else if self.std_err == 0.0 {
            diff.signum() * f64::INFINITY
        } else {
            diff / self.std_err
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn two_by_two() -> HermitianMatrix {
        HermitianMatrix::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(2.0, 0.0)],
        ])
        .unwrap()
    }

    #[test]
    fn solve_identity() {
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        let x = hermitian_solve(&HermitianMatrix::identity(3), &b).unwrap();
        assert!(close(&x, &b, 1e-15));
    }

    #[test]
    fn solve_scaled_identity() {
        let x = hermitian_solve(
            &HermitianMatrix::scaled_identity(2, 2.0),
            &[c(2.0, 0.0), c(0.0, 4.0)],
        )
        .unwrap();
        assert!(close(&x, &[c(1.0, 0.0), c(0.0, 2.0)], 1e-15));
    }

    #[test]
    fn solve_two_by_two() {
        // [[2,1],[1,2]]^-1 = [[2,-1],[-1,2]] / 3
        let x = hermitian_solve(&two_by_two(), &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(close(&x, &[c(1.0 / 3.0, 0.0), c(1.0 / 3.0, 0.0)], 1e-15));
    }

    #[test]
    fn quadratic_form_examples() {
        let qf =
            quadratic_form(&HermitianMatrix::identity(2), &[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!((qf - 2.0).abs() < 1e-15);
        let qf = quadratic_form(&HermitianMatrix::scaled_identity(1, 4.0), &[c(2.0, 0.0)]).unwrap();
        assert!((qf - 1.0).abs() < 1e-15);
        let qf = quadratic_form(&two_by_two(), &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((qf - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn arcsin_examples() {
        assert_eq!(clipped_arcsin(0.0), 0.0);
        assert_eq!(clipped_arcsin(1.0), FRAC_PI_2);
        assert_eq!(clipped_arcsin(1.0 + 1e-15), FRAC_PI_2);
        assert_eq!(clipped_arcsin(-1.0 - 1e-15), -FRAC_PI_2);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let ones = HermitianMatrix::from_upper(2, |_, _| c(2.0, 0.0));
        match ones.cholesky() {
            Err(Error::NotPositiveDefinite { index: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert_eq!(
            hermitian_solve(&HermitianMatrix::identity(2), &[c(1.0, 0.0)]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn non_hermitian_rows_rejected() {
        let rows = vec![
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, 1.0), c(1.0, 0.0)],
        ];
        assert!(HermitianMatrix::from_rows(&rows).is_err());
    }

    /// `G G^H + I` for a random complex `G`.
    fn random_pd(dim: usize, entries: &[(f64, f64)]) -> HermitianMatrix {
        let g = |n: usize, k: usize| {
            let (re, im) = entries[(n * dim + k) % entries.len()];
            c(re, im)
        };
        HermitianMatrix::from_upper(dim, |n, m| {
            let mut acc: C64 = (0..dim).map(|k| g(n, k) * g(m, k).conj()).sum();
            if n == m {
                acc += 1.0;
            }
            acc
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solve_residual_is_small(
            dim in 1usize..=200,
            entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..64),
            rhs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 200),
        ) {
            let a = random_pd(dim, &entries);
            let b: Vec<C64> = rhs[..dim].iter().map(|&(re, im)| c(re, im)).collect();
            let x = hermitian_solve(&a, &b).unwrap();
            let ax = a.mul_vec(&x).unwrap();
            let residual = norm_sqr(&ax.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>()).sqrt();
            prop_assert!(residual <= 1e-8 * norm_sqr(&b).sqrt().max(f64::MIN_POSITIVE));
            prop_assert!(quadratic_form(&a, &b).unwrap() >= 0.0);
        }

        #[test]
        fn arcsin_is_odd(x in -1.5f64..1.5) {
            prop_assert_eq!(clipped_arcsin(-x), -clipped_arcsin(x));
        }
    }
}
