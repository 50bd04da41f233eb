//! Covariance and correlation matrices, multivariate normal density and
//! sampling, and the entrywise absolute-value transform.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::normal::LN_SQRT_2PI;

/// Minimum Cholesky pivot accepted as positive definite.
pub const PD_TOL: f64 = 1e-10;
/// Absolute tolerance for symmetry and unit-diagonal checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Entrywise absolute value. Symmetric with the same diagonal, but positive
/// definiteness is not preserved in general.
pub fn abs_transform(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(f64::abs)
}

/// `true` iff a Cholesky factorisation exists with every pivot above `tol`.
pub fn is_positive_definite(m: &DMatrix<f64>, tol: f64) -> bool {
    debug_assert!(is_symmetric(m, 1e-8 * (1.0 + m.amax())), "non-symmetric input");
    factor(m, tol).is_some()
}

fn factor(m: &DMatrix<f64>, tol: f64) -> Option<Cholesky<f64, Dyn>> {
    if !m.is_square() || m.nrows() == 0 || m.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    if (0..m.nrows()).all(|j| l[(j, j)] * l[(j, j)] > tol) {
        Some(chol)
    } else {
        None
    }
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let d = m.nrows();
    (0..d).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// A symmetric positive definite matrix together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    ln_det: f64,
}

impl CovarianceMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::domain(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_symmetric(&matrix, SYMMETRY_TOL * (1.0 + matrix.amax())) {
            return Err(Error::domain("covariance matrix is not symmetric"));
        }
        let chol = factor(&matrix, PD_TOL).ok_or_else(|| Error::NotPositiveDefinite(format!("{matrix}")))?;
        let ln_det = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Ok(CovarianceMatrix { matrix, chol, ln_det })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Lower-triangular Cholesky factor.
    pub fn cholesky_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn ln_det(&self) -> f64 {
        self.ln_det
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.chol.inverse();
        0.5 * (&inv + inv.transpose())
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `xᵀ M⁻¹ x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal");
        z.norm_squared()
    }

    /// Entrywise absolute value, validated as a covariance matrix.
    pub fn abs_transform(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::new(abs_transform(&self.matrix))
    }
}

impl PartialEq for CovarianceMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

/// A covariance matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(CovarianceMatrix);

impl CorrelationMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let cov = CovarianceMatrix::new(matrix)?;
        let m = cov.matrix();
        let d = m.nrows();
        for j in 0..d {
            if (m[(j, j)] - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::domain(format!(
                    "correlation diagonal entry {j} is {} (expected 1)",
                    m[(j, j)]
                )));
            }
            for k in 0..j {
                if m[(j, k)].abs() >= 1.0 {
                    return Err(Error::domain(format!(
                        "correlation entry ({j}, {k}) = {} outside (-1, 1)",
                        m[(j, k)]
                    )));
                }
            }
        }
        Ok(CorrelationMatrix(cov))
    }

    pub fn identity(d: usize) -> Self {
        CorrelationMatrix(CovarianceMatrix::identity(d))
    }

    /// Builds a correlation matrix from its strictly-upper entries in
    /// row-major order: (1,2), (1,3), ..., (2,3), ...
    pub fn from_upper(d: usize, upper: &[f64]) -> Result<Self> {
        check_dim(d * d.saturating_sub(1) / 2, upper.len())?;
        let mut m = DMatrix::identity(d, d);
        let mut it = upper.iter();
        for j in 0..d {
            for k in (j + 1)..d {
                let r = *it.next().expect("length checked");
                m[(j, k)] = r;
                m[(k, j)] = r;
            }
        }
        Self::new(m)
    }

    /// Rescales a covariance matrix to unit diagonal.
    pub fn from_covariance(cov: &CovarianceMatrix) -> Result<Self> {
        let m = cov.matrix();
        let s: Vec<f64> = m.diagonal().iter().map(|x| x.sqrt()).collect();
        let d = m.nrows();
        let mut c = DMatrix::from_fn(d, d, |i, j| m[(i, j)] / (s[i] * s[j]));
        c.fill_diagonal(1.0);
        Self::new(c)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn rho(&self, j: usize, k: usize) -> f64 {
        self.0.matrix()[(j, k)]
    }

    /// Strictly-upper entries in row-major order.
    pub fn upper(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
            .map(|(j, k)| self.rho(j, k))
            .collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.0.matrix()
    }

    pub fn as_covariance(&self) -> &CovarianceMatrix {
        &self.0
    }

    /// Principal sub-matrix on `indices`.
    pub fn submatrix(&self, indices: &[usize]) -> Result<Self> {
        let m = self.matrix();
        let k = indices.len();
        Self::new(DMatrix::from_fn(k, k, |a, b| m[(indices[a], indices[b])]))
    }
}

/// Log-density of N(mean, cov) at `x`.
pub fn mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &CovarianceMatrix) -> Result<f64> {
    let d = cov.dim();
    check_dim(d, x.len())?;
    check_dim(d, mean.len())?;
    let diff = x - mean;
    Ok(-(d as f64) * LN_SQRT_2PI - 0.5 * cov.ln_det() - 0.5 * cov.quad_form(&diff))
}

/// One draw from N(mean, cov).
pub fn mvn_sample<R: Rng + ?Sized>(mean: &DVector<f64>, cov: &CovarianceMatrix, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(cov.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + cov.chol.l_dirty().lower_triangle() * z
}
