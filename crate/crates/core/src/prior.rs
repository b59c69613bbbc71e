//! Priors on the model parameters.

use nalgebra::{DMatrix, DVector};

use crate::error::{ErgmError, Result};

/// Log prior density (up to an additive constant) with its derivatives.
pub trait LogPrior: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, theta: &[f64]) -> f64;
    fn gradient(&self, theta: &[f64]) -> Vec<f64>;
    fn hessian(&self) -> DMatrix<f64>;
}

/// Multivariate normal prior.
#[derive(Debug, Clone)]
pub struct PriorSpec {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    precision: DMatrix<f64>,
}

impl PriorSpec {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(ErgmError::InvalidPrior("zero-dimensional prior".into()));
        }
        if covariance.shape() != (d, d) {
            return Err(ErgmError::DimensionMismatch {
                expected: d,
                found: covariance.nrows(),
            });
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(ErgmError::InvalidPrior("non-finite entries".into()));
        }
        let asym = (&covariance - covariance.transpose()).abs().max();
        if asym > 1e-12 * covariance.abs().max().max(1.0) {
            return Err(ErgmError::InvalidPrior(
                "covariance is not symmetric".into(),
            ));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or(ErgmError::NotPositiveDefinite("prior covariance"))?;
        let precision = chol.inverse();
        Ok(PriorSpec {
            mean,
            covariance,
            precision,
        })
    }

    /// Independent normals with a common standard deviation.
    pub fn isotropic(mean: Vec<f64>, sd: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, DMatrix::from_diagonal_element(d, d, sd * sd))
    }

    /// Independent normals with per-coordinate standard deviations.
    pub fn diagonal(mean: Vec<f64>, sd: &[f64]) -> Result<Self> {
        if sd.len() != mean.len() {
            return Err(ErgmError::DimensionMismatch {
                expected: mean.len(),
                found: sd.len(),
            });
        }
        let var = DVector::from_iterator(sd.len(), sd.iter().map(|s| s * s));
        Self::new(mean, DMatrix::from_diagonal(&var))
    }

    /// Weakly informative default, N(0, 100 I).
    pub fn weakly_informative(dim: usize) -> Self {
        Self::isotropic(vec![0.0; dim], 10.0).expect("valid default prior")
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

impl LogPrior for PriorSpec {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let diff = DVector::from_iterator(
            self.mean.len(),
            theta.iter().zip(&self.mean).map(|(t, m)| t - m),
        );
        -0.5 * diff.dot(&(&self.precision * &diff))
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let diff = DVector::from_iterator(
            self.mean.len(),
            theta.iter().zip(&self.mean).map(|(t, m)| t - m),
        );
        (-(&self.precision * diff)).iter().copied().collect()
    }

    fn hessian(&self) -> DMatrix<f64> {
        -self.precision.clone()
    }
}

/// Improper uniform prior; every log ratio is zero.
#[derive(Debug, Clone, Copy)]
pub struct FlatPrior {
    pub dim: usize,
}

impl LogPrior for FlatPrior {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _theta: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn hessian(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.dim, self.dim)
    }
}
