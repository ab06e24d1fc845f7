//! CP latent-factor model: reconstruction, logistic link, prediction and
//! Gaussian log-likelihood.

use alloc::format;
use alloc::vec::Vec;

use crate::tensor::{FiberKey, RelationalTensor};
use crate::{Error, FactorMatrix, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Logistic function `exp(x) / (1 + exp(x))`, evaluated without overflow.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let z = libm::exp(x);
        z / (1.0 + z)
    }
}

/// Triple inner product `sum_d a[d] * b[d] * c[d]`.
#[inline]
pub(crate) fn triple_dot(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

/// Rank and link settings shared by training and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub rank: usize,
    pub use_logistic: bool,
}

impl ModelConfig {
    /// MAP training predicts through the logistic link.
    pub fn map(rank: usize) -> Self {
        Self {
            rank,
            use_logistic: true,
        }
    }

    /// The Gibbs sampler is conjugate only under the identity link.
    pub fn bayes(rank: usize) -> Self {
        Self {
            rank,
            use_logistic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        Ok(())
    }

    /// Applies the configured link to a reconstruction.
    #[inline]
    pub fn link(&self, s: f64) -> f64 {
        if self.use_logistic {
            logistic(s)
        } else {
            s
        }
    }
}

/// Sender factors `U` (N x D), receiver factors `V` (N x D), relation
/// factors `R` (T x D) and the noise precision `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentFactors {
    pub(crate) u: FactorMatrix,
    pub(crate) v: FactorMatrix,
    pub(crate) r: FactorMatrix,
    pub(crate) alpha: f64,
}

impl LatentFactors {
    pub fn new(u: FactorMatrix, v: FactorMatrix, r: FactorMatrix, alpha: f64) -> Result<Self> {
        let d = u.cols();
        if d == 0 || v.cols() != d || r.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "factor ranks U={}, V={}, R={}",
                u.cols(),
                v.cols(),
                r.cols()
            )));
        }
        if u.rows() != v.rows() {
            return Err(Error::DimensionMismatch(format!(
                "U has {} rows but V has {}",
                u.rows(),
                v.rows()
            )));
        }
        if u.rows() == 0 || r.rows() == 0 {
            return Err(Error::DimensionMismatch(
                "factor matrices must be non-empty".into(),
            ));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if !(u.is_finite() && v.is_finite() && r.is_finite()) {
            return Err(Error::InvalidConfig("factor entries must be finite".into()));
        }
        Ok(Self { u, v, r, alpha })
    }

    /// All-zero factors with unit precision.
    pub fn zeros(n_objects: usize, n_relations: usize, rank: usize) -> Self {
        Self {
            u: FactorMatrix::zeros(n_objects, rank),
            v: FactorMatrix::zeros(n_objects, rank),
            r: FactorMatrix::zeros(n_relations, rank),
            alpha: 1.0,
        }
    }

    pub fn u(&self) -> &FactorMatrix {
        &self.u
    }

    pub fn v(&self) -> &FactorMatrix {
        &self.v
    }

    pub fn r(&self) -> &FactorMatrix {
        &self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn n_objects(&self) -> usize {
        self.u.rows()
    }

    pub fn n_relations(&self) -> usize {
        self.r.rows()
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.u.is_finite() && self.v.is_finite() && self.r.is_finite()
    }

    fn check(&self, i: usize, j: usize, t: usize) -> Result<()> {
        let n = self.n_objects();
        if i >= n || j >= n || t >= self.n_relations() {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                t,
                n_objects: n,
                n_relations: self.n_relations(),
            });
        }
        Ok(())
    }

    /// Errors unless the factors match the tensor's shape.
    pub fn check_shape(&self, tensor: &RelationalTensor) -> Result<()> {
        if self.n_objects() != tensor.n_objects() || self.n_relations() != tensor.n_relations() {
            return Err(Error::DimensionMismatch(format!(
                "factors are for a {n}x{n}x{t} tensor, data is {m}x{m}x{s}",
                n = self.n_objects(),
                t = self.n_relations(),
                m = tensor.n_objects(),
                s = tensor.n_relations()
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn cp(&self, i: usize, j: usize, t: usize) -> f64 {
        triple_dot(self.u.row(i), self.v.row(j), self.r.row(t))
    }

    /// CP reconstruction `sum_d U[i,d] V[j,d] R[t,d]`.
    pub fn reconstruct_entry(&self, i: usize, j: usize, t: usize) -> Result<f64> {
        self.check(i, j, t)?;
        Ok(self.cp(i, j, t))
    }

    /// Reconstruction passed through the configured link.
    pub fn predict_entry(&self, i: usize, j: usize, t: usize, config: &ModelConfig) -> Result<f64> {
        Ok(config.link(self.reconstruct_entry(i, j, t)?))
    }

    /// Predictions for all `T` relations of one pair.
    pub fn predict_fiber(&self, key: FiberKey, config: &ModelConfig) -> Result<Vec<f64>> {
        self.check(key.i, key.j, 0)?;
        Ok((0..self.n_relations())
            .map(|t| config.link(self.cp(key.i, key.j, t)))
            .collect())
    }

    /// Gaussian log-likelihood of the observed entries with precision `alpha`.
    pub fn log_likelihood(&self, tensor: &RelationalTensor, config: &ModelConfig) -> Result<f64> {
        self.check_shape(tensor)?;
        let sse: f64 = tensor
            .entries()
            .iter()
            .map(|e| {
                let r = e.y() - config.link(self.cp(e.i, e.j, e.t));
                r * r
            })
            .sum();
        Ok(gaussian_log_likelihood(
            tensor.observed_count(),
            sse,
            self.alpha,
        ))
    }
}

/// `sum log N(y | m, 1/alpha)` given the count and the residual sum of squares.
pub(crate) fn gaussian_log_likelihood(count: usize, sse: f64, alpha: f64) -> f64 {
    0.5 * count as f64 * (libm::log(alpha) - LN_2PI) - 0.5 * alpha * sse
}
