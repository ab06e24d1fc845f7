use alloc::format;

use nalgebra::{DMatrix, DVector};

use super::dist::cholesky_with_jitter;
use crate::{Error, Result};

/// Fixed hyperparameters of the hierarchical model.
///
/// `alpha ~ Gamma(shape, scale)` in the shape-scale parameterization, and each
/// factor's `(mu, Lambda)` is Gaussian-Wishart: `Lambda ~ W(w0, nu0)`,
/// `mu ~ N(mu0, (kappa Lambda)^-1)` with `kappa = kappa0` for the object
/// factors and `kappa_t` for the relation factor.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPriors {
    pub shape: f64,
    pub scale: f64,
    pub mu0: DVector<f64>,
    pub kappa0: f64,
    pub kappa_t: f64,
    pub w0: DMatrix<f64>,
    pub nu0: f64,
}

impl HyperPriors {
    /// `mu0 = 0`, `nu0 = D`, `W0 = I`, shape 5, scale 1, `kappa0 = 2`,
    /// `kappa_t = 1`.
    pub fn defaults(rank: usize) -> Self {
        Self {
            shape: 5.0,
            scale: 1.0,
            mu0: DVector::zeros(rank),
            kappa0: 2.0,
            kappa_t: 1.0,
            w0: DMatrix::identity(rank, rank),
            nu0: rank as f64,
        }
    }

    pub fn rank(&self) -> usize {
        self.mu0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.rank();
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if d == 0 {
            return bad("prior rank must be at least 1".into());
        }
        if self.w0.nrows() != d || self.w0.ncols() != d {
            return bad(format!(
                "W0 is {}x{}, expected {d}x{d}",
                self.w0.nrows(),
                self.w0.ncols()
            ));
        }
        for (name, v) in [
            ("shape", self.shape),
            ("scale", self.scale),
            ("kappa0", self.kappa0),
            ("kappa_t", self.kappa_t),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.nu0 >= d as f64) || !self.nu0.is_finite() {
            return bad(format!("nu0 must be at least D = {d}, got {}", self.nu0));
        }
        if self.mu0.iter().any(|x| !x.is_finite()) {
            return bad("mu0 must be finite".into());
        }
        if (&self.w0 - self.w0.transpose()).amax() > 1e-12 * self.w0.amax().max(1.0) {
            return bad("W0 must be symmetric".into());
        }
        if nalgebra::Cholesky::new(self.w0.clone()).is_none() {
            return bad("W0 must be positive definite".into());
        }
        Ok(())
    }

    pub(crate) fn w0_inverse(&self) -> Result<DMatrix<f64>> {
        Ok(cholesky_with_jitter(&self.w0, "W0")?.inverse())
    }
}

/// Sampled mean and precision of one factor's row prior.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorHyperState {
    pub mu: DVector<f64>,
    pub lambda: DMatrix<f64>,
}

impl FactorHyperState {
    /// Standard normal prior `N(0, I)`.
    pub fn standard(rank: usize) -> Self {
        Self {
            mu: DVector::zeros(rank),
            lambda: DMatrix::identity(rank, rank),
        }
    }
}
