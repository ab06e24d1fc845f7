//! Multivariate samplers used by the Gibbs conditionals and the synthetic
//! data generator.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::{Error, Result};

/// Retries after the first failed factorization.
pub const JITTER_RETRIES: usize = 3;
/// Diagonal jitter per retry, relative to `trace / D`.
pub const JITTER_SCALE: f64 = 1e-10;

/// Cholesky factorization of the symmetrized `m`.
///
/// On failure, adds `1e-10 * trace / D` to the diagonal and retries up to
/// three times before reporting [`Error::NotPositiveDefinite`].
pub fn cholesky_with_jitter(m: &DMatrix<f64>, context: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotPositiveDefinite(context));
    }
    let mut a = (m + m.transpose()) * 0.5;
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(c);
    }
    let d = a.nrows().max(1) as f64;
    let trace = a.trace();
    let jitter = if trace > 0.0 {
        JITTER_SCALE * trace / d
    } else {
        JITTER_SCALE
    };
    for _ in 0..JITTER_RETRIES {
        for k in 0..a.nrows() {
            a[(k, k)] += jitter;
        }
        if let Some(c) = Cholesky::new(a.clone()) {
            return Ok(c);
        }
    }
    Err(Error::NotPositiveDefinite(context))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    Ok(cholesky_with_jitter(m, context)?.inverse())
}

pub fn standard_normal_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Draws from `N(mean, P^-1)` given the Cholesky factor `L` of the precision
/// `P = L L^T`, by solving `L^T x = z`. The covariance is never formed.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &Cholesky<f64, Dyn>,
    rng: &mut R,
) -> DVector<f64> {
    let z = standard_normal_vector(mean.len(), rng);
    let offset = precision
        .l_dirty()
        .tr_solve_lower_triangular(&z)
        .expect("Cholesky factor has a positive diagonal");
    mean + offset
}

/// Wishart draw with scale `W = L L^T` and `nu` degrees of freedom, by the
/// Bartlett decomposition `(L A)(L A)^T`.
///
/// `A` is lower triangular with `A[k,k]^2 ~ chi2(nu - k)` and standard normal
/// entries below the diagonal. Requires `nu > D - 1`.
pub fn sample_wishart<R: Rng + ?Sized>(
    scale: &Cholesky<f64, Dyn>,
    nu: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let l = scale.l();
    let d = l.nrows();
    if !(nu > d as f64 - 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "Wishart degrees of freedom {nu} must exceed D - 1 = {}",
            d as f64 - 1.0
        )));
    }
    let mut a = DMatrix::zeros(d, d);
    for k in 0..d {
        let chi = ChiSquared::new(nu - k as f64).expect("positive degrees of freedom");
        a[(k, k)] = libm::sqrt(chi.sample(rng));
        for c in 0..k {
            a[(k, c)] = StandardNormal.sample(rng);
        }
    }
    let la = l * a;
    Ok(&la * la.transpose())
}
