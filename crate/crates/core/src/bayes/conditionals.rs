//! Conjugate conditional distributions of the Gibbs sampler.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::dist::{cholesky_with_jitter, sample_mvn_precision, sample_wishart};
use super::index::{Block, ObservationIndex};
use super::priors::{FactorHyperState, HyperPriors};
use crate::model::LatentFactors;
use crate::tensor::{Entry, RelationalTensor};
use crate::{Error, FactorMatrix, Result};

/// Shape-scale Gamma parameters of the `alpha` conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPosterior {
    pub shape: f64,
    pub scale: f64,
}

impl GammaPosterior {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = Gamma::new(self.shape, self.scale).expect("positive Gamma parameters");
        g.sample(rng).max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn alpha_posterior_entries(
    factors: &LatentFactors,
    entries: &[Entry],
    priors: &HyperPriors,
) -> GammaPosterior {
    let sse: f64 = entries
        .iter()
        .map(|e| {
            let r = e.y() - factors.cp(e.i, e.j, e.t);
            r * r
        })
        .sum();
    GammaPosterior {
        shape: priors.shape + 0.5 * entries.len() as f64,
        scale: 1.0 / (1.0 / priors.scale + 0.5 * sse),
    }
}

/// `shape* = shape + n/2`, `scale* = (1/scale + SSE/2)^-1` under the
/// identity link.
pub fn alpha_posterior(
    factors: &LatentFactors,
    tensor: &RelationalTensor,
    priors: &HyperPriors,
) -> Result<GammaPosterior> {
    factors.check_shape(tensor)?;
    Ok(alpha_posterior_entries(factors, tensor.entries(), priors))
}

/// Draws the noise precision from its conditional.
pub fn sample_alpha<R: Rng + ?Sized>(
    factors: &LatentFactors,
    tensor: &RelationalTensor,
    priors: &HyperPriors,
    rng: &mut R,
) -> Result<f64> {
    Ok(alpha_posterior(factors, tensor, priors)?.sample(rng))
}

/// Gaussian-Wishart distribution over one factor's `(mu, Lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWishart {
    pub mu0: DVector<f64>,
    pub kappa: f64,
    pub nu: f64,
    /// Wishart scale `W`.
    pub scale: DMatrix<f64>,
    /// `W^-1`, the quantity the conjugate update accumulates.
    pub scale_inverse: DMatrix<f64>,
}

impl GaussianWishart {
    /// `Lambda ~ W(W, nu)`, then `mu ~ N(mu0, (kappa Lambda)^-1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FactorHyperState> {
        let scale_chol = cholesky_with_jitter(&self.scale, "Wishart scale")?;
        let lambda = sample_wishart(&scale_chol, self.nu, rng)?;
        let mean_precision = cholesky_with_jitter(&(&lambda * self.kappa), "hyper mean precision")?;
        let mu = sample_mvn_precision(&self.mu0, &mean_precision, rng);
        Ok(FactorHyperState { mu, lambda })
    }
}

/// Conditional of `(mu, Lambda)` given the `M` rows of a factor matrix:
///
/// ```text
/// mu0*  = (kappa mu0 + M xbar) / (kappa + M)
/// kappa* = kappa + M,  nu* = nu0 + M
/// W*^-1 = W0^-1 + S + kappa M / (kappa + M) (xbar - mu0)(xbar - mu0)^T
/// ```
///
/// with `S` the scatter matrix of the rows about their mean `xbar`.
pub fn hyper_posterior(
    rows: &FactorMatrix,
    priors: &HyperPriors,
    kappa: f64,
) -> Result<GaussianWishart> {
    let d = priors.rank();
    let m = rows.rows();
    if rows.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "factor rank {} but prior rank {d}",
            rows.cols()
        )));
    }
    if m == 0 {
        return Err(Error::DimensionMismatch(
            "hyper update needs at least one row".into(),
        ));
    }
    let mf = m as f64;
    let mut mean = DVector::zeros(d);
    for row in rows.iter_rows() {
        for k in 0..d {
            mean[k] += row[k];
        }
    }
    mean /= mf;
    let mut scatter = DMatrix::zeros(d, d);
    let mut centered = DVector::zeros(d);
    for row in rows.iter_rows() {
        for k in 0..d {
            centered[k] = row[k] - mean[k];
        }
        scatter.syger(1.0, &centered, &centered, 1.0);
    }
    let shift = &mean - &priors.mu0;
    let mut scale_inverse = priors.w0_inverse()? + scatter;
    scale_inverse.syger(kappa * mf / (kappa + mf), &shift, &shift, 1.0);
    scale_inverse.fill_upper_triangle_with_lower_triangle();
    let scale = cholesky_with_jitter(&scale_inverse, "posterior Wishart scale")?.inverse();
    Ok(GaussianWishart {
        mu0: (&priors.mu0 * kappa + &mean * mf) / (kappa + mf),
        kappa: kappa + mf,
        nu: priors.nu0 + mf,
        scale,
        scale_inverse,
    })
}

/// Draws `(mu, Lambda)` for one factor. Use `kappa0` for `U` and `V` and
/// `kappa_t` for `R`.
pub fn sample_factor_hypers<R: Rng + ?Sized>(
    rows: &FactorMatrix,
    priors: &HyperPriors,
    kappa: f64,
    rng: &mut R,
) -> Result<FactorHyperState> {
    hyper_posterior(rows, priors, kappa)?.sample(rng)
}

/// Gaussian conditional of a single factor row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPosterior {
    pub precision: DMatrix<f64>,
    pub mean: DVector<f64>,
}

/// Accumulates `Lambda* = Lambda + alpha sum x x^T` and
/// `Lambda mu + alpha sum y x` for one row, where `x` is the elementwise
/// product of the two other factors' rows.
struct RowAccumulator {
    precision: DMatrix<f64>,
    rhs: DVector<f64>,
    design: Vec<f64>,
}

impl RowAccumulator {
    fn new(d: usize) -> Self {
        Self {
            precision: DMatrix::zeros(d, d),
            rhs: DVector::zeros(d),
            design: vec![0.0; d],
        }
    }

    fn accumulate<'e>(
        &mut self,
        factors: &LatentFactors,
        block: Block,
        entries: impl Iterator<Item = &'e Entry>,
        hyper: &FactorHyperState,
        prior_rhs: &DVector<f64>,
    ) {
        let d = self.design.len();
        self.precision.fill(0.0);
        self.rhs.fill(0.0);
        for e in entries {
            let (a, b) = match block {
                Block::Sender => (factors.v.row(e.j), factors.r.row(e.t)),
                Block::Receiver => (factors.u.row(e.i), factors.r.row(e.t)),
                Block::Relation => (factors.u.row(e.i), factors.v.row(e.j)),
            };
            for k in 0..d {
                self.design[k] = a[k] * b[k];
            }
            let y = e.y();
            for c in 0..d {
                let xc = self.design[c];
                self.rhs[c] += y * xc;
                for r in c..d {
                    self.precision[(r, c)] += self.design[r] * xc;
                }
            }
        }
        let alpha = factors.alpha;
        for c in 0..d {
            for r in c..d {
                let v = hyper.lambda[(r, c)] + alpha * self.precision[(r, c)];
                self.precision[(r, c)] = v;
                self.precision[(c, r)] = v;
            }
        }
        self.rhs *= alpha;
        self.rhs += prior_rhs;
    }
}

fn check_block(
    factors: &LatentFactors,
    index: &ObservationIndex,
    hyper: &FactorHyperState,
) -> Result<()> {
    if factors.n_objects() != index.n_objects() || factors.n_relations() != index.n_relations() {
        return Err(Error::DimensionMismatch(format!(
            "factors are {}x{}, observations are {}x{}",
            factors.n_objects(),
            factors.n_relations(),
            index.n_objects(),
            index.n_relations()
        )));
    }
    let d = factors.rank();
    if hyper.mu.len() != d || hyper.lambda.nrows() != d || hyper.lambda.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "hyper state has dimension {}, factors have rank {d}",
            hyper.mu.len()
        )));
    }
    Ok(())
}

/// Conditional mean and precision of row `row` of `block`.
pub fn row_posterior(
    factors: &LatentFactors,
    index: &ObservationIndex,
    block: Block,
    row: usize,
    hyper: &FactorHyperState,
) -> Result<RowPosterior> {
    check_block(factors, index, hyper)?;
    if row >= index.rows(block) {
        return Err(Error::DimensionMismatch(format!(
            "row {row} out of range for {block:?}"
        )));
    }
    let prior_rhs = &hyper.lambda * &hyper.mu;
    let mut acc = RowAccumulator::new(factors.rank());
    acc.accumulate(
        factors,
        block,
        index.row_entries(block, row),
        hyper,
        &prior_rhs,
    );
    let chol = cholesky_with_jitter(&acc.precision, "row posterior precision")?;
    let mean = chol.solve(&acc.rhs);
    Ok(RowPosterior {
        precision: acc.precision,
        mean,
    })
}

/// Draws every row of `block` from its conditional; rows are independent
/// given the other two factors.
pub fn sample_rows<R: Rng + ?Sized>(
    factors: &LatentFactors,
    index: &ObservationIndex,
    block: Block,
    hyper: &FactorHyperState,
    rng: &mut R,
) -> Result<FactorMatrix> {
    check_block(factors, index, hyper)?;
    let d = factors.rank();
    let rows = index.rows(block);
    let prior_rhs = &hyper.lambda * &hyper.mu;
    let mut acc = RowAccumulator::new(d);
    let mut out = FactorMatrix::zeros(rows, d);
    for row in 0..rows {
        acc.accumulate(
            factors,
            block,
            index.row_entries(block, row),
            hyper,
            &prior_rhs,
        );
        let chol = cholesky_with_jitter(&acc.precision, "row posterior precision")?;
        let mean = chol.solve(&acc.rhs);
        let draw = sample_mvn_precision(&mean, &chol, rng);
        out.row_mut(row).copy_from_slice(draw.as_slice());
    }
    Ok(out)
}

/// New `U` given `V`, `R`, `alpha` and `(mu_U, Lambda_U)`.
pub fn sample_u_rows<R: Rng + ?Sized>(
    factors: &LatentFactors,
    index: &ObservationIndex,
    hyper: &FactorHyperState,
    rng: &mut R,
) -> Result<FactorMatrix> {
    sample_rows(factors, index, Block::Sender, hyper, rng)
}

/// New `V` given `U`, `R`, `alpha` and `(mu_V, Lambda_V)`.
pub fn sample_v_rows<R: Rng + ?Sized>(
    factors: &LatentFactors,
    index: &ObservationIndex,
    hyper: &FactorHyperState,
    rng: &mut R,
) -> Result<FactorMatrix> {
    sample_rows(factors, index, Block::Receiver, hyper, rng)
}

/// New `R` given `U`, `V`, `alpha` and `(mu_R, Lambda_R)`.
pub fn sample_r_rows<R: Rng + ?Sized>(
    factors: &LatentFactors,
    index: &ObservationIndex,
    hyper: &FactorHyperState,
    rng: &mut R,
) -> Result<FactorMatrix> {
    sample_rows(factors, index, Block::Relation, hyper, rng)
}
