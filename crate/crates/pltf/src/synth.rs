//! Synthetic tensors drawn from the hierarchical generative model.

use nalgebra::DVector;
use pltf_core::bayes::dist::{cholesky_with_jitter, sample_mvn_precision, sample_wishart};
use pltf_core::bayes::{FactorHyperState, HyperPriors};
use pltf_core::rng::{substream, Stream};
use pltf_core::{logistic, FactorMatrix, LatentFactors, RelationalTensor};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_objects: usize,
    pub n_relations: usize,
    pub rank: usize,
    /// Fraction of the `N * N * T` entries that are observed.
    pub observed_fraction: f64,
    pub priors: HyperPriors,
    /// An entry is 1 when the logistic of its real value exceeds this.
    pub threshold: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(n_objects: usize, n_relations: usize, rank: usize, seed: u64) -> Self {
        Self {
            n_objects,
            n_relations,
            rank,
            observed_fraction: 1.0,
            priors: HyperPriors::defaults(rank),
            threshold: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_objects == 0 || self.n_relations == 0 || self.rank == 0 {
            return Err(Error::Config("N, T and the rank must be positive".into()));
        }
        if !(self.observed_fraction > 0.0 && self.observed_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "observed fraction must be in (0, 1], got {}",
                self.observed_fraction
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        if self.priors.rank() != self.rank {
            return Err(Error::Config(format!(
                "priors have rank {}, spec has rank {}",
                self.priors.rank(),
                self.rank
            )));
        }
        self.priors.validate()?;
        Ok(())
    }
}

/// Ground truth and the dense real-valued tensor before binarization,
/// indexed `(i * N + j) * T + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDraw {
    pub truth: LatentFactors,
    pub hypers: [FactorHyperState; 3],
    pub values: Vec<f64>,
}

fn draw_hypers<R: Rng>(priors: &HyperPriors, kappa: f64, rng: &mut R) -> Result<FactorHyperState> {
    let w0 = cholesky_with_jitter(&priors.w0, "W0")?;
    let lambda = sample_wishart(&w0, priors.nu0, rng)?;
    let mean_precision = cholesky_with_jitter(&(&lambda * kappa), "hyperprior mean precision")?;
    let mu = sample_mvn_precision(&priors.mu0, &mean_precision, rng);
    Ok(FactorHyperState { mu, lambda })
}

fn draw_rows<R: Rng>(hyper: &FactorHyperState, rows: usize, rng: &mut R) -> Result<FactorMatrix> {
    let chol = cholesky_with_jitter(&hyper.lambda, "row prior precision")?;
    let mut m = FactorMatrix::zeros(rows, hyper.mu.len());
    for r in 0..rows {
        let x: DVector<f64> = sample_mvn_precision(&hyper.mu, &chol, rng);
        m.row_mut(r).copy_from_slice(x.as_slice());
    }
    Ok(m)
}

/// Draws `(mu, Lambda)` for each factor, the factor rows, `alpha`, and every
/// real entry `CP + N(0, 1/alpha)`.
pub fn generate_latent(spec: &SynthSpec) -> Result<LatentDraw> {
    spec.validate()?;
    let p = &spec.priors;
    let mut rng = substream(spec.seed, Stream::Synthetic);
    let hu = draw_hypers(p, p.kappa0, &mut rng)?;
    let hv = draw_hypers(p, p.kappa0, &mut rng)?;
    let hr = draw_hypers(p, p.kappa_t, &mut rng)?;
    let u = draw_rows(&hu, spec.n_objects, &mut rng)?;
    let v = draw_rows(&hv, spec.n_objects, &mut rng)?;
    let r = draw_rows(&hr, spec.n_relations, &mut rng)?;
    let alpha = Gamma::new(p.shape, p.scale)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(&mut rng)
        .max(f64::MIN_POSITIVE);
    let truth = LatentFactors::new(u, v, r, alpha)?;
    let noise = Normal::new(0.0, 1.0 / alpha.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let (n, t) = (spec.n_objects, spec.n_relations);
    let mut values = Vec::with_capacity(n * n * t);
    for i in 0..n {
        for j in 0..n {
            for k in 0..t {
                values.push(truth.reconstruct_entry(i, j, k)? + noise.sample(&mut rng));
            }
        }
    }
    Ok(LatentDraw {
        truth,
        hypers: [hu, hv, hr],
        values,
    })
}

/// Binarizes a latent draw at `spec.threshold` and keeps a uniformly random
/// subset of `round(observed_fraction * N * N * T)` entries.
pub fn observe(spec: &SynthSpec, draw: &LatentDraw) -> Result<RelationalTensor> {
    let (n, t) = (spec.n_objects, spec.n_relations);
    let total = n * n * t;
    let keep = ((spec.observed_fraction * total as f64).round() as usize).clamp(1, total);
    let mut rng = substream(spec.seed, Stream::Observation);
    let mut chosen = rand::seq::index::sample(&mut rng, total, keep).into_vec();
    chosen.sort_unstable();
    let triples = chosen.into_iter().map(|flat| {
        let (pair, k) = (flat / t, flat % t);
        let value = u8::from(logistic(draw.values[flat]) > spec.threshold);
        (pair / n, pair % n, k, value)
    });
    Ok(RelationalTensor::build(n, t, triples)?)
}

/// Observed binary tensor plus the factors that generated it.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(RelationalTensor, LatentFactors)> {
    let draw = generate_latent(spec)?;
    let tensor = observe(spec, &draw)?;
    Ok((tensor, draw.truth))
}
