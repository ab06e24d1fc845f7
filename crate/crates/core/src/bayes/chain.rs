//! Gibbs sweeps, chains and predictive averaging.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::conditionals::{alpha_posterior_entries, sample_factor_hypers, sample_rows};
use super::index::{Block, ObservationIndex};
use super::priors::{FactorHyperState, HyperPriors};
use crate::model::{gaussian_log_likelihood, LatentFactors, ModelConfig};
use crate::rng::{substream, Stream};
use crate::tensor::{FiberKey, RelationalTensor};
use crate::{Error, FactorMatrix, Result};

/// Starting point of a chain.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainInit {
    /// Factor entries drawn i.i.d. from `N(0, init_scale^2)`.
    Random,
    /// Start from given factors, typically a MAP solution.
    FromFactors(LatentFactors),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// Total number of sweeps `K`.
    pub num_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: ChainInit,
    /// Standard deviation of random initial factors.
    pub init_scale: f64,
    /// Keep `R` fixed at its initial value (all ones for random starts).
    /// Used for the per-slice matrix baseline where `T = 1`.
    pub freeze_relations: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            num_samples: 300,
            burn_in: 50,
            thin: 1,
            seed: 0,
            init: ChainInit::Random,
            init_scale: 0.1,
            freeze_relations: false,
        }
    }
}

impl ChainConfig {
    /// `floor((num_samples - burn_in) / thin)`, zero when burn-in swallows
    /// every sweep.
    pub fn retained_count(&self) -> usize {
        if self.thin == 0 {
            return 0;
        }
        self.num_samples.saturating_sub(self.burn_in) / self.thin
    }

    /// Whether the 1-based sweep `k` is kept.
    pub fn is_retained(&self, k: usize) -> bool {
        k > self.burn_in && (k - self.burn_in).is_multiple_of(self.thin)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be positive".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be positive".into()));
        }
        if self.retained_count() == 0 {
            return Err(Error::InvalidConfig(format!(
                "no retained draws: num_samples {} burn_in {} thin {}",
                self.num_samples, self.burn_in, self.thin
            )));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "init_scale {} is invalid",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// What a sweep updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    pub freeze_relations: bool,
}

/// Full sampler state: factors, their row-prior hyperparameters, and the
/// log-likelihood recorded by the last sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub factors: LatentFactors,
    pub hyper_u: FactorHyperState,
    pub hyper_v: FactorHyperState,
    pub hyper_r: FactorHyperState,
    pub log_likelihood: f64,
}

impl ChainState {
    /// State with standard-normal row priors; the first sweep replaces them.
    pub fn new(factors: LatentFactors) -> Self {
        let d = factors.rank();
        Self {
            factors,
            hyper_u: FactorHyperState::standard(d),
            hyper_v: FactorHyperState::standard(d),
            hyper_r: FactorHyperState::standard(d),
            log_likelihood: f64::NAN,
        }
    }
}

/// Factors with i.i.d. `N(0, scale^2)` entries and `alpha` at the prior mean
/// `shape * scale`. With `unit_relations`, `R` is all ones.
pub fn random_factors<R: Rng + ?Sized>(
    n_objects: usize,
    n_relations: usize,
    priors: &HyperPriors,
    scale: f64,
    unit_relations: bool,
    rng: &mut R,
) -> Result<LatentFactors> {
    let d = priors.rank();
    let mut draw = |rows: usize| {
        FactorMatrix::from_fn(rows, d, |_, _| {
            let z: f64 = StandardNormal.sample(&mut *rng);
            scale * z
        })
    };
    let u = draw(n_objects);
    let v = draw(n_objects);
    let r = if unit_relations {
        FactorMatrix::from_fn(n_relations, d, |_, _| 1.0)
    } else {
        draw(n_relations)
    };
    LatentFactors::new(u, v, r, priors.shape * priors.scale)
}

fn sweep_log_likelihood(factors: &LatentFactors, index: &ObservationIndex) -> f64 {
    let sse: f64 = index
        .entries()
        .iter()
        .map(|e| {
            let r = e.y() - factors.cp(e.i, e.j, e.t);
            r * r
        })
        .sum();
    gaussian_log_likelihood(index.entries().len(), sse, factors.alpha)
}

/// One sweep: `alpha`, then the hyperparameters of `U`, `V`, `R`, then the
/// rows of `U`, `V`, `R`, each conditioned on the newest values. Records the
/// identity-link log-likelihood of the updated state.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    index: &ObservationIndex,
    priors: &HyperPriors,
    options: SweepOptions,
    rng: &mut R,
) -> Result<()> {
    let f = &mut state.factors;
    if f.n_objects() != index.n_objects() || f.n_relations() != index.n_relations() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{}, observations are {}x{}",
            f.n_objects(),
            f.n_relations(),
            index.n_objects(),
            index.n_relations()
        )));
    }
    if f.rank() != priors.rank() {
        return Err(Error::DimensionMismatch(format!(
            "state rank {} but prior rank {}",
            f.rank(),
            priors.rank()
        )));
    }

    f.alpha = alpha_posterior_entries(f, index.entries(), priors).sample(rng);
    state.hyper_u = sample_factor_hypers(&f.u, priors, priors.kappa0, rng)?;
    state.hyper_v = sample_factor_hypers(&f.v, priors, priors.kappa0, rng)?;
    if !options.freeze_relations {
        state.hyper_r = sample_factor_hypers(&f.r, priors, priors.kappa_t, rng)?;
    }
    f.u = sample_rows(f, index, Block::Sender, &state.hyper_u, rng)?;
    f.v = sample_rows(f, index, Block::Receiver, &state.hyper_v, rng)?;
    if !options.freeze_relations {
        f.r = sample_rows(f, index, Block::Relation, &state.hyper_r, rng)?;
    }
    if !f.is_finite() {
        return Err(Error::NotPositiveDefinite("non-finite factor draw"));
    }
    state.log_likelihood = sweep_log_likelihood(f, index);
    Ok(())
}

fn initial_state(
    tensor: &RelationalTensor,
    priors: &HyperPriors,
    config: &ChainConfig,
) -> Result<ChainState> {
    let factors = match &config.init {
        ChainInit::Random => {
            let mut rng = substream(config.seed, Stream::ChainInit);
            random_factors(
                tensor.n_objects(),
                tensor.n_relations(),
                priors,
                config.init_scale,
                config.freeze_relations,
                &mut rng,
            )?
        }
        ChainInit::FromFactors(f) => {
            f.check_shape(tensor)?;
            if f.rank() != priors.rank() {
                return Err(Error::DimensionMismatch(format!(
                    "initial factors have rank {} but priors have rank {}",
                    f.rank(),
                    priors.rank()
                )));
            }
            if !f.is_finite() {
                return Err(Error::InvalidConfig(
                    "initial factors are not finite".into(),
                ));
            }
            f.clone()
        }
    };
    Ok(ChainState::new(factors))
}

/// Runs `num_samples` sweeps and calls `visit(sweep, state)` for each
/// retained one (sweeps are numbered from 1). Returns the per-sweep
/// log-likelihood trace.
///
/// Sampling always uses the identity link; `model` only fixes the rank.
pub fn run_chain_with(
    tensor: &RelationalTensor,
    model: &ModelConfig,
    priors: &HyperPriors,
    config: &ChainConfig,
    mut visit: impl FnMut(usize, &ChainState) -> Result<()>,
) -> Result<Vec<f64>> {
    model.validate()?;
    priors.validate()?;
    config.validate()?;
    if model.rank != priors.rank() {
        return Err(Error::DimensionMismatch(format!(
            "model rank {} but prior rank {}",
            model.rank,
            priors.rank()
        )));
    }
    let index = ObservationIndex::new(tensor);
    let mut state = initial_state(tensor, priors, config)?;
    let options = SweepOptions {
        freeze_relations: config.freeze_relations,
    };
    let mut rng = substream(config.seed, Stream::Gibbs);
    let mut trace = Vec::with_capacity(config.num_samples);
    for k in 1..=config.num_samples {
        gibbs_sweep(&mut state, &index, priors, options, &mut rng)?;
        trace.push(state.log_likelihood);
        if config.is_retained(k) {
            visit(k, &state)?;
        }
    }
    Ok(trace)
}

/// Runs a chain and keeps every retained draw.
pub fn run_chain(
    tensor: &RelationalTensor,
    model: &ModelConfig,
    priors: &HyperPriors,
    config: &ChainConfig,
) -> Result<SampleSet> {
    let mut draws = Vec::with_capacity(config.retained_count());
    let trace = run_chain_with(tensor, model, priors, config, |_, s| {
        draws.push(s.factors.clone());
        Ok(())
    })?;
    SampleSet::new(draws, trace)
}

/// Retained posterior draws and the chain's log-likelihood trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    draws: Vec<LatentFactors>,
    log_likelihoods: Vec<f64>,
}

impl SampleSet {
    /// All draws must share one shape and have finite entries.
    pub fn new(draws: Vec<LatentFactors>, log_likelihoods: Vec<f64>) -> Result<Self> {
        let Some(first) = draws.first() else {
            return Err(Error::EmptySampleSet);
        };
        let shape = (first.n_objects(), first.n_relations(), first.rank());
        for (k, d) in draws.iter().enumerate() {
            if (d.n_objects(), d.n_relations(), d.rank()) != shape {
                return Err(Error::DimensionMismatch(format!(
                    "draw {k} differs in shape from draw 0"
                )));
            }
            if !d.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "draw {k} has non-finite entries"
                )));
            }
        }
        Ok(Self {
            draws,
            log_likelihoods,
        })
    }

    pub fn draws(&self) -> &[LatentFactors] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Log-likelihood after every sweep, retained or not.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    pub fn n_objects(&self) -> usize {
        self.draws[0].n_objects()
    }

    pub fn n_relations(&self) -> usize {
        self.draws[0].n_relations()
    }

    pub fn rank(&self) -> usize {
        self.draws[0].rank()
    }

    /// Average over draws of the clamped per-draw prediction of one entry.
    pub fn predict_entry(&self, i: usize, j: usize, t: usize, model: &ModelConfig) -> Result<f64> {
        let mut acc = PredictiveAccumulator::new(alloc::vec![(i, j, t)], *model);
        for d in &self.draws {
            acc.add(d)?;
        }
        Ok(acc.mean()?[0])
    }

    /// Predictive mean of the whole link pattern of `key`, each position in
    /// `[0, 1]`.
    pub fn predictive_mean(&self, key: FiberKey, model: &ModelConfig) -> Result<Vec<f64>> {
        let keys = (0..self.n_relations()).map(|t| (key.i, key.j, t)).collect();
        let mut acc = PredictiveAccumulator::new(keys, *model);
        for d in &self.draws {
            acc.add(d)?;
        }
        acc.mean()
    }
}

/// Streaming predictive mean over a fixed list of entries, so a chain can be
/// scored without keeping its draws.
#[derive(Debug, Clone)]
pub struct PredictiveAccumulator {
    keys: Vec<(usize, usize, usize)>,
    model: ModelConfig,
    sums: Vec<f64>,
    count: usize,
}

impl PredictiveAccumulator {
    pub fn new(keys: Vec<(usize, usize, usize)>, model: ModelConfig) -> Self {
        let sums = vec![0.0; keys.len()];
        Self {
            keys,
            model,
            sums,
            count: 0,
        }
    }

    /// Adds one draw's predictions, passed through the model link and
    /// clamped to `[0, 1]`.
    pub fn add(&mut self, factors: &LatentFactors) -> Result<()> {
        for (s, &(i, j, t)) in self.sums.iter_mut().zip(&self.keys) {
            *s += factors.predict_entry(i, j, t, &self.model)?.clamp(0.0, 1.0);
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn keys(&self) -> &[(usize, usize, usize)] {
        &self.keys
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::EmptySampleSet);
        }
        let k = self.count as f64;
        Ok(self.sums.iter().map(|s| s / k).collect())
    }
}
