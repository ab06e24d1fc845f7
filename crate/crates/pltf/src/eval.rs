//! Hold-out evaluation: fiber splits, AUC, and the method comparisons.

use std::time::Instant;

use pltf_core::bayes::{
    run_chain_with, ChainConfig, ChainInit, HyperPriors, PredictiveAccumulator,
};
use pltf_core::map::{fit_map, MapConfig};
use pltf_core::rng::{substream, Stream};
use pltf_core::{Entry, LatentFactors, ModelConfig, RelationalTensor};

use crate::{Error, Result};

/// Area under the ROC curve by the Mann-Whitney statistic with midranks:
/// `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::UndefinedMetric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric(format!(
            "need both classes, got {positives} positive and {negatives} negative"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks are 1-based; a tie group spanning ranks lo..=hi gets (lo + hi) / 2
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&k| labels[k]).count();
        rank_sum += midrank * pos_in_group as f64;
        start = end;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Fraction of observed fibers hidden for testing, and the seed choosing them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

/// Hides a uniformly random `round(test_fraction * fibers)` of the observed
/// fibers. Returns `(train, test)`.
pub fn split_fibers(
    tensor: &RelationalTensor,
    spec: &SplitSpec,
) -> Result<(RelationalTensor, RelationalTensor)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "test fraction must be in (0, 1), got {}",
            spec.test_fraction
        )));
    }
    let fibers = tensor.observed_fibers();
    if fibers.len() < 2 {
        return Err(Error::DegenerateSplit(format!(
            "need at least 2 observed fibers, found {}",
            fibers.len()
        )));
    }
    let k = (spec.test_fraction * fibers.len() as f64).round() as usize;
    if k == 0 || k == fibers.len() {
        return Err(Error::DegenerateSplit(format!(
            "fraction {} of {} fibers leaves an empty side",
            spec.test_fraction,
            fibers.len()
        )));
    }
    let mut rng = substream(spec.seed, Stream::Split);
    let mut picked = rand::seq::index::sample(&mut rng, fibers.len(), k).into_vec();
    picked.sort_unstable();
    Ok(tensor.hide_fibers(picked.into_iter().map(|p| fibers[p]))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// MAP factors with the logistic link.
    Pltf,
    /// Gibbs sampler from random factors.
    HbRandom,
    /// Gibbs sampler started from an identity-link MAP fit.
    HbWarm,
    /// Gibbs sampler run separately on every relation slice.
    Baseline,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Pltf,
        Method::HbRandom,
        Method::HbWarm,
        Method::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pltf => "pltf",
            Method::HbRandom => "hb-r",
            Method::HbWarm => "hb-t",
            Method::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected pltf, hb-r, hb-t or baseline)"
                ))
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How test entries of different relations are combined into one AUC.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Pooling {
    /// All test entries ranked together.
    #[default]
    Pooled,
    /// Mean of per-relation AUCs over relations with both classes.
    Macro,
}

/// Hyperprior settings that scale with the rank: `mu0 = 0`, `W0 = w0_scale * I`
/// and `nu0` defaulting to the rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSettings {
    pub shape: f64,
    pub scale: f64,
    pub kappa0: f64,
    pub kappa_t: f64,
    pub w0_scale: f64,
    pub nu0: Option<f64>,
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self {
            shape: 5.0,
            scale: 1.0,
            kappa0: 2.0,
            kappa_t: 1.0,
            w0_scale: 1.0,
            nu0: None,
        }
    }
}

impl PriorSettings {
    pub fn priors(&self, rank: usize) -> Result<HyperPriors> {
        let mut p = HyperPriors::defaults(rank);
        p.shape = self.shape;
        p.scale = self.scale;
        p.kappa0 = self.kappa0;
        p.kappa_t = self.kappa_t;
        p.w0 *= self.w0_scale;
        p.nu0 = self.nu0.unwrap_or(rank as f64);
        p.validate()?;
        Ok(p)
    }
}

/// Training settings shared by every method. Seeds and initializations are
/// set per run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub rank: usize,
    pub map: MapConfig,
    pub chain: ChainConfig,
    pub priors: PriorSettings,
    pub pooling: Pooling,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            map: MapConfig::default(),
            chain: ChainConfig::default(),
            priors: PriorSettings::default(),
            pooling: Pooling::Pooled,
        }
    }
}

impl EvalConfig {
    pub fn with_rank(&self, rank: usize) -> Self {
        Self {
            rank,
            ..self.clone()
        }
    }
}

/// One scored method on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Method name, with a `+rel<t>` suffix for ablation runs.
    pub method: String,
    pub split: SplitSpec,
    pub rank: usize,
    pub repeat: usize,
    pub auc: f64,
    pub wall_time_s: f64,
}

fn test_keys(test: &RelationalTensor) -> Vec<(usize, usize, usize)> {
    test.entries().iter().map(|e| (e.i, e.j, e.t)).collect()
}

fn map_fit(
    train: &RelationalTensor,
    config: &EvalConfig,
    logistic: bool,
    seed: u64,
) -> Result<LatentFactors> {
    let model = ModelConfig {
        rank: config.rank,
        use_logistic: logistic,
    };
    let map = MapConfig {
        seed,
        ..config.map.clone()
    };
    Ok(fit_map(train, &model, &map)?.0)
}

fn chain_scores(
    train: &RelationalTensor,
    keys: Vec<(usize, usize, usize)>,
    config: &EvalConfig,
    init: ChainInit,
    freeze_relations: bool,
    seed: u64,
) -> Result<Vec<f64>> {
    let model = ModelConfig::bayes(config.rank);
    let priors = config.priors.priors(config.rank)?;
    let chain = ChainConfig {
        seed,
        init,
        freeze_relations,
        ..config.chain.clone()
    };
    let mut acc = PredictiveAccumulator::new(keys, model);
    run_chain_with(train, &model, &priors, &chain, |_, state| {
        acc.add(&state.factors)
    })?;
    Ok(acc.mean()?)
}

/// Scores of the per-slice baseline for every test entry, in test order.
/// Each relation is fit on its own `T = 1` slice with `R` fixed to ones.
pub fn baseline_scores(
    train: &RelationalTensor,
    test: &RelationalTensor,
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut scores = vec![f64::NAN; test.observed_count()];
    for t in 0..train.n_relations() {
        let positions: Vec<usize> = (0..test.observed_count())
            .filter(|&k| test.entries()[k].t == t)
            .collect();
        if positions.is_empty() {
            continue;
        }
        let slice = train.slice(t)?.to_tensor();
        let keys = positions
            .iter()
            .map(|&k| {
                let e = test.entries()[k];
                (e.i, e.j, 0)
            })
            .collect();
        let slice_scores = chain_scores(&slice, keys, config, ChainInit::Random, true, seed)?;
        for (k, s) in positions.into_iter().zip(slice_scores) {
            scores[k] = s;
        }
    }
    Ok(scores)
}

/// Trains `method` on `train` and scores every observed entry of `test`, in
/// test order. Only the positions of test entries are read, never their
/// values.
pub fn score_method(
    method: Method,
    train: &RelationalTensor,
    test: &RelationalTensor,
    config: &EvalConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    match method {
        Method::Pltf => {
            let model = ModelConfig::map(config.rank);
            let f = map_fit(train, config, true, seed)?;
            test.entries()
                .iter()
                .map(|e| Ok(f.predict_entry(e.i, e.j, e.t, &model)?))
                .collect()
        }
        Method::HbRandom => chain_scores(
            train,
            test_keys(test),
            config,
            ChainInit::Random,
            false,
            seed,
        ),
        Method::HbWarm => {
            let start = map_fit(train, config, false, seed)?;
            chain_scores(
                train,
                test_keys(test),
                config,
                ChainInit::FromFactors(start),
                false,
                seed,
            )
        }
        Method::Baseline => baseline_scores(train, test, config, seed),
    }
}

fn labels(entries: &[Entry]) -> Vec<bool> {
    entries.iter().map(|e| e.value).collect()
}

/// AUC of externally produced `scores` (one per test entry, in test order).
pub fn evaluate_scores(scores: &[f64], test: &RelationalTensor, pooling: Pooling) -> Result<f64> {
    if scores.len() != test.observed_count() {
        return Err(Error::UndefinedMetric(format!(
            "{} scores for {} test entries",
            scores.len(),
            test.observed_count()
        )));
    }
    match pooling {
        Pooling::Pooled => auc(scores, &labels(test.entries())),
        Pooling::Macro => {
            let mut per_relation = Vec::new();
            for t in 0..test.n_relations() {
                let (s, l): (Vec<f64>, Vec<bool>) = test
                    .entries()
                    .iter()
                    .zip(scores)
                    .filter(|(e, _)| e.t == t)
                    .map(|(e, &s)| (s, e.value))
                    .unzip();
                if l.iter().any(|&x| x) && l.iter().any(|&x| !x) {
                    per_relation.push(auc(&s, &l)?);
                }
            }
            if per_relation.is_empty() {
                return Err(Error::UndefinedMetric(
                    "no relation has both classes in the test set".into(),
                ));
            }
            Ok(per_relation.iter().sum::<f64>() / per_relation.len() as f64)
        }
    }
}

/// Trains on `train`, scores `test` and reports one AUC. The split seed
/// also seeds training.
pub fn evaluate_method(
    method: Method,
    train: &RelationalTensor,
    test: &RelationalTensor,
    split: &SplitSpec,
    config: &EvalConfig,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    let scores = score_method(method, train, test, config, split.seed)?;
    let auc = evaluate_scores(&scores, test, config.pooling)?;
    Ok(ExperimentResult {
        method: method.name().to_string(),
        split: *split,
        rank: config.rank,
        repeat: 0,
        auc,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// The per-slice baseline as an experiment result.
pub fn baseline_per_slice(
    train: &RelationalTensor,
    test: &RelationalTensor,
    split: &SplitSpec,
    config: &EvalConfig,
) -> Result<ExperimentResult> {
    evaluate_method(Method::Baseline, train, test, split, config)
}

/// One result per rank per method on a fixed split, ranks outermost.
pub fn dimension_sweep(
    train: &RelationalTensor,
    test: &RelationalTensor,
    split: &SplitSpec,
    ranks: &[usize],
    methods: &[Method],
    config: &EvalConfig,
) -> Result<Vec<ExperimentResult>> {
    let mut out = Vec::with_capacity(ranks.len() * methods.len());
    for &rank in ranks {
        let c = config.with_rank(rank);
        for &m in methods {
            out.push(evaluate_method(m, train, test, split, &c)?);
        }
    }
    Ok(out)
}

/// Effect of restoring one relation's held-out entries to the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct RestoredRelation {
    pub relation: usize,
    /// AUC on the test entries of the other relations.
    pub result: ExperimentResult,
    /// AUC of the unmodified run on those same entries.
    pub baseline_auc: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ablation {
    /// Plain run on the full split.
    pub baseline: ExperimentResult,
    pub restored: Vec<RestoredRelation>,
}

impl Ablation {
    /// Relations ordered by decreasing AUC gain, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut r: Vec<&RestoredRelation> = self.restored.iter().collect();
        r.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.relation.cmp(&b.relation)));
        r.into_iter().map(|x| x.relation).collect()
    }

    /// All `T + 1` results, baseline first.
    pub fn results(&self) -> Vec<ExperimentResult> {
        std::iter::once(self.baseline.clone())
            .chain(self.restored.iter().map(|r| r.result.clone()))
            .collect()
    }
}

/// For each relation `t`: move the held-out entries of `t` into training and
/// score the remaining test entries. The gain is measured against the plain
/// run's scores on the same remaining entries.
pub fn relation_ablation(
    method: Method,
    train: &RelationalTensor,
    test: &RelationalTensor,
    split: &SplitSpec,
    config: &EvalConfig,
) -> Result<Ablation> {
    if train.n_relations() < 2 {
        return Err(Error::Config(
            "relation ablation needs at least 2 relations".into(),
        ));
    }
    let start = Instant::now();
    let base_scores = score_method(method, train, test, config, split.seed)?;
    let baseline = ExperimentResult {
        method: method.name().to_string(),
        split: *split,
        rank: config.rank,
        repeat: 0,
        auc: evaluate_scores(&base_scores, test, config.pooling)?,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut restored = Vec::with_capacity(train.n_relations());
    for t in 0..train.n_relations() {
        let start = Instant::now();
        let (extra, remaining) = test.partition(|e| e.t == t);
        let augmented = train.union(&extra)?;
        let kept: Vec<f64> = test
            .entries()
            .iter()
            .zip(&base_scores)
            .filter(|(e, _)| e.t != t)
            .map(|(_, &s)| s)
            .collect();
        let baseline_auc = evaluate_scores(&kept, &remaining, config.pooling)?;
        let scores = score_method(method, &augmented, &remaining, config, split.seed)?;
        let auc = evaluate_scores(&scores, &remaining, config.pooling)?;
        restored.push(RestoredRelation {
            relation: t,
            result: ExperimentResult {
                method: format!("{}+rel{t}", method.name()),
                split: *split,
                rank: config.rank,
                repeat: 0,
                auc,
                wall_time_s: start.elapsed().as_secs_f64(),
            },
            baseline_auc,
            gain: auc - baseline_auc,
        });
    }
    Ok(Ablation { baseline, restored })
}
