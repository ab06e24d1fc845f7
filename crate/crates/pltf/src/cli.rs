//! The `pltf` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use pltf_core::bayes::{run_chain, ChainConfig, ChainInit};
use pltf_core::map::{fit_map, MapConfig, OptTrace};
use pltf_core::{FiberKey, ModelConfig};

use crate::config_file::{load_config, RESERVED_PREFIX};
use crate::eval::{EvalConfig, Method, Pooling, PriorSettings};
use crate::experiment::{
    format_ablation_csv, format_csv, relation_ranking, run_plan, summarize, Plan,
};
use crate::factor_file::{load_factor_file, save_factor_file, DumpKind, FactorDump};
use crate::fsutil::{read_to_string, write_atomic};
use crate::manifest::{manifest_path, RunManifest};
use crate::synth::{generate_synthetic, SynthSpec};
use crate::triples::{load_triples, save_triples};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "pltf",
    version,
    about = "Multi-relational link pattern prediction by probabilistic tensor factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit MAP factors by conjugate gradient.
    FitMap(FitMapArgs),
    /// Draw posterior samples with the Gibbs sampler.
    Sample(SampleArgs),
    /// Run hold-out experiments and write a results CSV.
    Evaluate(EvaluateArgs),
    /// Score the link patterns of listed object pairs.
    Predict(PredictArgs),
    /// Generate a synthetic tensor and its ground-truth factors.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Link {
    Logistic,
    Identity,
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Regularization weight for all three factors.
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    /// Overrides --gamma for U.
    #[arg(long)]
    gamma_u: Option<f64>,
    /// Overrides --gamma for V.
    #[arg(long)]
    gamma_v: Option<f64>,
    /// Overrides --gamma for R.
    #[arg(long)]
    gamma_r: Option<f64>,
    /// Conjugate-gradient iteration limit.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Stop when the objective decreases by less than this fraction.
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
}

impl MapArgs {
    fn config(&self, seed: u64, init_scale: f64) -> MapConfig {
        MapConfig {
            gamma_u: self.gamma_u.unwrap_or(self.gamma),
            gamma_v: self.gamma_v.unwrap_or(self.gamma),
            gamma_r: self.gamma_r.unwrap_or(self.gamma),
            max_iterations: self.max_iter,
            rel_tolerance: self.rel_tol,
            seed,
            init_scale,
            ..MapConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Total Gibbs sweeps.
    #[arg(long, default_value_t = 300)]
    samples: usize,
    /// Sweeps discarded before retaining draws.
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    /// Keep every n-th sweep after burn-in.
    #[arg(long, default_value_t = 1)]
    thin: usize,
}

#[derive(Debug, Args)]
struct PriorArgs {
    /// Gamma shape of the noise-precision prior.
    #[arg(long, default_value_t = 5.0)]
    prior_shape: f64,
    /// Gamma scale of the noise-precision prior.
    #[arg(long, default_value_t = 1.0)]
    prior_scale: f64,
    /// Mean-precision multiplier for the object factors.
    #[arg(long, default_value_t = 2.0)]
    kappa0: f64,
    /// Mean-precision multiplier for the relation factor.
    #[arg(long, default_value_t = 1.0)]
    kappa_t: f64,
    /// Wishart scale matrix is this multiple of the identity.
    #[arg(long, default_value_t = 1.0)]
    w0_scale: f64,
    /// Wishart degrees of freedom [default: the rank].
    #[arg(long)]
    nu0: Option<f64>,
}

impl PriorArgs {
    fn settings(&self) -> PriorSettings {
        PriorSettings {
            shape: self.prior_shape,
            scale: self.prior_scale,
            kappa0: self.kappa0,
            kappa_t: self.kappa_t,
            w0_scale: self.w0_scale,
            nu0: self.nu0,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct FitMapArgs {
    /// Read flags from a key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Triple file to fit.
    #[arg(long)]
    input: PathBuf,
    /// Latent dimension D.
    #[arg(long, default_value_t = 10)]
    rank: usize,
    /// Link between the CP reconstruction and the prediction.
    #[arg(long, value_enum, default_value_t = Link::Logistic)]
    link: Link,
    #[command(flatten)]
    map: MapArgs,
    /// Standard deviation of the random initial factors.
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Factor file to write.
    #[arg(long)]
    out: PathBuf,
    /// Optimizer trace CSV [default: <out>.trace.csv].
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SampleArgs {
    /// Read flags from a key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Triple file to sample from.
    #[arg(long)]
    input: PathBuf,
    /// Latent dimension D [default: 10, or the rank of --init map:<file>].
    #[arg(long)]
    rank: Option<usize>,
    /// `random`, or `map:<file>` to start from a fitted factor file.
    #[arg(long, default_value = "random")]
    init: String,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    priors: PriorArgs,
    /// Standard deviation of random initial factors.
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample-set file to write.
    #[arg(long)]
    out: PathBuf,
    /// Per-sweep log-likelihood CSV [default: <out>.loglik.csv].
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct EvaluateArgs {
    /// Read flags from a key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Triple file with the full observed data.
    #[arg(long)]
    input: PathBuf,
    /// Dataset name in the CSV [default: input file stem].
    #[arg(long)]
    dataset: Option<String>,
    /// Comma-separated methods: pltf, hb-r, hb-t, baseline.
    #[arg(long, value_delimiter = ',', default_value = "pltf,hb-r,hb-t,baseline")]
    methods: Vec<String>,
    /// Comma-separated fractions of observed fibers held out.
    #[arg(long, value_delimiter = ',', default_value = "0.2")]
    fraction: Vec<f64>,
    /// Repeats per fraction; repeat r uses seed + r.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Latent dimension D.
    #[arg(long, default_value_t = 10)]
    rank: usize,
    /// Comma-separated ranks to sweep instead of --rank.
    #[arg(long, value_delimiter = ',')]
    sweep_ranks: Option<Vec<usize>>,
    /// Also run one restored-relation experiment per relation.
    #[arg(long)]
    ablate_relations: bool,
    /// Average per-relation AUCs instead of pooling all test entries.
    #[arg(long)]
    macro_auc: bool,
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    priors: PriorArgs,
    /// Standard deviation of random initial factors.
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write measured wall times instead of 0.000.
    #[arg(long)]
    record_timing: bool,
    /// Results CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct PredictArgs {
    /// Read flags from a key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Factor file or sample-set file.
    #[arg(long)]
    model: PathBuf,
    /// Text file with one `i j` pair per line.
    #[arg(long)]
    pairs: PathBuf,
    /// Override the link stored in the model file.
    #[arg(long, value_enum)]
    link: Option<Link>,
    /// Output: one line `i j s_0 ... s_{T-1}` per pair.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SynthArgs {
    /// Read flags from a key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of objects N.
    #[arg(long, default_value_t = 50)]
    objects: usize,
    /// Number of relations T.
    #[arg(long, default_value_t = 5)]
    relations: usize,
    /// Rank of the generating factors.
    #[arg(long, default_value_t = 5)]
    rank: usize,
    /// Fraction of all entries that are observed.
    #[arg(long, default_value_t = 1.0)]
    observed_fraction: f64,
    /// An entry is 1 when the logistic of its real value exceeds this.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[command(flatten)]
    priors: PriorArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Triple file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth factor file [default: <out>.truth.pltf].
    #[arg(long)]
    truth: Option<PathBuf>,
}

/// Exit status of a finished invocation.
pub type ExitStatus = u8;

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let mut command = Cli::command();
    let matches = match command.try_get_matches_from_mut(&args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let resolved = resolved_flags(
        command.find_subcommand(name).expect("known subcommand"),
        sub,
    );
    let result = match cli.command {
        Command::FitMap(a) => cmd_fit_map(&a, resolved),
        Command::Sample(a) => cmd_sample(&a, resolved),
        Command::Evaluate(a) => cmd_evaluate(&a, resolved),
        Command::Predict(a) => cmd_predict(&a, resolved),
        Command::Synth(a) => cmd_synth(&a, resolved),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Splices the entries of `--config <file>` in front of the user's flags,
/// so that explicit flags override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    if args.len() < 2 {
        return Ok(args);
    }
    let mut config_path = None;
    for (k, a) in args.iter().enumerate().skip(2) {
        let s = a.to_string_lossy();
        if s == "--config" {
            config_path = args.get(k + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = config_path else {
        return Ok(args);
    };
    let sub_name = args[1].to_string_lossy().to_string();
    let command = Cli::command();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok(args);
    };
    let mut injected = Vec::new();
    for (key, value) in load_config(&path)? {
        if key.starts_with(RESERVED_PREFIX) || key == "config" {
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "{}: unknown key `{key}` for {sub_name}",
                    path.display()
                ))
            })?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => injected.push(OsString::from(format!("--{key}"))),
                "false" => {}
                v => {
                    return Err(Error::Config(format!(
                        "{}: `{key}` must be true or false, got `{v}`",
                        path.display()
                    )))
                }
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// Every flag of the subcommand with its effective value, defaults included.
fn resolved_flags(sub: &clap::Command, matches: &clap::ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || long == "help" || long == "version" {
            continue;
        }
        if let Some(values) = matches.get_raw(arg.get_id().as_str()) {
            let joined: Vec<String> = values.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push((long.to_string(), joined.join(",")));
        }
    }
    out
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn optimizer_trace_csv(trace: &OptTrace) -> String {
    let mut out = String::from("iteration,objective,gradient_norm,step,restarted\n");
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{}",
            r.iteration,
            r.objective,
            r.gradient_norm,
            r.step,
            u8::from(r.restarted)
        );
    }
    let _ = writeln!(out, "# termination={}", trace.termination.as_str());
    out
}

fn cmd_fit_map(a: &FitMapArgs, resolved: Vec<(String, String)>) -> Result<()> {
    let tensor = load_triples(&a.input)?;
    let model = ModelConfig {
        rank: a.rank,
        use_logistic: a.link == Link::Logistic,
    };
    let config = a.map.config(a.seed, a.init_scale);
    let (factors, trace) = fit_map(&tensor, &model, &config)?;
    let objectives = trace.records.iter().map(|r| r.objective).collect();
    save_factor_file(
        &FactorDump::point(factors, model.use_logistic, objectives),
        &a.out,
    )?;
    let trace_path = a
        .trace
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".trace.csv"));
    write_atomic(&trace_path, optimizer_trace_csv(&trace).as_bytes())?;
    eprintln!(
        "fit-map: {} iterations, objective {:.6e}, {}",
        trace.iterations(),
        trace.final_objective(),
        trace.termination.as_str()
    );
    let mut m = RunManifest::new("fit-map", resolved);
    m.inputs.push(a.input.clone());
    m.outputs.extend([a.out.clone(), trace_path]);
    m.write(&manifest_path(&a.out))
}

fn cmd_sample(a: &SampleArgs, resolved: Vec<(String, String)>) -> Result<()> {
    let tensor = load_triples(&a.input)?;
    let mut inputs = vec![a.input.clone()];
    let (init, rank) = if a.init == "random" {
        (ChainInit::Random, a.rank.unwrap_or(10))
    } else if let Some(file) = a.init.strip_prefix("map:") {
        let factors = load_factor_file(file)?.into_factors()?;
        let rank = a.rank.unwrap_or(factors.rank());
        if rank != factors.rank() {
            return Err(Error::Config(format!(
                "--rank {rank} but {file} has rank {}",
                factors.rank()
            )));
        }
        inputs.push(PathBuf::from(file));
        (ChainInit::FromFactors(factors), rank)
    } else {
        return Err(Error::Config(format!(
            "--init must be `random` or `map:<file>`, got `{}`",
            a.init
        )));
    };
    let priors = a.priors.settings().priors(rank)?;
    let chain = ChainConfig {
        num_samples: a.chain.samples,
        burn_in: a.chain.burn_in,
        thin: a.chain.thin,
        seed: a.seed,
        init,
        init_scale: a.init_scale,
        freeze_relations: false,
    };
    chain.validate()?;
    let samples = run_chain(&tensor, &ModelConfig::bayes(rank), &priors, &chain)?;
    save_factor_file(&FactorDump::samples(&samples, false), &a.out)?;
    let trace_path = a
        .trace
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".loglik.csv"));
    let mut csv = String::from("sweep,log_likelihood,retained\n");
    for (k, ll) in samples.log_likelihoods().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{:e},{}",
            k + 1,
            ll,
            u8::from(chain.is_retained(k + 1))
        );
    }
    write_atomic(&trace_path, csv.as_bytes())?;
    eprintln!(
        "sample: {} retained draws of {} sweeps",
        samples.len(),
        chain.num_samples
    );
    let mut m = RunManifest::new("sample", resolved);
    m.inputs = inputs;
    m.outputs.extend([a.out.clone(), trace_path]);
    m.write(&manifest_path(&a.out))
}

fn cmd_evaluate(a: &EvaluateArgs, resolved: Vec<(String, String)>) -> Result<()> {
    let tensor = load_triples(&a.input)?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.trim().parse::<Method>())
        .collect::<Result<Vec<_>>>()?;
    let dataset = a.dataset.clone().unwrap_or_else(|| {
        a.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    });
    if dataset.contains(',') || dataset.contains('\n') {
        return Err(Error::Config(
            "dataset name may not contain commas or newlines".into(),
        ));
    }
    let config = EvalConfig {
        rank: a.rank,
        map: a.map.config(0, a.init_scale),
        chain: ChainConfig {
            num_samples: a.chain.samples,
            burn_in: a.chain.burn_in,
            thin: a.chain.thin,
            init_scale: a.init_scale,
            ..ChainConfig::default()
        },
        priors: a.priors.settings(),
        pooling: if a.macro_auc {
            Pooling::Macro
        } else {
            Pooling::Pooled
        },
    };
    config.chain.validate()?;
    config.map.validate()?;
    let plan = Plan {
        dataset: dataset.clone(),
        methods,
        fractions: a.fraction.clone(),
        ranks: a.sweep_ranks.clone().unwrap_or_else(|| vec![a.rank]),
        repeats: a.repeats,
        base_seed: a.seed,
        config,
        ablate_relations: a.ablate_relations,
        jobs: a.jobs,
    };
    let report = run_plan(&tensor, &plan)?;
    for r in &report.rows {
        if let Err(e) = &r.outcome {
            eprintln!(
                "evaluate: {} fraction {} rank {} seed {} failed: {e}",
                r.method, r.fraction, r.rank, r.seed
            );
        }
    }
    write_atomic(
        &a.out,
        format_csv(&dataset, &report.rows, a.record_timing).as_bytes(),
    )?;
    let mut m = RunManifest::new("evaluate", resolved);
    m.inputs.push(a.input.clone());
    m.outputs.push(a.out.clone());
    if a.ablate_relations {
        let path = with_suffix(&a.out, ".ablation.csv");
        write_atomic(&path, format_ablation_csv(&report.ablation).as_bytes())?;
        for &method in &plan.methods {
            let ranking = relation_ranking(&report.ablation, method);
            let list: Vec<String> = ranking
                .iter()
                .map(|(t, g)| format!("{t} ({g:+.4})"))
                .collect();
            println!("{method} relations by median AUC gain: {}", list.join(", "));
        }
        m.outputs.push(path);
    }
    println!("method,fraction,rank,mean_auc,median_auc,ok,failed");
    for s in summarize(&report.rows) {
        println!(
            "{},{},{},{:.6},{:.6},{},{}",
            s.method, s.fraction, s.rank, s.mean_auc, s.median_auc, s.succeeded, s.failed
        );
    }
    m.write(&manifest_path(&a.out))
}

fn parse_pairs(text: &str, origin: &str, n_objects: usize) -> Result<Vec<FiberKey>> {
    let mut pairs = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: k + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(format!("expected `i j`, found `{line}`")));
        }
        let parse = |f: &str| {
            f.parse::<usize>()
                .map_err(|_| err(format!("`{f}` is not a nonnegative integer")))
        };
        let (i, j) = (parse(fields[0])?, parse(fields[1])?);
        if i >= n_objects || j >= n_objects {
            return Err(err(format!(
                "pair ({i}, {j}) out of range for {n_objects} objects"
            )));
        }
        pairs.push(FiberKey::new(i, j));
    }
    Ok(pairs)
}

fn cmd_predict(a: &PredictArgs, resolved: Vec<(String, String)>) -> Result<()> {
    let dump = load_factor_file(&a.model)?;
    let logistic = a.link.map_or(dump.logistic, |l| l == Link::Logistic);
    let kind = dump.kind;
    let first = &dump.draws[0];
    let (n, rank) = (first.n_objects(), first.rank());
    let pairs = parse_pairs(
        &read_to_string(&a.pairs)?,
        &a.pairs.display().to_string(),
        n,
    )?;
    let model = ModelConfig {
        rank,
        use_logistic: logistic,
    };
    let mut out = String::new();
    let mut emit = |key: FiberKey, scores: Vec<f64>| {
        let _ = write!(out, "{} {}", key.i, key.j);
        for s in scores {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
    };
    match kind {
        DumpKind::PointEstimate => {
            let f = dump.into_factors()?;
            for key in pairs {
                let scores = f
                    .predict_fiber(key, &model)?
                    .into_iter()
                    .map(|s| s.clamp(0.0, 1.0))
                    .collect();
                emit(key, scores);
            }
        }
        DumpKind::SampleSet => {
            let samples = dump.into_sample_set()?;
            for key in pairs {
                emit(key, samples.predictive_mean(key, &model)?);
            }
        }
    }
    write_atomic(&a.out, out.as_bytes())?;
    let mut m = RunManifest::new("predict", resolved);
    m.inputs.extend([a.model.clone(), a.pairs.clone()]);
    m.outputs.push(a.out.clone());
    m.write(&manifest_path(&a.out))
}

fn cmd_synth(a: &SynthArgs, resolved: Vec<(String, String)>) -> Result<()> {
    let spec = SynthSpec {
        n_objects: a.objects,
        n_relations: a.relations,
        rank: a.rank,
        observed_fraction: a.observed_fraction,
        priors: a.priors.settings().priors(a.rank)?,
        threshold: a.threshold,
        seed: a.seed,
    };
    let (tensor, truth) = generate_synthetic(&spec)?;
    save_triples(&tensor, &a.out)?;
    let truth_path = a
        .truth
        .clone()
        .unwrap_or_else(|| with_suffix(&a.out, ".truth.pltf"));
    save_factor_file(&FactorDump::point(truth, false, Vec::new()), &truth_path)?;
    eprintln!("synth: {} observed entries", tensor.observed_count());
    let mut m = RunManifest::new("synth", resolved);
    m.outputs.extend([a.out.clone(), truth_path]);
    m.write(&manifest_path(&a.out))
}
