//! Batches of evaluation cells and the results CSV.

use std::fmt::Write as _;

use pltf_core::RelationalTensor;
use rayon::prelude::*;

use crate::eval::{
    evaluate_method, relation_ablation, split_fibers, EvalConfig, Method, SplitSpec,
};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "method,dataset,fraction,rank,seed,auc,wall_time_s";

/// Methods x test fractions x repeats x ranks on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub dataset: String,
    pub methods: Vec<Method>,
    pub fractions: Vec<f64>,
    pub ranks: Vec<usize>,
    pub repeats: usize,
    /// Repeat `r` uses seed `base_seed + r` for both splitting and training.
    pub base_seed: u64,
    pub config: EvalConfig,
    /// Add one restored-relation run per relation to every cell.
    pub ablate_relations: bool,
    pub jobs: usize,
}

impl Plan {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        if self.fractions.is_empty() || self.ranks.is_empty() || self.repeats == 0 {
            return Err(Error::Config(
                "fractions, ranks and repeats must be nonempty".into(),
            ));
        }
        if self.ranks.contains(&0) {
            return Err(Error::Config("rank must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be positive".into()));
        }
        Ok(())
    }
}

/// One CSV row. `outcome` holds `(auc, wall_time_s)` or the failure message.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub method: String,
    pub fraction: f64,
    pub rank: usize,
    pub seed: u64,
    pub outcome: std::result::Result<(f64, f64), String>,
}

/// Restored-relation gains of one ablation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub method: Method,
    pub fraction: f64,
    pub rank: usize,
    pub seed: u64,
    pub relation: usize,
    pub auc: f64,
    pub baseline_auc: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    pub ablation: Vec<AblationRow>,
}

struct Cell {
    method: Method,
    fraction: f64,
    rank: usize,
    seed: u64,
    split: usize,
}

/// Runs every cell, in parallel over `plan.jobs` threads. Failed cells become
/// rows with an error instead of aborting the batch; row order depends only
/// on the plan.
pub fn run_plan(tensor: &RelationalTensor, plan: &Plan) -> Result<Report> {
    plan.validate()?;
    let mut splits = Vec::new();
    let mut cells = Vec::new();
    for &fraction in &plan.fractions {
        for repeat in 0..plan.repeats {
            let seed = plan.base_seed + repeat as u64;
            let spec = SplitSpec {
                test_fraction: fraction,
                seed,
            };
            splits.push((spec, split_fibers(tensor, &spec)));
            for &rank in &plan.ranks {
                for &method in &plan.methods {
                    cells.push(Cell {
                        method,
                        fraction,
                        rank,
                        seed,
                        split: splits.len() - 1,
                    });
                }
            }
        }
    }

    let run = |cell: &Cell| -> (Vec<Row>, Vec<AblationRow>) {
        let (spec, split) = &splits[cell.split];
        let config = plan.config.with_rank(cell.rank);
        let row = |method: String, outcome| Row {
            method,
            fraction: cell.fraction,
            rank: cell.rank,
            seed: cell.seed,
            outcome,
        };
        let (train, test) = match split {
            Ok(s) => s,
            Err(e) => {
                return (
                    vec![row(cell.method.name().into(), Err(e.to_string()))],
                    Vec::new(),
                )
            }
        };
        if !plan.ablate_relations {
            let outcome = evaluate_method(cell.method, train, test, spec, &config)
                .map(|r| (r.auc, r.wall_time_s))
                .map_err(|e| e.to_string());
            return (vec![row(cell.method.name().into(), outcome)], Vec::new());
        }
        match relation_ablation(cell.method, train, test, spec, &config) {
            Ok(a) => {
                let rows = a
                    .results()
                    .into_iter()
                    .map(|r| row(r.method, Ok((r.auc, r.wall_time_s))))
                    .collect();
                let gains = a
                    .restored
                    .iter()
                    .map(|r| AblationRow {
                        method: cell.method,
                        fraction: cell.fraction,
                        rank: cell.rank,
                        seed: cell.seed,
                        relation: r.relation,
                        auc: r.result.auc,
                        baseline_auc: r.baseline_auc,
                        gain: r.gain,
                    })
                    .collect();
                (rows, gains)
            }
            Err(e) => (
                vec![row(cell.method.name().into(), Err(e.to_string()))],
                Vec::new(),
            ),
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let results: Vec<(Vec<Row>, Vec<AblationRow>)> =
        pool.install(|| cells.par_iter().map(run).collect());
    let mut report = Report::default();
    for (rows, gains) in results {
        report.rows.extend(rows);
        report.ablation.extend(gains);
    }
    Ok(report)
}

/// Results CSV. Wall times are written as `0.000` unless `record_timing`,
/// so repeated runs produce identical bytes.
pub fn format_csv(dataset: &str, rows: &[Row], record_timing: bool) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (auc, time) = match &r.outcome {
            Ok((auc, t)) => (
                format!("{auc:.6}"),
                format!("{:.3}", if record_timing { *t } else { 0.0 }),
            ),
            Err(_) => ("NA".to_string(), "NA".to_string()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method, dataset, r.fraction, r.rank, r.seed, auc, time
        );
    }
    out
}

pub const ABLATION_HEADER: &str = "method,fraction,rank,seed,relation,auc,baseline_auc,gain";

pub fn format_ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from(ABLATION_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6}",
            r.method, r.fraction, r.rank, r.seed, r.relation, r.auc, r.baseline_auc, r.gain
        );
    }
    out
}

/// Relations sorted by median gain over the ablation rows of one method,
/// descending; ties by relation index.
pub fn relation_ranking(rows: &[AblationRow], method: Method) -> Vec<(usize, f64)> {
    let mut by_relation: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for r in rows.iter().filter(|r| r.method == method) {
        by_relation.entry(r.relation).or_default().push(r.gain);
    }
    let mut ranking: Vec<(usize, f64)> = by_relation
        .into_iter()
        .map(|(t, g)| (t, median(g)))
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranking
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Mean and median AUC of one (method, fraction, rank) group.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub fraction: f64,
    pub rank: usize,
    pub mean_auc: f64,
    pub median_auc: f64,
    pub succeeded: usize,
    pub failed: usize,
}

pub fn summarize(rows: &[Row]) -> Vec<Summary> {
    let mut groups: Vec<Summary> = Vec::new();
    let mut aucs: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let k = match groups
            .iter()
            .position(|g| g.method == r.method && g.fraction == r.fraction && g.rank == r.rank)
        {
            Some(k) => k,
            None => {
                groups.push(Summary {
                    method: r.method.clone(),
                    fraction: r.fraction,
                    rank: r.rank,
                    mean_auc: f64::NAN,
                    median_auc: f64::NAN,
                    succeeded: 0,
                    failed: 0,
                });
                aucs.push(Vec::new());
                groups.len() - 1
            }
        };
        match r.outcome {
            Ok((auc, _)) => {
                groups[k].succeeded += 1;
                aucs[k].push(auc);
            }
            Err(_) => groups[k].failed += 1,
        }
    }
    for (g, a) in groups.iter_mut().zip(aucs) {
        if !a.is_empty() {
            g.mean_auc = a.iter().sum::<f64>() / a.len() as f64;
            g.median_auc = median(a);
        }
    }
    groups
}
