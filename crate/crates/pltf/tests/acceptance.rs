//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.
//!
//! The Kinship check runs only when `PLTF_KINSHIP_PATH` names a triple file.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use pltf::eval::{auc, EvalConfig, Method};
use pltf::experiment::{median, run_plan, Plan, Row};
use pltf::factor_file::FactorDump;
use pltf::synth::{generate_synthetic, SynthSpec};
use pltf::triples::load_triples;
use pltf_core::bayes::{
    hyper_posterior, run_chain, sample_alpha, sample_factor_hypers, sample_r_rows, sample_u_rows,
    sample_v_rows, ChainConfig, FactorHyperState, HyperPriors, ObservationIndex,
};
use pltf_core::map::{fit_map, gradients, objective, random_instance, MapConfig};
use pltf_core::rng::{substream, Stream};
use pltf_core::{FactorMatrix, LatentFactors, ModelConfig, RelationalTensor};
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// 1. gradients

fn perturbed(f: &LatentFactors, block: usize, k: usize, delta: f64) -> LatentFactors {
    let mut mats = [f.u().clone(), f.v().clone(), f.r().clone()];
    mats[block].as_mut_slice()[k] += delta;
    let [u, v, r] = mats;
    LatentFactors::new(u, v, r, f.alpha()).unwrap()
}

fn gradient_error(seed: u64, model: &ModelConfig, config: &MapConfig) -> f64 {
    const H: f64 = 1e-6;
    let (y, f) = random_instance(seed, 4, 3, model.rank, 0.7);
    let (du, dv, dr) = gradients(&f, &y, model, config).unwrap();
    let (mut diff, mut scale_a, mut scale_n) = (0.0, 0.0, 0.0);
    for (block, g) in [du, dv, dr].iter().enumerate() {
        for (k, &a) in g.as_slice().iter().enumerate() {
            let plus = objective(&perturbed(&f, block, k, H), &y, model, config).unwrap();
            let minus = objective(&perturbed(&f, block, k, -H), &y, model, config).unwrap();
            let fd = (plus - minus) / (2.0 * H);
            diff += (a - fd) * (a - fd);
            scale_a += a * a;
            scale_n += fd * fd;
        }
    }
    diff.sqrt() / scale_a.sqrt().max(scale_n.sqrt()).max(f64::MIN_POSITIVE)
}

fn gradient_check() -> Outcome {
    let config = MapConfig::default();
    let mut worst: f64 = 0.0;
    for use_logistic in [false, true] {
        let model = ModelConfig {
            rank: 2,
            use_logistic,
        };
        for seed in 0..20 {
            worst = worst.max(gradient_error(seed, &model, &config));
        }
    }
    check(
        worst <= 1e-5,
        format!("max relative error {worst:.2e} (limit 1e-5)"),
    )
}

// ---------------------------------------------------------------------------
// 2. Gibbs conditionals against brute-force and analytic oracles

const DRAWS: usize = 50_000;
const BINS: usize = 30;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
        .collect()
}

fn log_normal(x: f64, mean: f64, precision: f64) -> f64 {
    0.5 * precision.ln() - 0.5 * precision * (x - mean) * (x - mean)
}

/// Normalized grid density over the central 99.9% of its mass.
fn grid_density(lo: f64, hi: f64, log_density: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let grid = linspace(lo, hi, 40_000);
    let logs: Vec<f64> = grid.iter().map(|&x| log_density(x)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = dens.iter().sum();
    let (mut cum, mut a, mut b) = (0.0, 0, grid.len() - 1);
    for (k, d) in dens.iter().enumerate() {
        let prev = cum;
        cum += d / total;
        if prev < 0.0005 && cum >= 0.0005 {
            a = k;
        }
        if prev < 0.9995 && cum >= 0.9995 {
            b = k;
        }
    }
    (grid[a..=b].to_vec(), dens[a..=b].to_vec())
}

fn binned_tv(draws: &[f64], grid: &[f64], density: &[f64]) -> f64 {
    let lo = grid[0];
    let width = (grid[grid.len() - 1] - lo) / BINS as f64;
    let bin = |x: f64| (((x - lo) / width) as isize).clamp(0, BINS as isize - 1) as usize;
    let total: f64 = density.iter().sum();
    let mut q = vec![0.0; BINS];
    for (&x, &p) in grid.iter().zip(density) {
        q[bin(x)] += p / total;
    }
    let mut p = vec![0.0; BINS];
    for &x in draws {
        p[bin(x)] += 1.0 / draws.len() as f64;
    }
    0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn scalar_factors(u: &[f64], v: &[f64], r: &[f64], alpha: f64) -> LatentFactors {
    let col = |x: &[f64]| FactorMatrix::from_vec(x.len(), 1, x.to_vec()).unwrap();
    LatentFactors::new(col(u), col(v), col(r), alpha).unwrap()
}

fn conjugacy_check() -> Outcome {
    let y = RelationalTensor::build(
        3,
        2,
        [
            (0, 0, 0, 1),
            (0, 1, 1, 0),
            (0, 2, 0, 1),
            (2, 1, 0, 1),
            (1, 1, 1, 1),
        ],
    )
    .unwrap();
    let f = scalar_factors(&[0.6, -0.9, 0.4], &[0.8, -0.5, 1.3], &[1.2, -0.7], 1.7);
    let index = ObservationIndex::new(&y);
    let priors = HyperPriors::defaults(1);
    let h = FactorHyperState {
        mu: DVector::from_element(1, 0.3),
        lambda: DMatrix::from_element(1, 1, 2.0),
    };
    let mut tvs: Vec<(&str, f64)> = Vec::new();

    let (grid, dens) = grid_density(1e-6, 60.0, |a| {
        let lik: f64 = y
            .entries()
            .iter()
            .map(|e| log_normal(e.y(), f.reconstruct_entry(e.i, e.j, e.t).unwrap(), a))
            .sum();
        lik + (priors.shape - 1.0) * a.ln() - a / priors.scale
    });
    let mut rng = substream(1, Stream::Evaluation);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| sample_alpha(&f, &y, &priors, &mut rng).unwrap())
        .collect();
    tvs.push(("alpha", binned_tv(&draws, &grid, &dens)));

    let row_grid = |involves: &dyn Fn(usize, usize, usize) -> bool,
                    predict: &dyn Fn(f64, usize, usize, usize) -> f64| {
        grid_density(-8.0, 8.0, |x| {
            let lik: f64 = y
                .entries()
                .iter()
                .filter(|e| involves(e.i, e.j, e.t))
                .map(|e| log_normal(e.y(), predict(x, e.i, e.j, e.t), f.alpha()))
                .sum();
            lik + log_normal(x, h.mu[0], h.lambda[(0, 0)])
        })
    };
    let (grid, dens) = row_grid(&|i, _, _| i == 0, &|x, _, j, t| {
        x * f.v().get(j, 0) * f.r().get(t, 0)
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| sample_u_rows(&f, &index, &h, &mut rng).unwrap().get(0, 0))
        .collect();
    tvs.push(("sender row", binned_tv(&draws, &grid, &dens)));
    let (grid, dens) = row_grid(&|_, j, _| j == 1, &|x, i, _, t| {
        f.u().get(i, 0) * x * f.r().get(t, 0)
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| sample_v_rows(&f, &index, &h, &mut rng).unwrap().get(1, 0))
        .collect();
    tvs.push(("receiver row", binned_tv(&draws, &grid, &dens)));
    let (grid, dens) = row_grid(&|_, _, t| t == 1, &|x, i, j, _| {
        f.u().get(i, 0) * f.v().get(j, 0) * x
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| sample_r_rows(&f, &index, &h, &mut rng).unwrap().get(1, 0))
        .collect();
    tvs.push(("relation row", binned_tv(&draws, &grid, &dens)));

    // joint (mu, lambda) grid for D = 1 hypers
    let mut hp = HyperPriors::defaults(1);
    hp.mu0[0] = 0.2;
    hp.w0[(0, 0)] = 1.5;
    hp.nu0 = 1.0;
    let rows = FactorMatrix::from_vec(3, 1, vec![0.7, -0.2, 1.1]).unwrap();
    let mus = linspace(-4.0, 4.0, 800);
    let lams = linspace(1e-4, 12.0, 1200);
    let mut joint = vec![0.0; mus.len() * lams.len()];
    for (a, &lam) in lams.iter().enumerate() {
        for (b, &mu) in mus.iter().enumerate() {
            let lik: f64 = rows
                .as_slice()
                .iter()
                .map(|&x| log_normal(x, mu, lam))
                .sum();
            joint[a * mus.len() + b] = (hp.nu0 / 2.0 - 1.0) * lam.ln()
                - lam / (2.0 * hp.w0[(0, 0)])
                + log_normal(mu, hp.mu0[0], hp.kappa0 * lam)
                + lik;
        }
    }
    let top = joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mut lam_marg, mut mu_marg) = (vec![0.0; lams.len()], vec![0.0; mus.len()]);
    for a in 0..lams.len() {
        for b in 0..mus.len() {
            let p = (joint[a * mus.len() + b] - top).exp();
            lam_marg[a] += p;
            mu_marg[b] += p;
        }
    }
    let (mut mu_draws, mut lam_draws) = (Vec::new(), Vec::new());
    for _ in 0..DRAWS {
        let s = sample_factor_hypers(&rows, &hp, hp.kappa0, &mut rng).unwrap();
        mu_draws.push(s.mu[0]);
        lam_draws.push(s.lambda[(0, 0)]);
    }
    tvs.push(("hyper mean", binned_tv(&mu_draws, &mus, &mu_marg)));
    tvs.push(("hyper precision", binned_tv(&lam_draws, &lams, &lam_marg)));

    // D = 2 Wishart mean
    let mut hp = HyperPriors::defaults(2);
    hp.w0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let rows =
        FactorMatrix::from_rows(&[&[0.5, -0.1], &[1.2, 0.4], &[-0.3, 0.9], &[0.0, 0.2]]).unwrap();
    let post = hyper_posterior(&rows, &hp, hp.kappa0).unwrap();
    let expected = &post.scale * post.nu;
    let n = 100_000;
    let mut mean = DMatrix::zeros(2, 2);
    for _ in 0..n {
        mean += sample_factor_hypers(&rows, &hp, hp.kappa0, &mut rng)
            .unwrap()
            .lambda;
    }
    mean /= n as f64;
    let wishart_err = (0..4)
        .map(|k| (mean.as_slice()[k] - expected.as_slice()[k]).abs() / expected.amax())
        .fold(0.0, f64::max);

    // D = 2 sender row moments against the normal equations
    let y2 = RelationalTensor::build(
        3,
        2,
        [(0, 0, 0, 1), (0, 1, 1, 0), (0, 2, 0, 1), (0, 2, 1, 1)],
    )
    .unwrap();
    let v = FactorMatrix::from_rows(&[&[0.8, 0.1], &[-0.5, 0.9], &[1.3, -0.4]]).unwrap();
    let r = FactorMatrix::from_rows(&[&[1.2, 0.5], &[-0.7, 1.1]]).unwrap();
    let f2 = LatentFactors::new(FactorMatrix::zeros(3, 2), v.clone(), r.clone(), 1.3).unwrap();
    let h2 = FactorHyperState {
        mu: DVector::from_vec(vec![0.2, -0.4]),
        lambda: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
    };
    let obs: Vec<_> = y2.entries().iter().filter(|e| e.i == 0).collect();
    let x = DMatrix::from_fn(obs.len(), 2, |k, d| v.get(obs[k].j, d) * r.get(obs[k].t, d));
    let targets = DVector::from_iterator(obs.len(), obs.iter().map(|e| e.y()));
    let covariance = (&h2.lambda + x.transpose() * &x * f2.alpha())
        .try_inverse()
        .unwrap();
    let row_mean = &covariance * (&h2.lambda * &h2.mu + x.transpose() * targets * f2.alpha());
    let index2 = ObservationIndex::new(&y2);
    let draws: Vec<DVector<f64>> = (0..DRAWS)
        .map(|_| {
            DVector::from_row_slice(sample_u_rows(&f2, &index2, &h2, &mut rng).unwrap().row(0))
        })
        .collect();
    let emp_mean = draws.iter().fold(DVector::zeros(2), |a, d| a + d) / DRAWS as f64;
    let emp_cov = draws.iter().fold(DMatrix::zeros(2, 2), |a, d| {
        let c = d - &emp_mean;
        a + &c * c.transpose()
    }) / DRAWS as f64;
    let mean_z = (0..2)
        .map(|d| (emp_mean[d] - row_mean[d]).abs() / (covariance[(d, d)] / DRAWS as f64).sqrt())
        .fold(0.0, f64::max);
    let cov_err = (&emp_cov - &covariance).amax() / covariance.amax();

    let worst_tv = tvs.iter().map(|t| t.1).fold(0.0, f64::max);
    let ok = worst_tv <= 0.02 && wishart_err <= 0.02 && mean_z < 4.0 && cov_err <= 0.02;
    let tv_list: Vec<String> = tvs.iter().map(|(n, t)| format!("{n} {t:.4}")).collect();
    check(
        ok,
        format!(
            "TV [{}] (limit 0.02); Wishart mean rel err {wishart_err:.4}; row mean z {mean_z:.2}; row cov rel err {cov_err:.4}",
            tv_list.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. AUC

fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let (mut p, mut n) = (0usize, 0usize);
    for (a, &la) in labels.iter().enumerate() {
        if la {
            p += 1;
        } else {
            n += 1;
            continue;
        }
        for (b, &lb) in labels.iter().enumerate() {
            if !lb {
                if scores[a] > scores[b] {
                    wins += 1.0;
                } else if scores[a] == scores[b] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / (p as f64 * n as f64)
}

fn auc_check() -> Outcome {
    let mut rng = substream(3, Stream::Evaluation);
    let mut checked = 0;
    let mut mismatches = 0;
    while checked < 1000 {
        let len = rng.random_range(2..=200);
        // small integer alphabets force ties
        let levels = if checked % 2 == 0 {
            rng.random_range(1..=5)
        } else {
            0
        };
        let scores: Vec<f64> = (0..len)
            .map(|_| {
                if levels > 0 {
                    rng.random_range(0..levels) as f64
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let labels: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        if auc(&scores, &labels).unwrap() != pairwise_auc(&scores, &labels) {
            mismatches += 1;
        }
        checked += 1;
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatches in {checked} instances"),
    )
}

// ---------------------------------------------------------------------------
// 4, 5, 8. Synthetic experiments

/// N = 50 objects, T = 5 relations, rank 5 generated from the model's own
/// default priors, 10% of entries observed.
fn synthetic_dataset() -> RelationalTensor {
    let mut spec = SynthSpec::new(50, 5, 5, 1);
    spec.observed_fraction = 0.1;
    generate_synthetic(&spec).unwrap().0
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn synthetic_plan(methods: Vec<Method>, fractions: Vec<f64>, ranks: Vec<usize>) -> Plan {
    Plan {
        dataset: "synthetic".into(),
        methods,
        fractions,
        ranks,
        repeats: 5,
        base_seed: 0,
        config: EvalConfig::default(),
        ablate_relations: false,
        jobs: jobs(),
    }
}

fn median_auc(rows: &[Row], method: Method, fraction: f64, rank: usize) -> f64 {
    median(
        rows.iter()
            .filter(|r| r.method == method.name() && r.fraction == fraction && r.rank == rank)
            .map(|r| r.outcome.as_ref().map_or(f64::NAN, |o| o.0))
            .collect(),
    )
}

fn ordering_check(rows: &[Row]) -> Outcome {
    let m = |method| median_auc(rows, method, 0.2, 5);
    let (hbt, hbr, pltf, base) = (
        m(Method::HbWarm),
        m(Method::HbRandom),
        m(Method::Pltf),
        m(Method::Baseline),
    );
    let ok = hbt >= pltf && pltf > base && [hbt, hbr, pltf].iter().all(|&a| a >= 0.6);
    check(
        ok,
        format!("median AUC hb-t {hbt:.4} >= pltf {pltf:.4} > baseline {base:.4}; hb-r {hbr:.4}; multi-relational >= 0.6"),
    )
}

fn degradation_check(rows: &[Row]) -> Outcome {
    let a: Vec<f64> = [0.2, 0.4, 0.6]
        .iter()
        .map(|&f| median_auc(rows, Method::HbWarm, f, 5))
        .collect();
    check(
        a[0] > a[1] && a[1] > a[2],
        format!(
            "hb-t median AUC at 0.2/0.4/0.6: {:.4} > {:.4} > {:.4}",
            a[0], a[1], a[2]
        ),
    )
}

fn stability_check(rows: &[Row]) -> Outcome {
    let ranks = [2, 5, 10, 20];
    let spread = |method| {
        let a: Vec<f64> = ranks
            .iter()
            .map(|&d| median_auc(rows, method, 0.2, d))
            .collect();
        let hi = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = a.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo, a)
    };
    let (hb, hb_a) = spread(Method::HbWarm);
    let (map, map_a) = spread(Method::Pltf);
    let fmt = |a: &[f64]| {
        a.iter()
            .map(|x| format!("{x:.4}"))
            .collect::<Vec<_>>()
            .join("/")
    };
    check(
        hb < map,
        format!(
            "spread over ranks 2/5/10/20: hb-t {hb:.4} ({}) < pltf {map:.4} ({})",
            fmt(&hb_a),
            fmt(&map_a)
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. Kinship

fn kinship_check() -> Outcome {
    let Some(path) = std::env::var_os("PLTF_KINSHIP_PATH") else {
        return Outcome::Skip("PLTF_KINSHIP_PATH not set".into());
    };
    let y = match load_triples(Path::new(&path)) {
        Ok(y) => y,
        Err(e) => return Outcome::Fail(format!("cannot load {}: {e}", Path::new(&path).display())),
    };
    let plan = Plan {
        dataset: "kinship".into(),
        methods: vec![Method::Pltf, Method::HbWarm],
        fractions: vec![0.2],
        ranks: vec![11],
        repeats: 5,
        base_seed: 0,
        config: EvalConfig::default(),
        ablate_relations: false,
        jobs: jobs(),
    };
    let rows = run_plan(&y, &plan).unwrap().rows;
    let mean = |m: Method| {
        let a: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == m.name())
            .map(|r| r.outcome.as_ref().map_or(f64::NAN, |o| o.0))
            .collect();
        a.iter().sum::<f64>() / a.len() as f64
    };
    let (pltf, hbt) = (mean(Method::Pltf), mean(Method::HbWarm));
    check(
        (pltf - 0.9269).abs() <= 0.05 && (hbt - 0.9483).abs() <= 0.05,
        format!("mean AUC pltf {pltf:.4} (target 0.9269 +- 0.05), hb-t {hbt:.4} (target 0.9483 +- 0.05)"),
    )
}

// ---------------------------------------------------------------------------
// 7. Determinism

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_pltf"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism_check() -> Outcome {
    let mut spec = SynthSpec::new(15, 3, 2, 4);
    spec.observed_fraction = 0.6;
    let y = generate_synthetic(&spec).unwrap().0;

    let model = ModelConfig::map(3);
    let map = MapConfig {
        seed: 9,
        ..MapConfig::default()
    };
    let fit = || {
        let (f, trace) = fit_map(&y, &model, &map).unwrap();
        FactorDump::point(f, true, trace.records.iter().map(|r| r.objective).collect()).encode()
    };
    let map_same = fit() == fit();

    let priors = HyperPriors::defaults(3);
    let chain = ChainConfig {
        num_samples: 60,
        burn_in: 10,
        seed: 9,
        ..ChainConfig::default()
    };
    let sample = || {
        FactorDump::samples(
            &run_chain(&y, &ModelConfig::bayes(3), &priors, &chain).unwrap(),
            false,
        )
        .encode()
    };
    let chain_same = sample() == sample();

    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let data = p("data.txt");
    let mut csv_same = cli(&[
        "synth",
        "--objects",
        "15",
        "--relations",
        "3",
        "--rank",
        "2",
        "--observed-fraction",
        "0.6",
        "--seed",
        "4",
        "--out",
        &data,
    ]);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "3"].iter().enumerate() {
        let out = p(&format!("run{k}.csv"));
        csv_same &= cli(&[
            "evaluate",
            "--input",
            &data,
            "--rank",
            "3",
            "--repeats",
            "2",
            "--fraction",
            "0.2,0.4",
            "--samples",
            "60",
            "--burn-in",
            "10",
            "--seed",
            "7",
            "--jobs",
            jobs,
            "--out",
            &out,
        ]);
        outputs.push(std::fs::read(&out).unwrap_or_default());
    }
    csv_same &= !outputs[0].is_empty() && outputs[0] == outputs[1];

    let mut files_same = true;
    for cmd in ["fit-map", "sample"] {
        let mut bytes = Vec::new();
        for k in 0..2 {
            let out = p(&format!("{cmd}{k}.pltf"));
            let extra: &[&str] = if cmd == "sample" {
                &["--samples", "40", "--burn-in", "5"]
            } else {
                &[]
            };
            let mut args = vec![
                cmd, "--input", &data, "--rank", "3", "--seed", "2", "--out", &out,
            ];
            args.extend_from_slice(extra);
            files_same &= cli(&args);
            bytes.push(std::fs::read(&out).unwrap_or_default());
        }
        files_same &= !bytes[0].is_empty() && bytes[0] == bytes[1];
    }

    check(
        map_same && chain_same && csv_same && files_same,
        format!(
            "fit_map bitwise {map_same}, run_chain bitwise {chain_same}, evaluate CSV identical {csv_same}, CLI factor files identical {files_same}"
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} [{id}] {name}: {detail} ({secs:.1}s)");
    };

    let t = Instant::now();
    report(1, "gradient check", t, gradient_check());
    let t = Instant::now();
    report(2, "Gibbs conditionals", t, conjugacy_check());
    let t = Instant::now();
    report(3, "AUC vs pairwise count", t, auc_check());

    let t = Instant::now();
    let y = synthetic_dataset();
    let rows = run_plan(
        &y,
        &synthetic_plan(Method::ALL.to_vec(), vec![0.2, 0.4, 0.6], vec![5]),
    )
    .unwrap()
    .rows;
    report(4, "method ordering", t, ordering_check(&rows));
    report(
        5,
        "degradation with held-out fraction",
        t,
        degradation_check(&rows),
    );

    let t = Instant::now();
    report(6, "Kinship reproduction", t, kinship_check());
    let t = Instant::now();
    report(7, "determinism", t, determinism_check());

    let t = Instant::now();
    // rank 5 comes from the run above
    let mut sweep = run_plan(
        &y,
        &synthetic_plan(
            vec![Method::Pltf, Method::HbWarm],
            vec![0.2],
            vec![2, 10, 20],
        ),
    )
    .unwrap()
    .rows;
    sweep.extend(rows);
    report(8, "rank stability", t, stability_check(&sweep));

    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
