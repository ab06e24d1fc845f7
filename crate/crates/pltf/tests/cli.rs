use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pltf::factor_file::load_factor_file;
use pltf::sha256_file;
use pltf_core::{FiberKey, ModelConfig};
use tempfile::TempDir;

fn pltf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pltf"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    /// Small synthetic dataset at `data.txt`.
    fn with_data(self) -> Self {
        let out = pltf(&[
            "synth",
            "--objects",
            "12",
            "--relations",
            "3",
            "--rank",
            "2",
            "--observed-fraction",
            "0.7",
            "--seed",
            "3",
            "--out",
            &self.arg("data.txt"),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        self
    }
}

#[test]
fn synth_writes_tensor_truth_and_manifest() {
    let ws = Workspace::new().with_data();
    assert!(ws.path("data.txt").exists());
    assert!(ws.path("data.txt.truth.pltf").exists());
    let manifest = std::fs::read_to_string(ws.path("data.txt.manifest")).unwrap();
    assert!(manifest.contains("manifest.subcommand=synth"));
    assert!(manifest.contains("objects=12"));
    let dump = load_factor_file(ws.path("data.txt.truth.pltf")).unwrap();
    assert_eq!(dump.draws[0].n_objects(), 12);
}

#[test]
fn missing_input_exits_with_one() {
    let ws = Workspace::new();
    let out = pltf(&[
        "fit-map",
        "--input",
        &ws.arg("nope.txt"),
        "--out",
        &ws.arg("m.pltf"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.txt"));
}

#[test]
fn malformed_triple_file_exits_with_one_and_names_the_line() {
    let ws = Workspace::new();
    std::fs::write(ws.path("bad.txt"), "2 1\n0 1 0 1\n1 0 0 2\n").unwrap();
    let out = pltf(&[
        "fit-map",
        "--input",
        &ws.arg("bad.txt"),
        "--out",
        &ws.arg("m.pltf"),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&pltf(&["fit-map", "--bogus"])), 1);
    assert_eq!(code(&pltf(&[])), 1);
}

#[test]
fn fit_map_is_deterministic_and_replayable_from_its_manifest() {
    let ws = Workspace::new().with_data();
    let run = |out: &str| {
        let o = pltf(&[
            "fit-map",
            "--input",
            &ws.arg("data.txt"),
            "--rank",
            "3",
            "--gamma",
            "0.01",
            "--seed",
            "0",
            "--out",
            out,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&ws.arg("a.pltf"));
    run(&ws.arg("b.pltf"));
    let a = sha256_file(&ws.path("a.pltf")).unwrap();
    assert_eq!(a, sha256_file(&ws.path("b.pltf")).unwrap());
    assert!(ws.path("a.pltf.trace.csv").exists());

    let manifest = ws.path("a.pltf.manifest");
    let before = std::fs::read_to_string(&manifest).unwrap();
    assert!(before.contains(&format!("sha256:{a}")));
    std::fs::remove_file(ws.path("a.pltf")).unwrap();
    let o = pltf(&["fit-map", "--config", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(sha256_file(&ws.path("a.pltf")).unwrap(), a);
    assert_eq!(std::fs::read_to_string(&manifest).unwrap(), before);
}

#[test]
fn flags_override_config_entries() {
    let ws = Workspace::new().with_data();
    std::fs::write(
        ws.path("run.conf"),
        format!(
            "input={}\nrank=4\nout={}\n",
            ws.arg("data.txt"),
            ws.arg("m.pltf")
        ),
    )
    .unwrap();
    let o = pltf(&["fit-map", "--config", &ws.arg("run.conf"), "--rank", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        load_factor_file(ws.path("m.pltf")).unwrap().draws[0].rank(),
        2
    );

    std::fs::write(ws.path("bad.conf"), "colour=blue\n").unwrap();
    let o = pltf(&[
        "fit-map",
        "--config",
        &ws.arg("bad.conf"),
        "--input",
        "x",
        "--out",
        "y",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sample_from_map_start_retains_250_draws_by_default() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "fit-map",
        "--input",
        &ws.arg("data.txt"),
        "--rank",
        "2",
        "--link",
        "identity",
        "--out",
        &ws.arg("m.pltf"),
    ]);
    assert_eq!(code(&o), 0);
    let init = format!("map:{}", ws.arg("m.pltf"));
    let o = pltf(&[
        "sample",
        "--input",
        &ws.arg("data.txt"),
        "--init",
        &init,
        "--out",
        &ws.arg("s.pltf"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let samples = load_factor_file(ws.path("s.pltf"))
        .unwrap()
        .into_sample_set()
        .unwrap();
    assert_eq!(samples.len(), 250);
    assert_eq!(samples.rank(), 2);
    let trace = std::fs::read_to_string(ws.path("s.pltf.loglik.csv")).unwrap();
    assert_eq!(trace.lines().count(), 301);
}

#[test]
fn sample_without_retained_draws_is_a_config_error() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "sample",
        "--input",
        &ws.arg("data.txt"),
        "--samples",
        "10",
        "--burn-in",
        "10",
        "--out",
        &ws.arg("s.pltf"),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!ws.path("s.pltf").exists());
}

#[test]
fn sample_rejects_bad_init_and_rank_mismatch() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "sample",
        "--input",
        &ws.arg("data.txt"),
        "--init",
        "warm",
        "--out",
        &ws.arg("s.pltf"),
    ]);
    assert_eq!(code(&o), 1);
    let o = pltf(&[
        "fit-map",
        "--input",
        &ws.arg("data.txt"),
        "--rank",
        "2",
        "--out",
        &ws.arg("m.pltf"),
    ]);
    assert_eq!(code(&o), 0);
    let init = format!("map:{}", ws.arg("m.pltf"));
    let o = pltf(&[
        "sample",
        "--input",
        &ws.arg("data.txt"),
        "--init",
        &init,
        "--rank",
        "3",
        "--out",
        &ws.arg("s.pltf"),
    ]);
    assert_eq!(code(&o), 1);
}

fn write_pairs(path: &Path, pairs: &[(usize, usize)]) {
    let text: String = pairs.iter().map(|(i, j)| format!("{i} {j}\n")).collect();
    std::fs::write(path, text).unwrap();
}

fn parse_predictions(text: &str) -> Vec<(usize, usize, Vec<f64>)> {
    text.lines()
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2..].iter().map(|s| s.parse().unwrap()).collect(),
            )
        })
        .collect()
}

#[test]
fn predict_from_sample_set_matches_predictive_mean() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "sample",
        "--input",
        &ws.arg("data.txt"),
        "--rank",
        "2",
        "--samples",
        "40",
        "--burn-in",
        "10",
        "--out",
        &ws.arg("s.pltf"),
    ]);
    assert_eq!(code(&o), 0);
    let pairs = [(0, 1), (5, 5), (11, 3)];
    write_pairs(&ws.path("pairs.txt"), &pairs);
    let o = pltf(&[
        "predict",
        "--model",
        &ws.arg("s.pltf"),
        "--pairs",
        &ws.arg("pairs.txt"),
        "--out",
        &ws.arg("p.txt"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let samples = load_factor_file(ws.path("s.pltf"))
        .unwrap()
        .into_sample_set()
        .unwrap();
    let got = parse_predictions(&std::fs::read_to_string(ws.path("p.txt")).unwrap());
    assert_eq!(got.len(), 3);
    for ((i, j, scores), &(pi, pj)) in got.iter().zip(&pairs) {
        assert_eq!((*i, *j), (pi, pj));
        let expected = samples
            .predictive_mean(FiberKey::new(pi, pj), &ModelConfig::bayes(2))
            .unwrap();
        assert_eq!(scores, &expected);
    }
}

#[test]
fn predict_from_logistic_map_gives_open_unit_interval_scores() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "fit-map",
        "--input",
        &ws.arg("data.txt"),
        "--rank",
        "2",
        "--out",
        &ws.arg("m.pltf"),
    ]);
    assert_eq!(code(&o), 0);
    write_pairs(&ws.path("pairs.txt"), &[(2, 7)]);
    let o = pltf(&[
        "predict",
        "--model",
        &ws.arg("m.pltf"),
        "--pairs",
        &ws.arg("pairs.txt"),
        "--out",
        &ws.arg("p.txt"),
    ]);
    assert_eq!(code(&o), 0);
    let got = parse_predictions(&std::fs::read_to_string(ws.path("p.txt")).unwrap());
    assert_eq!(got[0].2.len(), 3);
    assert!(got[0].2.iter().all(|&s| s > 0.0 && s < 1.0));
}

#[test]
fn predict_rejects_malformed_pair_lists() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "fit-map",
        "--input",
        &ws.arg("data.txt"),
        "--rank",
        "2",
        "--out",
        &ws.arg("m.pltf"),
    ]);
    assert_eq!(code(&o), 0);
    for bad in ["0\n", "0 x\n", "0 99\n"] {
        std::fs::write(ws.path("pairs.txt"), bad).unwrap();
        let o = pltf(&[
            "predict",
            "--model",
            &ws.arg("m.pltf"),
            "--pairs",
            &ws.arg("pairs.txt"),
            "--out",
            &ws.arg("p.txt"),
        ]);
        assert_eq!(code(&o), 1, "{bad:?}");
    }
}

#[test]
fn evaluate_writes_the_results_csv() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "evaluate",
        "--input",
        &ws.arg("data.txt"),
        "--methods",
        "pltf,hb-t",
        "--fraction",
        "0.2,0.4",
        "--repeats",
        "2",
        "--rank",
        "2",
        "--samples",
        "30",
        "--burn-in",
        "5",
        "--out",
        &ws.arg("r.csv"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(ws.path("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "method,dataset,fraction,rank,seed,auc,wall_time_s"
    );
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[1].starts_with("pltf,data,0.2,2,0,"));
    assert!(lines[1].ends_with(",0.000"));
    assert!(!csv.contains('\r'));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mean_auc"));
}

#[test]
fn evaluate_with_sweep_and_ablation() {
    let ws = Workspace::new().with_data();
    let o = pltf(&[
        "evaluate",
        "--input",
        &ws.arg("data.txt"),
        "--methods",
        "hb-r",
        "--repeats",
        "1",
        "--sweep-ranks",
        "1,2",
        "--ablate-relations",
        "--samples",
        "20",
        "--burn-in",
        "5",
        "--out",
        &ws.arg("r.csv"),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(ws.path("r.csv")).unwrap();
    // per rank: plain run plus one per relation
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    assert!(csv.contains("hb-r+rel2"));
    let ablation = std::fs::read_to_string(ws.path("r.csv.ablation.csv")).unwrap();
    assert_eq!(ablation.lines().count(), 1 + 2 * 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("relations by median AUC gain"));
}

#[test]
fn evaluate_rejects_empty_or_unknown_methods() {
    let ws = Workspace::new().with_data();
    for methods in ["", "pltf,lfrm"] {
        let o = pltf(&[
            "evaluate",
            "--input",
            &ws.arg("data.txt"),
            "--methods",
            methods,
            "--out",
            &ws.arg("r.csv"),
        ]);
        assert_eq!(code(&o), 1, "{methods:?}");
    }
}

#[test]
fn failed_cells_are_marked_na_without_aborting() {
    let ws = Workspace::new();
    // every observed entry is a link, so no test split has both classes
    std::fs::write(
        ws.path("ones.txt"),
        "3 1\n0 1 0 1\n1 2 0 1\n2 0 0 1\n0 2 0 1\n",
    )
    .unwrap();
    let o = pltf(&[
        "evaluate",
        "--input",
        &ws.arg("ones.txt"),
        "--methods",
        "pltf",
        "--repeats",
        "2",
        "--rank",
        "1",
        "--out",
        &ws.arg("r.csv"),
    ]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(ws.path("r.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.ends_with(",NA,NA")).count(), 2);
}

#[test]
fn help_lists_defaults() {
    let o = pltf(&["sample", "--help"]);
    assert_eq!(code(&o), 0);
    let help = String::from_utf8_lossy(&o.stdout);
    for needle in [
        "--samples",
        "[default: 300]",
        "--burn-in",
        "[default: 50]",
        "--init",
        "[default: random]",
    ] {
        assert!(help.contains(needle), "missing {needle}");
    }
    let o = pltf(&["fit-map", "--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    assert!(help.contains("[default: 0.01]"));
    assert!(help.contains("[default: 500]"));
    let o = pltf(&["evaluate", "--help"]);
    let help = String::from_utf8_lossy(&o.stdout);
    assert!(help.contains("[default: pltf,hb-r,hb-t,baseline]"));
    assert!(help.contains("[default: 5]"));
}
