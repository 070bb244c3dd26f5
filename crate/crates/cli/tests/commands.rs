use galqr_cli::commands::{fit_command, header, summarize_command, BANDS_FILE, RUN_LOG, SCALAR_FILE, WAIC_FILE};
use galqr_cli::config::RunConfig;
use galqr_cli::ingest::export_raw_csv;
use galqr_cli::synth::{simulate_activity, ActivityConfig};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn small_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let raw = simulate_activity(&ActivityConfig { n: 40, minutes: 240, seed: 3, ..Default::default() });
    let (f, s) = (dir.join("functional.csv"), dir.join("scalar.csv"));
    export_raw_csv(&raw, &f, &s).unwrap();
    (f, s)
}

fn small_config(dir: &Path, out: &str) -> RunConfig {
    let (f, s) = small_inputs(dir);
    let mut cfg = RunConfig::default();
    cfg.out_dir = dir.join(out);
    cfg.data.functional = Some(f);
    cfg.data.scalar = Some(s);
    cfg.fit.estimators = vec!["fast".into(), "naive".into()];
    cfg.fit.tau = vec![0.5];
    cfg.fit.eval_points = Some(25);
    cfg.mcmc.iters = 400;
    cfg.mcmc.burnin = 100;
    cfg.mcmc.chains = 2;
    cfg.preprocess.enabled = true;
    cfg.preprocess.min_valid_days = 5;
    cfg.preprocess.downsample = 4;
    cfg
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn reruns_are_byte_identical_and_summaries_rebuild() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "out");
    let first = fit_command(&cfg).unwrap();
    let a = snapshot(&cfg.out_dir);
    fs::remove_dir_all(&cfg.out_dir).unwrap();
    fit_command(&cfg).unwrap();
    let b = snapshot(&cfg.out_dir);
    assert_eq!(a, b);
    for name in [SCALAR_FILE, BANDS_FILE, WAIC_FILE, RUN_LOG, "draws_fast_tau0.5.csv", "loglik_naive_tau0.5.csv"] {
        assert!(a.contains_key(name), "{name} missing");
    }
    let head = header(&cfg);
    for (name, bytes) in &a {
        if name.ends_with(".csv") {
            assert!(bytes.starts_with(head.as_bytes()), "{name} lacks the header");
        }
    }
    assert_eq!(first.bands.len(), 2 * 25);
    assert_eq!(first.bands[24].t, 237.5);
    assert_eq!(first.bands[0].t, 1.5);
    assert_eq!(first.scalar.len(), 2 * 3);

    let mut sc = cfg.clone();
    sc.data.fit_dir = Some(cfg.out_dir.clone());
    sc.out_dir = dir.path().join("resummarized");
    let again = summarize_command(&sc).unwrap();
    assert_eq!(again.scalar.len(), first.scalar.len());
    for (x, y) in again.scalar.iter().zip(&first.scalar) {
        assert!((x.mean - y.mean).abs() < 1e-12 && (x.lower - y.lower).abs() < 1e-12);
    }
    for (x, y) in again.waic.iter().zip(&first.waic) {
        assert!((x.waic.unwrap() - y.waic.unwrap()).abs() < 1e-9);
    }

    let log: serde_json::Value = serde_json::from_slice(&a[RUN_LOG]).unwrap();
    assert_eq!(log["n"], 40);
    assert_eq!(log["j"], 5);
    assert_eq!(log["grid"].as_array().unwrap().len(), 60);
    assert_eq!(log["preprocess"]["dropped_subjects"].as_array().unwrap().len(), 2);
}

fn galqr(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_galqr")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (f, s) = small_inputs(dir.path());
    let (f, s) = (f.to_str().unwrap(), s.to_str().unwrap());
    let out = dir.path().join("cli-out");
    let out = out.to_str().unwrap();

    let ok = galqr(&[
        "fit", "--functional", f, "--scalar", s, "--preprocess", "--estimator", "naive", "--tau", "0.5",
        "--iters", "300", "--burnin", "100", "--chains", "1", "--out-dir", out,
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(Path::new(out).join(SCALAR_FILE).exists());

    let bad_tau = galqr(&["fit", "--functional", f, "--scalar", s, "--tau", "1.5", "--out-dir", out]);
    assert_eq!(bad_tau.status.code(), Some(2));

    let missing = galqr(&["fit", "--functional", "/nonexistent.csv", "--scalar", s, "--out-dir", out]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown = galqr(&["fit", "--functional", f, "--scalar", s, "--estimator", "bogus", "--out-dir", out]);
    assert_eq!(unknown.status.code(), Some(2));

    let cfg_path = dir.path().join("bad.toml");
    fs::write(&cfg_path, "[mcmc]\niters = 10\nburnin = 50\n").unwrap();
    let bad_cfg = galqr(&["simulate", "--config", cfg_path.to_str().unwrap(), "--out-dir", out]);
    assert_eq!(bad_cfg.status.code(), Some(2));

    let bad_flag = galqr(&["fit", "--no-such-flag"]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn divergence_maps_to_exit_code_three() {
    let e = galqr_cli::CliError::Model(galqr::Error::Divergence {
        iteration: 5,
        last_valid: Some(4),
        message: "non-finite".into(),
    });
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn simulate_writes_tables_with_headers() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.out_dir = dir.path().join("sim");
    cfg.simulate.case = 4;
    cfg.sim.n = 60;
    cfg.sim.t = 30;
    cfg.sim.n_r = 2;
    cfg.fit.estimators = vec!["naive".into()];
    cfg.fit.tau = vec![0.5];
    cfg.mcmc.iters = 200;
    cfg.mcmc.burnin = 50;
    let report = galqr_cli::commands::simulate(&cfg).unwrap();
    assert_eq!(report.rows.len(), 3);
    let csv = fs::read_to_string(cfg.out_dir.join("case4.csv")).unwrap();
    assert!(csv.starts_with(&header(&cfg)));
    assert!(csv.contains("case,scenario,estimator,tau"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(cfg.out_dir.join("case4.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["simulate"]["case"], 4);
    assert!(json["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
}
