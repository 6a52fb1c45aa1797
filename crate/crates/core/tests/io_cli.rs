use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use levyfield::inference::{fit, Dataset};
use levyfield::io::*;
use levyfield::Error;

const GAMMA_FIELD: &str = r#"
rng_seed = 11

[seed]
family = "gamma"
shape = 2.0
rate = 1.5

[kernel]
family = "gaussian"
rho = 1.0

[sites]
layout = "grid"
nx = 3
ny = 2
spacing = 0.7

[simulation]
n_replicates = 40

[tail]
lags = [0.5]
n_pairs = 2000

[fit]
likelihood = "pairwise_difference"
n_starts = 2
fixed = ["shape", "rate"]

[bootstrap]
n_resamples = 50

[paths]
data = "field.csv"
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn load(dir: &Path, text: &str) -> Result<LoadedConfig, Error> {
    LoadedConfig::from_path(&write_config(dir, text))
}

#[test]
fn well_formed_file_gives_replicate_by_site_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    fs::write(
        &p,
        "# comment\nsite_id,x,y,value,replicate\na,0,0,1.5,1\nb,1,0,2,1\na,0,0,NA,2\nb,1,0,4,2\na,0,0,5,3\nb,1,0,6,3\n",
    )
    .unwrap();
    let d = load_dataset(&p).unwrap();
    assert_eq!((d.n_replicates(), d.n_sites()), (3, 2));
    assert_eq!(d.sites.ids, vec!["a", "b"]);
    assert_eq!(d.values[0], vec![1.5, 2.0]);
    assert!(d.values[1][0].is_nan());
    assert_eq!(d.values[2], vec![5.0, 6.0]);
}

#[test]
fn loader_reports_schema_coordinate_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    fs::write(&p, "site_id,x,y\na,0,0\n").unwrap();
    assert!(matches!(load_dataset(&p), Err(Error::Schema(_))));

    fs::write(&p, "site_id,x,y,value,replicate\na,0,0,1,1\na,0.5,0,2,2\n").unwrap();
    assert!(matches!(load_dataset(&p), Err(Error::InconsistentCoordinates { site_id }) if site_id == "a"));

    fs::write(&p, "site_id,x,y,value\na,0,0,1\nb,1,0,oops\n").unwrap();
    match load_dataset(&p) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }

    fs::write(&p, "site_id,x,y,value\na,0,0,1\na,0,0,2\n").unwrap();
    assert!(matches!(load_dataset(&p), Err(Error::Parse { line: 3, .. })));
}

#[test]
fn simulate_write_load_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), GAMMA_FIELD).unwrap();
    let sample = simulate_field(&cfg).unwrap();
    cmd_simulate(&cfg).unwrap();
    let d = load_dataset(&dir.path().join("field.csv")).unwrap();
    assert_eq!(d.sites.coords, sample.sites.coords);
    assert_eq!(d.sites.ids, sample.sites.ids);
    for (a, b) in d.values.iter().flatten().zip(sample.values.iter().flatten()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn covariance_rows_evaluate_the_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let text = GAMMA_FIELD.replace("family = \"gaussian\"", "family = \"laplace\"");
    let cfg = load(dir.path(), &text).unwrap();
    cmd_covariance(&cfg).unwrap();
    let out = fs::read_to_string(dir.path().join("covariance.csv")).unwrap();
    assert!(out.starts_with(&header_line(&cfg.hash)));
    let row = out.lines().find(|l| l.starts_with("1,")).unwrap();
    assert!(row.starts_with("1,0.367879"), "{row}");
}

#[test]
fn invalid_configs_are_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let zero = GAMMA_FIELD.replace("n_replicates = 40", "n_replicates = 0");
    assert!(matches!(load(dir.path(), &zero), Err(Error::Config(_))));
    let unknown = GAMMA_FIELD.replace("[tail]", "[tail]\nbogus = 1");
    assert!(matches!(load(dir.path(), &unknown), Err(Error::Config(_))));
    let bad_seed = GAMMA_FIELD.replace("shape = 2.0", "shape = -2.0");
    let e = load(dir.path(), &bad_seed).unwrap_err();
    assert_eq!(exit_code(&e), 2);
    let bad_fixed = GAMMA_FIELD.replace("fixed = [\"shape\", \"rate\"]", "fixed = [\"nope\"]");
    assert!(load(dir.path(), &bad_fixed).is_err());
    assert!(!dir.path().join("field.csv").exists());
}

#[test]
fn fit_json_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load(dir.path(), GAMMA_FIELD).unwrap();
    cmd_simulate(&cfg).unwrap();
    cmd_fit(&cfg).unwrap();
    let report = read_fit_report(&dir.path().join("fit.json")).unwrap();
    assert_eq!(report.config_sha256, cfg.hash);
    let data: Dataset = load_dataset(&dir.path().join("field.csv")).unwrap();
    let c = &cfg.config;
    let lib = fit(&c.model(2).unwrap(), &data, c.likelihood(), &c.fit_options()).unwrap();
    assert_eq!(report.fit.log_pl, lib.log_pl);
    assert_eq!(report.fit.estimates, lib.estimates);
    let table = fs::read_to_string(dir.path().join("fit.txt")).unwrap();
    assert!(table.contains("log_pl") && table.contains("rho"));

    cmd_bootstrap(&cfg).unwrap();
    let b = read_fit_report(&dir.path().join("bootstrap.json")).unwrap();
    assert_eq!(b.fit.log_pl, lib.log_pl);
    let se = b.fit.std_errors.unwrap();
    assert!(se[2].unwrap() > 0.0 && se[0].is_none());
}

fn run_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let cfg = load(dir, GAMMA_FIELD).unwrap();
    let mut out = Vec::new();
    for cmd in [cmd_simulate, cmd_covariance, cmd_tail, cmd_fit, cmd_bootstrap] {
        for p in cmd(&cfg).unwrap() {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
        }
    }
    out
}

#[test]
fn commands_are_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_all(a.path());
    let rb = run_all(b.path());
    assert_eq!(ra.len(), 7);
    for ((na, ba), (nb, bb)) in ra.iter().zip(&rb) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
}

#[test]
fn golden_covariance_output() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(golden.join("covariance.toml")).unwrap();
    let cfg = load(dir.path(), &text).unwrap();
    cmd_covariance(&cfg).unwrap();
    let got = fs::read_to_string(dir.path().join("covariance.csv")).unwrap();
    let want = fs::read_to_string(golden.join("covariance.csv")).unwrap();
    assert_eq!(got, want);
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_levyfield")).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GAMMA_FIELD);
    let cfg = cfg.to_str().unwrap();

    let ok = bin(&["covariance", cfg]);
    assert_eq!(ok.status.code(), Some(0));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, GAMMA_FIELD.replace("n_replicates = 40", "n_replicates = 0")).unwrap();
    let out = bin(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_replicates"));

    // paths.data does not exist yet.
    assert_eq!(bin(&["fit", cfg]).status.code(), Some(3));

    // Two sites at one location with different values have zero likelihood.
    fs::write(dir.path().join("field.csv"), "site_id,x,y,value\na,0,0,1\nb,0,0,2\n").unwrap();
    let all_fixed = GAMMA_FIELD
        .replace("fixed = [\"shape\", \"rate\"]", "fixed = [\"shape\", \"rate\", \"rho\"]")
        .replace("pairwise_difference", "pairwise_continuous");
    let p = dir.path().join("fixed.toml");
    fs::write(&p, all_fixed).unwrap();
    assert_eq!(bin(&["fit", p.to_str().unwrap()]).status.code(), Some(4));
}
