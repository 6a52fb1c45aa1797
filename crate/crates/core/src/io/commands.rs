//! Command implementations shared by the binary and the tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{bootstrap_fit, fit, Dataset, FitResult};
use crate::numeric::stream;
use crate::simulate::{simulate_cavalieri, simulate_grid, FieldSample};
use crate::tail::{empirical_chi, sample_pairs, theoretical_chi, TailClass};

use super::config::{LoadedConfig, SimMethod};
use super::data::{csv_bytes, field_csv, fmt_f64, header_line, load_dataset, write_atomic};

/// JSON document written by `fit` and `bootstrap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tool: String,
    pub config_sha256: String,
    pub fit: FitResult,
}

impl FitReport {
    fn new(fit: FitResult, hash: &str) -> Self {
        Self {
            tool: format!("levyfield {}", env!("CARGO_PKG_VERSION")),
            config_sha256: hash.to_string(),
            fit,
        }
    }
}

/// Process exit code for an error: 2 config, 3 data, 4 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        Error::Schema(_) | Error::InconsistentCoordinates { .. } | Error::Parse { .. } | Error::Io(_) => 3,
        _ => 4,
    }
}

/// Simulates the configured field.
pub fn simulate_field(cfg: &LoadedConfig) -> Result<FieldSample> {
    let c = &cfg.config;
    let sites = c.site_set()?;
    let h = c.kernel_with_nugget(sites.dim)?;
    let sim = c.simulation_config();
    match c.simulation.method {
        SimMethod::Grid => simulate_grid(&c.seed, &h, &sites, &sim, c.aniso.as_ref()),
        SimMethod::Cavalieri => simulate_cavalieri(&c.seed, &h, &sites, &sim),
    }
}

/// Writes field.csv.
pub fn cmd_simulate(cfg: &LoadedConfig) -> Result<Vec<PathBuf>> {
    let sample = simulate_field(cfg)?;
    let path = cfg.output_dir().join("field.csv");
    write_atomic(&path, &field_csv(&sample, &cfg.hash)?)?;
    Ok(vec![path])
}

/// Writes covariance.csv: lag, correlation and seed-scaled covariance.
pub fn cmd_covariance(cfg: &LoadedConfig) -> Result<Vec<PathBuf>> {
    let c = &cfg.config;
    let h = c.kernel_with_nugget(c.dim())?;
    let var = c.seed.variance();
    let n = c.covariance.n_lags;
    let rows = (0..n)
        .map(|k| {
            let u = c.covariance.max_lag * k as f64 / (n - 1) as f64;
            let r = h.correlation(u)?;
            Ok(vec![fmt_f64(u), fmt_f64(r), fmt_f64(var * r)])
        })
        .collect::<Result<Vec<_>>>()?;
    let path = cfg.output_dir().join("covariance.csv");
    write_atomic(&path, &csv_bytes(&cfg.hash, &["u", "correlation", "covariance"], &rows)?)?;
    Ok(vec![path])
}

/// Writes tail.csv: theoretical and empirical χ, χ̄ per lag and quantile.
pub fn cmd_tail(cfg: &LoadedConfig) -> Result<Vec<PathBuf>> {
    let c = &cfg.config;
    let h = c.kernel_with_nugget(c.dim())?;
    let class = TailClass::from_seed(&c.seed).ok();
    let na = || "NA".to_string();
    let mut rows = Vec::new();
    for (k, &u) in c.tail.lags.iter().enumerate() {
        let geom = h.pair_geometry(u)?;
        let theory = class.as_ref().map(|tc| theoretical_chi(tc, &geom)).transpose()?;
        let pairs = if c.tail.n_pairs > 0 {
            Some(sample_pairs(&c.seed, &geom, c.tail.n_pairs, &mut stream(c.rng_seed, k as u64))?)
        } else {
            None
        };
        for &q in &c.tail.quantiles {
            let mut rec = vec![fmt_f64(u), fmt_f64(q)];
            match theory {
                Some(t) => rec.extend([fmt_f64(t.chi), fmt_f64(t.chibar), fmt_f64(t.eta)]),
                None => rec.extend([na(), na(), na()]),
            }
            let emp = match &pairs {
                Some((a, b)) => match empirical_chi(a, b, q) {
                    Ok(e) => Some(e),
                    Err(Error::DegenerateTail(_)) => None,
                    Err(e) => return Err(e),
                },
                None => None,
            };
            match emp {
                Some(e) => rec.extend([
                    fmt_f64(e.chi),
                    fmt_f64(e.chi_se),
                    fmt_f64(e.chibar),
                    fmt_f64(e.chibar_se),
                    e.joint_exceedances.to_string(),
                ]),
                None => rec.extend([na(), na(), na(), na(), "0".into()]),
            }
            rows.push(rec);
        }
    }
    let header = [
        "lag",
        "q",
        "chi_theory",
        "chibar_theory",
        "eta_theory",
        "chi",
        "chi_se",
        "chibar",
        "chibar_se",
        "joint_exceedances",
    ];
    let path = cfg.output_dir().join("tail.csv");
    write_atomic(&path, &csv_bytes(&cfg.hash, &header, &rows)?)?;
    Ok(vec![path])
}

fn load_config_data(cfg: &LoadedConfig) -> Result<Dataset> {
    let p = cfg
        .config
        .paths
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs paths.data".into()))?;
    load_dataset(&cfg.resolve(p))
}

/// Fits the configured model to a dataset.
pub fn run_fit(cfg: &LoadedConfig, data: &Dataset) -> Result<FitResult> {
    let c = &cfg.config;
    fit(&c.model(2)?, data, c.likelihood(), &c.fit_options())
}

/// Human-readable summary: log-PL, CLIC and estimates with standard errors.
pub fn fit_table(f: &FitResult, hash: &str) -> String {
    let mut s = header_line(hash);
    let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
    let kind = serde_json::to_value(f.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let _ = writeln!(s, "{:<12}{kind}", "likelihood");
    let _ = writeln!(s, "{:<12}{:.6}", "log_pl", f.log_pl);
    let _ = writeln!(s, "{:<12}{}", "clic", opt(f.clic));
    let _ = writeln!(s, "{:<12}{}", "pairs", f.n_pairs);
    let _ = writeln!(s, "{:<12}{}", "replicates", f.n_replicates);
    let _ = writeln!(s, "{:<12}{}", "converged", f.converged);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<12}{:>16}  std_error", "parameter", "estimate");
    for (i, name) in f.names.iter().enumerate() {
        let se = if !f.free[i] {
            "fixed".to_string()
        } else {
            match f.std_errors.as_ref().and_then(|v| v[i]) {
                Some(e) => format!("({e:.6})"),
                None => String::new(),
            }
        };
        let _ = writeln!(s, "{name:<12}{:>16.6}  {se}", f.estimates[i]);
    }
    for n in &f.notes {
        let _ = writeln!(s, "# note: {n}");
    }
    s
}

fn write_report(cfg: &LoadedConfig, f: FitResult, stem: &str) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir();
    let json = dir.join(format!("{stem}.json"));
    let txt = dir.join(format!("{stem}.txt"));
    let table = fit_table(&f, &cfg.hash);
    let mut body = serde_json::to_vec_pretty(&FitReport::new(f, &cfg.hash))
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    body.push(b'\n');
    write_atomic(&json, &body)?;
    write_atomic(&txt, table.as_bytes())?;
    Ok(vec![json, txt])
}

/// Writes fit.json and fit.txt.
pub fn cmd_fit(cfg: &LoadedConfig) -> Result<Vec<PathBuf>> {
    let data = load_config_data(cfg)?;
    let f = run_fit(cfg, &data)?;
    write_report(cfg, f, "fit")
}

/// Reads a fit.json written by `fit`.
pub fn read_fit_report(path: &std::path::Path) -> Result<FitReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// Writes bootstrap.json and bootstrap.txt with standard errors and CLIC.
pub fn cmd_bootstrap(cfg: &LoadedConfig) -> Result<Vec<PathBuf>> {
    let c = &cfg.config;
    let data = load_config_data(cfg)?;
    let fitted = match &c.paths.fit {
        Some(p) => read_fit_report(&cfg.resolve(p))?.fit,
        None => run_fit(cfg, &data)?,
    };
    let f = bootstrap_fit(&fitted, &data, &c.fit_options(), &c.bootstrap_options())?;
    write_report(cfg, f, "bootstrap")
}
