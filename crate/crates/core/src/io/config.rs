//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hypograph::{Anisotropy, HeightFunction, Shape};
use crate::inference::{BootstrapOptions, FitOptions, LikelihoodKind, ModelSpec, NelderMeadOptions};
use crate::levy::LevySeed;
use crate::simulate::{SimulationConfig, SiteSet};

/// Everything a command needs, as parsed from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for simulation, start jitter and bootstrap resampling.
    #[serde(default)]
    pub rng_seed: u64,
    /// Nugget weight w in [0, 1).
    #[serde(default)]
    pub nugget: Option<f64>,
    pub seed: LevySeed,
    pub kernel: Shape,
    #[serde(default)]
    pub aniso: Option<Anisotropy>,
    #[serde(default)]
    pub sites: Option<SitesSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub covariance: CovarianceSection,
    #[serde(default)]
    pub tail: TailSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default)]
    pub paths: PathsSection,
}

/// Site layout for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case", deny_unknown_fields)]
pub enum SitesSection {
    /// nx × ny lattice with the given spacing, ids "0", "1", … row by row.
    Grid {
        nx: usize,
        ny: usize,
        spacing: f64,
        #[serde(default)]
        origin: [f64; 2],
    },
    /// n sites on the x axis; the field is then one-dimensional.
    Line { n: usize, spacing: f64 },
    /// Explicit planar coordinates.
    List { coords: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    #[default]
    Grid,
    Cavalieri,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub method: SimMethod,
    pub n_replicates: usize,
    pub grid_cell: Option<f64>,
    pub height_cell: Option<f64>,
    pub tail_mass_eps: f64,
    pub cavalieri_layers: usize,
    pub max_cells: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let d = SimulationConfig::default();
        Self {
            method: SimMethod::Grid,
            n_replicates: d.n_replicates,
            grid_cell: d.grid_cell,
            height_cell: d.height_cell,
            tail_mass_eps: d.tail_mass_eps,
            cavalieri_layers: d.cavalieri_layers,
            max_cells: d.max_cells,
        }
    }
}

/// Lag grid u_k = max_lag·k/(n_lags − 1), k = 0..n_lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CovarianceSection {
    pub max_lag: f64,
    pub n_lags: usize,
}

impl Default for CovarianceSection {
    fn default() -> Self {
        Self { max_lag: 5.0, n_lags: 51 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailSection {
    pub lags: Vec<f64>,
    pub quantiles: Vec<f64>,
    /// Simulated pairs per lag for the empirical coefficients; 0 skips them.
    pub n_pairs: usize,
}

impl Default for TailSection {
    fn default() -> Self {
        Self {
            lags: vec![0.5, 1.0, 2.0],
            quantiles: vec![0.9, 0.95, 0.99, 0.995],
            n_pairs: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// Defaults to pairwise_discrete for count seeds, pairwise_continuous otherwise.
    pub likelihood: Option<LikelihoodKind>,
    pub pair_cutoff: Option<f64>,
    pub n_starts: usize,
    pub jitter: f64,
    /// Parameters held at their config values.
    pub fixed: Vec<String>,
    pub max_evals: usize,
    pub tol: f64,
    pub restarts: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        let f = FitOptions::default();
        Self {
            likelihood: None,
            pair_cutoff: None,
            n_starts: f.n_starts,
            jitter: f.jitter,
            fixed: Vec::new(),
            max_evals: f.optimizer.max_evals,
            tol: f.optimizer.tol,
            restarts: f.optimizer.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapSection {
    pub n_resamples: usize,
    pub block_length: usize,
    pub hessian_step: f64,
}

impl Default for BootstrapSection {
    fn default() -> Self {
        let b = BootstrapOptions::default();
        Self {
            n_resamples: b.n_resamples,
            block_length: b.block_length,
            hessian_step: b.hessian_step,
        }
    }
}

/// Paths, relative ones resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub data: Option<PathBuf>,
    /// A fit.json to augment in `bootstrap`; without it the model is fitted first.
    pub fit: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            data: None,
            fit: None,
            output_dir: PathBuf::from("."),
        }
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Config(m),
        other => other,
    }
}

/// A parsed, validated config and the hash of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    /// Lower-case hex SHA-256 of the config text.
    pub hash: String,
    /// Directory against which relative paths resolve.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(Self {
            config,
            hash: hex::encode(Sha256::digest(text.as_bytes())),
            base_dir,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.output_dir)
    }
}

impl RunConfig {
    /// Checks every section against the library constraints.
    pub fn validate(&self) -> Result<()> {
        self.model(self.dim()).map_err(config_err)?;
        self.simulation_config().validate().map_err(config_err)?;
        if self.simulation.method == SimMethod::Cavalieri && self.aniso.is_some_and(|a| !a.is_identity()) {
            return Err(Error::Config("disc stacking does not support anisotropy".into()));
        }
        if let Some(s) = &self.sites {
            self.site_set_of(s)?;
        }
        let c = &self.covariance;
        if !(c.max_lag > 0.0 && c.max_lag.is_finite()) || c.n_lags < 2 {
            return Err(Error::Config("covariance needs max_lag > 0 and n_lags >= 2".into()));
        }
        let t = &self.tail;
        if t.lags.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
            return Err(Error::Config("tail lags must be finite and >= 0".into()));
        }
        if t.quantiles.iter().any(|q| !(*q > 0.5 && *q < 1.0)) {
            return Err(Error::Config("tail quantiles must lie in (0.5, 1)".into()));
        }
        if t.n_pairs != 0 && t.n_pairs < 500 {
            return Err(Error::Config("tail n_pairs must be 0 or at least 500".into()));
        }
        let f = &self.fit;
        if f.n_starts == 0 || !(f.jitter >= 0.0) || f.max_evals == 0 || !(f.tol > 0.0) {
            return Err(Error::Config("fit needs n_starts >= 1, jitter >= 0, max_evals >= 1 and tol > 0".into()));
        }
        if f.pair_cutoff.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("pair_cutoff must be > 0".into()));
        }
        let b = &self.bootstrap;
        if b.n_resamples < 50 || b.block_length == 0 || !(b.hessian_step > 0.0) {
            return Err(Error::Config(
                "bootstrap needs n_resamples >= 50, block_length >= 1 and hessian_step > 0".into(),
            ));
        }
        Ok(())
    }

    /// Spatial dimension: 1 for a line layout, 2 otherwise.
    pub fn dim(&self) -> usize {
        match self.sites {
            Some(SitesSection::Line { .. }) => 1,
            _ => 2,
        }
    }

    pub fn height(&self, dim: usize) -> Result<HeightFunction> {
        HeightFunction::new(self.kernel.clone(), dim)
    }

    /// Model with the config values, nugget, anisotropy and fixed set.
    pub fn model(&self, dim: usize) -> Result<ModelSpec> {
        let mut m = ModelSpec::new(self.seed, self.height(dim)?)?;
        if let Some(w) = self.nugget {
            m = m.with_nugget(w)?;
        }
        if let Some(a) = self.aniso {
            m = m.with_aniso(a)?;
        }
        let fixed: Vec<&str> = self.fit.fixed.iter().map(String::as_str).collect();
        m.with_fixed(&fixed)
    }

    /// Kernel including the nugget component.
    pub fn kernel_with_nugget(&self, dim: usize) -> Result<HeightFunction> {
        let h = self.height(dim)?;
        match self.nugget {
            Some(w) if w > 0.0 => h.with_nugget(w),
            _ => Ok(h),
        }
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        let s = &self.simulation;
        SimulationConfig {
            grid_cell: s.grid_cell,
            height_cell: s.height_cell,
            tail_mass_eps: s.tail_mass_eps,
            cavalieri_layers: s.cavalieri_layers,
            rng_seed: self.rng_seed,
            n_replicates: s.n_replicates,
            max_cells: s.max_cells,
        }
    }

    pub fn site_set(&self) -> Result<SiteSet> {
        match &self.sites {
            Some(s) => self.site_set_of(s),
            None => Err(Error::Config("simulate needs a [sites] section".into())),
        }
    }

    fn site_set_of(&self, s: &SitesSection) -> Result<SiteSet> {
        let out = match s {
            SitesSection::Grid { nx, ny, spacing, origin } => {
                if *nx == 0 || *ny == 0 || !(*spacing > 0.0) {
                    return Err(Error::Config("grid sites need nx, ny >= 1 and spacing > 0".into()));
                }
                let coords = (0..nx * ny)
                    .map(|k| {
                        [
                            origin[0] + (k % nx) as f64 * spacing,
                            origin[1] + (k / nx) as f64 * spacing,
                        ]
                    })
                    .collect();
                SiteSet::planar(coords)
            }
            SitesSection::Line { n, spacing } => {
                if *n == 0 || !(*spacing > 0.0) {
                    return Err(Error::Config("line sites need n >= 1 and spacing > 0".into()));
                }
                SiteSet::line(&(0..*n).map(|k| k as f64 * spacing).collect::<Vec<_>>())
            }
            SitesSection::List { coords } => SiteSet::planar(coords.clone()),
        };
        out.map_err(config_err)
    }

    pub fn likelihood(&self) -> LikelihoodKind {
        self.fit.likelihood.unwrap_or(if self.seed.is_discrete() {
            LikelihoodKind::PairwiseDiscrete
        } else {
            LikelihoodKind::PairwiseContinuous
        })
    }

    pub fn fit_options(&self) -> FitOptions {
        let f = &self.fit;
        FitOptions {
            n_starts: f.n_starts,
            jitter: f.jitter,
            seed: self.rng_seed,
            pair_cutoff: f.pair_cutoff,
            optimizer: NelderMeadOptions {
                tol: f.tol,
                max_evals: f.max_evals,
                restarts: f.restarts,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn bootstrap_options(&self) -> BootstrapOptions {
        BootstrapOptions {
            block_length: self.bootstrap.block_length,
            n_resamples: self.bootstrap.n_resamples,
            seed: self.rng_seed,
            hessian_step: self.bootstrap.hessian_step,
        }
    }
}
