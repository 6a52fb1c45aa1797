//! Maximum composite likelihood by multi-start simplex search.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::levy::{set_distribution, LevySeed};
use crate::numeric::{stream, QuadratureSpec};

use super::covariogram::{empirical_covariogram, fit_range};
use super::model::{ModelSpec, Transform};
use super::optim::{nelder_mead, NelderMeadOptions};
use super::pairwise::{continuous_pair, default_pair_quadrature, variance_gamma_log_density, variance_gamma_tie_log_density, CountTables};
use super::{Dataset, ExactSum};

/// Which composite likelihood is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodKind {
    PairwiseContinuous,
    PairwiseDiscrete,
    PairwiseDifference,
    Independence,
}

impl LikelihoodKind {
    fn check_seed(self, seed: &LevySeed) -> Result<()> {
        match self {
            LikelihoodKind::PairwiseContinuous if seed.is_discrete() => {
                invalid("the continuous pair likelihood needs a Gaussian, gamma or inverse Gaussian seed")
            }
            LikelihoodKind::PairwiseDiscrete if !seed.is_discrete() => {
                invalid("the discrete pair likelihood needs a Poisson or negative binomial seed")
            }
            LikelihoodKind::PairwiseDifference if !matches!(seed, LevySeed::Gamma { .. }) => {
                invalid("the difference likelihood needs a gamma seed")
            }
            _ => Ok(()),
        }
    }
}

/// Settings for [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Number of starts: the moment/covariogram start plus jittered copies.
    pub n_starts: usize,
    /// Standard deviation of the start jitter on the transformed scale.
    pub jitter: f64,
    pub seed: u64,
    /// Only pairs at most this far apart (before anisotropy) enter.
    pub pair_cutoff: Option<f64>,
    pub optimizer: NelderMeadOptions,
    pub quadrature: QuadratureSpec,
    /// Explicit natural-scale starts, replacing the generated ones.
    pub starts: Option<Vec<Vec<f64>>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 5,
            jitter: 0.5,
            seed: 0,
            pair_cutoff: None,
            optimizer: NelderMeadOptions::default(),
            quadrature: default_pair_quadrature(),
            starts: None,
        }
    }
}

/// Estimates and diagnostics of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub schema_version: u32,
    pub kind: LikelihoodKind,
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub free: Vec<bool>,
    pub log_pl: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub n_pairs: usize,
    pub n_replicates: usize,
    pub starts_used: usize,
    pub std_errors: Option<Vec<Option<f64>>>,
    pub clic: Option<f64>,
    pub clic_penalty: Option<f64>,
    /// The model at the estimates.
    pub model: ModelSpec,
    pub notes: Vec<String>,
}

/// Site pairs within `cutoff`, oriented and sorted by site id.
///
/// The difference likelihood skips co-located pairs.
pub fn pair_list(data: &Dataset, kind: LikelihoodKind, cutoff: Option<f64>) -> Vec<(usize, usize)> {
    if kind == LikelihoodKind::Independence {
        return Vec::new();
    }
    let ids = &data.sites.ids;
    let c = &data.sites.coords;
    let mut out = Vec::new();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let u = (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]);
            if cutoff.is_some_and(|m| u > m) || (kind == LikelihoodKind::PairwiseDifference && u == 0.0) {
                continue;
            }
            out.push(if ids[i] <= ids[j] { (i, j) } else { (j, i) });
        }
    }
    out.sort_by(|a, b| (&ids[a.0], &ids[a.1]).cmp(&(&ids[b.0], &ids[b.1])));
    out
}

/// A composite log-likelihood over a fixed dataset and pair set.
pub struct Objective<'a> {
    data: &'a Dataset,
    kind: LikelihoodKind,
    pairs: Vec<(usize, usize)>,
    quad: QuadratureSpec,
    kmax: usize,
}

impl<'a> Objective<'a> {
    pub fn new(data: &'a Dataset, kind: LikelihoodKind, cutoff: Option<f64>, quad: QuadratureSpec) -> Result<Self> {
        data.validate()?;
        quad.validate()?;
        let pairs = pair_list(data, kind, cutoff);
        if kind != LikelihoodKind::Independence && pairs.is_empty() {
            return invalid("no site pair within the cutoff");
        }
        let mut kmax = 0;
        if kind == LikelihoodKind::PairwiseDiscrete {
            for x in data.observed() {
                if !(x >= 0.0) || x.fract() != 0.0 {
                    return Err(Error::OutOfSupport(x));
                }
                kmax = kmax.max(x as usize);
            }
        }
        Ok(Self {
            data,
            kind,
            pairs,
            quad,
            kmax,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Composite log-likelihood of `model`.
    pub fn loglik(&self, model: &ModelSpec) -> Result<f64> {
        self.kind.check_seed(&model.seed)?;
        let coords = &self.data.sites.coords;
        let rows = &self.data.values;
        let per_pair = |f: &(dyn Fn(f64, f64) -> Result<f64> + Sync), a: usize, b: usize| -> Result<i128> {
            let mut s = ExactSum::default();
            for row in rows {
                let (x1, x2) = (row[a], row[b]);
                if x1.is_nan() || x2.is_nan() {
                    continue;
                }
                s.add(f(x1, x2)?)?;
            }
            Ok(s.0)
        };
        let parts: Vec<i128> = match self.kind {
            LikelihoodKind::Independence => {
                let d = set_distribution(&model.seed, 1.0)?;
                let mut s = ExactSum::default();
                for x in self.data.observed() {
                    s.add(d.log_density(x)?)?;
                }
                vec![s.0]
            }
            LikelihoodKind::PairwiseContinuous => self
                .pairs
                .par_iter()
                .map(|&(a, b)| {
                    let g = model.geometry(model.lag(coords[a], coords[b]))?;
                    per_pair(&|x1, x2| continuous_pair(&model.seed, &g, x1, x2, &self.quad), a, b)
                })
                .collect::<Result<_>>()?,
            LikelihoodKind::PairwiseDifference => {
                let LevySeed::Gamma { shape, rate } = model.seed else {
                    unreachable!("seed checked above")
                };
                self.pairs
                    .par_iter()
                    .map(|&(a, b)| {
                        let g = model.geometry(model.lag(coords[a], coords[b]))?;
                        let at = shape * g.alpha_res;
                        per_pair(
                            &|x1, x2| {
                                if x1 == x2 {
                                    // A tie means |X₂ − X₁| fell below the resolution of the values.
                                    let delta = (f64::EPSILON * x1.abs()).max(f64::MIN_POSITIVE);
                                    variance_gamma_tie_log_density(at, rate, delta)
                                } else {
                                    variance_gamma_log_density(at, rate, x2 - x1)
                                }
                            },
                            a,
                            b,
                        )
                    })
                    .collect::<Result<_>>()?
            }
            LikelihoodKind::PairwiseDiscrete => {
                let mut groups: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
                for &(a, b) in &self.pairs {
                    groups.entry(model.lag(coords[a], coords[b]).to_bits()).or_default().push((a, b));
                }
                let groups: Vec<(f64, Vec<(usize, usize)>)> =
                    groups.into_iter().map(|(k, v)| (f64::from_bits(k), v)).collect();
                groups
                    .par_iter()
                    .map(|(u, ps)| {
                        let t = CountTables::new(&model.seed, &model.geometry(*u)?, self.kmax)?;
                        let mut total = 0i128;
                        for &(a, b) in ps {
                            total += per_pair(&|k1, k2| Ok(t.pair(k1 as usize, k2 as usize)), a, b)?;
                        }
                        Ok(total)
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(ExactSum(parts.into_iter().sum()).value())
    }
}

fn sample_moments(data: &Dataset) -> (f64, f64) {
    let n = data.observed().count() as f64;
    let mut s = ExactSum::default();
    for x in data.observed() {
        s.add_finite(x);
    }
    let m = s.value() / n;
    let mut d = ExactSum::default();
    for x in data.observed() {
        d.add_finite((x - m) * (x - m));
    }
    (m, d.value() / n)
}

/// Moment-based seed parameters and a covariogram range for the free
/// parameters; fixed parameters keep their model values.
pub fn starting_values(model: &ModelSpec, data: &Dataset, kind: LikelihoodKind) -> Result<Vec<f64>> {
    let names = model.names();
    let free = model.free_mask();
    let mut v = model.values();
    let (m, var) = sample_moments(data);
    let moment = |name: &str| -> Option<f64> {
        let x = match (model.seed, name) {
            (LevySeed::Gaussian { .. }, "variance") => var,
            (LevySeed::Poisson { .. }, "intensity") => m,
            (LevySeed::Gamma { .. }, "shape") => m * m / var,
            (LevySeed::Gamma { .. }, "rate") => m / var,
            (LevySeed::InverseGaussian { .. }, "shape") => m * m * m / var,
            (LevySeed::InverseGaussian { .. }, "mean") => m,
            (LevySeed::NegBinomial { .. }, "mean") => m,
            (LevySeed::NegBinomial { .. }, "overdispersion") => m * m / (var - m).max(1e-3 * m),
            _ => return None,
        };
        (x > 0.0 && x.is_finite()).then_some(x)
    };
    for (k, name) in names.iter().enumerate() {
        if !free[k] {
            continue;
        }
        if let Some(x) = moment(name) {
            v[k] = x;
        }
        match *name {
            "nugget" if v[k] == 0.0 => v[k] = 0.1,
            "rho" if kind != LikelihoodKind::Independence => {
                let c = &data.sites.coords;
                let mut dmax: f64 = 0.0;
                for i in 0..c.len() {
                    for j in i + 1..c.len() {
                        dmax = dmax.max((c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]));
                    }
                }
                if dmax > 0.0 {
                    let edges: Vec<f64> = (0..=12).map(|e| (e as f64 / 12.0 * 0.5 * dmax).max(1e-9 * dmax)).collect();
                    if let Ok((rho, _)) = empirical_covariogram(data, &edges).and_then(|b| fit_range(&b, &model.kernel)) {
                        v[k] = rho;
                    }
                }
            }
            _ => {}
        }
    }
    Ok(v)
}

fn to_free(transforms: &[Transform], idx: &[usize], v: &[f64]) -> Vec<f64> {
    idx.iter().map(|&i| transforms[i].to_free(transforms[i].interior(v[i]))).collect()
}

fn to_natural(transforms: &[Transform], idx: &[usize], base: &[f64], z: &[f64]) -> Vec<f64> {
    let mut v = base.to_vec();
    for (k, &i) in idx.iter().enumerate() {
        v[i] = transforms[i].to_natural(z[k]);
    }
    v
}

/// Maximizes the chosen composite likelihood over the free parameters.
///
/// Each start runs a simplex search on the transformed scale; starts whose
/// likelihood is not finite are skipped. With every parameter fixed the
/// likelihood is evaluated once.
pub fn fit(model: &ModelSpec, data: &Dataset, kind: LikelihoodKind, opts: &FitOptions) -> Result<FitResult> {
    model.validate()?;
    data.validate()?;
    kind.check_seed(&model.seed)?;
    let mut model = model.clone();
    let mut notes = Vec::new();
    if kind == LikelihoodKind::Independence {
        let seed_names = model.seed.param_names();
        for n in model.names() {
            if !seed_names.contains(&n) && !model.fixed.iter().any(|f| f == n) {
                model.fixed.push(n.to_string());
            }
        }
    }
    if data.n_replicates() == 1 {
        let msg = "single replicate: block bootstrap and CLIC are unavailable";
        log::warn!("{msg}");
        notes.push(msg.to_string());
    }
    let obj = Objective::new(data, kind, opts.pair_cutoff, opts.quadrature)?;
    let names: Vec<String> = model.names().iter().map(|s| s.to_string()).collect();
    let free = model.free_mask();
    let transforms = model.transforms();
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let result = |m: &ModelSpec, log_pl, iterations, evaluations, converged, starts_used, notes| FitResult {
        schema_version: 1,
        kind,
        names: names.clone(),
        estimates: m.values(),
        free: free.clone(),
        log_pl,
        iterations,
        evaluations,
        converged,
        n_pairs: obj.n_pairs(),
        n_replicates: data.n_replicates(),
        starts_used,
        std_errors: None,
        clic: None,
        clic_penalty: None,
        model: m.clone(),
        notes,
    };
    if idx.is_empty() {
        let l = obj.loglik(&model)?;
        return Ok(result(&model, l, 0, 1, true, 0, notes));
    }

    let starts = match &opts.starts {
        Some(s) => {
            if s.is_empty() || s.iter().any(|v| v.len() != names.len()) {
                return invalid(format!("each start needs {} values", names.len()));
            }
            s.clone()
        }
        None => {
            if opts.n_starts == 0 {
                return invalid("n_starts must be >= 1");
            }
            let base = starting_values(&model, data, kind)?;
            let z0 = to_free(&transforms, &idx, &base);
            let mut out = vec![base.clone()];
            for k in 1..opts.n_starts {
                let mut rng = stream(opts.seed, k as u64);
                let z: Vec<f64> = z0
                    .iter()
                    .map(|z| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        z + opts.jitter * e
                    })
                    .collect();
                out.push(to_natural(&transforms, &idx, &base, &z));
            }
            out
        }
    };

    let mut best: Option<(f64, Vec<f64>, usize, bool)> = None;
    let mut evaluations = 0;
    let mut iterations = 0;
    let mut used = 0;
    for (k, start) in starts.iter().enumerate() {
        let z0 = to_free(&transforms, &idx, start);
        let base = to_natural(&transforms, &idx, start, &z0);
        let value_at = |z: &[f64]| -> Result<f64> {
            let m = model.with_values(&to_natural(&transforms, &idx, &base, z))?;
            obj.loglik(&m)
        };
        match value_at(&z0) {
            Ok(v) if v.is_finite() => {}
            other => {
                let msg = format!("start {k} skipped: likelihood {:?}", other.map_err(|e| e.to_string()));
                log::info!("{msg}");
                notes.push(msg);
                continue;
            }
        }
        used += 1;
        let m = nelder_mead(|z| value_at(z).map_or(f64::INFINITY, |v| -v), &z0, &opts.optimizer);
        evaluations += m.evals;
        iterations += m.iterations;
        log::debug!("start {k}: log-PL {} after {} evaluations", -m.value, m.evals);
        if best.as_ref().is_none_or(|b| m.value < b.0) {
            best = Some((m.value, to_natural(&transforms, &idx, &base, &m.x), m.iterations, m.converged));
        }
    }
    let (value, est, _, converged) = best.ok_or(Error::AllStartsFailed)?;
    let fitted = model.with_values(&est)?;
    Ok(result(&fitted, -value, iterations, evaluations, converged, used, notes))
}
