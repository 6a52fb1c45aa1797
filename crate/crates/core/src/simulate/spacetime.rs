//! Space-time extensions: a hypograph translated at constant velocity, and
//! a separable construction driven by a discrete-time kernel.

use serde::{Deserialize, Serialize};

use super::{check_inputs, grid_plan, run, FieldSample, SimulationConfig, SiteSet};
use crate::error::{invalid, Result};
use crate::hypograph::HeightFunction;
use crate::levy::LevySeed;
use crate::numeric::special::gamma_p;

/// Discrete-time kernel k_T on {0, 1, …}, non-increasing and summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeKernel {
    /// k(i) = p(1 − p)^i.
    Geometric { p: f64 },
    /// Poisson(λ) mass function; monotone only for λ ≤ 1.
    PoissonPmf { lambda: f64 },
    /// k(i) ∝ (i + 1)^(−s) for i ≤ i_max.
    Zipf { s: f64, i_max: usize },
    /// Explicit weights for lags 0, 1, …, normalized to sum 1.
    TruncatedCustom { weights: Vec<f64> },
}

impl TimeKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            TimeKernel::Geometric { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return invalid(format!("geometric p must lie in (0, 1], got {p}"));
                }
            }
            TimeKernel::PoissonPmf { lambda } => {
                if !(*lambda > 0.0) {
                    return invalid(format!("Poisson lambda must be > 0, got {lambda}"));
                }
                if *lambda > 1.0 {
                    return invalid(format!("Poisson kernel with lambda = {lambda} > 1 is not monotone"));
                }
            }
            TimeKernel::Zipf { s, .. } => {
                if !(*s >= 0.0 && s.is_finite()) {
                    return invalid(format!("Zipf exponent must be finite and >= 0, got {s}"));
                }
            }
            TimeKernel::TruncatedCustom { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return invalid("custom kernel weights must be finite and >= 0");
                }
                if weights.iter().sum::<f64>() <= 0.0 {
                    return invalid("custom kernel weights must not all be zero");
                }
                if weights.windows(2).any(|w| w[1] > w[0]) {
                    return invalid("custom kernel weights must be non-increasing");
                }
            }
        }
        Ok(())
    }

    /// k_T(i).
    pub fn pmf(&self, i: usize) -> f64 {
        match self {
            TimeKernel::Geometric { p } => p * (1.0 - p).powi(i as i32),
            TimeKernel::PoissonPmf { lambda } => {
                let mut v = (-lambda).exp();
                for k in 1..=i {
                    v *= lambda / k as f64;
                }
                v
            }
            TimeKernel::Zipf { s, i_max } => {
                if i > *i_max {
                    return 0.0;
                }
                let z: f64 = (0..=*i_max).map(|k| ((k + 1) as f64).powf(-s)).sum();
                ((i + 1) as f64).powf(-s) / z
            }
            TimeKernel::TruncatedCustom { weights } => {
                let z: f64 = weights.iter().sum();
                weights.get(i).map_or(0.0, |w| w / z)
            }
        }
    }

    /// Temporal correlation C_T(Δ) = Σ_{i≥0} k_T(Δ + i).
    pub fn temporal_correlation(&self, lag: usize) -> f64 {
        if lag == 0 {
            return 1.0;
        }
        match self {
            TimeKernel::Geometric { p } => (1.0 - p).powi(lag as i32),
            TimeKernel::PoissonPmf { lambda } => gamma_p(lag as f64, *lambda),
            TimeKernel::Zipf { i_max, .. } => (lag..=*i_max).map(|i| self.pmf(i)).sum(),
            TimeKernel::TruncatedCustom { weights } => (lag..weights.len()).map(|i| self.pmf(i)).sum(),
        }
    }

    /// k_T on 0..=i, renormalized to sum 1. Kernels with finite support
    /// are returned whole; otherwise i is the first lag where the remaining
    /// mass is at most `eps`.
    pub fn truncated(&self, eps: f64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out: Vec<f64> = match self {
            TimeKernel::Zipf { i_max, .. } => (0..=*i_max).map(|i| self.pmf(i)).collect(),
            TimeKernel::TruncatedCustom { weights } => (0..weights.len()).map(|i| self.pmf(i)).collect(),
            _ => {
                let mut out = Vec::new();
                while out.is_empty() || self.temporal_correlation(out.len()) > eps {
                    if out.len() > 1_000_000 {
                        return invalid("time kernel tail too heavy to truncate");
                    }
                    out.push(self.pmf(out.len()));
                }
                out
            }
        };
        while out.len() > 1 && out[out.len() - 1] == 0.0 {
            out.pop();
        }
        let z: f64 = out.iter().sum();
        Ok(out.into_iter().map(|k| k / z).collect())
    }
}

/// X(s, t) = X(s − v·t, 0): the hypograph moves with velocity `v`.
///
/// Every site needs a time; sites that coincide after the shift share all
/// basis draws.
pub fn simulate_spacetime_transport(
    seed: &LevySeed,
    h: &HeightFunction,
    sites: &SiteSet,
    velocity: [f64; 2],
    cfg: &SimulationConfig,
) -> Result<FieldSample> {
    check_inputs(seed, h, sites, cfg)?;
    let times = match &sites.times {
        Some(t) => t,
        None => return invalid("transport simulation needs a time for every site"),
    };
    if velocity.iter().any(|v| !v.is_finite()) {
        return invalid("velocity must be finite");
    }
    if sites.dim == 1 && velocity[1] != 0.0 {
        return invalid("one-dimensional sites need a velocity with zero second component");
    }
    let coords: Vec<[f64; 2]> = sites
        .coords
        .iter()
        .zip(times)
        .map(|(c, &t)| [c[0] - velocity[0] * t, c[1] - velocity[1] * t])
        .collect();
    let (plan, map) = grid_plan(h, &coords, cfg)?;
    let values = run(cfg, plan.n_unique, &map, |rng, row| plan.sample_into(seed, 1.0, rng, row));
    Ok(FieldSample {
        sites: sites.clone(),
        values,
        basis: *seed,
        kernel: h.clone(),
        method: "spacetime_transport".to_string(),
    })
}

/// Separable space-time field at integer times 0..`n_times`.
///
/// Innovation fields with height (k(j) − k(j+1))·H are drawn at every
/// time τ and persist over τ, …, τ + j. A fixed time then carries total
/// height Σ_j (j+1)(k(j) − k(j+1))·H = H, and two times Δ apart share
/// Σ_{j≥Δ} k(j) of it, so the covariance factorizes as C_S(u)·C_T(Δ).
/// The output lists all sites at time 0, then at time 1, and so on.
pub fn simulate_spacetime_separable(
    seed: &LevySeed,
    h: &HeightFunction,
    sites: &SiteSet,
    n_times: usize,
    kernel: &TimeKernel,
    cfg: &SimulationConfig,
) -> Result<FieldSample> {
    check_inputs(seed, h, sites, cfg)?;
    if n_times == 0 {
        return invalid("at least one time is needed");
    }
    let k = kernel.truncated(cfg.tail_mass_eps)?;
    let steps: Vec<f64> = (0..k.len())
        .map(|j| k[j] - k.get(j + 1).copied().unwrap_or(0.0))
        .collect();
    let (plan, map) = grid_plan(h, &sites.coords, cfg)?;
    let n = plan.n_unique;
    let n_sites = sites.len();

    let mut st_sites = SiteSet {
        dim: sites.dim,
        coords: Vec::with_capacity(n_sites * n_times),
        ids: Vec::with_capacity(n_sites * n_times),
        times: Some(Vec::with_capacity(n_sites * n_times)),
    };
    let mut st_map = Vec::with_capacity(n_sites * n_times);
    for t in 0..n_times {
        for i in 0..n_sites {
            st_sites.coords.push(sites.coords[i]);
            st_sites.ids.push(sites.ids[i].clone());
            if let Some(ts) = st_sites.times.as_mut() {
                ts.push(t as f64);
            }
            st_map.push(t * n + map[i]);
        }
    }

    let last = n_times as i64 - 1;
    let values = run(cfg, n * n_times, &st_map, |rng, row| {
        let mut innovation = vec![0.0; n];
        for (j, &c) in steps.iter().enumerate() {
            if c <= 0.0 {
                continue;
            }
            for tau in -(j as i64)..=last {
                innovation.iter_mut().for_each(|x| *x = 0.0);
                plan.sample_into(seed, c, rng, &mut innovation);
                for t in tau.max(0)..=(tau + j as i64).min(last) {
                    let base = t as usize * n;
                    for (x, v) in row[base..base + n].iter_mut().zip(&innovation) {
                        *x += v;
                    }
                }
            }
        }
    });
    Ok(FieldSample {
        sites: st_sites,
        values,
        basis: *seed,
        kernel: h.clone(),
        method: "spacetime_separable".to_string(),
    })
}
