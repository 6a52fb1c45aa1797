//! Simulation of hypograph-smoothed Lévy fields at arbitrary site sets.
//!
//! Two discretizations are offered. [`simulate_grid`] cuts space into
//! columns and the height axis into levels of side `height_cell`;
//! [`simulate_cavalieri`] replaces H by a stack of flat discs at
//! equal-mass radii. Both use the exact slab decomposition of
//! `engine`, so only the geometry is approximated, never the basis law.

mod engine;
mod latent;
mod spacetime;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypograph::{Anisotropy, HeightFunction, Shape};
use crate::levy::LevySeed;
use crate::numeric::{stream, RngStream};
use engine::{Layout, LevelField};

pub use latent::{simulate_latent, LatentLink};
pub use spacetime::{simulate_spacetime_separable, simulate_spacetime_transport, TimeKernel};

/// Locations at which a field is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    /// Spatial dimension, 1 or 2. One-dimensional sites keep 0 as second coordinate.
    pub dim: usize,
    pub coords: Vec<[f64; 2]>,
    pub ids: Vec<String>,
    pub times: Option<Vec<f64>>,
}

impl SiteSet {
    /// Planar sites labelled by their position in the list.
    pub fn planar(coords: Vec<[f64; 2]>) -> Result<Self> {
        let ids = (0..coords.len()).map(|i| i.to_string()).collect();
        let s = Self {
            dim: 2,
            coords,
            ids,
            times: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Sites on a line.
    pub fn line(xs: &[f64]) -> Result<Self> {
        let s = Self {
            dim: 1,
            coords: xs.iter().map(|&x| [x, 0.0]).collect(),
            ids: (0..xs.len()).map(|i| i.to_string()).collect(),
            times: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        self.ids = ids;
        self.validate()?;
        Ok(self)
    }

    pub fn with_times(mut self, times: Vec<f64>) -> Result<Self> {
        self.times = Some(times);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return invalid(format!("site dimension must be 1 or 2, got {}", self.dim));
        }
        if self.coords.is_empty() {
            return invalid("site set is empty");
        }
        if self.ids.len() != self.coords.len() {
            return invalid("site ids and coordinates differ in length");
        }
        if self.coords.iter().flatten().any(|c| !c.is_finite()) {
            return invalid("site coordinates must be finite");
        }
        if self.dim == 1 && self.coords.iter().any(|c| c[1] != 0.0) {
            return invalid("one-dimensional sites must have second coordinate 0");
        }
        if let Some(t) = &self.times {
            if t.len() != self.coords.len() {
                return invalid("site times and coordinates differ in length");
            }
            if t.iter().any(|x| !x.is_finite()) {
                return invalid("site times must be finite");
            }
        }
        Ok(())
    }
}

/// Discretization and run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Spatial cell side; defaults to ρ/20 per component.
    pub grid_cell: Option<f64>,
    /// Cell side along the height axis; defaults to h_max/50, or for a
    /// capped singular H to H at the median radius over 50.
    pub height_cell: Option<f64>,
    /// Radial mass allowed outside the simulated window.
    pub tail_mass_eps: f64,
    pub cavalieri_layers: usize,
    pub rng_seed: u64,
    pub n_replicates: usize,
    /// Cap on (site, column) pairs laid out per component.
    pub max_cells: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid_cell: None,
            height_cell: None,
            tail_mass_eps: 1e-3,
            cavalieri_layers: 64,
            rng_seed: 0,
            n_replicates: 1,
            max_cells: 50_000_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("grid_cell", self.grid_cell), ("height_cell", self.height_cell)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return invalid(format!("{name} must be finite and > 0, got {v}"));
                }
            }
        }
        if !(self.tail_mass_eps > 0.0 && self.tail_mass_eps <= 0.05) {
            return invalid(format!(
                "tail_mass_eps must lie in (0, 0.05], got {}",
                self.tail_mass_eps
            ));
        }
        if self.cavalieri_layers == 0 {
            return invalid("cavalieri_layers must be >= 1");
        }
        if self.n_replicates == 0 {
            return invalid("n_replicates must be >= 1");
        }
        if self.max_cells == 0 {
            return invalid("max_cells must be >= 1");
        }
        Ok(())
    }
}

/// Field values at a site set, one row per replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub sites: SiteSet,
    pub values: Vec<Vec<f64>>,
    pub basis: LevySeed,
    pub kernel: HeightFunction,
    pub method: String,
}

impl FieldSample {
    /// Values at site `i` across replicates.
    pub fn site_values(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[i]).collect()
    }
}

/// Collapses sites with identical coordinates so they share every draw.
fn dedupe(coords: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<usize>) {
    let mut seen: HashMap<[u64; 2], usize> = HashMap::new();
    let mut unique = Vec::new();
    let mut map = Vec::with_capacity(coords.len());
    for c in coords {
        let key = [(c[0] + 0.0).to_bits(), (c[1] + 0.0).to_bits()];
        let idx = *seen.entry(key).or_insert_with(|| {
            unique.push(*c);
            unique.len() - 1
        });
        map.push(idx);
    }
    (unique, map)
}

/// How a component's hypograph is discretized.
#[derive(Clone, Copy, PartialEq)]
enum Method {
    Grid,
    Cavalieri,
}

/// Replicate-independent state for one field.
pub(crate) struct Plan {
    parts: Vec<(f64, LevelField)>,
    nugget: f64,
    pub n_unique: usize,
}

impl Plan {
    fn new(h: &HeightFunction, unique: &[[f64; 2]], cfg: &SimulationConfig, method: Method) -> Result<Self> {
        let (comps, nugget) = h.components();
        let mut parts = Vec::with_capacity(comps.len());
        for (w, comp) in comps {
            let geo = |cell: f64, reach: f64| Layout {
                sites: unique,
                dim: h.dim,
                cell,
                reach,
                max_cells: cfg.max_cells,
            };
            let cell = cfg.grid_cell.unwrap_or(comp.scale() / 20.0);
            let field = match method {
                Method::Grid => {
                    let reach = match comp.support_radius() {
                        Some(r) => r,
                        None => comp.radial_quantile_upper(cfg.tail_mass_eps)?,
                    };
                    let cap = height_cap(&comp, cfg.tail_mass_eps)?;
                    // A capped spike would make cap/50 too coarse for the bulk of H.
                    let dh = match cfg.height_cell {
                        Some(v) => v,
                        None if comp.h_max().is_finite() => cap / 50.0,
                        None => comp.height(comp.radial_quantile_upper(0.5)?) / 50.0,
                    };
                    LevelField::build(&geo(cell, reach), |d| {
                        (comp.height(d).min(cap) / dh).round() * dh
                    })?
                }
                Method::Cavalieri => {
                    let layers = cavalieri_layers(&comp, cfg.cavalieri_layers, cfg.tail_mass_eps)?;
                    let radii: Vec<f64> = layers.iter().map(|l| l.0).collect();
                    let mut levels = vec![0.0; layers.len() + 1];
                    for i in (0..layers.len()).rev() {
                        levels[i] = levels[i + 1] + layers[i].1;
                    }
                    let reach = *radii.last().unwrap_or(&0.0);
                    LevelField::build(&geo(cell, reach), |d| levels[radii.partition_point(|&r| r < d)])?
                }
            };
            parts.push((w, field));
        }
        Ok(Self {
            parts,
            nugget,
            n_unique: unique.len(),
        })
    }

    pub fn sample_into(&self, seed: &LevySeed, scale: f64, rng: &mut RngStream, out: &mut [f64]) {
        for (w, f) in &self.parts {
            f.sample_into(seed, w * scale, rng, out);
        }
        if self.nugget > 0.0 {
            LevelField::site_local(out.len()).sample_into(seed, self.nugget * scale, rng, out);
        }
    }
}

/// Height above which a singular H is cut: the removed mass
/// P(‖S‖ ≤ r) − H(r)·|B(r)| at the cut radius r is at most `eps`.
fn height_cap(h: &HeightFunction, eps: f64) -> Result<f64> {
    let top = h.h_max();
    if top.is_finite() {
        return Ok(top);
    }
    let ball = |r: f64| {
        if h.dim == 2 {
            std::f64::consts::PI * r * r
        } else {
            2.0 * r
        }
    };
    let removed = |r: f64| -> Result<f64> { Ok(1.0 - h.radial_tail(r)? - h.height(r) * ball(r)) };
    let (mut lo, mut hi) = (0.0, h.scale());
    while removed(hi)? <= eps {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if removed(mid)? <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return invalid("could not place the height cap");
    }
    Ok(h.height(lo))
}

/// Disc stack approximating H: `(radius, slab height)` per layer.
///
/// Radii are the radial quantiles at i/m, the last one at the
/// 1 − `eps` quantile (or the support radius); layer i is a slab of
/// height H(r_i) − H(r_{i+1}) over the disc of radius r_i, so the stack
/// equals H(r_k) on the ring r_{k−1} < ‖s‖ ≤ r_k.
pub fn cavalieri_layers(h: &HeightFunction, m: usize, eps: f64) -> Result<Vec<(f64, f64)>> {
    if m == 0 {
        return invalid("at least one layer is needed");
    }
    if matches!(h.shape, Shape::Nugget | Shape::ConvexSum { .. }) {
        return invalid("disc stacking needs a single radial shape");
    }
    h.validate()?;
    let outer = match h.support_radius() {
        Some(r) => r,
        None => h.radial_quantile_upper(eps)?,
    };
    let mut radii = Vec::with_capacity(m);
    for i in 1..m {
        let tail = 1.0 - i as f64 / m as f64;
        radii.push(h.radial_quantile_upper(tail)?.min(outer));
    }
    radii.push(outer);
    let heights: Vec<f64> = radii.iter().map(|&r| h.height(r)).collect();
    Ok((0..m)
        .map(|i| {
            let next = if i + 1 < m { heights[i + 1] } else { 0.0 };
            (radii[i], (heights[i] - next).max(0.0))
        })
        .collect())
}

/// Draws `n_replicates` rows at the unique sites and expands them.
fn run<F>(cfg: &SimulationConfig, n_unique: usize, map: &[usize], sample: F) -> Vec<Vec<f64>>
where
    F: Fn(&mut RngStream, &mut [f64]) + Sync,
{
    (0..cfg.n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.rng_seed, r as u64);
            let mut row = vec![0.0; n_unique];
            sample(&mut rng, &mut row);
            map.iter().map(|&u| row[u]).collect()
        })
        .collect()
}

fn check_inputs(seed: &LevySeed, h: &HeightFunction, sites: &SiteSet, cfg: &SimulationConfig) -> Result<()> {
    seed.validate()?;
    h.validate()?;
    sites.validate()?;
    cfg.validate()?;
    if h.dim != sites.dim {
        return invalid(format!(
            "height function has dimension {} but sites have dimension {}",
            h.dim, sites.dim
        ));
    }
    Ok(())
}

fn simulate_at(
    seed: &LevySeed,
    h: &HeightFunction,
    sites: &SiteSet,
    coords: &[[f64; 2]],
    cfg: &SimulationConfig,
    method: Method,
) -> Result<FieldSample> {
    let (unique, map) = dedupe(coords);
    let plan = Plan::new(h, &unique, cfg, method)?;
    let values = run(cfg, unique.len(), &map, |rng, row| plan.sample_into(seed, 1.0, rng, row));
    Ok(FieldSample {
        sites: sites.clone(),
        values,
        basis: *seed,
        kernel: h.clone(),
        method: match method {
            Method::Grid => "grid",
            Method::Cavalieri => "cavalieri",
        }
        .to_string(),
    })
}

/// Builds the layout shared by the space-time and latent simulators.
pub(crate) fn grid_plan(
    h: &HeightFunction,
    coords: &[[f64; 2]],
    cfg: &SimulationConfig,
) -> Result<(Plan, Vec<usize>)> {
    let (unique, map) = dedupe(coords);
    Ok((Plan::new(h, &unique, cfg, Method::Grid)?, map))
}

/// X(s) = L(s + A_H) by fine-grid discretization of the basis.
///
/// Each basis cell is counted for site s when its center lies inside
/// s + A_H. Mass lost to the spatial window, the height cap of singular
/// shapes and the discretization is restored as an independent
/// site-local draw; overshoot shrinks all slabs uniformly, so every site
/// receives total volume exactly 1.
pub fn simulate_grid(
    seed: &LevySeed,
    h: &HeightFunction,
    sites: &SiteSet,
    cfg: &SimulationConfig,
    aniso: Option<&Anisotropy>,
) -> Result<FieldSample> {
    check_inputs(seed, h, sites, cfg)?;
    let coords: Vec<[f64; 2]> = match aniso {
        Some(a) if !a.is_identity() => {
            a.validate()?;
            if sites.dim != 2 {
                return invalid("anisotropy needs planar sites");
            }
            sites.coords.iter().map(|&c| a.apply(c)).collect()
        }
        _ => sites.coords.clone(),
    };
    simulate_at(seed, h, sites, &coords, cfg, Method::Grid)
}

/// X(s) by stacking m disc-smoothed bases (Cavalieri's principle).
///
/// Layer i contributes L_i(disc(s, r_i)) with L_i carrying volume
/// h_i·|B| on a planar set B.
pub fn simulate_cavalieri(
    seed: &LevySeed,
    h: &HeightFunction,
    sites: &SiteSet,
    cfg: &SimulationConfig,
) -> Result<FieldSample> {
    check_inputs(seed, h, sites, cfg)?;
    if matches!(h.shape, Shape::Nugget) {
        return invalid("disc stacking is undefined for a pure nugget");
    }
    if let Shape::ConvexSum { parts, .. } = &h.shape {
        if parts.iter().any(|p| matches!(p, Shape::ConvexSum { .. })) {
            return invalid("nested convex sums are not supported");
        }
    }
    simulate_at(seed, h, sites, &sites.coords, cfg, Method::Cavalieri)
}
