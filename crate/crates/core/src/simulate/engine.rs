//! Column-and-level bookkeeping shared by the grid and disc-stacking
//! simulators.
//!
//! The spatial domain is cut into columns (cells of side δ). At every
//! column each site sees a level, the height of its translated hypograph
//! over the column center. The basis cells in a column that site `s`
//! covers are exactly those below its level, so the column splits into
//! horizontal slabs bounded by consecutive distinct levels; each slab is
//! covered by the sites whose level reaches its top. One basis draw per
//! slab is exact by infinite divisibility. Slabs covered by the same site
//! set anywhere in the domain are merged into a single draw when that is
//! cheaper than walking the columns.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::levy::{LevySeed, SetDistribution};
use crate::numeric::derive_seed;

/// Relative cost of one basis draw against one accumulation.
const DRAW_COST: usize = 30;

/// Replicate-independent layout of one smoothed component.
#[derive(Debug, Clone)]
pub(crate) struct LevelField {
    /// Sites per column ordered by decreasing level.
    members: Vec<u32>,
    /// Start offset of each column in `members` (one extra trailing entry).
    col_members: Vec<usize>,
    /// Start offset of each column in `groups` (one extra trailing entry).
    col_groups: Vec<usize>,
    /// Per level group: end offset in `members` and slab volume.
    groups: Vec<(usize, f64)>,
    /// Merged draws as (start, len, volume) into `members`.
    atoms: Option<Vec<(usize, usize, f64)>>,
    /// Independent site-local volume restoring each site's unit mass.
    local: Vec<f64>,
}

/// Geometry handed to [`LevelField::build`].
pub(crate) struct Layout<'a> {
    pub sites: &'a [[f64; 2]],
    pub dim: usize,
    pub cell: f64,
    pub reach: f64,
    pub max_cells: usize,
}

fn cell_range(x: f64, reach: f64, cell: f64) -> (i64, i64) {
    (((x - reach) / cell).floor() as i64, ((x + reach) / cell).ceil() as i64)
}

fn pack(i: i64, j: i64) -> u64 {
    (((i + (1 << 31)) as u64) << 32) | ((j + (1 << 31)) as u64 & 0xFFFF_FFFF)
}

impl LevelField {
    /// Lays out the columns around `sites`; `level(dist)` is the covered
    /// height at a column center `dist` away from a site.
    pub fn build<F: Fn(f64) -> f64>(geo: &Layout, level: F) -> Result<Self> {
        let cell = geo.cell;
        let per_axis = 2 * (geo.reach / cell).ceil() as u128 + 2;
        let window = if geo.dim == 2 { per_axis * per_axis } else { per_axis };
        let required = window.saturating_mul(geo.sites.len() as u128);
        if required > geo.max_cells as u128 {
            return Err(Error::BudgetExceeded {
                required: required.min(usize::MAX as u128) as usize,
                cap: geo.max_cells,
            });
        }
        let extent = geo
            .sites
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0, f64::max);
        if (extent + geo.reach) / cell > (1u64 << 30) as f64 {
            return Err(Error::BudgetExceeded {
                required: usize::MAX,
                cap: geo.max_cells,
            });
        }

        let mut entries: Vec<(u64, u32, f64)> = Vec::new();
        for (s, p) in geo.sites.iter().enumerate() {
            let (i0, i1) = cell_range(p[0], geo.reach, cell);
            let (j0, j1) = if geo.dim == 2 {
                cell_range(p[1], geo.reach, cell)
            } else {
                (0, 0)
            };
            for i in i0..=i1 {
                let dx = (i as f64 + 0.5) * cell - p[0];
                for j in j0..=j1 {
                    let dist = if geo.dim == 2 {
                        let dy = (j as f64 + 0.5) * cell - p[1];
                        dx.hypot(dy)
                    } else {
                        dx.abs()
                    };
                    if dist > geo.reach {
                        continue;
                    }
                    let h = level(dist);
                    if h > 0.0 {
                        entries.push((pack(i, j), s as u32, h));
                    }
                }
            }
        }
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.2.total_cmp(&a.2)).then(a.1.cmp(&b.1)));

        let n_sites = geo.sites.len();
        let cell_vol = if geo.dim == 2 { cell * cell } else { cell };
        let mut received = vec![0.0; n_sites];
        let mut members = Vec::with_capacity(entries.len());
        let mut col_members = vec![0];
        let mut col_groups = vec![0];
        let mut groups = Vec::new();

        let mut k = 0;
        while k < entries.len() {
            let key = entries[k].0;
            let mut end = k;
            while end < entries.len() && entries[end].0 == key {
                end += 1;
            }
            let col = &entries[k..end];
            let mut g = 0;
            while g < col.len() {
                let h = col[g].2;
                let mut g_end = g;
                while g_end < col.len() && col[g_end].2 == h {
                    members.push(col[g_end].1);
                    received[col[g_end].1 as usize] += h * cell_vol;
                    g_end += 1;
                }
                let below = if g_end < col.len() { col[g_end].2 } else { 0.0 };
                groups.push((members.len(), (h - below) * cell_vol));
                g = g_end;
            }
            col_members.push(members.len());
            col_groups.push(groups.len());
            k = end;
        }

        // Cell-center counting can overshoot unit volume; shrink every slab
        // by the largest overshoot so the top-up below restores exact margins.
        let top = received.iter().fold(0.0f64, |m, &r| m.max(r));
        if top > 1.0 {
            for g in &mut groups {
                g.1 /= top;
            }
            for r in &mut received {
                *r /= top;
            }
        }
        let local = received.iter().map(|r| (1.0 - r).max(0.0)).collect();
        let mut field = Self {
            members,
            col_members,
            col_groups,
            groups,
            atoms: None,
            local,
        };
        field.merge_if_cheaper();
        Ok(field)
    }

    /// A layout with no smoothing: every site draws its full unit volume alone.
    pub fn site_local(n_sites: usize) -> Self {
        Self {
            members: Vec::new(),
            col_members: vec![0],
            col_groups: vec![0],
            groups: Vec::new(),
            atoms: None,
            local: vec![1.0; n_sites],
        }
    }

    /// Total volume of basis draws site `s` receives.
    #[cfg(test)]
    pub fn site_volume(&self, s: usize) -> f64 {
        let mut v = self.local[s];
        for c in 0..self.col_members.len() - 1 {
            let ms = self.col_members[c];
            let mut start = ms;
            for g in self.col_groups[c]..self.col_groups[c + 1] {
                let end = self.groups[g].0;
                if self.members[start..end].contains(&(s as u32)) {
                    v += self.groups[g..self.col_groups[c + 1]].iter().map(|x| x.1).sum::<f64>();
                    break;
                }
                start = end;
            }
        }
        v
    }

    fn merge_if_cheaper(&mut self) {
        let n_cols = self.col_members.len() - 1;
        let chain_cost = self.members.len() + DRAW_COST * self.groups.len();
        // Order-free set fingerprints: sums of per-site 128-bit keys.
        let key = |s: u32| -> u128 {
            let a = derive_seed(0x5EED, s as u64) as u128;
            let b = derive_seed(0xC0FFEE, s as u64) as u128;
            (a << 64) | b
        };
        let mut index: HashMap<u128, usize> = HashMap::new();
        let mut atoms: Vec<(usize, usize, f64)> = Vec::new();
        let mut merged_cost = 0usize;
        for c in 0..n_cols {
            let ms = self.col_members[c];
            let mut fp: u128 = 0;
            let mut start = ms;
            for g in self.col_groups[c]..self.col_groups[c + 1] {
                let (end, vol) = self.groups[g];
                for &s in &self.members[start..end] {
                    fp = fp.wrapping_add(key(s));
                }
                match index.get(&fp) {
                    Some(&a) => atoms[a].2 += vol,
                    None => {
                        index.insert(fp, atoms.len());
                        atoms.push((ms, end - ms, vol));
                        merged_cost += end - ms + DRAW_COST;
                        if merged_cost >= chain_cost {
                            return;
                        }
                    }
                }
                start = end;
            }
        }
        self.atoms = Some(atoms);
    }

    /// Adds one realization, with every volume multiplied by `scale`, to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, seed: &LevySeed, scale: f64, rng: &mut R, out: &mut [f64]) {
        let draw = |rng: &mut R, v: f64| -> f64 {
            SetDistribution {
                seed: *seed,
                volume: v * scale,
            }
            .sample_one(rng)
        };
        match &self.atoms {
            Some(atoms) => {
                for &(start, len, vol) in atoms {
                    let x = draw(rng, vol);
                    for &s in &self.members[start..start + len] {
                        out[s as usize] += x;
                    }
                }
            }
            None => {
                for c in 0..self.col_members.len() - 1 {
                    let ms = self.col_members[c];
                    let (gs, ge) = (self.col_groups[c], self.col_groups[c + 1]);
                    let mut acc = 0.0;
                    for g in (gs..ge).rev() {
                        acc += draw(rng, self.groups[g].1);
                        let start = if g == gs { ms } else { self.groups[g - 1].0 };
                        for &s in &self.members[start..self.groups[g].0] {
                            out[s as usize] += acc;
                        }
                    }
                }
            }
        }
        for (o, &v) in out.iter_mut().zip(&self.local) {
            if v > 0.0 {
                *o += draw(rng, v);
            }
        }
    }

    #[cfg(test)]
    pub fn is_merged(&self) -> bool {
        self.atoms.is_some()
    }

    #[cfg(test)]
    pub fn unmerged(mut self) -> Self {
        self.atoms = None;
        self
    }
}
