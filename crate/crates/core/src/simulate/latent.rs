//! Hierarchical fields with a latent gamma convolution driving the
//! observation law.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_inputs, grid_plan, run, FieldSample, SimulationConfig, SiteSet};
use crate::error::{invalid, Result};
use crate::hypograph::HeightFunction;
use crate::levy::{poisson_draw, LevySeed};

/// How the latent field G(s) enters the observation law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentLink {
    /// Y | G ~ Exp(rate G); generalized Pareto margins.
    ExponentialRate,
    /// Y | G ~ Poisson(G); negative binomial margins.
    PoissonMean,
}

/// Draws G(s) on the grid, then conditionally independent observations.
pub fn simulate_latent(
    latent_seed: &LevySeed,
    h: &HeightFunction,
    sites: &SiteSet,
    link: LatentLink,
    cfg: &SimulationConfig,
) -> Result<FieldSample> {
    if !matches!(latent_seed, LevySeed::Gamma { .. }) {
        return invalid(format!(
            "the latent field needs a gamma seed, got {}",
            latent_seed.family_name()
        ));
    }
    check_inputs(latent_seed, h, sites, cfg)?;
    let (plan, map) = grid_plan(h, &sites.coords, cfg)?;
    let n = plan.n_unique;
    let values = run(cfg, sites.len(), &(0..sites.len()).collect::<Vec<_>>(), |rng, row| {
        let mut g = vec![0.0; n];
        plan.sample_into(latent_seed, 1.0, rng, &mut g);
        for (y, &u) in row.iter_mut().zip(&map) {
            *y = match link {
                LatentLink::ExponentialRate => {
                    let e: f64 = rng.sample(rand_distr::Exp1);
                    e / g[u]
                }
                LatentLink::PoissonMean => poisson_draw(rng, g[u]),
            };
        }
    });
    Ok(FieldSample {
        sites: sites.clone(),
        values,
        basis: *latent_seed,
        kernel: h.clone(),
        method: match link {
            LatentLink::ExponentialRate => "latent_exponential",
            LatentLink::PoissonMean => "latent_poisson",
        }
        .to_string(),
    })
}
