//! Method-of-moments covariogram and range starting values.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::hypograph::HeightFunction;

use super::{Dataset, ExactSum};

/// One distance bin of the empirical covariogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovariogramBin {
    pub lower: f64,
    pub upper: f64,
    /// Mean lag of the site pairs in the bin.
    pub lag: f64,
    pub covariance: f64,
    /// Number of (pair, replicate) products averaged.
    pub count: usize,
    pub empty: bool,
}

/// Empirical covariances on bins [e_k, e_{k+1}), the last bin closed.
///
/// Pairs include each site with itself, so a bin starting at 0 holds the
/// sample variance. With several replicates each site is centered by its
/// own mean across replicates; a single replicate is centered by the
/// global mean, which biases covariances downward under dependence.
pub fn empirical_covariogram(data: &Dataset, edges: &[f64]) -> Result<Vec<CovariogramBin>> {
    data.validate()?;
    if edges.len() < 2 || edges[0] < 0.0 || edges.windows(2).any(|w| !(w[1] > w[0])) || !edges[edges.len() - 1].is_finite() {
        return invalid("bin edges must be finite, start at >= 0 and increase strictly");
    }
    let n = data.n_sites();
    let centers: Vec<f64> = if data.n_replicates() >= 2 {
        (0..n)
            .map(|i| {
                let mut s = ExactSum::default();
                let mut c = 0usize;
                for v in data.values.iter().map(|r| r[i]).filter(|v| !v.is_nan()) {
                    s.add_finite(v);
                    c += 1;
                }
                s.value() / c as f64
            })
            .collect()
    } else {
        let mut s = ExactSum::default();
        for v in data.observed() {
            s.add_finite(v);
        }
        vec![s.value() / data.observed().count() as f64; n]
    };
    let nb = edges.len() - 1;
    let mut sum = vec![ExactSum::default(); nb];
    let mut lag_sum = vec![ExactSum::default(); nb];
    let mut pairs = vec![0usize; nb];
    let mut count = vec![0usize; nb];
    let last = edges[nb];
    let c = &data.sites.coords;
    for i in 0..n {
        for j in i..n {
            let u = (c[i][0] - c[j][0]).hypot(c[i][1] - c[j][1]);
            if u < edges[0] || u > last {
                continue;
            }
            let k = edges.partition_point(|e| *e <= u).saturating_sub(1).min(nb - 1);
            let mut any = false;
            for row in &data.values {
                let (a, b) = (row[i], row[j]);
                if a.is_nan() || b.is_nan() {
                    continue;
                }
                sum[k].add_finite((a - centers[i]) * (b - centers[j]));
                count[k] += 1;
                any = true;
            }
            if any {
                lag_sum[k].add_finite(u);
                pairs[k] += 1;
            }
        }
    }
    Ok((0..nb)
        .map(|k| CovariogramBin {
            lower: edges[k],
            upper: edges[k + 1],
            lag: if pairs[k] > 0 { lag_sum[k].value() / pairs[k] as f64 } else { f64::NAN },
            covariance: if count[k] > 0 { sum[k].value() / count[k] as f64 } else { f64::NAN },
            count: count[k],
            empty: count[k] == 0,
        })
        .collect())
}

/// Least-squares (ρ, σ²) of σ²·C(u; ρ) against bins with positive lag.
///
/// ρ is searched on a log grid; σ² has a closed form for each ρ. Other
/// kernel parameters stay at their values in `kernel`.
pub fn fit_range(bins: &[CovariogramBin], kernel: &HeightFunction) -> Result<(f64, f64)> {
    let used: Vec<&CovariogramBin> = bins.iter().filter(|b| !b.empty && b.lag > 0.0).collect();
    if used.is_empty() {
        return invalid("no non-empty covariogram bin with positive lag");
    }
    let lo = used.iter().map(|b| b.lag).fold(f64::INFINITY, f64::min) / 10.0;
    let hi = used.iter().map(|b| b.lag).fold(0.0, f64::max) * 3.0;
    let mut params = kernel.shape.params();
    if params.is_empty() {
        return invalid("the kernel has no range parameter");
    }
    let m = 200;
    let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
    for g in 0..=m {
        let rho = lo * (hi / lo).powf(g as f64 / m as f64);
        params[0] = rho;
        let h = HeightFunction::new(kernel.shape.with_params(&params)?, kernel.dim)?;
        let cs: Vec<f64> = used.iter().map(|b| h.correlation(b.lag)).collect::<Result<_>>()?;
        let (mut num, mut den) = (0.0, 0.0);
        for (b, c) in used.iter().zip(&cs) {
            num += b.count as f64 * b.covariance * c;
            den += b.count as f64 * c * c;
        }
        let sill = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
        let sse: f64 = used
            .iter()
            .zip(&cs)
            .map(|(b, c)| b.count as f64 * (b.covariance - sill * c).powi(2))
            .sum();
        if sse < best.0 {
            best = (sse, rho, sill);
        }
    }
    Ok((best.1, best.2))
}
