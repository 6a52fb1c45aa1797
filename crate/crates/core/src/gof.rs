//! Goodness-of-fit statistics used to validate simulated margins.

use crate::error::{invalid, Result};
use crate::numeric::special::gamma_q;

/// Outcome of a goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival function with the small-sample correction
/// λ = (√n + 0.12 + 0.11/√n)·D.
fn kolmogorov_sf(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test of `sample` against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<TestResult> {
    if sample.is_empty() {
        return invalid("KS test needs a nonempty sample");
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(d, n),
    })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return invalid("KS test needs nonempty samples");
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(d, na * nb / (na + nb)),
    })
}

/// Pearson chi-square test of observed counts against cell probabilities.
///
/// Adjacent cells are pooled from the right until every expected count is
/// at least 5. Degrees of freedom are (pooled cells − 1 − `fitted_params`).
pub fn chi_square(observed: &[f64], probs: &[f64], fitted_params: usize) -> Result<TestResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return invalid("observed and probability vectors must have equal nonzero length");
    }
    let n: f64 = observed.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        o_acc += o;
        e_acc += n * p;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    if cells.len() < 2 + fitted_params {
        return invalid("too few cells with expected count >= 5 for a chi-square test");
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() - 1 - fitted_params) as f64;
    Ok(TestResult {
        statistic: stat,
        p_value: gamma_q(0.5 * df, 0.5 * stat),
    })
}

/// Chi-square test of a count sample against a pmf on 0, 1, 2, …; the last
/// cell collects the upper tail.
pub fn chi_square_counts<F: Fn(u64) -> f64>(sample: &[f64], pmf: F) -> Result<TestResult> {
    if sample.is_empty() {
        return invalid("chi-square test needs a nonempty sample");
    }
    let max = sample.iter().fold(0.0f64, |m, &x| m.max(x)) as usize;
    let mut observed = vec![0.0; max + 2];
    for &x in sample {
        if x < 0.0 || x.fract() != 0.0 {
            return invalid(format!("count sample contains non-count value {x}"));
        }
        observed[x as usize] += 1.0;
    }
    let mut probs: Vec<f64> = (0..=max as u64).map(&pmf).collect();
    let head: f64 = probs.iter().sum();
    probs.push((1.0 - head).max(0.0));
    chi_square(&observed, &probs, 0)
}
