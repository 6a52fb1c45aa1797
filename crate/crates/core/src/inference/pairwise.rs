//! Bivariate log-likelihoods of a site pair.
//!
//! Two sites share the basis on the overlap of their hypographs:
//! X₁ = X₁₂ + X₁∖₂ and X₂ = X₁₂ + X₂∖₁ with independent components of
//! volumes α₀, α_res and α_res. The joint law is the convolution
//! f(x₁, x₂) = ∫ f_res(x₁ − y)·f_res(x₂ − y)·f₀(y) dy, a finite sum for
//! counts, and X₂ − X₁ involves only the two residual components.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::hypograph::PairGeometry;
use crate::levy::{set_distribution, LevySeed, ScaledParams, SetDistribution, Support};
use crate::numeric::special::ln_gamma_unchecked;
use crate::numeric::{integrate, ln_bessel_k, QuadratureSpec};

use super::ModelSpec;

/// Tolerances used by the pair integrals unless overridden.
pub fn default_pair_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-9,
        max_subdivisions: 200,
    }
}

/// log f(x₁, x₂) for a continuous seed at lag `u`.
pub fn pair_loglik_continuous(model: &ModelSpec, x1: f64, x2: f64, u: f64) -> Result<f64> {
    continuous_pair(&model.seed, &model.geometry(u)?, x1, x2, &default_pair_quadrature())
}

/// log P(X₁ = k₁, X₂ = k₂) for a count seed at lag `u`.
pub fn pair_loglik_discrete(model: &ModelSpec, k1: f64, k2: f64, u: f64) -> Result<f64> {
    discrete_pair(&model.seed, &model.geometry(u)?, k1, k2)
}

/// log density of X₂ − X₁ at `x_diff` for a gamma seed at lag `u > 0`.
pub fn pair_loglik_gamma_difference(model: &ModelSpec, x_diff: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return invalid(format!("the difference likelihood needs a lag > 0, got {u}"));
    }
    let (shape, rate) = match model.seed {
        LevySeed::Gamma { shape, rate } => (shape, rate),
        s => return invalid(format!("the difference likelihood needs a gamma seed, got {}", s.family_name())),
    };
    let g = model.geometry(u)?;
    variance_gamma_log_density(shape * g.alpha_res, rate, x_diff)
}

/// log density of Y₂ − Y₁ for independent Y ~ Γ(a, β):
/// β^(2a)|x|^(a−½)K_{a−½}(β|x|) / (√π Γ(a) (2β)^(a−½)).
pub fn variance_gamma_log_density(a: f64, beta: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && beta > 0.0) || !a.is_finite() || !beta.is_finite() {
        return invalid(format!("variance-gamma needs a > 0 and beta > 0, got a = {a}, beta = {beta}"));
    }
    if !x.is_finite() {
        return Err(Error::OutOfSupport(x));
    }
    let nu = a - 0.5;
    let z = beta * x.abs();
    if z == 0.0 {
        if nu <= 0.0 {
            return Err(Error::NonFiniteLikelihood(format!(
                "variance-gamma density with shape {a} is unbounded at 0"
            )));
        }
        return Ok(beta.ln() + ln_gamma_unchecked(nu) - (2.0 * PI.sqrt()).ln() - ln_gamma_unchecked(a));
    }
    Ok(2.0 * a * beta.ln() + nu * x.abs().ln() + ln_bessel_k(nu.abs(), z)?
        - 0.5 * PI.ln()
        - ln_gamma_unchecked(a)
        - nu * (2.0 * beta).ln())
}

/// log of the mean variance-gamma density over [−δ, δ], for a difference
/// recorded as an exact tie at resolution δ.
///
/// For a < ½ the density behaves as C·|x|^(2a−1) + D near 0 with
/// C = β^(2a)·Γ(½−a)/(4^a·√π·Γ(a)) and D = β·Γ(a−½)/(2√π·Γ(a)), whose
/// mean over the interval is C·δ^(2a−1)/(2a) + D; otherwise, or when δ is
/// too coarse for that expansion, the density at δ/2 is used.
pub fn variance_gamma_tie_log_density(a: f64, beta: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return invalid(format!("tie resolution must be finite and > 0, got {delta}"));
    }
    if !(a > 0.0 && a < 0.5) {
        return variance_gamma_log_density(a, beta, 0.5 * delta);
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return invalid(format!("variance-gamma needs beta > 0, got {beta}"));
    }
    let ln_c = 2.0 * a * (0.5 * beta).ln() + ln_gamma_unchecked(0.5 - a) - 0.5 * PI.ln() - ln_gamma_unchecked(a);
    let lead = (ln_c + (2.0 * a - 1.0) * delta.ln() - (2.0 * a).ln()).exp();
    // Γ(a − ½) = Γ(a + ½)/(a − ½) is negative here.
    let d = beta * (ln_gamma_unchecked(a + 0.5) - ln_gamma_unchecked(a)).exp() / ((a - 0.5) * 2.0 * PI.sqrt());
    if lead.is_infinite() {
        return Ok(ln_c + (2.0 * a - 1.0) * delta.ln() - (2.0 * a).ln());
    }
    if lead + d > 0.5 * lead {
        Ok((lead + d).ln())
    } else {
        variance_gamma_log_density(a, beta, 0.5 * delta)
    }
}

fn log_dens(d: &SetDistribution, x: f64) -> f64 {
    d.log_density(x).unwrap_or(f64::NEG_INFINITY)
}

/// (shape, rate) of a gamma set law, used to straighten endpoint singularities.
fn gamma_params(d: &SetDistribution) -> Option<(f64, f64)> {
    match d.params() {
        ScaledParams::Gamma { shape, rate } => Some((shape, rate)),
        _ => None,
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// ∫ₐᵇ of an integrand given in log form, after subtracting a probe maximum.
fn integrate_log<F: Fn(f64) -> f64>(lf: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    let probes = (1..16)
        .map(|i| lf(a + (b - a) * i as f64 / 16.0))
        .fold(f64::NEG_INFINITY, f64::max);
    if probes == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let (v, _) = integrate(
        |t| {
            let e = (lf(t) - probes).exp();
            if e.is_finite() {
                e
            } else {
                0.0
            }
        },
        a,
        b,
        spec,
    )?;
    Ok(v.ln() + probes)
}

/// Continuous pair log-likelihood from the volume triple.
pub(crate) fn continuous_pair(seed: &LevySeed, g: &PairGeometry, x1: f64, x2: f64, spec: &QuadratureSpec) -> Result<f64> {
    if seed.is_discrete() {
        return invalid("count seeds need the discrete pair likelihood");
    }
    for x in [x1, x2] {
        if !x.is_finite() || (seed.support() == Support::NonNegative && x < 0.0) {
            return Err(Error::OutOfSupport(x));
        }
    }
    let marg = set_distribution(seed, g.alpha)?;
    if g.alpha0 == 0.0 {
        return Ok(marg.log_density(x1)? + marg.log_density(x2)?);
    }
    if g.alpha_res == 0.0 {
        if x1 == x2 {
            return marg.log_density(x1);
        }
        return Err(Error::NonFiniteLikelihood(format!(
            "fully overlapping sites carry different values {x1} and {x2}"
        )));
    }
    let shared = set_distribution(seed, g.alpha0)?;
    let res = set_distribution(seed, g.alpha_res)?;
    let lf = |y: f64| log_dens(&res, x1 - y) + log_dens(&res, x2 - y) + log_dens(&shared, y);

    if seed.support() == Support::Real {
        // The integrand is a Gaussian in y; integrate well past its bulk.
        let (v0, vr) = (shared.variance(), res.variance());
        let prec = 1.0 / v0 + 2.0 / vr;
        let center = (x1 + x2) / vr / prec;
        let half = 14.0 / prec.sqrt();
        let v = integrate_log(|t| lf(center - half + 2.0 * half * t), 0.0, 1.0, spec)?;
        return Ok(v + (2.0 * half).ln());
    }

    let (m, big) = (x1.min(x2), x1.max(x2));
    if m == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let h = 0.5 * m;
    let ln_h = h.ln();
    // Under y = (m/2)t^p the powers of t from the gamma density and the
    // Jacobian are collected into one exponent before multiplying by ln t;
    // evaluated separately they cancel catastrophically when p is large.
    let left = match gamma_params(&shared) {
        Some((a0, rate)) => {
            // y = (m/2)t^p with p = 1/a₀ removes y^(a₀−1) at 0.
            let p = if a0 < 1.0 { 1.0 / a0 } else { 1.0 };
            let c = a0 * rate.ln() - ln_gamma_unchecked(a0) + (a0 - 1.0) * ln_h + p.ln();
            let k = p * a0 - 1.0;
            integrate_log(
                |t| {
                    if t <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let y = h * t.powf(p);
                    log_dens(&res, x1 - y) + log_dens(&res, x2 - y) + c + k * t.ln() - rate * y
                },
                0.0,
                1.0,
                spec,
            )?
        }
        None => integrate_log(
            |t| {
                let y = h * t;
                log_dens(&res, x1 - y) + log_dens(&res, x2 - y) + log_dens(&shared, y)
            },
            0.0,
            1.0,
            spec,
        )?,
    };
    let gap = big - m;
    let near_count = if gap == 0.0 { 2.0 } else { 1.0 };
    let rf: Box<dyn Fn(f64) -> f64 + '_> = match gamma_params(&res) {
        Some((ar, rate)) => {
            // m − y = (m/2)t^q removes (m − y)^e at the smaller value.
            let e = (ar - 1.0).min(0.0) * near_count;
            if e <= -1.0 {
                return Err(Error::NonFiniteLikelihood(format!(
                    "pair density is unbounded at tied values {x1}"
                )));
            }
            let q = 1.0 / (1.0 + e);
            let norm = ar * rate.ln() - ln_gamma_unchecked(ar);
            let c = near_count * (norm + (ar - 1.0) * ln_h) + q.ln();
            let k = q * (near_count * (ar - 1.0) + 1.0) - 1.0;
            Box::new(move |t: f64| {
                if t <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let s = h * t.powf(q);
                let far = if gap == 0.0 { 0.0 } else { log_dens(&res, gap + s) };
                c + k * t.ln() - near_count * rate * s + far + log_dens(&shared, m - s)
            })
        }
        None => Box::new(move |t: f64| {
            let s = h * t;
            log_dens(&res, x1 - m + s) + log_dens(&res, x2 - m + s) + log_dens(&shared, m - s)
        }),
    };
    // The larger value puts a second kink where m − y reaches the gap.
    let right = if gap > 0.0 && gap < h {
        let q = gamma_params(&res).map_or(1.0, |(ar, _)| 1.0 / (1.0 + (ar - 1.0).min(0.0)));
        let t_star = (gap / h).powf(1.0 / q);
        log_add(integrate_log(&rf, 0.0, t_star, spec)?, integrate_log(&rf, t_star, 1.0, spec)?)
    } else {
        integrate_log(&rf, 0.0, 1.0, spec)?
    };
    let total = log_add(left, right);
    if total == f64::NEG_INFINITY {
        return Ok(total);
    }
    Ok(ln_h + total)
}

/// Discrete pair log-likelihood from the volume triple.
pub(crate) fn discrete_pair(seed: &LevySeed, g: &PairGeometry, k1: f64, k2: f64) -> Result<f64> {
    if !seed.is_discrete() {
        return invalid("the discrete pair likelihood needs a Poisson or negative binomial seed");
    }
    for k in [k1, k2] {
        if !(k >= 0.0) || k.fract() != 0.0 || !k.is_finite() {
            return Err(Error::OutOfSupport(k));
        }
    }
    let kmax = k1.max(k2) as usize;
    let t = CountTables::new(seed, g, kmax)?;
    Ok(t.pair(k1 as usize, k2 as usize))
}

/// log pmf of a count law on 0..=kmax by recursion in k.
fn log_pmf_table(d: &SetDistribution, kmax: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; kmax + 1];
    match d.params() {
        ScaledParams::Degenerate => out[0] = 0.0,
        ScaledParams::Poisson { mean } => {
            out[0] = -mean;
            let lm = mean.ln();
            for k in 1..=kmax {
                out[k] = out[k - 1] + lm - (k as f64).ln();
            }
        }
        ScaledParams::NegBinomial { mean, size } => {
            out[0] = size * (size / (mean + size)).ln();
            let lp = (mean / (mean + size)).ln();
            for k in 1..=kmax {
                let kf = k as f64;
                out[k] = out[k - 1] + lp + ((kf - 1.0 + size) / kf).ln();
            }
        }
        _ => unreachable!("count tables are built for count laws only"),
    }
    out
}

/// Component log-pmfs of one lag, shared by every pair at that lag.
pub(crate) struct CountTables {
    independent: bool,
    shared: Vec<f64>,
    res: Vec<f64>,
}

impl CountTables {
    pub fn new(seed: &LevySeed, g: &PairGeometry, kmax: usize) -> Result<Self> {
        if g.alpha0 == 0.0 {
            return Ok(Self {
                independent: true,
                shared: Vec::new(),
                res: log_pmf_table(&set_distribution(seed, g.alpha)?, kmax),
            });
        }
        Ok(Self {
            independent: false,
            shared: log_pmf_table(&set_distribution(seed, g.alpha0)?, kmax),
            res: log_pmf_table(&set_distribution(seed, g.alpha_res)?, kmax),
        })
    }

    /// log Σ_{y ≤ min(k₁,k₂)} f_res(k₁−y) f_res(k₂−y) f₀(y), max-shifted.
    pub fn pair(&self, k1: usize, k2: usize) -> f64 {
        if self.independent {
            return self.res[k1] + self.res[k2];
        }
        let term = |y: usize| self.res[k1 - y] + self.res[k2 - y] + self.shared[y];
        let m = k1.min(k2);
        let hi = (0..=m).map(term).fold(f64::NEG_INFINITY, f64::max);
        if hi == f64::NEG_INFINITY {
            return hi;
        }
        hi + (0..=m).map(|y| (term(y) - hi).exp()).sum::<f64>().ln()
    }
}
