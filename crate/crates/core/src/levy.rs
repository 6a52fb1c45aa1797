//! Infinitely divisible seed families and the laws they induce on sets.
//!
//! A [`LevySeed`] fixes the distribution of the basis on a unit-volume set.
//! The law on a set of volume `v` has characteristic function φ(t)^v; for
//! the five families here it stays inside the family:
//!
//! | family | seed parameters | law at volume v |
//! |---|---|---|
//! | Gaussian | variance b | N(0, b·v) |
//! | Poisson | intensity λ | Poisson(λ·v) |
//! | Gamma | shape α′, rate β | Γ(α′·v, β) |
//! | InverseGaussian | shape λ, mean μ₀ | IG(shape λ·v², mean μ₀·v) |
//! | NegBinomial | mean μ, overdispersion θ | NB(μ·v, θ·v) |

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::special::{
    beta_reg, gamma_p, gamma_q, ln_gamma_q, ln_gamma_unchecked, ln_std_normal_sf, std_normal_cdf,
};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Unit-volume seed L′ of a stationary Lévy basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevySeed {
    Gaussian { variance: f64 },
    Poisson { intensity: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGaussian { shape: f64, mean: f64 },
    NegBinomial { mean: f64, overdispersion: f64 },
}

/// Support of a set distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Real,
    NonNegative,
    Counts,
}

impl LevySeed {
    pub fn validate(&self) -> Result<()> {
        let ok = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("seed parameter {name} must be finite and > 0, got {v}"))
            }
        };
        match *self {
            LevySeed::Gaussian { variance } => ok("variance", variance),
            LevySeed::Poisson { intensity } => ok("intensity", intensity),
            LevySeed::Gamma { shape, rate } => ok("shape", shape).and(ok("rate", rate)),
            LevySeed::InverseGaussian { shape, mean } => ok("shape", shape).and(ok("mean", mean)),
            LevySeed::NegBinomial {
                mean,
                overdispersion,
            } => ok("mean", mean).and(ok("overdispersion", overdispersion)),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            LevySeed::Gaussian { .. } => "gaussian",
            LevySeed::Poisson { .. } => "poisson",
            LevySeed::Gamma { .. } => "gamma",
            LevySeed::InverseGaussian { .. } => "inverse_gaussian",
            LevySeed::NegBinomial { .. } => "neg_binomial",
        }
    }

    pub fn support(&self) -> Support {
        match self {
            LevySeed::Gaussian { .. } => Support::Real,
            LevySeed::Gamma { .. } | LevySeed::InverseGaussian { .. } => Support::NonNegative,
            LevySeed::Poisson { .. } | LevySeed::NegBinomial { .. } => Support::Counts,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.support() == Support::Counts
    }

    /// Parameter names in a fixed order, matching [`LevySeed::params`].
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            LevySeed::Gaussian { .. } => &["variance"],
            LevySeed::Poisson { .. } => &["intensity"],
            LevySeed::Gamma { .. } => &["shape", "rate"],
            LevySeed::InverseGaussian { .. } => &["shape", "mean"],
            LevySeed::NegBinomial { .. } => &["mean", "overdispersion"],
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            LevySeed::Gaussian { variance } => vec![variance],
            LevySeed::Poisson { intensity } => vec![intensity],
            LevySeed::Gamma { shape, rate } => vec![shape, rate],
            LevySeed::InverseGaussian { shape, mean } => vec![shape, mean],
            LevySeed::NegBinomial {
                mean,
                overdispersion,
            } => vec![mean, overdispersion],
        }
    }

    /// Same family with parameters replaced, in [`LevySeed::param_names`] order.
    pub fn with_params(&self, p: &[f64]) -> Result<Self> {
        if p.len() != self.param_names().len() {
            return invalid(format!(
                "{} seed takes {} parameters, got {}",
                self.family_name(),
                self.param_names().len(),
                p.len()
            ));
        }
        let s = match self {
            LevySeed::Gaussian { .. } => LevySeed::Gaussian { variance: p[0] },
            LevySeed::Poisson { .. } => LevySeed::Poisson { intensity: p[0] },
            LevySeed::Gamma { .. } => LevySeed::Gamma {
                shape: p[0],
                rate: p[1],
            },
            LevySeed::InverseGaussian { .. } => LevySeed::InverseGaussian {
                shape: p[0],
                mean: p[1],
            },
            LevySeed::NegBinomial { .. } => LevySeed::NegBinomial {
                mean: p[0],
                overdispersion: p[1],
            },
        };
        s.validate()?;
        Ok(s)
    }

    /// Mean of L′.
    pub fn mean(&self) -> f64 {
        self.at_volume_unchecked(1.0).mean()
    }

    /// Variance of L′, the σ² that scales the correlation function.
    pub fn variance(&self) -> f64 {
        self.at_volume_unchecked(1.0).variance()
    }

    fn at_volume_unchecked(&self, volume: f64) -> SetDistribution {
        SetDistribution {
            seed: *self,
            volume,
        }
    }
}

/// Law F_A of the basis on a set A of volume |A|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetDistribution {
    pub seed: LevySeed,
    pub volume: f64,
}

/// Builds F_A for a set of the given volume.
pub fn set_distribution(seed: &LevySeed, volume: f64) -> Result<SetDistribution> {
    seed.validate()?;
    if !(volume >= 0.0) || !volume.is_finite() {
        return invalid(format!("volume must be finite and >= 0, got {volume}"));
    }
    Ok(SetDistribution {
        seed: *seed,
        volume,
    })
}

/// Family parameters of F_A after scaling by volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaledParams {
    Degenerate,
    Normal { variance: f64 },
    Poisson { mean: f64 },
    Gamma { shape: f64, rate: f64 },
    InverseGaussian { shape: f64, mean: f64 },
    NegBinomial { mean: f64, size: f64 },
}

impl SetDistribution {
    pub fn params(&self) -> ScaledParams {
        let v = self.volume;
        if v == 0.0 {
            return ScaledParams::Degenerate;
        }
        match self.seed {
            LevySeed::Gaussian { variance } => ScaledParams::Normal {
                variance: variance * v,
            },
            LevySeed::Poisson { intensity } => ScaledParams::Poisson {
                mean: intensity * v,
            },
            LevySeed::Gamma { shape, rate } => ScaledParams::Gamma {
                shape: shape * v,
                rate,
            },
            LevySeed::InverseGaussian { shape, mean } => ScaledParams::InverseGaussian {
                shape: shape * v * v,
                mean: mean * v,
            },
            LevySeed::NegBinomial {
                mean,
                overdispersion,
            } => ScaledParams::NegBinomial {
                mean: mean * v,
                size: overdispersion * v,
            },
        }
    }

    pub fn mean(&self) -> f64 {
        match self.params() {
            ScaledParams::Degenerate | ScaledParams::Normal { .. } => 0.0,
            ScaledParams::Poisson { mean } => mean,
            ScaledParams::Gamma { shape, rate } => shape / rate,
            ScaledParams::InverseGaussian { mean, .. } => mean,
            ScaledParams::NegBinomial { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.params() {
            ScaledParams::Degenerate => 0.0,
            ScaledParams::Normal { variance } => variance,
            ScaledParams::Poisson { mean } => mean,
            ScaledParams::Gamma { shape, rate } => shape / (rate * rate),
            ScaledParams::InverseGaussian { shape, mean } => mean.powi(3) / shape,
            ScaledParams::NegBinomial { mean, size } => mean + mean * mean / size,
        }
    }

    /// log φ(t) of the unit-volume seed, principal branch.
    fn log_cf_unit(&self, t: f64) -> Complex64 {
        let i = Complex64::i();
        match self.seed {
            LevySeed::Gaussian { variance } => Complex64::new(-0.5 * variance * t * t, 0.0),
            LevySeed::Poisson { intensity } => intensity * ((i * t).exp() - 1.0),
            LevySeed::Gamma { shape, rate } => -shape * (Complex64::new(1.0, -t / rate)).ln(),
            LevySeed::InverseGaussian { shape, mean } => {
                let root = Complex64::new(1.0, -2.0 * mean * mean * t / shape).sqrt();
                (shape / mean) * (1.0 - root)
            }
            LevySeed::NegBinomial {
                mean,
                overdispersion,
            } => {
                let p = mean / (mean + overdispersion);
                overdispersion * ((1.0 - p).ln() - (1.0 - p * (i * t).exp()).ln())
            }
        }
    }

    /// Characteristic function E exp(itX).
    pub fn characteristic_function(&self, t: f64) -> Complex64 {
        if self.volume == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        (self.volume * self.log_cf_unit(t)).exp()
    }

    pub fn support(&self) -> Support {
        self.seed.support()
    }

    /// Log density (continuous families) or log probability mass (counts).
    ///
    /// Volume zero is the point mass at 0, reported with log-mass 0 there.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::OutOfSupport(x));
        }
        match self.params() {
            ScaledParams::Degenerate => {
                if x == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::OutOfSupport(x))
                }
            }
            ScaledParams::Normal { variance } => Ok(-0.5 * (LN_2PI + variance.ln()) - 0.5 * x * x / variance),
            ScaledParams::Poisson { mean } => {
                let k = count(x)?;
                Ok(k * mean.ln() - mean - ln_gamma_unchecked(k + 1.0))
            }
            ScaledParams::Gamma { shape, rate } => {
                if x < 0.0 {
                    return Err(Error::OutOfSupport(x));
                }
                Ok(gamma_log_density(shape, rate, x))
            }
            ScaledParams::InverseGaussian { shape, mean } => {
                if x < 0.0 {
                    return Err(Error::OutOfSupport(x));
                }
                if x == 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                let d = x - mean;
                Ok(0.5 * (shape.ln() - LN_2PI - 3.0 * x.ln()) - shape * d * d / (2.0 * mean * mean * x))
            }
            ScaledParams::NegBinomial { mean, size } => {
                let k = count(x)?;
                Ok(nb_log_pmf(mean, size, k))
            }
        }
    }

    /// Distribution function P(X ≤ x).
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.params() {
            ScaledParams::Degenerate => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ScaledParams::Normal { variance } => std_normal_cdf(x / variance.sqrt()),
            ScaledParams::Poisson { mean } => {
                if x < 0.0 {
                    0.0
                } else {
                    gamma_q(x.floor() + 1.0, mean)
                }
            }
            ScaledParams::Gamma { shape, rate } => gamma_p(shape, rate * x),
            ScaledParams::InverseGaussian { shape, mean } => ig_cdf(shape, mean, x),
            ScaledParams::NegBinomial { mean, size } => {
                if x < 0.0 {
                    0.0
                } else {
                    beta_reg(size, x.floor() + 1.0, size / (size + mean))
                }
            }
        }
    }

    /// log P(X > x), kept accurate deep in the upper tail of the
    /// continuous nonnegative families.
    pub fn log_sf(&self, x: f64) -> f64 {
        match self.params() {
            ScaledParams::Gamma { shape, rate } if x > 0.0 => ln_gamma_q(shape, rate * x),
            ScaledParams::InverseGaussian { shape, mean } if x > 0.0 => {
                let r = (shape / x).sqrt();
                let a = ln_std_normal_sf(r * (x / mean - 1.0));
                let b = 2.0 * shape / mean + ln_std_normal_sf(r * (x / mean + 1.0));
                a + (-(b - a).exp_m1()).ln()
            }
            _ => (1.0 - self.cdf(x)).ln(),
        }
    }

    /// Smallest x with P(X ≤ x) ≥ p.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("quantile level must lie in [0, 1], got {p}"));
        }
        if let ScaledParams::Degenerate = self.params() {
            return Ok(0.0);
        }
        let lower_end = match self.support() {
            Support::Real => f64::NEG_INFINITY,
            _ => 0.0,
        };
        if p == 0.0 {
            return Ok(lower_end);
        }
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        let sd = self.variance().sqrt();
        let step = sd.max(self.mean().abs()).max(1e-300);
        let mut hi = self.mean() + step;
        while self.cdf(hi) < p {
            hi = hi + 2.0 * (hi - self.mean()).abs().max(step);
            if !hi.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = if lower_end.is_finite() {
            lower_end
        } else {
            let mut lo = self.mean() - step;
            while self.cdf(lo) >= p {
                lo = lo - 2.0 * (self.mean() - lo).abs().max(step);
            }
            lo
        };
        if self.support() == Support::Counts {
            let (mut lo_k, mut hi_k) = (lo.floor() as i64 - 1, hi.ceil() as i64);
            // invariant: cdf(lo_k) < p <= cdf(hi_k)
            while hi_k - lo_k > 1 {
                let mid = lo_k + (hi_k - lo_k) / 2;
                if self.cdf(mid as f64) >= p {
                    hi_k = mid;
                } else {
                    lo_k = mid;
                }
            }
            return Ok(hi_k as f64);
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// One draw of L(A).
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.params() {
            ScaledParams::Degenerate => 0.0,
            ScaledParams::Normal { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                variance.sqrt() * z
            }
            ScaledParams::Poisson { mean } => poisson_draw(rng, mean),
            ScaledParams::Gamma { shape, rate } => gamma_draw(rng, shape, rate),
            ScaledParams::InverseGaussian { shape, mean } => ig_draw(rng, shape, mean),
            ScaledParams::NegBinomial { mean, size } => {
                let lambda = gamma_draw(rng, size, size / mean);
                poisson_draw(rng, lambda)
            }
        }
    }

    /// `n` independent draws of L(A).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }
}

fn count(x: f64) -> Result<f64> {
    if x < 0.0 || x.fract() != 0.0 || !x.is_finite() {
        Err(Error::OutOfSupport(x))
    } else {
        Ok(x)
    }
}

pub(crate) fn gamma_log_density(shape: f64, rate: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            rate.ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma_unchecked(shape)
}

pub(crate) fn nb_log_pmf(mean: f64, size: f64, k: f64) -> f64 {
    let lp = (mean / (mean + size)).ln();
    let lq = (size / (mean + size)).ln();
    let mut out = size * lq - ln_gamma_unchecked(k + 1.0);
    if k > 0.0 {
        out += ln_gamma_unchecked(k + size) - ln_gamma_unchecked(size) + k * lp;
    }
    out
}

fn ig_cdf(shape: f64, mean: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let r = (shape / x).sqrt();
    let a = std_normal_cdf(r * (x / mean - 1.0));
    // e^{2λ/μ} Φ(−r(x/μ+1)) evaluated in log space
    let b = (2.0 * shape / mean + ln_std_normal_sf(r * (x / mean + 1.0))).exp();
    (a + b).min(1.0)
}

pub(crate) fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    if !(shape > 0.0) {
        return 0.0;
    }
    match Gamma::new(shape, 1.0 / rate) {
        Ok(g) => g.sample(rng),
        Err(_) => 0.0,
    }
}

pub(crate) fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if !(mean > 0.0) {
        return 0.0;
    }
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng),
        Err(_) => mean.round(),
    }
}

/// Inverse Gaussian draw by the transformation-with-rejection method.
///
/// The larger root of the quadratic is formed first and the smaller one as
/// μ²/x₂, which avoids cancellation when the shape is tiny relative to the
/// mean (small cell volumes).
pub(crate) fn ig_draw<R: Rng + ?Sized>(rng: &mut R, shape: f64, mean: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let y = z * z;
    let my = mean * y;
    let x2 = mean + mean * my / (2.0 * shape) + mean / (2.0 * shape) * (4.0 * shape * my + my * my).sqrt();
    let x1 = mean * mean / x2;
    let u: f64 = rng.random();
    if u * (mean + x1) <= mean {
        x1
    } else {
        x2
    }
}
