//! Extremal dependence of hypograph-smoothed fields.
//!
//! For sites sharing basis volume α₀ out of α, with residual volume
//! α_res = α − α₀ at each site, the joint upper tail depends on the tail
//! class of the seed: subexponential seeds give χ = α₀/α; gamma-tailed
//! seeds give χ = 0 with χ̄ = 1; convolution-equivalent seeds give
//! χ = (α₀/α)·m̃(β)·m_{L′}(β)^(−α_res), where m̃(β) is the β-exponentiated
//! moment of the minimum of the two residual variables.
//!
//! The Ledford–Tawn coefficient of tail dependence is reported as `eta`
//! and is unrelated to the Lévy measure, which enters only through
//! m_{L′}(β).

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::hypograph::PairGeometry;
use crate::levy::{set_distribution, LevySeed, SetDistribution};
use crate::numeric::special::ln_gamma_unchecked;
use crate::numeric::{integrate, stream, QuadratureSpec};

/// Tail class of a seed family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    /// Heavy tails; χ depends on the geometry only.
    Subexponential,
    /// F̄_v(x) ~ ℓ_v·x^(shape·v − 1)·e^(−rate·x) with constant ℓ_v.
    GammaTailed { rate: f64, shape_per_volume: f64 },
    /// Exponential tail of rate β with finite m_{L′}(β).
    ConvolutionEquivalent {
        rate: f64,
        seed_moment: f64,
        seed: LevySeed,
    },
}

impl TailClass {
    /// Class declared for a seed family.
    ///
    /// Gamma and negative binomial seeds are gamma-tailed (the latter with
    /// rate ln((μ+θ)/μ)); the inverse Gaussian is convolution-equivalent
    /// with β = λ/(2μ₀²) and m_{L′}(β) = exp(λ/μ₀). Gaussian and Poisson
    /// tails are lighter than exponential and have no class here.
    pub fn from_seed(seed: &LevySeed) -> Result<Self> {
        seed.validate()?;
        match *seed {
            LevySeed::Gamma { shape, rate } => Ok(TailClass::GammaTailed {
                rate,
                shape_per_volume: shape,
            }),
            LevySeed::NegBinomial { mean, overdispersion } => Ok(TailClass::GammaTailed {
                rate: ((mean + overdispersion) / mean).ln(),
                shape_per_volume: overdispersion,
            }),
            LevySeed::InverseGaussian { shape, mean } => Ok(TailClass::ConvolutionEquivalent {
                rate: shape / (2.0 * mean * mean),
                seed_moment: (shape / mean).exp(),
                seed: *seed,
            }),
            _ => invalid(format!(
                "the {} seed has no exponential-type tail class",
                seed.family_name()
            )),
        }
    }

    /// ℓ_v for a gamma-tailed class: rate^(a−1)/Γ(a) with a = shape·v.
    pub fn slowly_varying(&self, volume: f64) -> Result<f64> {
        match *self {
            TailClass::GammaTailed { rate, shape_per_volume } => {
                let a = shape_per_volume * volume;
                Ok(((a - 1.0) * rate.ln() - ln_gamma_unchecked(a)).exp())
            }
            _ => invalid("slowly varying constants exist only for gamma-tailed classes"),
        }
    }
}

/// Extremal coefficients of one site pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSummary {
    pub chi: f64,
    pub chibar: f64,
    /// Coefficient of tail dependence, χ̄ = 2η − 1.
    pub eta: f64,
}

impl TailSummary {
    fn dependent(chi: f64) -> Self {
        Self { chi, chibar: 1.0, eta: 1.0 }
    }

    fn independent() -> Self {
        Self {
            chi: 0.0,
            chibar: 0.0,
            eta: 0.5,
        }
    }
}

/// E exp(β·min(Y₁, Y₂)) for iid Y₁, Y₂ ~ `residual`, as
/// 1 + β∫₀^∞ e^(βx)·P(Y > x)² dx.
///
/// Falls back to 10⁶ Monte Carlo draws when the quadrature does not
/// converge; an infinite moment is reported as [`Error::DivergentMoment`].
pub fn min_exponentiated_moment(residual: &SetDistribution, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return invalid(format!("rate must be > 0, got {beta}"));
    }
    if residual.volume == 0.0 {
        return Ok(1.0);
    }
    let spec = QuadratureSpec::new(1e-14, 1e-11, 2000)?;
    let integrand = |x: f64| {
        let e = beta * x + 2.0 * residual.log_sf(x);
        if e.is_nan() {
            0.0
        } else {
            beta * e.exp()
        }
    };
    // The integrand must decay for the moment to exist.
    let far = residual.mean() + 60.0 * residual.variance().sqrt() + 200.0 / beta;
    if integrand(far) > integrand(0.5 * far).max(1e-300) {
        return Err(Error::DivergentMoment(format!("tail of the minimum does not decay at rate {beta}")));
    }
    match integrate(integrand, 0.0, f64::INFINITY, &spec) {
        Ok((v, _)) if v.is_finite() => Ok(1.0 + v),
        Ok(_) => Err(Error::DivergentMoment(format!("integral is infinite at rate {beta}"))),
        Err(Error::NonConvergence { .. }) => {
            let mut rng = stream(0x7A11, 0);
            let n = 1_000_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let m = residual.sample_one(&mut rng).min(residual.sample_one(&mut rng));
                acc += (beta * m).exp();
            }
            let v = acc / n as f64;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::DivergentMoment(format!("Monte Carlo estimate is infinite at rate {beta}")))
            }
        }
        Err(e) => Err(e),
    }
}

/// Theoretical χ, χ̄ and η for a pair with the given overlap geometry.
pub fn theoretical_chi(tc: &TailClass, geom: &PairGeometry) -> Result<TailSummary> {
    let PairGeometry { alpha, alpha0, alpha_res } = *geom;
    if !(alpha > 0.0) || !(alpha0 >= 0.0) || alpha0 > alpha * (1.0 + 1e-12) {
        return invalid(format!("need 0 <= alpha0 <= alpha, got alpha0 = {alpha0}, alpha = {alpha}"));
    }
    if alpha0 == 0.0 {
        return Ok(TailSummary::independent());
    }
    match *tc {
        TailClass::Subexponential => Ok(TailSummary::dependent((alpha0 / alpha).min(1.0))),
        TailClass::GammaTailed { .. } => Ok(TailSummary::dependent(if alpha_res > 0.0 { 0.0 } else { 1.0 })),
        TailClass::ConvolutionEquivalent { rate, seed_moment, seed } => {
            if alpha_res == 0.0 {
                return Ok(TailSummary::dependent(1.0));
            }
            let m_tilde = min_exponentiated_moment(&set_distribution(&seed, alpha_res)?, rate)?;
            let chi = alpha0 / alpha * m_tilde * seed_moment.powf(-alpha_res);
            Ok(TailSummary::dependent(chi.clamp(0.0, 1.0)))
        }
    }
}

/// Asymptote of P(X₂ > x | X₁ > x) for a Γ(α′, β) seed:
/// m̃(β)·Γ(a)/Γ(a₀)·(βx)^(−a_res) with a = α′α, a₀ = α′α₀, a_res = α′α_res.
pub fn gamma_conditional_asymptote(alpha_prime: f64, beta: f64, geom: &PairGeometry, x: f64) -> Result<f64> {
    if !(alpha_prime > 0.0 && beta > 0.0) {
        return invalid("gamma shape and rate must be > 0");
    }
    if !(x > 0.0) {
        return invalid(format!("threshold must be > 0, got {x}"));
    }
    let PairGeometry { alpha, alpha0, alpha_res } = *geom;
    if alpha_res == 0.0 {
        return Ok(1.0);
    }
    if !(alpha0 > 0.0) {
        return invalid("the asymptote needs a positive shared volume");
    }
    let seed = LevySeed::Gamma { shape: alpha_prime, rate: beta };
    let m_tilde = min_exponentiated_moment(&set_distribution(&seed, alpha_res)?, beta)?;
    let (a, a0, ares) = (alpha_prime * alpha, alpha_prime * alpha0, alpha_prime * alpha_res);
    Ok(m_tilde * (ln_gamma_unchecked(a) - ln_gamma_unchecked(a0) - ares * (beta * x).ln()).exp())
}

/// Tail of one summand F̄(x) ~ ℓ·x^(shape−1)·e^(−rate·x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTail {
    pub rate: f64,
    pub shape: f64,
    pub ell: f64,
}

impl ExpTail {
    /// The Γ(shape, rate) law, for which ℓ = rate^(shape−1)/Γ(shape).
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0) {
            return invalid("gamma shape and rate must be > 0");
        }
        Ok(Self {
            rate,
            shape,
            ell: ((shape - 1.0) * rate.ln() - ln_gamma_unchecked(shape)).exp(),
        })
    }
}

/// Tail of the convolution of two gamma-tailed laws with a common rate:
/// β·Γ(α₁)Γ(α₂)/Γ(α₁+α₂)·ℓ₁ℓ₂·x^(α₁+α₂−1)·e^(−βx).
pub fn convolution_tail_asymptote(f1: &ExpTail, f2: &ExpTail, x: f64) -> Result<f64> {
    for f in [f1, f2] {
        if !(f.rate > 0.0 && f.shape > 0.0 && f.ell > 0.0) {
            return invalid("tail rate, shape and constant must be > 0");
        }
    }
    if (f1.rate - f2.rate).abs() > 1e-12 * f1.rate.max(f2.rate) {
        return invalid(format!("tail rates differ: {} vs {}", f1.rate, f2.rate));
    }
    if !(x > 0.0) {
        return invalid(format!("x must be > 0, got {x}"));
    }
    let (a1, a2, b) = (f1.shape, f2.shape, f1.rate);
    let ln = b.ln() + ln_gamma_unchecked(a1) + ln_gamma_unchecked(a2) - ln_gamma_unchecked(a1 + a2)
        + f1.ell.ln()
        + f2.ell.ln()
        + (a1 + a2 - 1.0) * x.ln()
        - b * x;
    Ok(ln.exp())
}

/// Empirical χ̂(q), χ̄̂(q) with binomial and delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalTail {
    pub q: f64,
    pub chi: f64,
    pub chibar: f64,
    pub chi_se: f64,
    pub chibar_se: f64,
    pub joint_exceedances: usize,
}

/// Ranks scaled to (0, 1) by n + 1, ties sharing their mean rank.
fn pseudo_uniform(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank / (n as f64 + 1.0);
        }
        i = j + 1;
    }
    out
}

/// χ̂(q) = p̂/(1 − q) and χ̄̂(q) = 2·ln(1 − q)/ln p̂ − 1, where p̂ is the
/// share of pairs whose rank-transformed margins both exceed q.
pub fn empirical_chi(x1: &[f64], x2: &[f64], q: f64) -> Result<EmpiricalTail> {
    if x1.len() != x2.len() {
        return invalid("paired samples differ in length");
    }
    if x1.len() < 500 {
        return invalid(format!("need at least 500 pairs, got {}", x1.len()));
    }
    if !(q > 0.5 && q < 1.0) {
        return invalid(format!("q must lie in (0.5, 1), got {q}"));
    }
    if x1.iter().chain(x2).any(|v| !v.is_finite()) {
        return invalid("paired samples must be finite");
    }
    let (u1, u2) = (pseudo_uniform(x1), pseudo_uniform(x2));
    let joint = u1.iter().zip(&u2).filter(|(a, b)| **a > q && **b > q).count();
    if joint == 0 {
        return Err(Error::DegenerateTail(q));
    }
    let n = x1.len() as f64;
    let p = joint as f64 / n;
    let sd_p = (p * (1.0 - p) / n).sqrt();
    let lq = (1.0 - q).ln();
    let lp = p.ln();
    let chibar = if lp == 0.0 { 1.0 } else { 2.0 * lq / lp - 1.0 };
    let chibar_se = if lp == 0.0 { 0.0 } else { (2.0 * lq / (p * lp * lp)).abs() * sd_p };
    Ok(EmpiricalTail {
        q,
        chi: p / (1.0 - q),
        chibar,
        chi_se: sd_p / (1.0 - q),
        chibar_se,
        joint_exceedances: joint,
    })
}

/// Draws `n` pairs (X₁, X₂) = (X₁₂ + X₁∖₂, X₁₂ + X₂∖₁) directly from the
/// three-component split of a pair with the given geometry.
pub fn sample_pairs<R: Rng + ?Sized>(
    seed: &LevySeed,
    geom: &PairGeometry,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let shared = set_distribution(seed, geom.alpha0)?;
    let resid = set_distribution(seed, geom.alpha_res)?;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let s = shared.sample_one(rng);
        a.push(s + resid.sample_one(rng));
        b.push(s + resid.sample_one(rng));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypograph::{HeightFunction, Shape};
    use crate::numeric::special::gamma_q;

    fn geom(alpha0: f64) -> PairGeometry {
        PairGeometry::new(1.0, alpha0).unwrap()
    }

    #[test]
    fn subexponential_chi_is_the_shared_fraction() {
        let h = HeightFunction::planar(Shape::Laplace { rho: 1.3 }).unwrap();
        let t = theoretical_chi(&TailClass::Subexponential, &h.pair_geometry(1.3).unwrap()).unwrap();
        assert!((t.chi - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!((t.chibar, t.eta), (1.0, 1.0));
        let mut prev = 1.0;
        for k in 0..20 {
            let c = theoretical_chi(&TailClass::Subexponential, &h.pair_geometry(0.3 * k as f64).unwrap())
                .unwrap()
                .chi;
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn gamma_class_is_asymptotically_independent() {
        let tc = TailClass::from_seed(&LevySeed::Gamma { shape: 2.0, rate: 3.0 }).unwrap();
        let t = theoretical_chi(&tc, &geom(0.6)).unwrap();
        assert_eq!((t.chi, t.chibar, t.eta), (0.0, 1.0, 1.0));
        assert_eq!(theoretical_chi(&tc, &geom(1.0)).unwrap().chi, 1.0);
        let ind = theoretical_chi(&tc, &geom(0.0)).unwrap();
        assert_eq!((ind.chi, ind.chibar, ind.eta), (0.0, 0.0, 0.5));
        assert!((2.0 * t.eta - 1.0 - t.chibar).abs() < 1e-15);
        assert!(TailClass::from_seed(&LevySeed::Poisson { intensity: 1.0 }).is_err());
    }

    #[test]
    fn ig_chi_matches_its_closed_form() {
        let (lambda, mu0) = (0.4, 1.5);
        let seed = LevySeed::InverseGaussian { shape: lambda, mean: mu0 };
        let tc = TailClass::from_seed(&seed).unwrap();
        let beta = lambda / (2.0 * mu0 * mu0);
        assert_eq!(theoretical_chi(&tc, &geom(1.0)).unwrap().chi, 1.0);
        for a0 in [0.2, 0.5, 0.8] {
            let g = geom(a0);
            let resid = set_distribution(&seed, g.alpha_res).unwrap();
            let m = min_exponentiated_moment(&resid, beta).unwrap();
            let expected = a0 * m * (-g.alpha_res * lambda / mu0).exp();
            let got = theoretical_chi(&tc, &g).unwrap().chi;
            assert!((got - expected).abs() < 1e-12);
            assert!(got > 0.0 && got < 1.0);
        }
    }

    #[test]
    fn min_moment_matches_density_quadrature() {
        // E e^{βM} = ∫ e^{βx} 2 f(x) F̄(x) dx, computed from the density.
        let spec = QuadratureSpec::new(1e-14, 1e-10, 4000).unwrap();
        for (seed, v, beta) in [
            (LevySeed::Gamma { shape: 1.0, rate: 1.0 }, 0.5, 1.0),
            (LevySeed::Gamma { shape: 2.0, rate: 0.5 }, 0.7, 0.5),
            (LevySeed::InverseGaussian { shape: 0.4, mean: 1.5 }, 0.5, 0.4 / 4.5),
        ] {
            let d = set_distribution(&seed, v).unwrap();
            let direct = integrate(
                |x| {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    (beta * x + d.log_density(x).unwrap() + d.log_sf(x)).exp() * 2.0
                },
                0.0,
                f64::INFINITY,
                &spec,
            )
            .unwrap()
            .0;
            let m = min_exponentiated_moment(&d, beta).unwrap();
            assert!((m - direct).abs() < 1e-7 * m, "{seed:?}: {m} vs {direct}");
        }
        // Exp(1) residuals: the minimum is Exp(2), so E e^M = 2.
        let e = set_distribution(&LevySeed::Gamma { shape: 1.0, rate: 1.0 }, 1.0).unwrap();
        assert!((min_exponentiated_moment(&e, 1.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_asymptote_scaling() {
        let g = geom(0.6);
        let a = gamma_conditional_asymptote(1.5, 2.0, &g, 10.0).unwrap();
        let b = gamma_conditional_asymptote(1.5, 2.0, &g, 20.0).unwrap();
        assert!((b / a - 2f64.powf(-1.5 * 0.4)).abs() < 1e-12);
        assert_eq!(gamma_conditional_asymptote(1.5, 2.0, &geom(1.0), 5.0).unwrap(), 1.0);
        // Rate enters only through βx.
        let c = gamma_conditional_asymptote(1.5, 1.0, &g, 20.0).unwrap();
        assert!((a - c).abs() < 1e-9 * a);
    }

    #[test]
    fn gamma_asymptote_tracks_the_exact_conditional() {
        // Exact P(X₂ > x | X₁ > x) by quadrature over the shared component.
        let (ap, beta, a0) = (1.0, 1.0, 0.7);
        let g = geom(a0);
        let spec = QuadratureSpec::new(1e-300, 1e-10, 4000).unwrap();
        let x = 60.0;
        let shared = |s: f64| crate::levy::gamma_log_density(ap * a0, beta, s);
        let res = |t: f64| if t <= 0.0 { 1.0 } else { gamma_q(ap * g.alpha_res, beta * t) };
        let joint = integrate(|s| shared(s).exp() * res(x - s).powi(2), 0.0, x, &spec).unwrap().0
            + gamma_q(ap * a0, beta * x);
        let exact = joint / gamma_q(ap, beta * x);
        let asym = gamma_conditional_asymptote(ap, beta, &g, x).unwrap();
        assert!((asym / exact - 1.0).abs() < 0.1, "{asym} vs {exact}");
    }

    #[test]
    fn convolution_tail_of_two_exponentials() {
        let e = ExpTail::gamma(1.0, 1.0).unwrap();
        for (x, tol) in [(20.0, 0.1), (40.0, 0.05)] {
            let asym = convolution_tail_asymptote(&e, &e, x).unwrap();
            assert!((asym - x * (-x as f64).exp()).abs() < 1e-12 * asym);
            let exact = (1.0 + x) * (-x as f64).exp();
            assert!((asym / exact - 1.0).abs() < tol);
        }
        // Γ(1.5) ⋆ Γ(0.5) = Γ(2) with common rate 2
        let (f1, f2) = (ExpTail::gamma(1.5, 2.0).unwrap(), ExpTail::gamma(0.5, 2.0).unwrap());
        let x = 50.0;
        let exact = gamma_q(2.0, 2.0 * x);
        assert!((convolution_tail_asymptote(&f1, &f2, x).unwrap() / exact - 1.0).abs() < 0.02);
        let other = ExpTail::gamma(1.0, 2.0).unwrap();
        assert!(convolution_tail_asymptote(&e, &other, 5.0).is_err());
    }

    #[test]
    fn empirical_extremes() {
        let mut rng = stream(3, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        for q in [0.9, 0.95, 0.99] {
            let co = empirical_chi(&xs, &xs, q).unwrap();
            assert!((co.chi - 1.0).abs() < 1.0 / (20_000.0 * (1.0 - q)), "{}", co.chi);
            let ind = empirical_chi(&xs, &ys, q).unwrap();
            assert!((ind.chi - (1.0 - q)).abs() < 4.0 * ind.chi_se, "{q}: {}", ind.chi);
            assert!(ind.chibar.abs() < 4.0 * ind.chibar_se + 0.05, "{q}: {}", ind.chibar);
        }
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!(matches!(empirical_chi(&xs, &neg, 0.99), Err(Error::DegenerateTail(_))));
        assert!(empirical_chi(&xs[..100], &ys[..100], 0.9).is_err());
        assert!(empirical_chi(&xs, &ys, 0.4).is_err());
    }

    #[test]
    fn ranks_share_ties() {
        let u = pseudo_uniform(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(u, vec![3.5 / 5.0, 0.2, 3.5 / 5.0, 0.4]);
    }

    #[test]
    fn ig_simulated_chi_is_near_theory() {
        let (lambda, mu0, a0) = (0.1, 1.0, 0.5);
        let seed = LevySeed::InverseGaussian { shape: lambda, mean: mu0 };
        let g = geom(a0);
        let (x1, x2) = sample_pairs(&seed, &g, 200_000, &mut stream(4, 0)).unwrap();
        let emp = empirical_chi(&x1, &x2, 0.995).unwrap();
        let th = theoretical_chi(&TailClass::from_seed(&seed).unwrap(), &g).unwrap().chi;
        assert!((emp.chi - th).abs() < 4.0 * emp.chi_se + 0.02, "{} vs {th}", emp.chi);
    }
}
