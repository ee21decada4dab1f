//! Parametric loss-severity distributions with left truncation, closed-form or
//! numeric conditional moments, Wang distortion, and truncated maximum
//! likelihood (see [`fit`]).
//!
//! All monetary quantities are in billions of USD. The Pareto family uses the
//! generalized-Pareto convention `F(x) = 1 - (1 + shape·x/scale)^(-1/shape)`
//! on `x ≥ 0`; other conventions exist in the wild, so fitted `(shape, scale)`
//! pairs are only meaningful together with this cdf.

mod fit;

pub use fit::{fit_truncated_mle, FamilyKind};

use crate::special::{
    adaptive_simpson, brent_root, ln_norm_sf, norm_cdf, norm_quantile, norm_sf, norm_sf_inv,
    normal_quadrature,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by severity construction, moment evaluation, and fitting.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum DistributionError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The requested conditional moment diverges for this parameterization,
    /// e.g. a Pareto shape ≥ 1 (mean) or ≥ 1/2 (variance). Signals that the
    /// bivariate-normal price approximation is inapplicable.
    #[error("conditional moment of order {order} is infinite for {family:?}")]
    InfiniteMoment { order: u32, family: SeverityFamily },
    #[error("optimizer failed to converge within {0} iterations")]
    NonConvergence(usize),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
}

/// Closed set of loss-size families used for severity modelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SeverityFamily {
    /// ln X ~ N(mu, sigma²).
    LogNormal { mu: f64, sigma: f64 },
    /// Generalized-Pareto style: `F(x) = 1 - (1 + shape·x/scale)^(-1/shape)`.
    Pareto { shape: f64, scale: f64 },
    /// Wald distribution with mean `mu` and shape `lambda`.
    InverseGaussian { mu: f64, lambda: f64 },
    /// `F(x) = 1 - exp(-(x/scale)^shape)`.
    Weibull { shape: f64, scale: f64 },
}

impl SeverityFamily {
    pub fn validate(&self) -> Result<(), DistributionError> {
        let bad = |name: &str, v: f64| {
            Err(DistributionError::InvalidParameter(format!(
                "{name} must be strictly positive and finite, got {v}"
            )))
        };
        match *self {
            SeverityFamily::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(DistributionError::InvalidParameter(format!(
                        "log-normal mu must be finite, got {mu}"
                    )));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return bad("log-normal sigma", sigma);
                }
            }
            SeverityFamily::Pareto { shape, scale } => {
                if !(shape > 0.0 && shape.is_finite()) {
                    return bad("pareto shape", shape);
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return bad("pareto scale", scale);
                }
            }
            SeverityFamily::InverseGaussian { mu, lambda } => {
                if !(mu > 0.0 && mu.is_finite()) {
                    return bad("inverse-gaussian mu", mu);
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return bad("inverse-gaussian lambda", lambda);
                }
            }
            SeverityFamily::Weibull { shape, scale } => {
                if !(shape > 0.0 && shape.is_finite()) {
                    return bad("weibull shape", shape);
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return bad("weibull scale", scale);
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            SeverityFamily::LogNormal { .. } => FamilyKind::LogNormal,
            SeverityFamily::Pareto { .. } => FamilyKind::Pareto,
            SeverityFamily::InverseGaussian { .. } => FamilyKind::InverseGaussian,
            SeverityFamily::Weibull { .. } => FamilyKind::Weibull,
        }
    }

    /// Untruncated cdf; 0 for x ≤ 0 in every family (losses are positive).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            SeverityFamily::LogNormal { mu, sigma } => norm_cdf((x.ln() - mu) / sigma),
            SeverityFamily::Pareto { shape, scale } => {
                -(-(1.0 / shape) * (shape * x / scale).ln_1p()).exp_m1()
            }
            SeverityFamily::InverseGaussian { .. } => 1.0 - self.sf(x),
            SeverityFamily::Weibull { shape, scale } => -(-(x / scale).powf(shape)).exp_m1(),
        }
    }

    /// Untruncated survival function, kept accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            SeverityFamily::LogNormal { mu, sigma } => norm_sf((x.ln() - mu) / sigma),
            SeverityFamily::Pareto { shape, scale } => {
                (-(1.0 / shape) * (shape * x / scale).ln_1p()).exp()
            }
            SeverityFamily::InverseGaussian { mu, lambda } => {
                let s = (lambda / x).sqrt();
                let a = s * (x / mu - 1.0);
                let b = s * (x / mu + 1.0);
                // Φ̄(a) - e^{2λ/μ} Φ̄(b); the second term is evaluated in log
                // space so large λ/μ cannot overflow.
                let second = (2.0 * lambda / mu + ln_norm_sf(b)).exp();
                (norm_sf(a) - second).max(0.0)
            }
            SeverityFamily::Weibull { shape, scale } => (-(x / scale).powf(shape)).exp(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let lp = self.ln_pdf(x);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            lp.exp()
        }
    }

    /// Log density; −∞ outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            SeverityFamily::LogNormal { mu, sigma } => {
                let z = (x.ln() - mu) / sigma;
                -x.ln() - sigma.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z
            }
            SeverityFamily::Pareto { shape, scale } => {
                -scale.ln() - (1.0 / shape + 1.0) * (shape * x / scale).ln_1p()
            }
            SeverityFamily::InverseGaussian { mu, lambda } => {
                let d = x - mu;
                0.5 * (lambda.ln() - (2.0 * PI).ln() - 3.0 * x.ln())
                    - lambda * d * d / (2.0 * mu * mu * x)
            }
            SeverityFamily::Weibull { shape, scale } => {
                shape.ln() - shape * scale.ln() + (shape - 1.0) * x.ln() - (x / scale).powf(shape)
            }
        }
    }

    /// Inverse survival function. Closed form everywhere except the inverse
    /// Gaussian, which brackets and solves the cdf to ~1e-10.
    pub fn sf_inv(&self, q: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&q));
        if q >= 1.0 {
            return 0.0;
        }
        if q <= 0.0 {
            return f64::INFINITY;
        }
        match *self {
            SeverityFamily::LogNormal { mu, sigma } => (mu + sigma * norm_sf_inv(q)).exp(),
            SeverityFamily::Pareto { shape, scale } => {
                scale / shape * (-shape * q.ln()).exp_m1()
            }
            SeverityFamily::InverseGaussian { mu, .. } => {
                // Monotone in x: near the median use the cdf residual, deep in
                // the tail switch to the survival residual for accuracy.
                let f = |x: f64| {
                    if q >= 0.5 {
                        self.cdf(x) - (1.0 - q)
                    } else {
                        q - self.sf(x)
                    }
                };
                let mut hi = mu;
                let mut n = 0;
                while f(hi) < 0.0 {
                    hi *= 2.0;
                    n += 1;
                    assert!(n < 2100, "inverse gaussian quantile bracket failed");
                }
                let mut lo = hi / 2.0;
                while f(lo) > 0.0 {
                    lo /= 2.0;
                    n += 1;
                    assert!(n < 4200, "inverse gaussian quantile bracket failed");
                }
                brent_root(&f, lo, hi, 1e-10 * mu.max(1.0))
            }
            SeverityFamily::Weibull { shape, scale } => scale * (-q.ln()).powf(1.0 / shape),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.sf_inv(1.0 - p)
    }

    /// Conditional raw moment `E[X^order | X > u]` for `order` in {1, 2}.
    fn conditional_raw_moment(&self, order: u32, u: f64) -> Result<f64, DistributionError> {
        debug_assert!(order == 1 || order == 2);
        let m = f64::from(order);
        match *self {
            SeverityFamily::LogNormal { mu, sigma } => {
                // E[X^m; X>u] = e^{mμ + m²σ²/2} Φ̄(z_u - mσ) with z_u = (ln u - μ)/σ.
                let scale = (m * mu + 0.5 * m * m * sigma * sigma).exp();
                if u <= 0.0 {
                    return Ok(scale);
                }
                let zu = (u.ln() - mu) / sigma;
                Ok(scale * norm_sf(zu - m * sigma) / norm_sf(zu))
            }
            SeverityFamily::Pareto { shape, scale } => {
                // The excess over u is again Pareto with the same shape and
                // scale `scale + shape·u`.
                if shape >= 1.0 / m {
                    return Err(DistributionError::InfiniteMoment {
                        order,
                        family: *self,
                    });
                }
                let su = scale + shape * u;
                let mean_exc = su / (1.0 - shape);
                match order {
                    1 => Ok(u + mean_exc),
                    _ => {
                        let var_exc =
                            su * su / ((1.0 - shape) * (1.0 - shape) * (1.0 - 2.0 * shape));
                        let m1 = u + mean_exc;
                        Ok(var_exc + m1 * m1)
                    }
                }
            }
            SeverityFamily::InverseGaussian { mu, lambda } => {
                // Light-tailed: integrate x^m f(x) over [u, hi] where hi cuts
                // the survival mass at a negligible fraction of S(u).
                let sf_u = self.sf(u.max(0.0));
                if sf_u <= 0.0 {
                    return Err(DistributionError::InvalidParameter(format!(
                        "truncation {u} leaves no inverse-gaussian mass"
                    )));
                }
                let sd = (mu * mu * mu / lambda).sqrt();
                let mut hi = (mu + 8.0 * sd).max(u.max(0.0) * 2.0 + mu);
                while self.sf(hi) > 1e-13 * sf_u {
                    hi *= 1.5;
                }
                let f = |x: f64| x.powi(order as i32) * self.pdf(x);
                let lo = u.max(0.0);
                Ok(adaptive_simpson(&f, lo, hi, 1e-9) / sf_u)
            }
            SeverityFamily::Weibull { shape, scale } => {
                let y = if u <= 0.0 {
                    0.0
                } else {
                    (u / scale).powf(shape)
                };
                if y > 650.0 {
                    // Both Q(a, y) and e^{-y} underflow; integrate instead.
                    let sf_u = self.sf(u);
                    let mut hi = u.max(scale) * 2.0;
                    while self.sf(hi) > 1e-13 * sf_u {
                        hi *= 1.5;
                    }
                    let f = |x: f64| x.powi(order as i32) * self.pdf(x);
                    return Ok(adaptive_simpson(&f, u, hi, 1e-9) / sf_u);
                }
                let a = 1.0 + m / shape;
                // E[X^m; X>u] = scale^m Γ(a) Q(a, (u/scale)^shape)
                let upper = gamma::gamma(a) * gamma::gamma_ur(a, y);
                Ok(scale.powf(m) * upper / (-y).exp())
            }
        }
    }
}

/// First two central moments of a severity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Moments {
    /// E[X²] = Var X + (E X)².
    pub fn second_raw(&self) -> f64 {
        self.variance + self.mean * self.mean
    }
}

/// Common sampling/evaluation interface for plain and Wang-distorted
/// truncated severities. Implementations are immutable and thread-safe.
pub trait LossDistribution {
    /// Infimum of the support (the truncation point).
    fn lower_bound(&self) -> f64;

    /// Cdf of the (possibly distorted) truncated distribution.
    fn cdf(&self, x: f64) -> f64;

    /// Quantile for `p` in [0, 1); `p = 0` maps to the truncation point.
    fn quantile(&self, p: f64) -> f64;

    /// Quantile evaluated at `Φ(z)` without forming the probability, so the
    /// upper tail keeps full resolution. Gaussian-copula sampling and
    /// probit-space quadrature go through this.
    fn quantile_probit(&self, z: f64) -> f64;

    /// Mean and variance; errors with [`DistributionError::InfiniteMoment`]
    /// when they diverge.
    fn moments(&self) -> Result<Moments, DistributionError>;

    /// Inverse-cdf sampling; outputs are ≥ [`Self::lower_bound`] always.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random())
    }
}

/// Serialized form of [`TruncatedSeverity`]; validation happens on conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeverityConfig {
    #[serde(flatten)]
    pub family: SeverityFamily,
    pub truncation: f64,
}

/// A severity family conditioned on exceeding a reporting threshold:
/// `F_u(x) = (F(x) - F(u)) / (1 - F(u))` for `x ≥ u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeverityConfig", into = "SeverityConfig")]
pub struct TruncatedSeverity {
    family: SeverityFamily,
    truncation: f64,
    sf_trunc: f64,
}

impl TryFrom<SeverityConfig> for TruncatedSeverity {
    type Error = DistributionError;
    fn try_from(c: SeverityConfig) -> Result<Self, Self::Error> {
        TruncatedSeverity::new(c.family, c.truncation)
    }
}

impl From<TruncatedSeverity> for SeverityConfig {
    fn from(t: TruncatedSeverity) -> Self {
        SeverityConfig {
            family: t.family,
            truncation: t.truncation,
        }
    }
}

impl TruncatedSeverity {
    /// Left-truncate `family` at `truncation ≥ 0` (billions USD).
    pub fn new(family: SeverityFamily, truncation: f64) -> Result<Self, DistributionError> {
        family.validate()?;
        if !(truncation >= 0.0 && truncation.is_finite()) {
            return Err(DistributionError::InvalidParameter(format!(
                "truncation must be finite and ≥ 0, got {truncation}"
            )));
        }
        let sf_trunc = family.sf(truncation);
        if sf_trunc <= 0.0 {
            return Err(DistributionError::InvalidParameter(format!(
                "truncation {truncation} leaves no probability mass"
            )));
        }
        Ok(Self {
            family,
            truncation,
            sf_trunc,
        })
    }

    pub fn family(&self) -> SeverityFamily {
        self.family
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Survival mass of the base family above the truncation point.
    pub fn base_sf_at_truncation(&self) -> f64 {
        self.sf_trunc
    }

    /// Wang-transform this severity: `F*(x) = Φ[Φ⁻¹(F_u(x)) + λ]`.
    pub fn apply_wang(&self, distortion: WangDistortion) -> DistortedSeverity {
        DistortedSeverity {
            base: *self,
            lambda: distortion.lambda(),
        }
    }
}

impl LossDistribution for TruncatedSeverity {
    fn lower_bound(&self) -> f64 {
        self.truncation
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.truncation {
            return 0.0;
        }
        ((self.sf_trunc - self.family.sf(x)) / self.sf_trunc).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.truncation;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        self.family
            .sf_inv(self.sf_trunc * (1.0 - p))
            .max(self.truncation)
    }

    fn quantile_probit(&self, z: f64) -> f64 {
        self.family
            .sf_inv((self.sf_trunc * norm_sf(z)).min(1.0))
            .max(self.truncation)
    }

    fn moments(&self) -> Result<Moments, DistributionError> {
        let m1 = self.family.conditional_raw_moment(1, self.truncation)?;
        let m2 = self.family.conditional_raw_moment(2, self.truncation)?;
        Ok(Moments {
            mean: m1,
            variance: (m2 - m1 * m1).max(0.0),
        })
    }
}

/// Wang distortion parameter; `lambda = 0` is the identity and negative
/// values inflate loss distributions (the direction used for risk loading).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WangDistortion(f64);

impl WangDistortion {
    pub fn new(lambda: f64) -> Result<Self, DistributionError> {
        if !lambda.is_finite() {
            return Err(DistributionError::InvalidParameter(format!(
                "wang lambda must be finite, got {lambda}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn identity() -> Self {
        Self(0.0)
    }

    pub fn lambda(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for WangDistortion {
    type Error = DistributionError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        WangDistortion::new(v)
    }
}

impl From<WangDistortion> for f64 {
    fn from(w: WangDistortion) -> f64 {
        w.0
    }
}

/// A truncated severity pushed through the Wang transform.
///
/// Sampling composes the base quantile with a normal shift,
/// `x = F_u⁻¹(Φ(Φ⁻¹(p) - λ))`, so no second root-find is needed and a zero
/// distortion reproduces the base sampler bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortedSeverity {
    base: TruncatedSeverity,
    lambda: f64,
}

impl DistortedSeverity {
    pub fn base(&self) -> &TruncatedSeverity {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl LossDistribution for DistortedSeverity {
    fn lower_bound(&self) -> f64 {
        self.base.lower_bound()
    }

    fn cdf(&self, x: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.base.cdf(x);
        }
        let f = self.base.cdf(x);
        if f <= 0.0 {
            0.0
        } else if f >= 1.0 {
            1.0
        } else {
            norm_cdf(norm_quantile(f) + self.lambda)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.base.quantile(p);
        }
        if p <= 0.0 {
            return self.base.lower_bound();
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        self.base.quantile(norm_cdf(norm_quantile(p) - self.lambda))
    }

    fn quantile_probit(&self, z: f64) -> f64 {
        self.base.quantile_probit(z - self.lambda)
    }

    fn moments(&self) -> Result<Moments, DistributionError> {
        // The distortion preserves the tail index, so moment finiteness is
        // inherited from the base distribution; guard there first.
        self.base.moments()?;
        let (mut m1, mut m2) = (0.0, 0.0);
        for &(z, w) in normal_quadrature() {
            let x = self.quantile_probit(z);
            m1 += w * x;
            m2 += w * x * x;
        }
        Ok(Moments {
            mean: m1,
            variance: (m2 - m1 * m1).max(0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn ln_ok_all() -> TruncatedSeverity {
        TruncatedSeverity::new(
            SeverityFamily::LogNormal {
                mu: -4.783,
                sigma: 1.841,
            },
            0.025,
        )
        .unwrap()
    }

    /// Independent erf-based oracle for the truncated log-normal cdf.
    fn ln_trunc_cdf_oracle(x: f64, mu: f64, sigma: f64, u: f64) -> f64 {
        let phi = |t: f64| 0.5 * statrs::function::erf::erfc(-t / std::f64::consts::SQRT_2);
        let fx = phi((x.ln() - mu) / sigma);
        let fu = phi((u.ln() - mu) / sigma);
        (fx - fu) / (1.0 - fu)
    }

    #[test]
    fn truncated_cdf_at_boundary_and_tail() {
        let d = ln_ok_all();
        assert_eq!(d.cdf(0.025), 0.0);
        assert_eq!(d.cdf(0.0), 0.0);
        assert!((d.cdf(1e9) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truncated_cdf_matches_erf_oracle() {
        let d = ln_ok_all();
        let expect = ln_trunc_cdf_oracle(0.1, -4.783, 1.841, 0.025);
        assert!(
            (d.cdf(0.1) - expect).abs() < 1e-12,
            "got {}, oracle {}",
            d.cdf(0.1),
            expect
        );
        // value frozen from the oracle (erf backends agree to ~1e-11)
        assert!((expect - 0.6779370354970002).abs() < 1e-10);
    }

    #[test]
    fn truncated_cdf_monotone_on_grid() {
        for fam in [
            SeverityFamily::LogNormal {
                mu: -4.783,
                sigma: 1.841,
            },
            SeverityFamily::Pareto {
                shape: 0.314,
                scale: 0.032,
            },
            SeverityFamily::InverseGaussian {
                mu: 0.181,
                lambda: 0.098,
            },
            SeverityFamily::Weibull {
                shape: 0.8,
                scale: 0.12,
            },
        ] {
            let d = TruncatedSeverity::new(fam, 0.025).unwrap();
            let mut last = -1.0;
            for i in 0..1000 {
                let x = 0.02 + 0.005 * i as f64;
                let c = d.cdf(x);
                assert!((0.0..=1.0).contains(&c));
                assert!(c >= last, "{fam:?} not monotone at {x}");
                last = c;
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf_all_families() {
        for fam in [
            SeverityFamily::LogNormal {
                mu: -4.783,
                sigma: 1.841,
            },
            SeverityFamily::Pareto {
                shape: 0.314,
                scale: 0.032,
            },
            SeverityFamily::InverseGaussian {
                mu: 0.181,
                lambda: 0.098,
            },
            SeverityFamily::Weibull {
                shape: 0.8,
                scale: 0.12,
            },
        ] {
            let d = TruncatedSeverity::new(fam, 0.025).unwrap();
            for i in 1..100 {
                let q = i as f64 / 100.0;
                let x = d.quantile(q);
                assert!(
                    (d.cdf(x) - q).abs() < 1e-9,
                    "{fam:?}: F(F⁻¹({q})) = {}",
                    d.cdf(x)
                );
            }
        }
    }

    #[test]
    fn untruncated_lognormal_moments_closed_form() {
        let d = TruncatedSeverity::new(SeverityFamily::LogNormal { mu: 0.0, sigma: 1.0 }, 0.0)
            .unwrap();
        let m = d.moments().unwrap();
        assert!((m.mean - 0.5_f64.exp()).abs() < 1e-12);
        let var = (1.0_f64.exp() - 1.0) * 1.0_f64.exp();
        assert!((m.variance - var).abs() < 1e-12);
    }

    #[test]
    fn truncated_moments_match_quadrature_oracle() {
        // Brute-force numeric integration, independent of the closed forms.
        for fam in [
            SeverityFamily::LogNormal {
                mu: -4.783,
                sigma: 1.841,
            },
            SeverityFamily::Pareto {
                shape: 0.314,
                scale: 0.032,
            },
            SeverityFamily::InverseGaussian {
                mu: 0.181,
                lambda: 0.098,
            },
            SeverityFamily::Weibull {
                shape: 0.8,
                scale: 0.12,
            },
        ] {
            let u = 0.025;
            let d = TruncatedSeverity::new(fam, u).unwrap();
            let sf_u = fam.sf(u);
            // the cutoff must be x²-weighted: the second-moment tail is far
            // fatter than the probability tail
            let moment = |order: i32| {
                let mut hi = 1.0;
                loop {
                    let integral =
                        adaptive_simpson(&|x: f64| x.powi(order) * fam.pdf(x), u, hi, 1e-11);
                    if hi.powi(order) * fam.sf(hi) < 1e-11 * integral {
                        return integral / sf_u;
                    }
                    hi *= 2.0;
                }
            };
            let m1 = moment(1);
            let m2 = moment(2);
            let m = d.moments().unwrap();
            assert!(
                (m.mean / m1 - 1.0).abs() < 1e-6,
                "{fam:?} mean {} vs oracle {m1}",
                m.mean
            );
            assert!(
                (m.variance / (m2 - m1 * m1) - 1.0).abs() < 1e-6,
                "{fam:?} var {} vs oracle {}",
                m.variance,
                m2 - m1 * m1
            );
        }
    }

    #[test]
    fn truncated_mean_dominates_untruncated() {
        for fam in [
            SeverityFamily::LogNormal {
                mu: -4.783,
                sigma: 1.841,
            },
            SeverityFamily::InverseGaussian {
                mu: 0.181,
                lambda: 0.098,
            },
        ] {
            let u = 0.025;
            let trunc = TruncatedSeverity::new(fam, u).unwrap().moments().unwrap();
            let full = TruncatedSeverity::new(fam, 0.0).unwrap().moments().unwrap();
            assert!(trunc.mean >= full.mean);
            assert!(trunc.mean >= u);
        }
    }

    #[test]
    fn heavy_pareto_moments_are_flagged_infinite() {
        let heavy = TruncatedSeverity::new(
            SeverityFamily::Pareto {
                shape: 1.2,
                scale: 0.05,
            },
            0.025,
        )
        .unwrap();
        assert!(matches!(
            heavy.moments(),
            Err(DistributionError::InfiniteMoment { order: 1, .. })
        ));
        let mid = TruncatedSeverity::new(
            SeverityFamily::Pareto {
                shape: 0.7,
                scale: 0.05,
            },
            0.025,
        )
        .unwrap();
        assert!(matches!(
            mid.moments(),
            Err(DistributionError::InfiniteMoment { order: 2, .. })
        ));
    }

    #[test]
    fn samples_respect_truncation_and_mean() {
        let d = TruncatedSeverity::new(SeverityFamily::LogNormal { mu: 0.0, sigma: 1.0 }, 0.0)
            .unwrap();
        let mut r = rng::stream(11);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = d.sample(&mut r);
            assert!(x >= 0.0);
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        let expect = 0.5_f64.exp();
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean} vs {expect} (se {se})"
        );

        let t = ln_ok_all();
        let mut r = rng::stream(12);
        for _ in 0..10_000 {
            assert!(t.sample(&mut r) >= 0.025);
        }
    }

    #[test]
    fn empirical_cdf_consistent_with_truncated_cdf() {
        // KS self-consistency at n = 1e5, α = 0.01 (critical value 1.628/√n).
        let d = ln_ok_all();
        let n = 100_000;
        let mut r = rng::stream(13);
        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut r)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = d.cdf(x);
            ks = ks
                .max((f - i as f64 / n as f64).abs())
                .max((f - (i + 1) as f64 / n as f64).abs());
        }
        let crit = 1.628 / (n as f64).sqrt();
        assert!(ks < crit, "KS {ks} ≥ {crit}");
    }

    #[test]
    fn wang_identity_is_pointwise_noop() {
        let d = ln_ok_all();
        let w = d.apply_wang(WangDistortion::identity());
        for i in 1..200 {
            let x = 0.025 + 0.01 * i as f64;
            assert!((w.cdf(x) - d.cdf(x)).abs() < 1e-12);
        }
        // identity sampling is bit-identical
        let mut r1 = rng::stream(5);
        let mut r2 = rng::stream(5);
        for _ in 0..1000 {
            assert_eq!(d.sample(&mut r1).to_bits(), w.sample(&mut r2).to_bits());
        }
    }

    #[test]
    fn wang_lognormal_shift_property() {
        // LN(0, 1) distorted with λ = -0.5 is LN(0.5, 1): cdf agreement on a
        // grid and a KS check on 1e5 samples.
        let base = TruncatedSeverity::new(SeverityFamily::LogNormal { mu: 0.0, sigma: 1.0 }, 0.0)
            .unwrap();
        let distorted = base.apply_wang(WangDistortion::new(-0.5).unwrap());
        let shifted = TruncatedSeverity::new(SeverityFamily::LogNormal { mu: 0.5, sigma: 1.0 }, 0.0)
            .unwrap();
        for i in 0..100 {
            let x = 0.05 + 0.25 * i as f64;
            assert!(
                (distorted.cdf(x) - shifted.cdf(x)).abs() < 1e-9,
                "cdf mismatch at {x}"
            );
        }
        let n = 100_000;
        let mut r = rng::stream(21);
        let mut xs: Vec<f64> = (0..n).map(|_| distorted.sample(&mut r)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = shifted.cdf(x);
            ks = ks
                .max((f - i as f64 / n as f64).abs())
                .max((f - (i + 1) as f64 / n as f64).abs());
        }
        assert!(ks < 1.628 / (n as f64).sqrt(), "KS {ks}");
    }

    #[test]
    fn wang_pareto_matches_direct_formula() {
        let base = TruncatedSeverity::new(
            SeverityFamily::Pareto {
                shape: 0.314,
                scale: 0.032,
            },
            0.025,
        )
        .unwrap();
        let distorted = base.apply_wang(WangDistortion::new(-0.25).unwrap());
        // Independent oracle: Φ[Φ⁻¹(F_u(0.1)) - 0.25] via erf.
        let fu = base.cdf(0.1);
        let phi_inv = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * fu);
        let expect =
            0.5 * statrs::function::erf::erfc(-(phi_inv - 0.25) / std::f64::consts::SQRT_2);
        assert!((distorted.cdf(0.1) - expect).abs() < 1e-12);
        assert!((expect - 0.6899610249609214).abs() < 1e-12);
    }

    #[test]
    fn negative_lambda_inflates_losses() {
        // F*(x) ≤ F(x) pointwise: the distorted distribution stochastically
        // dominates the base one.
        let d = ln_ok_all();
        let w = d.apply_wang(WangDistortion::new(-0.6).unwrap());
        for i in 1..500 {
            let x = 0.025 + 0.01 * i as f64;
            assert!(w.cdf(x) <= d.cdf(x) + 1e-15);
        }
    }

    #[test]
    fn distorted_moments_match_sampling() {
        let base = TruncatedSeverity::new(
            SeverityFamily::LogNormal {
                mu: -2.0,
                sigma: 1.2,
            },
            0.025,
        )
        .unwrap();
        let w = base.apply_wang(WangDistortion::new(-0.4).unwrap());
        let m = w.moments().unwrap();
        let mut r = rng::stream(31);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = w.sample(&mut r);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((m.mean - mean).abs() < 4.0 * se, "{} vs {mean}", m.mean);
        // LN(μ - λσ, σ) check: distorted LN with u = 0 is again log-normal
        let base0 =
            TruncatedSeverity::new(SeverityFamily::LogNormal { mu: -2.0, sigma: 1.2 }, 0.0)
                .unwrap();
        let w0 = base0.apply_wang(WangDistortion::new(-0.4).unwrap());
        let m0 = w0.moments().unwrap();
        let mu_s = -2.0 + 0.4 * 1.2;
        let expect_mean = (mu_s + 0.5 * 1.2 * 1.2_f64).exp();
        assert!((m0.mean / expect_mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let d = ln_ok_all();
        let js = serde_json::to_string(&d).unwrap();
        let back: TruncatedSeverity = serde_json::from_str(&js).unwrap();
        assert_eq!(d, back);
        let bad = r#"{"family":"log_normal","mu":0.0,"sigma":-1.0,"truncation":0.0}"#;
        assert!(serde_json::from_str::<TruncatedSeverity>(bad).is_err());
    }

    #[test]
    fn probit_quantile_agrees_with_plain_quantile() {
        let d = ln_ok_all();
        let mut r = rng::stream(41);
        for _ in 0..1000 {
            let z: f64 = r.random_range(-5.0..5.0);
            let p = norm_cdf(z);
            let a = d.quantile_probit(z);
            let b = d.quantile(p);
            assert!((a / b - 1.0).abs() < 1e-9, "z={z}: {a} vs {b}");
        }
    }
}
