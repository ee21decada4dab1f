//! Counting-process primitives and the rank-correlation-targeted Gaussian
//! copula sampler used for common-event losses.

use crate::distributions::LossDistribution;
use crate::special::normal_quadrature;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StochasticError {
    #[error("observation window must be positive, got {0}")]
    ZeroWindow(f64),
    #[error("intensity must be finite and ≥ 0 events/year, got {0}")]
    InvalidIntensity(f64),
    #[error("spearman correlation must lie in [-1, 1], got {0}")]
    InvalidSpearman(f64),
}

/// Homogeneous Poisson intensity in events per year.
///
/// Zero is representable (an estimate from an empty class) but flagged as
/// degenerate; pricing models are only meaningful with positive intensities.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PoissonIntensity(f64);

impl PoissonIntensity {
    pub fn new(lambda: f64) -> Result<Self, StochasticError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(StochasticError::InvalidIntensity(lambda));
        }
        Ok(Self(lambda))
    }

    pub fn per_year(&self) -> f64 {
        self.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for PoissonIntensity {
    type Error = StochasticError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        PoissonIntensity::new(v)
    }
}

impl From<PoissonIntensity> for f64 {
    fn from(i: PoissonIntensity) -> f64 {
        i.0
    }
}

/// Number of events over `horizon` years, Poisson with mean `λ·horizon`.
///
/// Inversion for small means and PTRS-style rejection for large ones, per
/// the underlying `rand_distr` implementation.
pub fn sample_poisson_count<R: Rng + ?Sized>(
    intensity: PoissonIntensity,
    horizon: f64,
    rng: &mut R,
) -> u64 {
    assert!(horizon >= 0.0, "horizon must be ≥ 0, got {horizon}");
    let mean = intensity.per_year() * horizon;
    if mean == 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as u64
}

/// Maximum-likelihood intensity for a homogeneous Poisson process:
/// `count / window_years`. An empty class is allowed but logged, since the
/// resulting degenerate process makes any model built on it trivial.
pub fn estimate_intensity(
    event_count: u64,
    window_years: f64,
) -> Result<PoissonIntensity, StochasticError> {
    if !(window_years > 0.0 && window_years.is_finite()) {
        return Err(StochasticError::ZeroWindow(window_years));
    }
    if event_count == 0 {
        log::warn!("intensity estimated from an empty event class; model is degenerate");
    }
    PoissonIntensity::new(event_count as f64 / window_years)
}

/// Dependence target for common-event losses, expressed as a Spearman rank
/// correlation. The Gaussian copula realizing it uses the exact identity
/// `r = 2·sin(π·ρ_s/6)` for its Pearson parameter, which makes the rank
/// correlation target hold regardless of the marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DependenceSpec(f64);

impl DependenceSpec {
    pub fn new(spearman_rho: f64) -> Result<Self, StochasticError> {
        if !(spearman_rho.is_finite() && (-1.0..=1.0).contains(&spearman_rho)) {
            return Err(StochasticError::InvalidSpearman(spearman_rho));
        }
        Ok(Self(spearman_rho))
    }

    pub fn independent() -> Self {
        Self(0.0)
    }

    pub fn spearman_rho(&self) -> f64 {
        self.0
    }

    /// Pearson parameter of the Gaussian copula hitting the Spearman target.
    pub fn gaussian_pearson(&self) -> f64 {
        // the boundaries are exact (sin(π/6) = 1/2 only up to rounding)
        if self.0.abs() >= 1.0 {
            return self.0.signum();
        }
        (2.0 * (PI * self.0 / 6.0).sin()).clamp(-1.0, 1.0)
    }
}

impl TryFrom<f64> for DependenceSpec {
    type Error = StochasticError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        DependenceSpec::new(v)
    }
}

impl From<DependenceSpec> for f64 {
    fn from(d: DependenceSpec) -> f64 {
        d.0
    }
}

/// Draw one common-event loss pair: a bivariate standard normal with the
/// copula's Pearson parameter, each coordinate mapped through Φ and then the
/// marginal quantile. Marginals are preserved exactly.
///
/// Two normals are always consumed, so streams stay aligned across sweeps
/// over the dependence parameter.
pub fn sample_correlated_pair<X, Y, R>(
    dist_x: &X,
    dist_y: &Y,
    dependence: DependenceSpec,
    rng: &mut R,
) -> (f64, f64)
where
    X: LossDistribution,
    Y: LossDistribution,
    R: Rng + ?Sized,
{
    let r = dependence.gaussian_pearson();
    let z1: f64 = StandardNormal.sample(rng);
    let w: f64 = StandardNormal.sample(rng);
    let z2 = if r.abs() >= 1.0 {
        r.signum() * z1
    } else {
        r * z1 + (1.0 - r * r).sqrt() * w
    };
    (dist_x.quantile_probit(z1), dist_y.quantile_probit(z2))
}

/// `E[X·Y]` under the Gaussian copula with the given marginals, via
/// probit-space Gauss–Hermite quadrature. Errors if either marginal has an
/// infinite second moment (the product moment would diverge too).
pub fn copula_product_moment<X, Y>(
    dist_x: &X,
    dist_y: &Y,
    dependence: DependenceSpec,
) -> Result<f64, crate::distributions::DistributionError>
where
    X: LossDistribution,
    Y: LossDistribution,
{
    dist_x.moments()?;
    dist_y.moments()?;
    let r = dependence.gaussian_pearson();
    let rule = normal_quadrature();
    if r.abs() >= 1.0 - 1e-12 {
        let sign = r.signum();
        let mut total = 0.0;
        for &(z, w) in rule {
            total += w * dist_x.quantile_probit(z) * dist_y.quantile_probit(sign * z);
        }
        return Ok(total);
    }
    let comp = (1.0 - r * r).sqrt();
    let mut total = 0.0;
    for &(z1, w1) in rule {
        let x = dist_x.quantile_probit(z1);
        let mut inner = 0.0;
        for &(t, w2) in rule {
            inner += w2 * dist_y.quantile_probit(r * z1 + comp * t);
        }
        total += w1 * x * inner;
    }
    Ok(total)
}

/// Ranks with ties sharing their average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
///
/// `None` when fewer than two pairs or when either rank vector is constant
/// (degenerate rank variance).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..xs.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
