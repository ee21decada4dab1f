//! The three two-region aggregate-loss models: simulation of the pair
//! `(S1(T), S2(T))` and its exact bivariate moments.
//!
//! All variants drive severities through the [`LossDistribution`] interface,
//! so the same model skeleton prices plain and Wang-distorted severities.

use crate::distributions::{DistributionError, LossDistribution, TruncatedSeverity};
use crate::stochastic::{
    copula_product_moment, sample_correlated_pair, DependenceSpec, PoissonIntensity,
};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("proportional share must lie strictly inside (0, 1), got {0}")]
    InvalidShare(f64),
    #[error("horizon must be positive, got {0}")]
    InvalidHorizon(f64),
}

/// Two-region aggregate-loss model, generic over the severity representation.
///
/// Region 1 / region 2 naming follows the bond's two thresholds. The
/// `Proportional` variant splits each common loss deterministically, `share`
/// to region 1; the `Dependent` variant draws common pairs from a Gaussian
/// copula with a Spearman target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RegionLossModel<S = TruncatedSeverity> {
    Independent {
        intensity1: PoissonIntensity,
        intensity2: PoissonIntensity,
        severity1: S,
        severity2: S,
    },
    Proportional {
        only1: PoissonIntensity,
        common: PoissonIntensity,
        only2: PoissonIntensity,
        severity_only1: S,
        severity_only2: S,
        severity_common: S,
        share: f64,
    },
    Dependent {
        only1: PoissonIntensity,
        common: PoissonIntensity,
        only2: PoissonIntensity,
        severity_only1: S,
        severity_only2: S,
        severity_common1: S,
        severity_common2: S,
        dependence: DependenceSpec,
    },
}

/// Which covariance expression to use for the `Dependent` variant.
///
/// `CompoundSum` is the common-shock compound-Poisson derivation,
/// `Cov = λT·E[X·Y]`, and matches the simulated process (see the
/// moment-concordance tests). `SecondMomentWeighted` instead weights the
/// severity covariance by `E[N(T)²]`; it does not agree with simulation and
/// is retained only for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DependentCovariance {
    #[default]
    CompoundSum,
    SecondMomentWeighted,
}

/// Mean vector and covariance matrix of `(S1(T), S2(T))` in billions USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    pub cov: f64,
}

impl BivariateMoments {
    pub fn correlation(&self) -> f64 {
        let denom = (self.var1 * self.var2).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (self.cov / denom).clamp(-1.0, 1.0)
        }
    }

    /// Smallest eigenvalue of the 2×2 covariance matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let half_tr = 0.5 * (self.var1 + self.var2);
        let half_gap = 0.5 * (self.var1 - self.var2);
        half_tr - (half_gap * half_gap + self.cov * self.cov).sqrt()
    }

    /// Shrink the covariance just enough that the smallest eigenvalue is at
    /// least `1e-12 × trace`, repairing rounding-induced non-PSD matrices.
    /// Exact-arithmetic moments are untouched.
    pub fn psd_repaired(&self) -> Self {
        let floor = 1e-12 * (self.var1 + self.var2);
        if self.min_eigenvalue() >= floor {
            return *self;
        }
        let half_tr = 0.5 * (self.var1 + self.var2);
        let half_gap = 0.5 * (self.var1 - self.var2);
        let radius = half_tr - floor;
        let max_cov_sq = (radius * radius - half_gap * half_gap).max(0.0);
        let max_cov = max_cov_sq.sqrt();
        Self {
            cov: self.cov.clamp(-max_cov, max_cov),
            ..*self
        }
    }
}

impl<S> RegionLossModel<S> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if let RegionLossModel::Proportional { share, .. } = self {
            if !(share.is_finite() && *share > 0.0 && *share < 1.0) {
                return Err(ModelError::InvalidShare(*share));
            }
        }
        Ok(())
    }

    /// Sum of all event intensities feeding either region.
    pub fn total_intensity(&self) -> f64 {
        match self {
            RegionLossModel::Independent {
                intensity1,
                intensity2,
                ..
            } => intensity1.per_year() + intensity2.per_year(),
            RegionLossModel::Proportional {
                only1,
                common,
                only2,
                ..
            }
            | RegionLossModel::Dependent {
                only1,
                common,
                only2,
                ..
            } => only1.per_year() + common.per_year() + only2.per_year(),
        }
    }

    /// Rebuild the model with every severity replaced by `f(severity)`;
    /// used for Wang-distortion sweeps.
    pub fn map_severities<T>(&self, f: impl Fn(&S) -> T) -> RegionLossModel<T> {
        match self {
            RegionLossModel::Independent {
                intensity1,
                intensity2,
                severity1,
                severity2,
            } => RegionLossModel::Independent {
                intensity1: *intensity1,
                intensity2: *intensity2,
                severity1: f(severity1),
                severity2: f(severity2),
            },
            RegionLossModel::Proportional {
                only1,
                common,
                only2,
                severity_only1,
                severity_only2,
                severity_common,
                share,
            } => RegionLossModel::Proportional {
                only1: *only1,
                common: *common,
                only2: *only2,
                severity_only1: f(severity_only1),
                severity_only2: f(severity_only2),
                severity_common: f(severity_common),
                share: *share,
            },
            RegionLossModel::Dependent {
                only1,
                common,
                only2,
                severity_only1,
                severity_only2,
                severity_common1,
                severity_common2,
                dependence,
            } => RegionLossModel::Dependent {
                only1: *only1,
                common: *common,
                only2: *only2,
                severity_only1: f(severity_only1),
                severity_only2: f(severity_only2),
                severity_common1: f(severity_common1),
                severity_common2: f(severity_common2),
                dependence: *dependence,
            },
        }
    }
}

/// Reusable count sampler; `None` encodes a zero mean.
struct CountSampler(Option<Poisson<f64>>);

impl CountSampler {
    fn new(mean: f64) -> Self {
        if mean > 0.0 {
            CountSampler(Some(Poisson::new(mean).expect("positive finite mean")))
        } else {
            CountSampler(None)
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.0 {
            Some(d) => d.sample(rng) as u64,
            None => 0,
        }
    }
}

/// Precomputed per-horizon sampler for `(S1(T), S2(T))`.
///
/// Draw order is fixed (region-1-only block, region-2-only block, common
/// block), so a seed fully determines the path set for a given model shape.
pub struct AggregateSimulator<'m, S> {
    model: &'m RegionLossModel<S>,
    counts: [CountSampler; 3],
}

impl<'m, S: LossDistribution> AggregateSimulator<'m, S> {
    fn new(model: &'m RegionLossModel<S>, horizon: f64) -> Self {
        let counts = match model {
            RegionLossModel::Independent {
                intensity1,
                intensity2,
                ..
            } => [
                CountSampler::new(intensity1.per_year() * horizon),
                CountSampler::new(intensity2.per_year() * horizon),
                CountSampler::new(0.0),
            ],
            RegionLossModel::Proportional {
                only1,
                common,
                only2,
                ..
            }
            | RegionLossModel::Dependent {
                only1,
                common,
                only2,
                ..
            } => [
                CountSampler::new(only1.per_year() * horizon),
                CountSampler::new(only2.per_year() * horizon),
                CountSampler::new(common.per_year() * horizon),
            ],
        };
        Self { model, counts }
    }

    /// One draw of `(S1(horizon), S2(horizon))`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self.model {
            RegionLossModel::Independent {
                severity1,
                severity2,
                ..
            } => {
                let mut s1 = 0.0;
                for _ in 0..self.counts[0].draw(rng) {
                    s1 += severity1.sample(rng);
                }
                let mut s2 = 0.0;
                for _ in 0..self.counts[1].draw(rng) {
                    s2 += severity2.sample(rng);
                }
                (s1, s2)
            }
            RegionLossModel::Proportional {
                severity_only1,
                severity_only2,
                severity_common,
                share,
                ..
            } => {
                let mut s1 = 0.0;
                for _ in 0..self.counts[0].draw(rng) {
                    s1 += severity_only1.sample(rng);
                }
                let mut s2 = 0.0;
                for _ in 0..self.counts[1].draw(rng) {
                    s2 += severity_only2.sample(rng);
                }
                for _ in 0..self.counts[2].draw(rng) {
                    let z = severity_common.sample(rng);
                    s1 += share * z;
                    s2 += (1.0 - share) * z;
                }
                (s1, s2)
            }
            RegionLossModel::Dependent {
                severity_only1,
                severity_only2,
                severity_common1,
                severity_common2,
                dependence,
                ..
            } => {
                let mut s1 = 0.0;
                for _ in 0..self.counts[0].draw(rng) {
                    s1 += severity_only1.sample(rng);
                }
                let mut s2 = 0.0;
                for _ in 0..self.counts[1].draw(rng) {
                    s2 += severity_only2.sample(rng);
                }
                for _ in 0..self.counts[2].draw(rng) {
                    let (x, y) =
                        sample_correlated_pair(severity_common1, severity_common2, *dependence, rng);
                    s1 += x;
                    s2 += y;
                }
                (s1, s2)
            }
        }
    }
}

impl<S: LossDistribution> RegionLossModel<S> {
    /// Build a per-horizon sampler (hoists Poisson setup out of hot loops).
    pub fn simulator(&self, horizon: f64) -> AggregateSimulator<'_, S> {
        assert!(
            horizon >= 0.0 && horizon.is_finite(),
            "horizon must be ≥ 0, got {horizon}"
        );
        AggregateSimulator::new(self, horizon)
    }

    /// One draw of `(S1(horizon), S2(horizon))`.
    pub fn simulate_aggregate<R: Rng + ?Sized>(&self, horizon: f64, rng: &mut R) -> (f64, f64) {
        self.simulator(horizon).draw(rng)
    }

    /// Exact mean vector and covariance matrix of `(S1(T), S2(T))` from
    /// compound-Poisson identities: `E S = λT·E X`, `Var S = λT·E X²`.
    pub fn analytic_moments(&self, horizon: f64) -> Result<BivariateMoments, DistributionError> {
        self.analytic_moments_with(horizon, DependentCovariance::default())
    }

    /// As [`Self::analytic_moments`], selecting the covariance expression
    /// for the `Dependent` variant.
    pub fn analytic_moments_with(
        &self,
        horizon: f64,
        form: DependentCovariance,
    ) -> Result<BivariateMoments, DistributionError> {
        assert!(
            horizon > 0.0 && horizon.is_finite(),
            "horizon must be > 0, got {horizon}"
        );
        match self {
            RegionLossModel::Independent {
                intensity1,
                intensity2,
                severity1,
                severity2,
            } => {
                let m1 = severity1.moments()?;
                let m2 = severity2.moments()?;
                let n1 = intensity1.per_year() * horizon;
                let n2 = intensity2.per_year() * horizon;
                Ok(BivariateMoments {
                    mean1: n1 * m1.mean,
                    mean2: n2 * m2.mean,
                    var1: n1 * m1.second_raw(),
                    var2: n2 * m2.second_raw(),
                    cov: 0.0,
                })
            }
            RegionLossModel::Proportional {
                only1,
                common,
                only2,
                severity_only1,
                severity_only2,
                severity_common,
                share,
            } => {
                let mx = severity_only1.moments()?;
                let my = severity_only2.moments()?;
                let mz = severity_common.moments()?;
                let n1 = only1.per_year() * horizon;
                let n2 = common.per_year() * horizon;
                let n3 = only2.per_year() * horizon;
                let p = *share;
                Ok(BivariateMoments {
                    mean1: n1 * mx.mean + p * n2 * mz.mean,
                    mean2: n3 * my.mean + (1.0 - p) * n2 * mz.mean,
                    var1: n1 * mx.second_raw() + p * p * n2 * mz.second_raw(),
                    var2: n3 * my.second_raw() + (1.0 - p) * (1.0 - p) * n2 * mz.second_raw(),
                    cov: p * (1.0 - p) * n2 * mz.second_raw(),
                })
            }
            RegionLossModel::Dependent {
                only1,
                common,
                only2,
                severity_only1,
                severity_only2,
                severity_common1,
                severity_common2,
                dependence,
            } => {
                let mx1 = severity_only1.moments()?;
                let my1 = severity_only2.moments()?;
                let mx2 = severity_common1.moments()?;
                let my2 = severity_common2.moments()?;
                let n1 = only1.per_year() * horizon;
                let nc = common.per_year() * horizon;
                let n3 = only2.per_year() * horizon;
                let product = copula_product_moment(severity_common1, severity_common2, *dependence)?;
                let sev_cov = product - mx2.mean * my2.mean;
                let cov = match form {
                    DependentCovariance::CompoundSum => nc * product,
                    DependentCovariance::SecondMomentWeighted => {
                        (nc + nc * nc) * sev_cov + nc * mx2.mean * my2.mean
                    }
                };
                Ok(BivariateMoments {
                    mean1: n1 * mx1.mean + nc * mx2.mean,
                    mean2: n3 * my1.mean + nc * my2.mean,
                    var1: n1 * mx1.second_raw() + nc * mx2.second_raw(),
                    var2: n3 * my1.second_raw() + nc * my2.second_raw(),
                    cov,
                })
            }
        }
    }
}
