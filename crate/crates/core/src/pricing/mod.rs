//! Zero-coupon CAT bond valuation.
//!
//! Monte Carlo pricing under the physical measure, the bivariate-normal
//! price approximation, threshold surfaces evaluated under common random
//! numbers, and Wang risk-loading sweeps.

mod bvn;

pub use bvn::bvn_cdf;

use crate::distributions::{
    DistortedSeverity, DistributionError, LossDistribution, TruncatedSeverity, WangDistortion,
};
use crate::models::{BivariateMoments, RegionLossModel};
use crate::rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PricingError {
    #[error("aggregate-loss variance of region {region} is not positive; normal approximation undefined")]
    DegenerateVariance { region: u8 },
    #[error("threshold grids must be nonempty and strictly ascending")]
    InvalidGrid,
    #[error("wang sweep requires non-positive lambda, got {0}")]
    PositiveLambda(f64),
    #[error("need at least {min} simulations, got {got}")]
    TooFewSims { min: usize, got: usize },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Terms of a zero-coupon CAT bond: face value 1 at maturity `T`, recovery
/// `c` on trigger, and per-region aggregate-loss thresholds `D1`, `D2`
/// (billions USD). The bond triggers when either region breaches its
/// threshold by maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondSpec {
    /// Maturity in years.
    pub maturity: f64,
    /// Continuously compounded interest rate.
    pub rate: f64,
    /// Recovery rate in [0, 1] paid on trigger.
    pub recovery: f64,
    /// Region-1 aggregate-loss threshold.
    pub threshold1: f64,
    /// Region-2 aggregate-loss threshold.
    pub threshold2: f64,
}

impl BondSpec {
    pub fn new(
        maturity: f64,
        rate: f64,
        recovery: f64,
        threshold1: f64,
        threshold2: f64,
    ) -> Result<Self, PricingError> {
        let spec = Self {
            maturity,
            rate,
            recovery,
            threshold1,
            threshold2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        let ok = self.maturity > 0.0
            && self.maturity.is_finite()
            && self.rate.is_finite()
            && (0.0..=1.0).contains(&self.recovery)
            && self.threshold1 > 0.0
            && self.threshold2 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(PricingError::InvalidGrid)
        }
    }

    /// Discount factor e^{-rT}.
    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    pub fn with_thresholds(&self, d1: f64, d2: f64) -> Self {
        Self {
            threshold1: d1,
            threshold2: d2,
            ..*self
        }
    }
}

/// A bond price with its Monte Carlo uncertainty; `std_error = 0` for
/// analytic methods and degenerate trigger probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_sims: usize,
    pub trigger_probability: f64,
}

/// Minimum simulation count accepted by the Monte Carlo pricers.
pub const MIN_SIMS: usize = 100;

/// Fixed simulation chunk used to derive parallel substreams; the chunk
/// layout depends only on `n_sims`, so results are identical for any thread
/// count.
const CHUNK: usize = 4096;

/// Draw `n` paths of `(S1(horizon), S2(horizon))` from an explicit stream.
pub fn simulate_paths<S, R>(
    model: &RegionLossModel<S>,
    horizon: f64,
    n: usize,
    rng: &mut R,
) -> Vec<(f64, f64)>
where
    S: LossDistribution,
    R: Rng + ?Sized,
{
    let sim = model.simulator(horizon);
    (0..n).map(|_| sim.draw(rng)).collect()
}

/// Parallel variant: substream `i` of `seed` drives chunk `i`. The path set
/// is a pure function of `(model, horizon, n, seed)`.
pub fn simulate_paths_seeded<S>(
    model: &RegionLossModel<S>,
    horizon: f64,
    n: usize,
    seed: u64,
) -> Vec<(f64, f64)>
where
    S: LossDistribution + Sync,
{
    let sim = model.simulator(horizon);
    let chunks = n.div_ceil(CHUNK);
    let mut paths = vec![(0.0, 0.0); n];
    paths
        .par_chunks_mut(CHUNK)
        .enumerate()
        .take(chunks)
        .for_each(|(idx, slot)| {
            let mut stream = rng::substream(seed, idx as u64);
            for cell in slot.iter_mut() {
                *cell = sim.draw(&mut stream);
            }
        });
    paths
}

/// Price the bond on an existing path set: survival counting is exact
/// integer arithmetic, so evaluating many cells on one set is
/// order-independent and monotone.
pub fn price_from_paths(paths: &[(f64, f64)], bond: &BondSpec) -> PriceEstimate {
    let n = paths.len();
    let survived = paths
        .iter()
        .filter(|(s1, s2)| *s1 < bond.threshold1 && *s2 < bond.threshold2)
        .count();
    let q = survived as f64 / n as f64;
    let disc = bond.discount();
    let scale = (1.0 - bond.recovery) * disc;
    PriceEstimate {
        price: disc * (bond.recovery + (1.0 - bond.recovery) * q),
        std_error: scale * (q * (1.0 - q) / n as f64).sqrt(),
        n_sims: n,
        trigger_probability: 1.0 - q,
    }
}

/// Monte Carlo price under the physical measure:
/// `e^{-rT}·[c + (1-c)·P(S1(T) < D1 ∧ S2(T) < D2)]`.
pub fn mc_price<S, R>(
    model: &RegionLossModel<S>,
    bond: &BondSpec,
    n_sims: usize,
    rng: &mut R,
) -> Result<PriceEstimate, PricingError>
where
    S: LossDistribution,
    R: Rng + ?Sized,
{
    if n_sims < MIN_SIMS {
        return Err(PricingError::TooFewSims {
            min: MIN_SIMS,
            got: n_sims,
        });
    }
    bond.validate()?;
    let paths = simulate_paths(model, bond.maturity, n_sims, rng);
    Ok(price_from_paths(&paths, bond))
}

/// Seeded, parallel Monte Carlo price (chunked substreams, reproducible for
/// any thread count).
pub fn mc_price_seeded<S>(
    model: &RegionLossModel<S>,
    bond: &BondSpec,
    n_sims: usize,
    seed: u64,
) -> Result<PriceEstimate, PricingError>
where
    S: LossDistribution + Sync,
{
    if n_sims < MIN_SIMS {
        return Err(PricingError::TooFewSims {
            min: MIN_SIMS,
            got: n_sims,
        });
    }
    bond.validate()?;
    let paths = simulate_paths_seeded(model, bond.maturity, n_sims, seed);
    Ok(price_from_paths(&paths, bond))
}

/// Bivariate-normal price approximation: replace `(S1(T), S2(T))` with a
/// normal pair sharing their exact moments and evaluate the survival
/// probability with [`bvn_cdf`].
pub fn normal_approx_price(
    moments: &BivariateMoments,
    bond: &BondSpec,
) -> Result<PriceEstimate, PricingError> {
    bond.validate()?;
    if !(moments.var1 > 0.0) {
        return Err(PricingError::DegenerateVariance { region: 1 });
    }
    if !(moments.var2 > 0.0) {
        return Err(PricingError::DegenerateVariance { region: 2 });
    }
    let repaired = moments.psd_repaired();
    let h = (bond.threshold1 - repaired.mean1) / repaired.var1.sqrt();
    let k = (bond.threshold2 - repaired.mean2) / repaired.var2.sqrt();
    let q = bvn_cdf(h, k, repaired.correlation());
    let disc = bond.discount();
    Ok(PriceEstimate {
        price: disc * (bond.recovery + (1.0 - bond.recovery) * q),
        std_error: 0.0,
        n_sims: 0,
        trigger_probability: 1.0 - q,
    })
}

/// Pricing method for threshold surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SurfaceMethod {
    /// Monte Carlo with one shared path set for every cell (common random
    /// numbers), which makes the price monotone in both thresholds exactly.
    MonteCarlo { n_sims: usize, seed: u64 },
    /// Bivariate-normal approximation; moments are computed once.
    NormalApprox,
}

/// Prices on the grid `grid1 × grid2` of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSurface {
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    /// `cells[i][j]` prices thresholds `(grid1[i], grid2[j])`.
    pub cells: Vec<Vec<PriceEstimate>>,
}

impl PriceSurface {
    pub fn cell(&self, i: usize, j: usize) -> &PriceEstimate {
        &self.cells[i][j]
    }
}

fn ascending(grid: &[f64]) -> bool {
    !grid.is_empty() && grid.windows(2).all(|w| w[0] < w[1]) && grid.iter().all(|d| *d > 0.0)
}

/// Evaluate a threshold surface for `model` with the bond's maturity, rate
/// and recovery taken from `bond_template` (its thresholds are ignored).
pub fn price_surface<S>(
    model: &RegionLossModel<S>,
    bond_template: &BondSpec,
    grid1: &[f64],
    grid2: &[f64],
    method: SurfaceMethod,
) -> Result<PriceSurface, PricingError>
where
    S: LossDistribution + Sync,
{
    if !ascending(grid1) || !ascending(grid2) {
        return Err(PricingError::InvalidGrid);
    }
    let cells = match method {
        SurfaceMethod::MonteCarlo { n_sims, seed } => {
            if n_sims < MIN_SIMS {
                return Err(PricingError::TooFewSims {
                    min: MIN_SIMS,
                    got: n_sims,
                });
            }
            let paths = simulate_paths_seeded(model, bond_template.maturity, n_sims, seed);
            grid1
                .iter()
                .map(|&d1| {
                    grid2
                        .iter()
                        .map(|&d2| price_from_paths(&paths, &bond_template.with_thresholds(d1, d2)))
                        .collect()
                })
                .collect()
        }
        SurfaceMethod::NormalApprox => {
            let moments = model.analytic_moments(bond_template.maturity)?;
            let mut rows = Vec::with_capacity(grid1.len());
            for &d1 in grid1 {
                let mut row = Vec::with_capacity(grid2.len());
                for &d2 in grid2 {
                    row.push(normal_approx_price(
                        &moments,
                        &bond_template.with_thresholds(d1, d2),
                    )?);
                }
                rows.push(row);
            }
            rows
        }
    };
    Ok(PriceSurface {
        grid1: grid1.to_vec(),
        grid2: grid2.to_vec(),
        cells,
    })
}

/// Wang risk-loading sweep: for each `λ ≤ 0` every severity in the model is
/// replaced by its distorted counterpart and the bond re-priced on the same
/// seed, so the price is exactly nonincreasing in |λ|.
pub fn wang_price_curve(
    model: &RegionLossModel<TruncatedSeverity>,
    bond: &BondSpec,
    lambdas: &[f64],
    n_sims: usize,
    seed: u64,
) -> Result<Vec<(f64, PriceEstimate)>, PricingError> {
    for &lambda in lambdas {
        if !(lambda <= 0.0) {
            return Err(PricingError::PositiveLambda(lambda));
        }
    }
    let mut curve = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let distortion = WangDistortion::new(lambda)?;
        let distorted: RegionLossModel<DistortedSeverity> =
            model.map_severities(|s| s.apply_wang(distortion));
        curve.push((lambda, mc_price_seeded(&distorted, bond, n_sims, seed)?));
    }
    Ok(curve)
}
