//! Goodness-of-fit statistics for left-truncated severity fits, with
//! parametric-bootstrap p-values.
//!
//! Conventions: KS and Kuiper are reported unscaled (no √n factor); the
//! Anderson–Darling and Cramér–von Mises statistics use their standard
//! quadratic forms. Composite-hypothesis p-values come from a parametric
//! bootstrap that refits inside every replication.

use crate::distributions::{
    fit_truncated_mle, DistributionError, FamilyKind, LossDistribution, SeverityFamily,
    TruncatedSeverity,
};
use crate::rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The four test statistics against a hypothesized truncated cdf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofStatistics {
    pub ks: f64,
    pub kuiper: f64,
    pub anderson_darling: f64,
    pub cramer_von_mises: f64,
}

/// Bootstrap p-values, one per statistic in [`GofStatistics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofPValues {
    pub ks: f64,
    pub kuiper: f64,
    pub anderson_darling: f64,
    pub cramer_von_mises: f64,
}

/// Fit-quality report for one sample class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    /// Family fitted to the observed sample by truncated MLE.
    pub fitted: SeverityFamily,
    pub truncation: f64,
    pub statistics: GofStatistics,
    pub p_values: GofPValues,
    pub bootstrap_reps: usize,
    /// Bootstrap replications whose refit failed to converge (excluded).
    pub failed_refits: usize,
}

/// Statistics of `sample` against an arbitrary cdf.
///
/// Probability-integral-transform values at exactly 0 or 1 are nudged into
/// the open interval so the Anderson–Darling logs stay finite; a sample
/// point sitting exactly on the truncation boundary otherwise forces the
/// statistic to +∞.
pub fn gof_statistics_cdf<F: Fn(f64) -> f64>(
    sample: &[f64],
    cdf: F,
) -> Result<GofStatistics, DistributionError> {
    if sample.is_empty() {
        return Err(DistributionError::InvalidSample(
            "empty sample".to_string(),
        ));
    }
    let mut z: Vec<f64> = sample.iter().map(|&x| cdf(x)).collect();
    if z.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
        return Err(DistributionError::InvalidSample(
            "cdf produced values outside [0, 1]".to_string(),
        ));
    }
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = z.len();
    let nf = n as f64;

    let mut d_plus: f64 = 0.0;
    let mut d_minus: f64 = 0.0;
    let mut cvm = 1.0 / (12.0 * nf);
    let mut ad = -nf;
    for (i, &zi) in z.iter().enumerate() {
        let fi = (i + 1) as f64 / nf;
        d_plus = d_plus.max(fi - zi);
        d_minus = d_minus.max(zi - i as f64 / nf);
        let mid = (2.0 * (i + 1) as f64 - 1.0) / (2.0 * nf);
        cvm += (zi - mid) * (zi - mid);
        let zi_c = zi.clamp(1e-300, 1.0 - 1e-16);
        let zrev_c = z[n - 1 - i].clamp(1e-300, 1.0 - 1e-16);
        ad -= (2.0 * (i + 1) as f64 - 1.0) / nf * (zi_c.ln() + (1.0 - zrev_c).ln());
    }
    Ok(GofStatistics {
        ks: d_plus.max(d_minus),
        kuiper: d_plus + d_minus,
        anderson_darling: ad,
        cramer_von_mises: cvm,
    })
}

/// Statistics of `sample` against a truncated severity. All values must lie
/// at or above the truncation point.
pub fn gof_statistics<D: LossDistribution>(
    sample: &[f64],
    dist: &D,
) -> Result<GofStatistics, DistributionError> {
    let lo = dist.lower_bound();
    if sample.iter().any(|&x| x < lo || !x.is_finite()) {
        return Err(DistributionError::InvalidSample(format!(
            "sample values must be ≥ the truncation point {lo}"
        )));
    }
    gof_statistics_cdf(sample, |x| dist.cdf(x))
}

/// Fraction of bootstrap refits allowed to fail before the procedure itself
/// reports non-convergence.
const MAX_FAILED_REFIT_SHARE: f64 = 0.02;

/// Parametric-bootstrap goodness of fit: fit `kind`, then repeatedly
/// simulate same-size samples from the fitted distribution, refit each, and
/// compare statistics. `p = (1 + #{boot ≥ observed}) / (reps + 1)`.
///
/// Replications run in parallel over substreams derived from the provided
/// stream, so results are reproducible for any thread count.
pub fn bootstrap_pvalues<R: Rng + ?Sized>(
    sample: &[f64],
    kind: FamilyKind,
    truncation: f64,
    reps: usize,
    rng: &mut R,
) -> Result<GofReport, DistributionError> {
    if reps < 100 {
        return Err(DistributionError::InvalidParameter(format!(
            "bootstrap needs at least 100 replications, got {reps}"
        )));
    }
    let fitted = fit_truncated_mle(sample, kind, truncation)?;
    let dist = TruncatedSeverity::new(fitted, truncation)?;
    let observed = gof_statistics(sample, &dist)?;

    let master: u64 = rng.random();
    let n = sample.len();
    let boot: Vec<Option<GofStatistics>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng::substream(master, i as u64);
            let resample: Vec<f64> = (0..n).map(|_| dist.sample(&mut stream)).collect();
            let refit = fit_truncated_mle(&resample, kind, truncation).ok()?;
            let refit_dist = TruncatedSeverity::new(refit, truncation).ok()?;
            gof_statistics(&resample, &refit_dist).ok()
        })
        .collect();

    let failed = boot.iter().filter(|b| b.is_none()).count();
    if (failed as f64) > MAX_FAILED_REFIT_SHARE * reps as f64 {
        return Err(DistributionError::NonConvergence(failed));
    }
    let kept: Vec<GofStatistics> = boot.into_iter().flatten().collect();
    let p = |get: fn(&GofStatistics) -> f64| -> f64 {
        let exceed = kept.iter().filter(|b| get(b) >= get(&observed)).count();
        (1 + exceed) as f64 / (kept.len() + 1) as f64
    };
    Ok(GofReport {
        fitted,
        truncation,
        statistics: observed,
        p_values: GofPValues {
            ks: p(|s| s.ks),
            kuiper: p(|s| s.kuiper),
            anderson_darling: p(|s| s.anderson_darling),
            cramer_von_mises: p(|s| s.cramer_von_mises),
        },
        bootstrap_reps: kept.len(),
        failed_refits: failed,
    })
}
