//! Bundled reference parameterizations for two US state pairs
//! (Oklahoma/Texas and Illinois/Kentucky), estimated from industry
//! wind/thunderstorm and winter-storm loss data reported above 25 million
//! USD. They drive the synthetic fixture generator, the acceptance suite,
//! and the benchmark workloads.
//!
//! All amounts are billions of USD; the reporting threshold 25M USD is
//! therefore 0.025.

use crate::distributions::{SeverityFamily, TruncatedSeverity};
use crate::models::RegionLossModel;
use crate::stochastic::{DependenceSpec, PoissonIntensity};

/// Reporting threshold of the underlying loss data: 25M USD in billions.
pub const TRUNCATION: f64 = 0.025;

/// Full parameterization of one two-region case study: the five class
/// intensities, the seven fitted severity classes, and the dependence
/// summary of common events.
#[derive(Debug, Clone, Copy)]
pub struct CaseStudy {
    pub region1: &'static str,
    pub region2: &'static str,
    /// Observation window consistent with the event counts below.
    pub window_years: f64,
    pub lambda_all1: f64,
    pub lambda_all2: f64,
    pub lambda_only1: f64,
    pub lambda_only2: f64,
    pub lambda_common: f64,
    pub severity_all1: SeverityFamily,
    pub severity_all2: SeverityFamily,
    pub severity_only1: SeverityFamily,
    pub severity_only2: SeverityFamily,
    pub severity_common_total: SeverityFamily,
    pub severity_common1: SeverityFamily,
    pub severity_common2: SeverityFamily,
    /// Mean region-1 share of common losses (Model 2's split).
    pub share_p: f64,
    /// Spearman correlation of common-event losses (Model 3's target).
    pub spearman_rho: f64,
}

/// Oklahoma / Texas.
pub fn ok_tx() -> CaseStudy {
    CaseStudy {
        region1: "OK",
        region2: "TX",
        window_years: 29.41,
        lambda_all1: 2.89,
        lambda_all2: 6.04,
        lambda_only1: 1.53,
        lambda_only2: 4.76,
        lambda_common: 1.40,
        severity_all1: SeverityFamily::LogNormal {
            mu: -4.783,
            sigma: 1.841,
        },
        severity_all2: SeverityFamily::LogNormal {
            mu: -2.702,
            sigma: 1.246,
        },
        severity_only1: SeverityFamily::LogNormal {
            mu: -5.012,
            sigma: 1.864,
        },
        severity_only2: SeverityFamily::LogNormal {
            mu: -2.807,
            sigma: 1.266,
        },
        severity_common_total: SeverityFamily::LogNormal {
            mu: -1.477,
            sigma: 0.902,
        },
        severity_common1: SeverityFamily::LogNormal {
            mu: -4.564,
            sigma: 1.812,
        },
        severity_common2: SeverityFamily::InverseGaussian {
            mu: 0.181,
            lambda: 0.098,
        },
        share_p: 0.41,
        spearman_rho: 0.31,
    }
}

/// Illinois / Kentucky.
pub fn il_ky() -> CaseStudy {
    CaseStudy {
        region1: "IL",
        region2: "KY",
        window_years: 30.92,
        lambda_all1: 3.59,
        lambda_all2: 1.46,
        lambda_only1: 2.72,
        lambda_only2: 0.59,
        lambda_common: 0.89,
        severity_all1: SeverityFamily::LogNormal {
            mu: -4.554,
            sigma: 1.386,
        },
        severity_all2: SeverityFamily::LogNormal {
            mu: -4.869,
            sigma: 1.736,
        },
        severity_only1: SeverityFamily::LogNormal {
            mu: -5.288,
            sigma: 1.569,
        },
        severity_only2: SeverityFamily::LogNormal {
            mu: -4.709,
            sigma: 1.749,
        },
        severity_common_total: SeverityFamily::LogNormal {
            mu: -1.942,
            sigma: 0.718,
        },
        severity_common1: SeverityFamily::Pareto {
            shape: 0.314,
            scale: 0.032,
        },
        severity_common2: SeverityFamily::LogNormal {
            mu: -4.918,
            sigma: 1.713,
        },
        share_p: 0.49,
        spearman_rho: 0.22,
    }
}

impl CaseStudy {
    fn sev(&self, family: SeverityFamily) -> TruncatedSeverity {
        TruncatedSeverity::new(family, TRUNCATION).expect("preset severities are valid")
    }

    fn intensity(v: f64) -> PoissonIntensity {
        PoissonIntensity::new(v).expect("preset intensities are valid")
    }

    /// Model 1: fully independent aggregate loss processes.
    pub fn independent_model(&self) -> RegionLossModel {
        RegionLossModel::Independent {
            intensity1: Self::intensity(self.lambda_all1),
            intensity2: Self::intensity(self.lambda_all2),
            severity1: self.sev(self.severity_all1),
            severity2: self.sev(self.severity_all2),
        }
    }

    /// Model 2: common losses split deterministically, `share_p` to region 1.
    pub fn proportional_model(&self) -> RegionLossModel {
        RegionLossModel::Proportional {
            only1: Self::intensity(self.lambda_only1),
            common: Self::intensity(self.lambda_common),
            only2: Self::intensity(self.lambda_only2),
            severity_only1: self.sev(self.severity_only1),
            severity_only2: self.sev(self.severity_only2),
            severity_common: self.sev(self.severity_common_total),
            share: self.share_p,
        }
    }

    /// Model 3: common losses drawn as a correlated pair via the Gaussian
    /// copula targeting `spearman_rho`.
    pub fn dependent_model(&self) -> RegionLossModel {
        RegionLossModel::Dependent {
            only1: Self::intensity(self.lambda_only1),
            common: Self::intensity(self.lambda_common),
            only2: Self::intensity(self.lambda_only2),
            severity_only1: self.sev(self.severity_only1),
            severity_only2: self.sev(self.severity_only2),
            severity_common1: self.sev(self.severity_common1),
            severity_common2: self.sev(self.severity_common2),
            dependence: DependenceSpec::new(self.spearman_rho).expect("preset rho is valid"),
        }
    }

    /// All three models in order (independent, proportional, dependent).
    pub fn models(&self) -> [RegionLossModel; 3] {
        [
            self.independent_model(),
            self.proportional_model(),
            self.dependent_model(),
        ]
    }
}
