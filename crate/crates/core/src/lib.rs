//! Two-region catastrophe-bond pricing engine.
//!
//! Aggregate natural-catastrophe losses in two regions are modelled as
//! compound Poisson processes under three dependence structures —
//! independent, proportionally split common losses, and copula-correlated
//! common losses. Zero-coupon CAT bonds on the pair are priced by Monte
//! Carlo and by a bivariate-normal approximation, Wang-transform risk
//! loading distorts the severities, and all model inputs are fitted from
//! left-truncated loss data with bootstrap-validated goodness of fit.
//!
//! Units: every monetary quantity is in billions of USD; intensities are in
//! events per year; time is in years.

pub mod distributions;
pub mod gof;
pub mod ingestion;
pub mod models;
pub mod presets;
pub mod pricing;
pub mod report;
pub mod rng;
pub mod special;
pub mod stochastic;
pub mod synth;

pub use distributions::{
    fit_truncated_mle, DistortedSeverity, DistributionError, FamilyKind, LossDistribution,
    Moments, SeverityFamily, TruncatedSeverity, WangDistortion,
};
pub use gof::{bootstrap_pvalues, gof_statistics, GofPValues, GofReport, GofStatistics};
pub use ingestion::{
    classify_events, load_and_adjust, summarize_dependence, ClassifiedLosses, DependenceSummary,
    IngestError, IntensityEstimates, LossRecord,
};
pub use models::{AggregateSimulator, BivariateMoments, DependentCovariance, RegionLossModel};
pub use pricing::{
    bvn_cdf, mc_price, mc_price_seeded, normal_approx_price, price_surface, wang_price_curve,
    BondSpec, PriceEstimate, PriceSurface, PricingError, SurfaceMethod,
};
pub use report::{FitReport, ReportError, FIT_REPORT_SCHEMA};
pub use stochastic::{
    estimate_intensity, sample_correlated_pair, sample_poisson_count, spearman, DependenceSpec,
    PoissonIntensity, StochasticError,
};
