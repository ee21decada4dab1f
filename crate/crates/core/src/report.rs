//! Fit-report document: the JSON artifact produced by the fit pipeline and
//! consumed by the pricing commands. It carries everything needed to
//! instantiate all three loss models.

use crate::distributions::{SeverityFamily, TruncatedSeverity};
use crate::gof::GofReport;
use crate::ingestion::{DependenceSummary, IntensityEstimates};
use crate::models::RegionLossModel;
use crate::stochastic::DependenceSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema tag of the fit-report JSON document.
pub const FIT_REPORT_SCHEMA: &str = "catbond/fit-report/v1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("fit report has schema '{0}', expected '{FIT_REPORT_SCHEMA}'")]
    SchemaMismatch(String),
    #[error("fit report lacks the '{0}' class required by this model")]
    MissingClass(&'static str),
    #[error(transparent)]
    Distribution(#[from] crate::distributions::DistributionError),
    #[error(transparent)]
    Stochastic(#[from] crate::stochastic::StochasticError),
}

/// Candidate family tried for one class, with its KS distance (the selection
/// criterion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFit {
    pub family: SeverityFamily,
    pub ks: f64,
}

/// Selected fit for one sample class with its bootstrap validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFit {
    pub sample_size: usize,
    pub selected: SeverityFamily,
    pub gof: GofReport,
    pub candidates: Vec<CandidateFit>,
}

/// The seven sample classes of the fitting pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFits {
    pub all_region1: ClassFit,
    pub all_region2: ClassFit,
    pub only_region1: ClassFit,
    pub only_region2: ClassFit,
    pub common_total: Option<ClassFit>,
    pub common_region1: Option<ClassFit>,
    pub common_region2: Option<ClassFit>,
}

/// Provenance of one engine run: seed, build version, wall-clock timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStamp {
    pub seed: u64,
    pub version: String,
    pub timing_ms: f64,
}

/// Everything a pricing run needs, as emitted by the fit command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    pub region1: String,
    pub region2: String,
    pub window_years: f64,
    pub truncation: f64,
    pub classes: ClassFits,
    pub dependence: Option<DependenceSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunStamp>,
}

impl FitReport {
    pub fn check_schema(&self) -> Result<(), ReportError> {
        if self.schema != FIT_REPORT_SCHEMA {
            return Err(ReportError::SchemaMismatch(self.schema.clone()));
        }
        Ok(())
    }

    fn severity(&self, family: SeverityFamily) -> Result<TruncatedSeverity, ReportError> {
        Ok(TruncatedSeverity::new(family, self.truncation)?)
    }

    fn intensities(&self) -> Result<&IntensityEstimates, ReportError> {
        self.dependence
            .as_ref()
            .map(|d| &d.intensities)
            .ok_or(ReportError::MissingClass("dependence summary"))
    }

    /// Model 1 from the all-region classes.
    pub fn independent_model(&self) -> Result<RegionLossModel, ReportError> {
        let ints = self.intensities()?;
        Ok(RegionLossModel::Independent {
            intensity1: ints.all_region1,
            intensity2: ints.all_region2,
            severity1: self.severity(self.classes.all_region1.selected)?,
            severity2: self.severity(self.classes.all_region2.selected)?,
        })
    }

    /// Model 2 from the only-region classes plus the total-common class and
    /// the historical mean share.
    pub fn proportional_model(&self) -> Result<RegionLossModel, ReportError> {
        let ints = self.intensities()?;
        let dep = self
            .dependence
            .as_ref()
            .ok_or(ReportError::MissingClass("dependence summary"))?;
        let common_total = self
            .classes
            .common_total
            .as_ref()
            .ok_or(ReportError::MissingClass("common_total"))?;
        Ok(RegionLossModel::Proportional {
            only1: ints.only_region1,
            common: ints.common,
            only2: ints.only_region2,
            severity_only1: self.severity(self.classes.only_region1.selected)?,
            severity_only2: self.severity(self.classes.only_region2.selected)?,
            severity_common: self.severity(common_total.selected)?,
            share: dep.mean_share_p,
        })
    }

    /// Model 3 from the only-region classes plus the per-region common
    /// classes and the Spearman target.
    pub fn dependent_model(&self) -> Result<RegionLossModel, ReportError> {
        let ints = self.intensities()?;
        let dep = self
            .dependence
            .as_ref()
            .ok_or(ReportError::MissingClass("dependence summary"))?;
        let c1 = self
            .classes
            .common_region1
            .as_ref()
            .ok_or(ReportError::MissingClass("common_region1"))?;
        let c2 = self
            .classes
            .common_region2
            .as_ref()
            .ok_or(ReportError::MissingClass("common_region2"))?;
        Ok(RegionLossModel::Dependent {
            only1: ints.only_region1,
            common: ints.common,
            only2: ints.only_region2,
            severity_only1: self.severity(self.classes.only_region1.selected)?,
            severity_only2: self.severity(self.classes.only_region2.selected)?,
            severity_common1: self.severity(c1.selected)?,
            severity_common2: self.severity(c2.selected)?,
            dependence: DependenceSpec::new(dep.spearman_rho)?,
        })
    }
}
