//! Loss-data loading and preparation: CPI adjustment, truncation filtering,
//! classification of events into region-only/common, and dependence
//! summaries (mean share, Spearman rank correlation, class intensities).
//!
//! Input CSV contract: header
//! `event_id,date,region,loss_usd_billions,cpi_factor`, UTF-8,
//! comma-separated, ISO-8601 dates. Losses are nominal billions of USD; the
//! CPI factor is the multiplier taking them to adjusted dollars. The
//! truncation filter applies to the adjusted value.

use crate::stochastic::{estimate_intensity, spearman, PoissonIntensity, StochasticError};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },
    #[error("no records above the truncation threshold for regions {0} / {1}")]
    EmptyDataset(String, String),
    #[error("event {event_id} has more than one record for region {region}")]
    DuplicateRegionRecord { event_id: String, region: String },
    #[error("need at least {needed} usable common events, found {found}")]
    InsufficientCommonEvents { needed: usize, found: usize },
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One catastrophe-event loss in one region. After [`load_and_adjust`] the
/// `loss` field is CPI-adjusted (billions USD); `cpi_factor` is retained as
/// provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub event_id: String,
    pub date: NaiveDate,
    pub region: String,
    pub loss: f64,
    pub cpi_factor: f64,
}

/// Adjusted losses split by event class. Common pairs carry
/// (region-1 loss, region-2 loss) for events observed in both regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedLosses {
    pub only_region1: Vec<f64>,
    pub only_region2: Vec<f64>,
    pub common_pairs: Vec<(f64, f64)>,
    pub window_years: f64,
}

impl ClassifiedLosses {
    /// Total adjusted losses per class for the "all in region" fits.
    pub fn all_region1(&self) -> Vec<f64> {
        let mut v = self.only_region1.clone();
        v.extend(self.common_pairs.iter().map(|&(x, _)| x));
        v
    }

    pub fn all_region2(&self) -> Vec<f64> {
        let mut v = self.only_region2.clone();
        v.extend(self.common_pairs.iter().map(|&(_, y)| y));
        v
    }

    /// Combined two-region totals of common events.
    pub fn common_totals(&self) -> Vec<f64> {
        self.common_pairs.iter().map(|&(x, y)| x + y).collect()
    }
}

/// Per-class homogeneous Poisson intensities (events per year).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityEstimates {
    pub all_region1: PoissonIntensity,
    pub all_region2: PoissonIntensity,
    pub only_region1: PoissonIntensity,
    pub only_region2: PoissonIntensity,
    pub common: PoissonIntensity,
}

/// Dependence summary of the common-event pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceSummary {
    /// Average of region-1 share x/(x+y) over common pairs.
    pub mean_share_p: f64,
    /// Spearman rank correlation of the pairs (average-rank ties).
    pub spearman_rho: f64,
    pub intensities: IntensityEstimates,
}

const EXPECTED_HEADER: [&str; 5] = ["event_id", "date", "region", "loss_usd_billions", "cpi_factor"];

/// Load records for the two regions of interest, multiply each loss by its
/// CPI factor and drop adjusted losses below `truncation`.
pub fn load_and_adjust(
    path: &Path,
    region1: &str,
    region2: &str,
    truncation: f64,
) -> Result<Vec<LossRecord>, IngestError> {
    let file = std::fs::File::open(path)?;
    load_and_adjust_reader(file, region1, region2, truncation)
}

/// As [`load_and_adjust`], from any reader.
pub fn load_and_adjust_reader<R: Read>(
    reader: R,
    region1: &str,
    region2: &str,
    truncation: f64,
) -> Result<Vec<LossRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers()?;
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != EXPECTED_HEADER {
            return Err(IngestError::MalformedRow {
                line: 1,
                msg: format!(
                    "header must be '{}', got '{}'",
                    EXPECTED_HEADER.join(","),
                    got.join(",")
                ),
            });
        }
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize, name: &str| -> Result<&str, IngestError> {
            record.get(idx).map(str::trim).ok_or(IngestError::MalformedRow {
                line,
                msg: format!("missing column '{name}'"),
            })
        };
        let event_id = field(0, "event_id")?.to_string();
        if event_id.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                msg: "empty event_id".to_string(),
            });
        }
        let date_raw = field(1, "date")?;
        let date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d").map_err(|e| {
            IngestError::MalformedRow {
                line,
                msg: format!("date '{date_raw}' is not ISO-8601 (YYYY-MM-DD): {e}"),
            }
        })?;
        let region = field(2, "region")?.to_string();
        let loss_raw = field(3, "loss_usd_billions")?;
        let loss: f64 = loss_raw.parse().map_err(|_| IngestError::MalformedRow {
            line,
            msg: format!("loss '{loss_raw}' is not a number"),
        })?;
        let cpi_raw = field(4, "cpi_factor")?;
        let cpi_factor: f64 = cpi_raw.parse().map_err(|_| IngestError::MalformedRow {
            line,
            msg: format!("cpi_factor '{cpi_raw}' is not a number"),
        })?;
        if !(loss > 0.0 && loss.is_finite()) {
            return Err(IngestError::MalformedRow {
                line,
                msg: format!("loss must be positive and finite, got {loss}"),
            });
        }
        if !(cpi_factor > 0.0 && cpi_factor.is_finite()) {
            return Err(IngestError::MalformedRow {
                line,
                msg: format!("cpi_factor must be positive and finite, got {cpi_factor}"),
            });
        }
        if region != region1 && region != region2 {
            continue;
        }
        let adjusted = loss * cpi_factor;
        if adjusted < truncation {
            continue;
        }
        out.push(LossRecord {
            event_id,
            date,
            region,
            loss: adjusted,
            cpi_factor,
        });
    }
    if out.is_empty() {
        return Err(IngestError::EmptyDataset(
            region1.to_string(),
            region2.to_string(),
        ));
    }
    Ok(out)
}

/// Group records by event id: ids present in both regions contribute one
/// common pair, others land in the matching only-list.
pub fn classify_events(
    records: &[LossRecord],
    region1: &str,
    region2: &str,
    window_years: f64,
) -> Result<ClassifiedLosses, IngestError> {
    if !(window_years > 0.0 && window_years.is_finite()) {
        return Err(StochasticError::ZeroWindow(window_years).into());
    }
    let mut by_event: BTreeMap<&str, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for rec in records {
        let slot = by_event.entry(rec.event_id.as_str()).or_default();
        let side = if rec.region == region1 {
            &mut slot.0
        } else if rec.region == region2 {
            &mut slot.1
        } else {
            continue;
        };
        if side.is_some() {
            return Err(IngestError::DuplicateRegionRecord {
                event_id: rec.event_id.clone(),
                region: rec.region.clone(),
            });
        }
        *side = Some(rec.loss);
    }
    let mut classified = ClassifiedLosses {
        only_region1: Vec::new(),
        only_region2: Vec::new(),
        common_pairs: Vec::new(),
        window_years,
    };
    for (_, entry) in by_event {
        match entry {
            (Some(x), Some(y)) => classified.common_pairs.push((x, y)),
            (Some(x), None) => classified.only_region1.push(x),
            (None, Some(y)) => classified.only_region2.push(y),
            (None, None) => {}
        }
    }
    Ok(classified)
}

/// Minimum number of common pairs needed for a rank correlation.
const MIN_COMMON_FOR_RHO: usize = 5;

/// Mean region-1 share, Spearman correlation, and the five class
/// intensities. Needs at least five common pairs and non-degenerate ranks.
pub fn summarize_dependence(classified: &ClassifiedLosses) -> Result<DependenceSummary, IngestError> {
    let pairs = &classified.common_pairs;
    if pairs.len() < MIN_COMMON_FOR_RHO {
        return Err(IngestError::InsufficientCommonEvents {
            needed: MIN_COMMON_FOR_RHO,
            found: pairs.len(),
        });
    }
    let mean_share_p =
        pairs.iter().map(|&(x, y)| x / (x + y)).sum::<f64>() / pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, y)| y).collect();
    let spearman_rho = spearman(&xs, &ys).ok_or(IngestError::InsufficientCommonEvents {
        needed: MIN_COMMON_FOR_RHO,
        found: pairs.len(),
    })?;
    let w = classified.window_years;
    let n1 = classified.only_region1.len() as u64;
    let n2 = classified.only_region2.len() as u64;
    let nc = pairs.len() as u64;
    Ok(DependenceSummary {
        mean_share_p,
        spearman_rho,
        intensities: IntensityEstimates {
            all_region1: estimate_intensity(n1 + nc, w)?,
            all_region2: estimate_intensity(n2 + nc, w)?,
            only_region1: estimate_intensity(n1, w)?,
            only_region2: estimate_intensity(n2, w)?,
            common: estimate_intensity(nc, w)?,
        },
    })
}
