//! Synthetic loss-data fixtures.
//!
//! The original industry dataset is proprietary, so the repository ships a
//! generator that samples event histories from the bundled case-study
//! parameterizations. Only-region events draw from the class severities;
//! common events draw correlated pairs from the Gaussian copula, so the mean
//! share and rank correlation of an ingested fixture recover the preset's
//! dependence summary.

use crate::distributions::{LossDistribution, TruncatedSeverity};
use crate::ingestion::LossRecord;
use crate::presets::{CaseStudy, TRUNCATION};
use crate::rng;
use crate::stochastic::{sample_correlated_pair, sample_poisson_count, DependenceSpec, PoissonIntensity};
use chrono::{Days, NaiveDate};
use rand::Rng;

/// Annual CPI-style inflation used to back out nominal losses from the
/// adjusted values the severities produce.
const FIXTURE_INFLATION: f64 = 0.025;

fn event_date(window_start: NaiveDate, window_years: f64, frac: f64) -> NaiveDate {
    let days = (frac * window_years * 365.25) as u64;
    window_start
        .checked_add_days(Days::new(days))
        .expect("fixture dates stay in range")
}

fn cpi_factor(window_years: f64, frac: f64) -> f64 {
    // older events carry larger multipliers to adjusted dollars
    (FIXTURE_INFLATION * window_years * (1.0 - frac)).exp()
}

/// Generate a loss history over `window_years` from the case-study
/// parameterization. Records are sorted by date; common events share one
/// event id with a row per region. The emitted `loss` column is nominal:
/// `adjusted / cpi_factor`.
pub fn generate_records(case: &CaseStudy, window_years: f64, seed: u64) -> Vec<LossRecord> {
    let mut stream = rng::stream(seed);
    let window_start = NaiveDate::from_ymd_opt(1990, 1, 1).expect("valid date");
    let sev = |family| TruncatedSeverity::new(family, TRUNCATION).expect("valid preset severity");
    let only1 = sev(case.severity_only1);
    let only2 = sev(case.severity_only2);
    let common1 = sev(case.severity_common1);
    let common2 = sev(case.severity_common2);
    let dependence = DependenceSpec::new(case.spearman_rho).expect("valid preset rho");
    let intensity = |v| PoissonIntensity::new(v).expect("valid preset intensity");

    struct Draft {
        frac: f64,
        region1: Option<f64>,
        region2: Option<f64>,
    }
    let mut drafts = Vec::new();

    let n_only1 = sample_poisson_count(intensity(case.lambda_only1), window_years, &mut stream);
    for _ in 0..n_only1 {
        drafts.push(Draft {
            frac: stream.random(),
            region1: Some(only1.sample(&mut stream)),
            region2: None,
        });
    }
    let n_only2 = sample_poisson_count(intensity(case.lambda_only2), window_years, &mut stream);
    for _ in 0..n_only2 {
        drafts.push(Draft {
            frac: stream.random(),
            region1: None,
            region2: Some(only2.sample(&mut stream)),
        });
    }
    let n_common = sample_poisson_count(intensity(case.lambda_common), window_years, &mut stream);
    for _ in 0..n_common {
        let (x, y) = sample_correlated_pair(&common1, &common2, dependence, &mut stream);
        drafts.push(Draft {
            frac: stream.random(),
            region1: Some(x),
            region2: Some(y),
        });
    }

    drafts.sort_by(|a, b| a.frac.partial_cmp(&b.frac).unwrap());
    let mut records = Vec::new();
    for (idx, draft) in drafts.iter().enumerate() {
        let event_id = format!("EV{idx:05}");
        let date = event_date(window_start, window_years, draft.frac);
        let cpi = cpi_factor(window_years, draft.frac);
        for (region, loss) in [
            (case.region1, draft.region1),
            (case.region2, draft.region2),
        ] {
            if let Some(adjusted) = loss {
                records.push(LossRecord {
                    event_id: event_id.clone(),
                    date,
                    region: region.to_string(),
                    loss: adjusted / cpi,
                    cpi_factor: cpi,
                });
            }
        }
    }
    records
}

/// Write records in the ingestion CSV contract.
pub fn write_csv<W: std::io::Write>(records: &[LossRecord], out: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["event_id", "date", "region", "loss_usd_billions", "cpi_factor"])?;
    for rec in records {
        wtr.write_record([
            rec.event_id.as_str(),
            &rec.date.format("%Y-%m-%d").to_string(),
            rec.region.as_str(),
            &format!("{}", rec.loss),
            &format!("{}", rec.cpi_factor),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{classify_events, load_and_adjust_reader, summarize_dependence};
    use crate::presets::ok_tx;

    #[test]
    fn fixture_roundtrips_through_ingestion_and_recovers_dependence() {
        let case = ok_tx();
        // a long window tightens the recovery of p and ρ
        let window = 3000.0;
        let records = generate_records(&case, window, 4242);
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let loaded =
            load_and_adjust_reader(buf.as_slice(), case.region1, case.region2, TRUNCATION)
                .unwrap();
        // nominal→adjusted roundtrip can drop boundary values, nothing more
        assert!(loaded.len() >= records.len() - 2);
        let classified = classify_events(&loaded, case.region1, case.region2, window).unwrap();
        let summary = summarize_dependence(&classified).unwrap();
        assert!(
            (summary.mean_share_p - case.share_p).abs() < 0.05,
            "share {} vs preset {}",
            summary.mean_share_p,
            case.share_p
        );
        assert!(
            (summary.spearman_rho - case.spearman_rho).abs() < 0.1,
            "rho {} vs preset {}",
            summary.spearman_rho,
            case.spearman_rho
        );
        assert!(
            (summary.intensities.common.per_year() - case.lambda_common).abs()
                < 4.0 * (case.lambda_common / window).sqrt()
        );
    }

    #[test]
    fn fixtures_are_deterministic_per_seed() {
        let case = ok_tx();
        let a = generate_records(&case, 29.41, 7);
        let b = generate_records(&case, 29.41, 7);
        assert_eq!(a, b);
        let c = generate_records(&case, 29.41, 8);
        assert_ne!(a, c);
    }
}
