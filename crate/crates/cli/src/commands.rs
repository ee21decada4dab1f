//! Subcommand implementations.

use crate::args::{
    FitRun, FixturePair, FixtureRun, Method, ModelChoice, PriceRun, SourceRun, SurfaceRun,
    WangRun, BUILD_VERSION,
};
use crate::CliError;
use catbond::distributions::{fit_truncated_mle, FamilyKind, TruncatedSeverity};
use catbond::gof::{bootstrap_pvalues, gof_statistics};
use catbond::ingestion::{classify_events, load_and_adjust, summarize_dependence, IngestError};
use catbond::models::RegionLossModel;
use catbond::pricing::{
    mc_price_seeded, normal_approx_price, price_surface, wang_price_curve, BondSpec,
    PriceEstimate, SurfaceMethod,
};
use catbond::report::{
    CandidateFit, ClassFit, ClassFits, FitReport, RunStamp, FIT_REPORT_SCHEMA,
};
use catbond::{presets, rng, synth};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// Run-report envelope written next to CSV outputs.
#[derive(Serialize)]
struct RunReport<'a> {
    schema: &'static str,
    command: &'a str,
    version: &'a str,
    seed: u64,
    method: &'a str,
    bond: &'a BondSpec,
    models: Vec<ModelEcho<'a>>,
    timing_ms: f64,
    output: &'a Path,
}

#[derive(Serialize)]
struct ModelEcho<'a> {
    name: &'a str,
    #[serde(flatten)]
    model: &'a RegionLossModel,
}

const RUN_REPORT_SCHEMA: &str = "catbond/run-report/v1";

// ── fit ───────────────────────────────────────────────────────────────────

fn fit_class(
    name: &str,
    sample: &[f64],
    families: &[FamilyKind],
    truncation: f64,
    bootstrap_reps: usize,
    seed: u64,
    class_index: u64,
) -> Result<ClassFit, CliError> {
    let mut candidates = Vec::new();
    for &kind in families {
        match fit_truncated_mle(sample, kind, truncation) {
            Ok(family) => {
                let dist = TruncatedSeverity::new(family, truncation)
                    .map_err(|e| CliError::numeric(format!("class {name}: {e}")))?;
                let stats = gof_statistics(sample, &dist)
                    .map_err(|e| CliError::data(format!("class {name}: {e}")))?;
                candidates.push(CandidateFit {
                    family,
                    ks: stats.ks,
                });
            }
            Err(e) => {
                log::warn!("class {name}: {} candidate dropped: {e}", kind.name());
            }
        }
    }
    let best = candidates
        .iter()
        .min_by(|a, b| a.ks.partial_cmp(&b.ks).unwrap())
        .cloned()
        .ok_or_else(|| {
            CliError::numeric(format!("class {name}: no candidate family converged"))
        })?;
    let mut stream = rng::substream(seed, class_index);
    let gof = bootstrap_pvalues(
        sample,
        best.family.kind(),
        truncation,
        bootstrap_reps,
        &mut stream,
    )
    .map_err(|e| CliError::numeric(format!("class {name}: bootstrap failed: {e}")))?;
    Ok(ClassFit {
        sample_size: sample.len(),
        selected: gof.fitted,
        gof,
        candidates,
    })
}

pub fn run_fit(run: FitRun) -> Result<(), CliError> {
    let started = Instant::now();
    if !(run.window_years > 0.0) {
        return Err(CliError::config(format!(
            "window-years must be positive, got {}",
            run.window_years
        )));
    }
    let records = load_and_adjust(&run.data, &run.region1, &run.region2, run.truncation)
        .map_err(CliError::from_ingest)?;
    let classified = classify_events(&records, &run.region1, &run.region2, run.window_years)
        .map_err(CliError::from_ingest)?;
    let dependence = match summarize_dependence(&classified) {
        Ok(dep) => Some(dep),
        Err(IngestError::InsufficientCommonEvents { needed, found }) => {
            log::warn!(
                "only {found} common events (need {needed}); dependence summary and \
                 models 2/3 are unavailable from this report"
            );
            None
        }
        Err(e) => return Err(CliError::from_ingest(e)),
    };

    let fit = |name: &str, sample: &[f64], idx: u64| -> Result<ClassFit, CliError> {
        fit_class(
            name,
            sample,
            &run.families,
            run.truncation,
            run.bootstrap_reps,
            run.seed,
            idx,
        )
    };
    let maybe_fit = |name: &str, sample: &[f64], idx: u64| -> Result<Option<ClassFit>, CliError> {
        if sample.len() < 5 {
            log::warn!("class {name}: only {} observations, skipped", sample.len());
            return Ok(None);
        }
        fit(name, sample, idx).map(Some)
    };

    let common_total = classified.common_totals();
    let common1: Vec<f64> = classified.common_pairs.iter().map(|&(x, _)| x).collect();
    let common2: Vec<f64> = classified.common_pairs.iter().map(|&(_, y)| y).collect();
    let classes = ClassFits {
        all_region1: fit("all_region1", &classified.all_region1(), 0)?,
        all_region2: fit("all_region2", &classified.all_region2(), 1)?,
        only_region1: fit("only_region1", &classified.only_region1, 2)?,
        only_region2: fit("only_region2", &classified.only_region2, 3)?,
        common_total: maybe_fit("common_total", &common_total, 4)?,
        common_region1: maybe_fit("common_region1", &common1, 5)?,
        common_region2: maybe_fit("common_region2", &common2, 6)?,
    };

    let report = FitReport {
        schema: FIT_REPORT_SCHEMA.to_string(),
        region1: run.region1.clone(),
        region2: run.region2.clone(),
        window_years: run.window_years,
        truncation: run.truncation,
        classes,
        dependence,
        run: Some(RunStamp {
            seed: run.seed,
            version: BUILD_VERSION.to_string(),
            timing_ms: started.elapsed().as_secs_f64() * 1e3,
        }),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::numeric(format!("serializing fit report: {e}")))?;
    write_text(&run.out, &json)?;

    println!(
        "fit report → {} ({} records, {} only-{} / {} only-{} / {} common)",
        run.out.display(),
        records.len(),
        classified.only_region1.len(),
        run.region1,
        classified.only_region2.len(),
        run.region2,
        classified.common_pairs.len()
    );
    let describe = |name: &str, class: &Option<ClassFit>| {
        if let Some(c) = class {
            println!(
                "  {name:<15} n={:<4} {:?}  KS={:.3} (p={:.3})",
                c.sample_size, c.selected, c.gof.statistics.ks, c.gof.p_values.ks
            );
        }
    };
    describe("all_region1", &Some(report.classes.all_region1.clone()));
    describe("all_region2", &Some(report.classes.all_region2.clone()));
    describe("only_region1", &Some(report.classes.only_region1.clone()));
    describe("only_region2", &Some(report.classes.only_region2.clone()));
    describe("common_total", &report.classes.common_total);
    describe("common_region1", &report.classes.common_region1);
    describe("common_region2", &report.classes.common_region2);
    if let Some(dep) = &report.dependence {
        println!(
            "  dependence      p={:.3} spearman={:.3}",
            dep.mean_share_p, dep.spearman_rho
        );
    }
    Ok(())
}

// ── model loading ─────────────────────────────────────────────────────────

fn load_fit_report(path: &Path) -> Result<FitReport, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let report: FitReport = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    report
        .check_schema()
        .map_err(|e| CliError::data(e.to_string()))?;
    Ok(report)
}

fn model_from_report(
    report: &FitReport,
    choice: ModelChoice,
) -> Result<RegionLossModel, CliError> {
    let model = match choice {
        ModelChoice::Independent => report.independent_model(),
        ModelChoice::Proportional => report.proportional_model(),
        ModelChoice::Dependent => report.dependent_model(),
        ModelChoice::All => {
            return Err(CliError::config(
                "--model all is only valid for the wang subcommand".to_string(),
            ))
        }
    };
    let model = model.map_err(|e| CliError::data(e.to_string()))?;
    model
        .validate()
        .map_err(|e| CliError::data(e.to_string()))?;
    Ok(model)
}

/// Resolve the single model named by `--fit`+`--model` or `--model-spec`.
fn load_single_model(source: &SourceRun) -> Result<(String, RegionLossModel), CliError> {
    match (&source.fit, &source.model_spec) {
        (Some(fit), None) => {
            let choice = source.model.ok_or_else(|| {
                CliError::config("--model is required together with --fit".to_string())
            })?;
            let report = load_fit_report(fit)?;
            Ok((
                format!("{choice:?}").to_lowercase(),
                model_from_report(&report, choice)?,
            ))
        }
        (None, Some(spec)) => {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", spec.display())))?;
            let model: RegionLossModel = serde_json::from_str(&text)
                .map_err(|e| CliError::data(format!("{}: {e}", spec.display())))?;
            model
                .validate()
                .map_err(|e| CliError::data(e.to_string()))?;
            Ok(("inline".to_string(), model))
        }
        (Some(_), Some(_)) => Err(CliError::config(
            "--fit and --model-spec are mutually exclusive".to_string(),
        )),
        (None, None) => Err(CliError::config(
            "one of --fit or --model-spec is required".to_string(),
        )),
    }
}

/// Resolve every model requested (wang supports `--model all`).
fn load_models(source: &SourceRun) -> Result<Vec<(String, RegionLossModel)>, CliError> {
    if source.model == Some(ModelChoice::All) {
        let fit = source.fit.as_ref().ok_or_else(|| {
            CliError::config("--model all requires --fit".to_string())
        })?;
        let report = load_fit_report(fit)?;
        let mut out = Vec::new();
        for (name, choice) in [
            ("independent", ModelChoice::Independent),
            ("proportional", ModelChoice::Proportional),
            ("dependent", ModelChoice::Dependent),
        ] {
            out.push((name.to_string(), model_from_report(&report, choice)?));
        }
        Ok(out)
    } else {
        Ok(vec![load_single_model(source)?])
    }
}

fn bond_spec(t: f64, r: f64, c: f64, d1: f64, d2: f64) -> Result<BondSpec, CliError> {
    BondSpec::new(t, r, c, d1, d2).map_err(|e| CliError::config(e.to_string()))
}

// ── price ─────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct PriceReport<'a> {
    schema: &'static str,
    command: &'a str,
    version: &'a str,
    seed: u64,
    method: &'a str,
    model_name: &'a str,
    bond: &'a BondSpec,
    price: f64,
    std_error: f64,
    trigger_probability: f64,
    n_sims: usize,
    timing_ms: f64,
}

pub fn run_price(run: PriceRun) -> Result<(), CliError> {
    let started = Instant::now();
    let (name, model) = load_single_model(&run.source)?;
    let bond = bond_spec(run.t, run.r, run.c, run.d1, run.d2)?;
    let est = price_one(&model, &bond, run.method, run.sims, run.seed)?;
    let report = PriceReport {
        schema: RUN_REPORT_SCHEMA,
        command: "price",
        version: BUILD_VERSION,
        seed: run.seed,
        method: method_name(run.method),
        model_name: &name,
        bond: &bond,
        price: est.price,
        std_error: est.std_error,
        trigger_probability: est.trigger_probability,
        n_sims: est.n_sims,
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::numeric(e.to_string()))?;
    match &run.out {
        Some(path) => {
            write_text(path, &json)?;
            println!("price {} ± {} → {}", est.price, est.std_error, path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Mc => "mc",
        Method::Normal => "normal",
    }
}

fn price_one(
    model: &RegionLossModel,
    bond: &BondSpec,
    method: Method,
    sims: usize,
    seed: u64,
) -> Result<PriceEstimate, CliError> {
    match method {
        Method::Mc => {
            mc_price_seeded(model, bond, sims, seed).map_err(|e| CliError::numeric(e.to_string()))
        }
        Method::Normal => {
            let moments = model
                .analytic_moments(bond.maturity)
                .map_err(|e| CliError::numeric(e.to_string()))?;
            normal_approx_price(&moments, bond).map_err(|e| CliError::numeric(e.to_string()))
        }
    }
}

// ── surface ───────────────────────────────────────────────────────────────

pub fn run_surface(run: SurfaceRun) -> Result<(), CliError> {
    let started = Instant::now();
    let (name, model) = load_single_model(&run.source)?;
    let template = bond_spec(run.t, run.r, run.c, 1.0, 1.0)?;
    let method = match run.method {
        Method::Mc => SurfaceMethod::MonteCarlo {
            n_sims: run.sims,
            seed: run.seed,
        },
        Method::Normal => SurfaceMethod::NormalApprox,
    };
    let surface = price_surface(&model, &template, &run.grid1, &run.grid2, method)
        .map_err(|e| CliError::numeric(e.to_string()))?;

    let mut csv = String::from("D1,D2,price,std_error,trigger_prob\n");
    for (i, d1) in surface.grid1.iter().enumerate() {
        for (j, d2) in surface.grid2.iter().enumerate() {
            let cell = surface.cell(i, j);
            csv.push_str(&format!(
                "{d1},{d2},{},{},{}\n",
                cell.price, cell.std_error, cell.trigger_probability
            ));
        }
    }
    write_text(&run.out, &csv)?;

    let envelope = RunReport {
        schema: RUN_REPORT_SCHEMA,
        command: "surface",
        version: BUILD_VERSION,
        seed: run.seed,
        method: method_name(run.method),
        bond: &template,
        models: vec![ModelEcho {
            name: &name,
            model: &model,
        }],
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
        output: &run.out,
    };
    write_text(
        &run.report,
        &serde_json::to_string_pretty(&envelope).map_err(|e| CliError::numeric(e.to_string()))?,
    )?;
    println!(
        "surface {}×{} cells → {} (report {})",
        surface.grid1.len(),
        surface.grid2.len(),
        run.out.display(),
        run.report.display()
    );
    Ok(())
}

// ── wang ──────────────────────────────────────────────────────────────────

pub fn run_wang(run: WangRun) -> Result<(), CliError> {
    let started = Instant::now();
    let models = load_models(&run.source)?;
    let bond = bond_spec(run.t, run.r, run.c, run.d1, run.d2)?;
    let mut csv = String::from("model,lambda,price,std_error,trigger_prob\n");
    for (name, model) in &models {
        let curve = wang_price_curve(model, &bond, &run.lambdas, run.sims, run.seed)
            .map_err(|e| match e {
                catbond::pricing::PricingError::PositiveLambda(_) => {
                    CliError::config(e.to_string())
                }
                other => CliError::numeric(other.to_string()),
            })?;
        for (lambda, est) in curve {
            csv.push_str(&format!(
                "{name},{lambda},{},{},{}\n",
                est.price, est.std_error, est.trigger_probability
            ));
        }
    }
    write_text(&run.out, &csv)?;

    let envelope = RunReport {
        schema: RUN_REPORT_SCHEMA,
        command: "wang",
        version: BUILD_VERSION,
        seed: run.seed,
        method: "mc",
        bond: &bond,
        models: models
            .iter()
            .map(|(name, model)| ModelEcho { name, model })
            .collect(),
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
        output: &run.out,
    };
    write_text(
        &run.report,
        &serde_json::to_string_pretty(&envelope).map_err(|e| CliError::numeric(e.to_string()))?,
    )?;
    println!(
        "wang curve for {} model(s) × {} λ → {} (report {})",
        models.len(),
        run.lambdas.len(),
        run.out.display(),
        run.report.display()
    );
    Ok(())
}

// ── generate-fixture ──────────────────────────────────────────────────────

pub fn run_fixture(run: FixtureRun) -> Result<(), CliError> {
    let case = match run.pair {
        FixturePair::OkTx => presets::ok_tx(),
        FixturePair::IlKy => presets::il_ky(),
    };
    let window = run.window_years.unwrap_or(case.window_years);
    if !(window > 0.0) {
        return Err(CliError::config(format!(
            "window-years must be positive, got {window}"
        )));
    }
    let records = synth::generate_records(&case, window, run.seed);
    let file = std::fs::File::create(&run.out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", run.out.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    synth::write_csv(&records, &mut writer)
        .map_err(|e| CliError::data(format!("writing {}: {e}", run.out.display())))?;
    writer
        .flush()
        .map_err(|e| CliError::data(format!("writing {}: {e}", run.out.display())))?;
    println!(
        "fixture {}/{} over {window} years: {} records → {}",
        case.region1,
        case.region2,
        records.len(),
        run.out.display()
    );
    Ok(())
}
