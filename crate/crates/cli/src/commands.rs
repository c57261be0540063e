//! Subcommand implementations. Each one resolves the configuration, runs the
//! corresponding core entry point and serializes its reports into the output
//! directory.

use std::path::Path;

use identkit_core::ga::GaConfig;
use identkit_core::seed::derive_seed;
use identkit_core::strategy::{
    classify_distribution, ensemble_analyze, reduce_domain, run_hybrid, strategy_loop,
    uniform_scan, ParameterDistribution,
};

use crate::config::{ResolvedRun, RunConfiguration};
use crate::data::write_dataset;
use crate::error::Result;
use crate::report;

fn resolve(config_path: &Path, out_override: Option<&Path>) -> Result<ResolvedRun> {
    let config = RunConfiguration::from_path(config_path)?;
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    config.resolve(base, out_override)
}

/// `scan`: uniform scan, distribution classification, domain reduction.
/// Writes the per-parameter scatter files, the classification table and the
/// initial-versus-reduced bounds table.
pub fn run_scan(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let run = resolve(config_path, out_override)?;
    let scan_ga = GaConfig { seed: derive_seed(run.master_seed, 0), ..run.ga.clone() };
    let cloud = uniform_scan(run.model.as_ref(), &run.dataset, &run.space, &run.scan, &scan_ga)?;
    let classes: Vec<ParameterDistribution> = (0..run.space.count())
        .map(|p| classify_distribution(&cloud, &run.space, p, &run.scan))
        .collect::<identkit_core::Result<_>>()?;
    let reduced = reduce_domain(&run.space, &classes, &cloud, &run.scan)?;

    let dir = &run.output_dir;
    std::fs::create_dir_all(dir)?;
    report::write_scatter(&cloud, run.space.names(), dir)?;
    report::write_classification(&classes, run.space.names(), &dir.join("classification.csv"))?;
    report::write_bounds(&run.space, &reduced, &dir.join("bounds.csv"))?;
    println!("scan: {} points, reduced bounds written to {}", cloud.points.len(), dir.display());
    Ok(())
}

/// `identify`: one hybrid GA + LM run. Writes the solution and both traces.
pub fn run_identify(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let run = resolve(config_path, out_override)?;
    let outcome = run_hybrid(run.model.as_ref(), &run.dataset, &run.space, &run.ga, &run.lm)?;

    let dir = &run.output_dir;
    std::fs::create_dir_all(dir)?;
    report::write_solution(&outcome.theta, outcome.cost, run.space.names(), &dir.join("solution.csv"))?;
    report::write_ga_trace(&outcome.ga_trace, run.space.names(), &dir.join("ga_trace.csv"))?;
    report::write_lm_trace(&outcome.lm, &dir.join("lm_trace.csv"))?;
    println!("identify: objective {} written to {}", outcome.cost, dir.display());
    Ok(())
}

/// `ensemble`: repeated seeded hybrid runs with the topology analysis.
/// Writes the draws table (with Mean / Standard Deviation rows) and the
/// verdict.
pub fn run_ensemble(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let run = resolve(config_path, out_override)?;
    let report = ensemble_analyze(
        run.model.as_ref(),
        &run.dataset,
        &run.space,
        &run.ga,
        &run.lm,
        &run.strategy,
    )?;

    let dir = &run.output_dir;
    std::fs::create_dir_all(dir)?;
    report::write_ensemble(&report, run.space.names(), &dir.join("ensemble.csv"))?;
    report::write_verdict(&report, &dir.join("verdict.txt"))?;
    println!("ensemble: verdict {} written to {}", report.verdict, dir.display());
    Ok(())
}

/// `pipeline`: the full strategy loop. Writes the scan outputs, one ensemble
/// table per refinement round, the history log and the final verdict.
pub fn run_pipeline(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let run = resolve(config_path, out_override)?;
    let outcome = strategy_loop(
        run.model.as_ref(),
        &run.dataset,
        &run.space,
        &run.ga,
        &run.lm,
        &run.scan,
        &run.strategy,
    )?;

    let dir = &run.output_dir;
    std::fs::create_dir_all(dir)?;
    let scan_dir = dir.join("scan");
    report::write_scatter(&outcome.cloud, run.space.names(), &scan_dir)?;
    report::write_classification(
        &outcome.classifications,
        run.space.names(),
        &scan_dir.join("classification.csv"),
    )?;
    report::write_bounds(&outcome.initial_space, &outcome.reduced_space, &scan_dir.join("bounds.csv"))?;
    for (round, record) in outcome.refinements.iter().enumerate() {
        report::write_ensemble(
            &record.report,
            run.space.names(),
            &dir.join(format!("ensemble_{round}.csv")),
        )?;
    }
    report::write_history(&outcome, run.space.names(), &dir.join("history.csv"))?;
    report::write_verdict(outcome.final_report(), &dir.join("verdict.txt"))?;
    if outcome.inconclusive {
        std::fs::write(
            dir.join("INCONCLUSIVE"),
            "refinement budget exhausted with verdict RefineDomain\n",
        )?;
    }
    println!(
        "pipeline: {} refinement round(s), final verdict {} written to {}",
        outcome.refinements.len(),
        outcome.final_report().verdict,
        dir.display()
    );
    Ok(())
}

/// `synth`: generate the configured synthetic dataset and write it as series
/// CSVs plus a manifest.
pub fn run_synth(config_path: &Path, out_override: Option<&Path>) -> Result<()> {
    let run = resolve(config_path, out_override)?;
    let manifest = write_dataset(&run.dataset, &run.output_dir)?;
    println!("synth: dataset written, manifest at {}", manifest.display());
    Ok(())
}
