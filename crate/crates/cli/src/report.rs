//! Report serialization: traces, scatter exports, bounds tables, ensemble
//! tables and verdicts, all as plain CSV or text.

use std::path::Path;

use identkit_core::ga::GaTrace;
use identkit_core::lm::LmOutcome;
use identkit_core::model::ParameterSpace;
use identkit_core::strategy::{
    EnsembleReport, ParameterDistribution, ScatterCloud, StrategyOutcome,
};

use crate::data::format_float;
use crate::error::{CliError, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::Data(e.to_string()))
}

fn write_record<I, S>(w: &mut csv::Writer<std::fs::File>, record: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(record).map_err(|e| CliError::Data(e.to_string()))
}

/// `generation,best_cost,mean_cost,<parameter names...>` per generation.
pub fn write_ga_trace(trace: &GaTrace, names: &[String], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["generation".to_string(), "best_cost".into(), "mean_cost".into()];
    header.extend(names.iter().cloned());
    write_record(&mut w, &header)?;
    for r in &trace.records {
        let mut row = vec![
            r.generation.to_string(),
            format_float(r.best_cost),
            format_float(r.mean_cost),
        ];
        row.extend(r.best_genes.iter().map(|g| format_float(*g)));
        write_record(&mut w, &row)?;
    }
    w.flush()?;
    Ok(())
}

/// `iteration,cost,lambda,step_norm,accepted` per trial step.
pub fn write_lm_trace(outcome: &LmOutcome, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_record(&mut w, ["iteration", "cost", "lambda", "step_norm", "accepted"])?;
    for it in &outcome.trace {
        write_record(
            &mut w,
            [
                it.iteration.to_string(),
                format_float(it.cost),
                format_float(it.lambda),
                format_float(it.step_norm),
                it.accepted.to_string(),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One `value,fitness` scatter file per parameter (the raw distribution
/// plots), named `scatter_<parameter>.csv`.
pub fn write_scatter(cloud: &ScatterCloud, names: &[String], dir: &Path) -> Result<()> {
    for (p, name) in names.iter().enumerate() {
        let mut w = writer(&dir.join(format!("scatter_{name}.csv")))?;
        write_record(&mut w, ["value", "fitness"])?;
        for &i in &cloud.retained {
            let point = &cloud.points[i];
            write_record(&mut w, [format_float(point.genes[p]), format_float(point.fitness)])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// `parameter,label,dominant_lower,dominant_upper` per parameter.
pub fn write_classification(
    classes: &[ParameterDistribution],
    names: &[String],
    path: &Path,
) -> Result<()> {
    let mut w = writer(path)?;
    write_record(&mut w, ["parameter", "label", "dominant_lower", "dominant_upper"])?;
    for (name, class) in names.iter().zip(classes) {
        let (lo, hi) = class
            .dominant
            .map(|(a, b)| (format_float(a), format_float(b)))
            .unwrap_or_default();
        write_record(&mut w, [name.clone(), class.label.to_string(), lo, hi])?;
    }
    w.flush()?;
    Ok(())
}

/// Initial-versus-reduced ranges, one row per parameter.
pub fn write_bounds(
    initial: &ParameterSpace,
    reduced: &ParameterSpace,
    path: &Path,
) -> Result<()> {
    let mut w = writer(path)?;
    write_record(
        &mut w,
        ["parameter", "initial_lower", "initial_upper", "reduced_lower", "reduced_upper"],
    )?;
    for i in 0..initial.count() {
        write_record(
            &mut w,
            [
                initial.names()[i].clone(),
                format_float(initial.lower()[i]),
                format_float(initial.upper()[i]),
                format_float(reduced.lower()[i]),
                format_float(reduced.upper()[i]),
            ],
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Ensemble table: `draw,<parameters...>,objective` rows for every run,
/// then `Mean` and `Standard Deviation` rows.
pub fn write_ensemble(report: &EnsembleReport, names: &[String], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["draw".to_string()];
    header.extend(names.iter().cloned());
    header.push("objective".into());
    write_record(&mut w, &header)?;
    for s in &report.solutions {
        let mut row = vec![(s.run + 1).to_string()];
        row.extend(s.theta.iter().map(|v| format_float(*v)));
        row.push(format_float(s.cost));
        write_record(&mut w, &row)?;
    }
    let mut mean = vec!["Mean".to_string()];
    mean.extend(report.mean.iter().map(|v| format_float(*v)));
    mean.push(format_float(report.cost_mean));
    write_record(&mut w, &mean)?;
    let mut std = vec!["Standard Deviation".to_string()];
    std.extend(report.std.iter().map(|v| format_float(*v)));
    std.push(format_float(report.cost_std));
    write_record(&mut w, &std)?;
    w.flush()?;
    Ok(())
}

/// Human-readable verdict summary.
pub fn write_verdict(report: &EnsembleReport, path: &Path) -> Result<()> {
    let mut text = format!(
        "verdict = {}\nresponse_dispersion = {}\nobjective_mean = {}\nobjective_std = {}\n",
        report.verdict,
        format_float(report.response_dispersion),
        format_float(report.cost_mean),
        format_float(report.cost_std),
    );
    for (run, message) in &report.failures {
        text.push_str(&format!("failed_run = {run}: {message}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// `theta,<value>` rows plus the objective, for a single identification.
pub fn write_solution(theta: &[f64], cost: f64, names: &[String], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_record(&mut w, ["parameter", "value"])?;
    for (name, v) in names.iter().zip(theta) {
        write_record(&mut w, [name.clone(), format_float(*v)])?;
    }
    write_record(&mut w, ["objective".to_string(), format_float(cost)])?;
    w.flush()?;
    Ok(())
}

/// Round-by-round strategy history: verdict, dispersion and the bounds each
/// ensemble ran on.
pub fn write_history(outcome: &StrategyOutcome, names: &[String], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["round".to_string(), "verdict".into(), "response_dispersion".into()];
    for name in names {
        header.push(format!("{name}_lower"));
        header.push(format!("{name}_upper"));
    }
    write_record(&mut w, &header)?;
    for (round, r) in outcome.refinements.iter().enumerate() {
        let mut row = vec![
            round.to_string(),
            r.report.verdict.to_string(),
            format_float(r.report.response_dispersion),
        ];
        for i in 0..r.space.count() {
            row.push(format_float(r.space.lower()[i]));
            row.push(format_float(r.space.upper()[i]));
        }
        write_record(&mut w, &row)?;
    }
    w.flush()?;
    Ok(())
}
