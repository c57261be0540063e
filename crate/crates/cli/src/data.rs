//! Experimental-data ingestion and serialization.
//!
//! A dataset on disk is a manifest CSV (`test_id,sensor_id,path`) plus one
//! series CSV per (test, sensor) with header `time,value`, time in seconds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use identkit_core::model::{
    ExperimentSet, MeasurementSeries, SensorChannel, TestDefinition,
};

use crate::config::TestSection;
use crate::error::{CliError, Result};

fn parse_field(raw: &str, what: &str, file: &Path, line: u64) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        CliError::Data(format!(
            "{}:{line}: cannot parse {what} `{raw}`",
            file.display()
        ))
    })
}

/// Reads one `time,value` series file, enforcing strictly increasing times.
pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open `{}`: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() < 2 || headers.get(0) != Some("time") || headers.get(1) != Some("value") {
        return Err(CliError::Data(format!(
            "{}:1: expected header `time,value`",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{}:{line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 {
            return Err(CliError::Data(format!(
                "{}:{line}: expected two fields, got {}",
                path.display(),
                record.len()
            )));
        }
        let t = parse_field(&record[0], "time", path, line)?;
        let v = parse_field(&record[1], "value", path, line)?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(CliError::Data(format!(
                    "{}:{line}: non-monotone time {t} after {prev}",
                    path.display()
                )));
            }
        }
        times.push(t);
        values.push(v);
    }
    Ok((times, values))
}

/// Loads a dataset: the manifest lists one series file per (test, sensor);
/// test ids, sensor lists and loadings come from the configuration, and the
/// acquisition times come from the files.
pub fn load_dataset(manifest: &Path, tests: &[TestSection]) -> Result<ExperimentSet> {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(manifest)
        .map_err(|e| CliError::Data(format!("cannot open manifest `{}`: {e}", manifest.display())))?;
    let mut paths: BTreeMap<(String, String), PathBuf> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{}:{line}: {e}", manifest.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 3 {
            return Err(CliError::Data(format!(
                "{}:{line}: expected `test_id,sensor_id,path`",
                manifest.display()
            )));
        }
        let rel = PathBuf::from(record[2].trim());
        let path = if rel.is_absolute() { rel } else { base.join(rel) };
        paths.insert((record[0].trim().to_string(), record[1].trim().to_string()), path);
    }

    let mut definitions = Vec::new();
    let mut series = Vec::new();
    for test in tests {
        let mut channels = Vec::new();
        for sensor in &test.sensors {
            let key = (test.id.clone(), sensor.clone());
            let path = paths.get(&key).ok_or_else(|| {
                CliError::Data(format!(
                    "manifest `{}` has no entry for test `{}`, sensor `{sensor}`",
                    manifest.display(),
                    test.id
                ))
            })?;
            if !path.exists() {
                return Err(CliError::Data(format!(
                    "series file `{}` not found",
                    path.display()
                )));
            }
            let (times, values) = read_series(path)?;
            channels.push(SensorChannel { sensor_id: sensor.clone(), times });
            series.push((
                test.id.clone(),
                MeasurementSeries { sensor_id: sensor.clone(), values },
            ));
        }
        definitions.push(TestDefinition::new(test.id.clone(), channels, test.loading.clone())?);
    }
    Ok(ExperimentSet::new(definitions, series)?)
}

/// Writes a dataset as one series CSV per (test, sensor) plus a manifest,
/// with full round-trip precision.
pub fn write_dataset(set: &ExperimentSet, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let manifest_path = dir.join("manifest.csv");
    let mut manifest = csv::Writer::from_path(&manifest_path)
        .map_err(|e| CliError::Data(e.to_string()))?;
    manifest
        .write_record(["test_id", "sensor_id", "path"])
        .map_err(|e| CliError::Data(e.to_string()))?;
    for test in set.tests() {
        for ch in &test.channels {
            let file = format!("{}__{}.csv", test.test_id, ch.sensor_id);
            let mut writer = csv::Writer::from_path(dir.join(&file))
                .map_err(|e| CliError::Data(e.to_string()))?;
            writer
                .write_record(["time", "value"])
                .map_err(|e| CliError::Data(e.to_string()))?;
            let measured = set.series(&test.test_id, &ch.sensor_id)?;
            for (t, v) in ch.times.iter().zip(&measured.values) {
                writer
                    .write_record([format_float(*t), format_float(*v)])
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
            writer.flush()?;
            manifest
                .write_record([&test.test_id, &ch.sensor_id, &file])
                .map_err(|e| CliError::Data(e.to_string()))?;
        }
    }
    manifest.flush()?;
    Ok(manifest_path)
}

/// Shortest decimal form that parses back to the same f64 (Display's
/// round-trip guarantee).
pub fn format_float(v: f64) -> String {
    format!("{v}")
}
