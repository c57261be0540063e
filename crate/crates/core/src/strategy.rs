//! Identification strategy: uniform scan and domain reduction, the hybrid
//! GA-then-LM pipeline, and the multi-run ensemble with standard-deviation
//! and response-dispersion topology analysis, iterated until an acceptable
//! solution set emerges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig, GaTrace, Individual, MutationOp};
use crate::lm::{run_lm, LmConfig, LmOutcome};
use crate::model::{ExperimentSet, ForwardModel, ParameterSpace};
use crate::objective::Objective;
use crate::seed::derive_seed;

/// Scan and distribution-classification settings. The classification
/// constants operationalize the by-eye reading of scatter plots: bin count,
/// the uniformity band around the mean bin count, the mass a contiguous
/// above-mean run must hold to be a dominant region, and the edge-sparsity
/// cutoff used when trimming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Number of scan GA runs aggregated into one cloud.
    pub runs: usize,
    /// Fitness quantile kept for analysis (0.1 keeps the top 10%).
    pub keep_fraction: f64,
    pub bins: usize,
    pub uniform_band: f64,
    pub dominant_mass: f64,
    pub edge_sparsity: f64,
    /// Reduced bounds never shrink below this fraction of the initial width.
    pub min_width_fraction: f64,
    /// Minimum retained points required to classify a parameter.
    pub min_retained: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            runs: 10,
            keep_fraction: 0.1,
            bins: 20,
            uniform_band: 0.5,
            dominant_mass: 0.6,
            edge_sparsity: 0.1,
            min_width_fraction: 0.1,
            min_retained: 50,
        }
    }
}

/// Ensemble and refinement-loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    /// Independent hybrid runs per ensemble.
    pub runs: usize,
    /// Response dispersion below which a spread solution set is acceptable.
    pub dispersion_tol: f64,
    /// Pairwise relative parameter distance below which the ensemble
    /// collapses to a unique solution.
    pub uniqueness_tol: f64,
    pub max_refinements: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self { runs: 10, dispersion_tol: 1e-3, uniqueness_tol: 1e-3, max_refinements: 5 }
    }
}

/// Every evaluated point of a scan, with the fitness threshold and the
/// indices of the retained (above-threshold) points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterCloud {
    pub points: Vec<Individual>,
    pub threshold: f64,
    pub retained: Vec<usize>,
}

impl ScatterCloud {
    /// Applies the keep-fraction threshold to a point set: the threshold is
    /// the k-th largest fitness with `k = max(1, round(keep_fraction * n))`,
    /// and every point at or above it is retained.
    pub fn from_points(points: Vec<Individual>, keep_fraction: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if !(0.0..=1.0).contains(&keep_fraction) || keep_fraction == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "keep_fraction must be in (0, 1], got {keep_fraction}"
            )));
        }
        let mut fitnesses: Vec<f64> = points.iter().map(|p| p.fitness).collect();
        fitnesses.sort_by(|a, b| b.total_cmp(a));
        let k = ((keep_fraction * points.len() as f64).round() as usize)
            .clamp(1, points.len());
        let threshold = fitnesses[k - 1];
        let retained = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.fitness >= threshold)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { points, threshold, retained })
    }

    /// Retained values of one parameter.
    pub fn retained_values(&self, param: usize) -> Vec<f64> {
        self.retained.iter().map(|&i| self.points[i].genes[param]).collect()
    }

    /// Index of the lowest-cost point of the whole cloud.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.points.iter().enumerate() {
            if p.cost < self.points[best].cost {
                best = i;
            }
        }
        best
    }
}

/// Shape of one parameter's retained-sample distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionLabel {
    /// Flat: the parameter barely influences the fitness; bounds stay.
    Uniform,
    /// Several separated peaks, each a possible local solution.
    MultiPeak,
    /// One dominant region that necessarily contains the optimum.
    Dominant,
}

impl std::fmt::Display for DistributionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DistributionLabel::Uniform => "Uniform",
            DistributionLabel::MultiPeak => "MultiPeak",
            DistributionLabel::Dominant => "Dominant",
        };
        f.write_str(s)
    }
}

/// Classification of one parameter: label, histogram, and the dominant
/// interval when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDistribution {
    pub label: DistributionLabel,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub dominant: Option<(f64, f64)>,
}

fn bin_of(value: f64, lower: f64, width: f64, bins: usize) -> usize {
    (((value - lower) / width * bins as f64).floor() as usize).min(bins - 1)
}

/// Histograms the retained values of one parameter into equal bins over the
/// current bounds and labels the distribution.
pub fn classify_distribution(
    cloud: &ScatterCloud,
    space: &ParameterSpace,
    param: usize,
    config: &ScanConfig,
) -> Result<ParameterDistribution> {
    let values = cloud.retained_values(param);
    if values.len() < config.min_retained {
        return Err(Error::InsufficientData { needed: config.min_retained, got: values.len() });
    }
    let bins = config.bins;
    let lower = space.lower()[param];
    let width = space.width(param);
    let mut counts = vec![0usize; bins];
    for v in &values {
        counts[bin_of(*v, lower, width, bins)] += 1;
    }
    let bin_edges: Vec<f64> = (0..=bins)
        .map(|b| lower + width * b as f64 / bins as f64)
        .collect();

    let mean = values.len() as f64 / bins as f64;
    let uniform = counts.iter().all(|&c| {
        (c as f64) >= mean * (1.0 - config.uniform_band)
            && (c as f64) <= mean * (1.0 + config.uniform_band)
    });
    if uniform {
        return Ok(ParameterDistribution {
            label: DistributionLabel::Uniform,
            bin_edges,
            counts,
            dominant: None,
        });
    }

    // Largest contiguous run of above-mean bins, by retained mass.
    let mut best_mass = 0usize;
    let mut best_span = (0usize, 0usize);
    let mut start = None;
    let mut mass = 0usize;
    for (b, &c) in counts.iter().chain(std::iter::once(&0)).enumerate() {
        if b < bins && c as f64 > mean {
            if start.is_none() {
                start = Some(b);
                mass = 0;
            }
            mass += c;
        } else if let Some(s) = start.take() {
            if mass > best_mass {
                best_mass = mass;
                best_span = (s, b - 1);
            }
        }
    }
    if best_mass as f64 >= config.dominant_mass * values.len() as f64 {
        let interval = (bin_edges[best_span.0], bin_edges[best_span.1 + 1]);
        return Ok(ParameterDistribution {
            label: DistributionLabel::Dominant,
            bin_edges,
            counts,
            dominant: Some(interval),
        });
    }
    Ok(ParameterDistribution {
        label: DistributionLabel::MultiPeak,
        bin_edges,
        counts,
        dominant: None,
    })
}

/// Runs the GA `config.runs` times with mutation probability forced to 1
/// (pure uniform sampling of the domain) and aggregates every evaluated
/// individual into one scatter cloud.
pub fn uniform_scan(
    model: &dyn ForwardModel,
    dataset: &ExperimentSet,
    space: &ParameterSpace,
    scan: &ScanConfig,
    ga: &GaConfig,
) -> Result<ScatterCloud> {
    let objective = Objective::new(model, dataset)?;
    let cost_fn = |theta: &[f64]| objective.cost_or_inf(theta);
    let traces: Vec<Result<GaTrace>> = (0..scan.runs)
        .into_par_iter()
        .map(|run| {
            let config = GaConfig {
                mutation_prob: 1.0,
                mutation_op: MutationOp::UniformRedraw,
                seed: derive_seed(ga.seed, run as u64),
                ..ga.clone()
            };
            run_ga(&cost_fn, space, &config).map(|(_, trace)| trace)
        })
        .collect();
    let mut points = Vec::new();
    for trace in traces {
        points.extend(trace?.evaluations);
    }
    ScatterCloud::from_points(points, scan.keep_fraction)
}

/// Trims sparse edge bins from the bounds of every non-uniform parameter.
///
/// From each edge inward, leading bins whose retained count is below
/// `edge_sparsity * mean` are removed, stopping at the first non-sparse bin.
/// The overall best scanned point always stays inside, uniform parameters
/// keep their bounds, and no parameter shrinks below `min_width_fraction` of
/// its initial width.
pub fn reduce_domain(
    space: &ParameterSpace,
    classes: &[ParameterDistribution],
    cloud: &ScatterCloud,
    config: &ScanConfig,
) -> Result<ParameterSpace> {
    if classes.len() != space.count() {
        return Err(Error::DimensionMismatch { expected: space.count(), actual: classes.len() });
    }
    let best = &cloud.points[cloud.best_index()];
    let bins = config.bins;
    let mut lower = space.lower().to_vec();
    let mut upper = space.upper().to_vec();
    for i in 0..space.count() {
        if classes[i].label == DistributionLabel::Uniform {
            continue;
        }
        let counts = &classes[i].counts;
        let total: usize = counts.iter().sum();
        let sparse = config.edge_sparsity * total as f64 / bins as f64;
        let lo = space.lower()[i];
        let old_width = space.width(i);
        let bin_width = old_width / bins as f64;
        let best_bin = bin_of(best.genes[i], lo, old_width, bins);

        let mut trim_lo = counts.iter().take_while(|&&c| (c as f64) < sparse).count();
        let mut trim_hi = counts.iter().rev().take_while(|&&c| (c as f64) < sparse).count();
        trim_lo = trim_lo.min(best_bin);
        trim_hi = trim_hi.min(bins - 1 - best_bin);

        let mut new_lo = lo + bin_width * trim_lo as f64;
        let mut new_hi = space.upper()[i] - bin_width * trim_hi as f64;
        let floor = config.min_width_fraction * old_width;
        if new_hi - new_lo < floor {
            let mid = 0.5 * (new_lo + new_hi);
            new_lo = (mid - 0.5 * floor).max(lo);
            new_hi = new_lo + floor;
            if new_hi > space.upper()[i] {
                new_hi = space.upper()[i];
                new_lo = new_hi - floor;
            }
        }
        lower[i] = new_lo;
        upper[i] = new_hi;
    }
    ParameterSpace::new(space.names().to_vec(), lower, upper)
}

/// One GA-then-LM identification run.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutcome {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub ga_best: Individual,
    pub ga_trace: GaTrace,
    pub lm: LmOutcome,
}

/// Runs the GA, then refines its best individual with the LM solver.
pub fn run_hybrid(
    model: &dyn ForwardModel,
    dataset: &ExperimentSet,
    space: &ParameterSpace,
    ga: &GaConfig,
    lm: &LmConfig,
) -> Result<HybridOutcome> {
    let objective = Objective::new(model, dataset)?;
    let cost_fn = |theta: &[f64]| objective.cost_or_inf(theta);
    let (ga_best, ga_trace) = run_ga(&cost_fn, space, ga)?;
    if !ga_best.cost.is_finite() {
        return Err(Error::Solver("every GA individual failed evaluation".into()));
    }
    let residual_fn = |theta: &[f64]| objective.residuals(theta);
    let lm_outcome = run_lm(&residual_fn, &ga_best.genes, space, lm)?;
    Ok(HybridOutcome {
        theta: lm_outcome.theta.clone(),
        cost: lm_outcome.cost,
        ga_best,
        ga_trace,
        lm: lm_outcome,
    })
}

/// Ensemble verdict after the topology analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// All runs agree to within the uniqueness tolerance.
    UniqueSolution,
    /// Parameters spread but responses agree: every set is acceptable.
    LowDispersionSet,
    /// Responses disagree: reduce the domain and re-run.
    RefineDomain,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::UniqueSolution => "UniqueSolution",
            Verdict::LowDispersionSet => "LowDispersionSet",
            Verdict::RefineDomain => "RefineDomain",
        };
        f.write_str(s)
    }
}

/// Solution of one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSolution {
    pub run: usize,
    pub theta: Vec<f64>,
    pub cost: f64,
}

/// Statistics over repeated hybrid runs: per-parameter mean and sample
/// standard deviation, objective statistics, the maximum pairwise weighted
/// RMS difference between simulated responses, and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub solutions: Vec<EnsembleSolution>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub response_dispersion: f64,
    pub verdict: Verdict,
    pub failures: Vec<(usize, String)>,
}

fn sample_mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Weighted RMS difference between the simulated responses of two solutions,
/// averaged over every (test, sensor, instant) triple.
fn response_distance(
    model: &dyn ForwardModel,
    dataset: &ExperimentSet,
    objective: &Objective,
    a: &[f64],
    b: &[f64],
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for test in dataset.tests() {
        for ch in &test.channels {
            let weight = objective.sensor_weight_of(&test.test_id, &ch.sensor_id)?;
            let ha = model.predict(a, test, &ch.sensor_id)?;
            let hb = model.predict(b, test, &ch.sensor_id)?;
            for (&va, &vb) in ha.iter().zip(&hb) {
                sum += (va - vb) * (va - vb) * weight.weight;
                count += 1;
            }
        }
    }
    Ok((sum / count as f64).sqrt())
}

impl EnsembleReport {
    /// Aggregates finished solutions into the report: Tables-style mean and
    /// sample standard deviation per parameter, response dispersion, and
    /// verdict. Needs at least two solutions.
    pub fn from_solutions(
        solutions: Vec<EnsembleSolution>,
        failures: Vec<(usize, String)>,
        model: &dyn ForwardModel,
        dataset: &ExperimentSet,
        config: &StrategyConfig,
    ) -> Result<Self> {
        if solutions.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: solutions.len() });
        }
        let alpha = solutions[0].theta.len();
        let objective = Objective::new(model, dataset)?;

        let mut mean = Vec::with_capacity(alpha);
        let mut std = Vec::with_capacity(alpha);
        for p in 0..alpha {
            let values: Vec<f64> = solutions.iter().map(|s| s.theta[p]).collect();
            let (m, s) = sample_mean_std(&values);
            mean.push(m);
            std.push(s);
        }
        let costs: Vec<f64> = solutions.iter().map(|s| s.cost).collect();
        let (cost_mean, cost_std) = sample_mean_std(&costs);

        let mut response_dispersion = 0.0f64;
        for p in 0..solutions.len() {
            for q in p + 1..solutions.len() {
                let d = response_distance(
                    model,
                    dataset,
                    &objective,
                    &solutions[p].theta,
                    &solutions[q].theta,
                )?;
                response_dispersion = response_dispersion.max(d);
            }
        }

        let unique = (0..solutions.len()).all(|p| {
            (p + 1..solutions.len()).all(|q| {
                solutions[p].theta.iter().zip(&solutions[q].theta).all(|(&a, &b)| {
                    let scale = a.abs().max(b.abs());
                    scale == 0.0 || (a - b).abs() / scale < config.uniqueness_tol
                })
            })
        });
        let verdict = if unique {
            Verdict::UniqueSolution
        } else if response_dispersion < config.dispersion_tol {
            Verdict::LowDispersionSet
        } else {
            Verdict::RefineDomain
        };

        Ok(Self {
            solutions,
            mean,
            std,
            cost_mean,
            cost_std,
            response_dispersion,
            verdict,
            failures,
        })
    }
}

/// Runs `config.runs` independent seeded hybrid runs (seed of run `r` is
/// derived from `ga.seed` and `r`) and aggregates them into a report.
/// Individual run failures are recorded; the analysis proceeds as long as at
/// least two runs survive.
pub fn ensemble_analyze(
    model: &dyn ForwardModel,
    dataset: &ExperimentSet,
    space: &ParameterSpace,
    ga: &GaConfig,
    lm: &LmConfig,
    config: &StrategyConfig,
) -> Result<EnsembleReport> {
    if config.runs < 2 {
        return Err(Error::InvalidConfig(format!(
            "ensemble needs at least 2 runs, got {}",
            config.runs
        )));
    }
    let outcomes: Vec<(usize, Result<HybridOutcome>)> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let run_ga_config =
                GaConfig { seed: derive_seed(ga.seed, run as u64), ..ga.clone() };
            (run, run_hybrid(model, dataset, space, &run_ga_config, lm))
        })
        .collect();
    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    for (run, outcome) in outcomes {
        match outcome {
            Ok(h) => solutions.push(EnsembleSolution { run, theta: h.theta, cost: h.cost }),
            Err(e) => failures.push((run, e.to_string())),
        }
    }
    EnsembleReport::from_solutions(solutions, failures, model, dataset, config)
}

/// One refinement round: the space it ran on and the resulting report.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRecord {
    pub space: ParameterSpace,
    pub report: EnsembleReport,
}

/// Full history of a strategy run.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutcome {
    pub initial_space: ParameterSpace,
    pub cloud: ScatterCloud,
    pub classifications: Vec<ParameterDistribution>,
    pub reduced_space: ParameterSpace,
    pub refinements: Vec<RefinementRecord>,
    /// True when the refinement budget ran out with the verdict still
    /// `RefineDomain`.
    pub inconclusive: bool,
}

impl StrategyOutcome {
    pub fn final_report(&self) -> &EnsembleReport {
        &self.refinements.last().expect("at least one ensemble round").report
    }
}

/// The full methodology: scan and reduce the initial domain, run the
/// ensemble, and while the verdict asks for refinement (up to
/// `max_refinements` times) shrink the bounds to the extreme values of the
/// ensemble solutions and re-run.
pub fn strategy_loop(
    model: &dyn ForwardModel,
    dataset: &ExperimentSet,
    initial_space: &ParameterSpace,
    ga: &GaConfig,
    lm: &LmConfig,
    scan: &ScanConfig,
    config: &StrategyConfig,
) -> Result<StrategyOutcome> {
    let scan_ga = GaConfig { seed: derive_seed(ga.seed, 0), ..ga.clone() };
    let cloud = uniform_scan(model, dataset, initial_space, scan, &scan_ga)?;
    let classifications: Vec<ParameterDistribution> = (0..initial_space.count())
        .map(|p| classify_distribution(&cloud, initial_space, p, scan))
        .collect::<Result<_>>()?;
    let reduced_space = reduce_domain(initial_space, &classifications, &cloud, scan)?;

    let mut refinements = Vec::new();
    let mut current_space = reduced_space.clone();
    let mut inconclusive = false;
    for round in 0..=config.max_refinements {
        let round_ga =
            GaConfig { seed: derive_seed(ga.seed, 1 + round as u64), ..ga.clone() };
        let report = ensemble_analyze(model, dataset, &current_space, &round_ga, lm, config)?;
        let verdict = report.verdict;
        refinements.push(RefinementRecord { space: current_space.clone(), report });
        if verdict != Verdict::RefineDomain {
            break;
        }
        if round == config.max_refinements {
            inconclusive = true;
            break;
        }
        current_space = shrink_to_solutions(&current_space, &refinements.last().unwrap().report)?;
    }

    Ok(StrategyOutcome {
        initial_space: initial_space.clone(),
        cloud,
        classifications,
        reduced_space,
        refinements,
        inconclusive,
    })
}

/// New bounds from the extreme values of the ensemble solutions, padded by a
/// sliver so the space stays valid, and clipped into the current bounds so
/// refinement nests.
fn shrink_to_solutions(space: &ParameterSpace, report: &EnsembleReport) -> Result<ParameterSpace> {
    let mut lower = Vec::with_capacity(space.count());
    let mut upper = Vec::with_capacity(space.count());
    for i in 0..space.count() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for s in &report.solutions {
            min = min.min(s.theta[i]);
            max = max.max(s.theta[i]);
        }
        let pad = 1e-9 * space.width(i);
        lower.push((min - pad).max(space.lower()[i]));
        upper.push((max + pad).min(space.upper()[i]));
    }
    ParameterSpace::new(space.names().to_vec(), lower, upper)
}
