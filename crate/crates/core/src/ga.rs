//! Real-coded genetic algorithm: fitness-proportional selection, arithmetic
//! crossover, per-gene uniform mutation, generational replacement with
//! optional elitism, fixed-generation stop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParameterSpace;
use crate::objective::adaptive_fitness;

/// One candidate parameter vector with its objective value and fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub cost: f64,
    pub fitness: f64,
}

impl Individual {
    /// Builds an evaluated individual; non-finite costs (failed evaluations)
    /// are stored as `+inf`, whose fitness is 0.
    pub fn evaluated(genes: Vec<f64>, cost: f64) -> Self {
        let cost = if cost.is_nan() { f64::INFINITY } else { cost };
        Self { genes, fitness: adaptive_fitness(cost), cost }
    }
}

/// How a gene is rewritten when it mutates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationOp {
    /// Fresh uniform draw within bounds (default). With mutation
    /// probability 1 this turns the GA into a uniform scan of the domain.
    UniformRedraw,
    /// Local Gaussian perturbation, sigma relative to the bound width,
    /// clamped into bounds.
    Gaussian { relative_sigma: f64 },
}

impl Default for MutationOp {
    fn default() -> Self {
        MutationOp::UniformRedraw
    }
}

/// Genetic algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// Number of individuals, constant across generations. Default `10 * alpha`.
    pub population_size: usize,
    /// Number of generations produced after the initial population.
    pub generations: usize,
    /// Probability that a couple recombines instead of copying itself.
    pub crossover_prob: f64,
    /// Per-gene mutation probability. Default `2 / population_size`.
    pub mutation_prob: f64,
    /// Mutation operator; the default uniform redraw is what the scan mode
    /// relies on.
    #[serde(default)]
    pub mutation_op: MutationOp,
    /// Reinsert the best-ever individual into each new generation.
    pub elitism: bool,
    pub seed: u64,
}

impl GaConfig {
    /// Defaults for an `alpha`-parameter problem: population `10 * alpha`,
    /// 30 generations, crossover 0.8, mutation `2 / population`.
    pub fn for_alpha(alpha: usize, seed: u64) -> Self {
        let population_size = 10 * alpha;
        Self {
            population_size,
            generations: 30,
            crossover_prob: 0.8,
            mutation_prob: 2.0 / population_size as f64,
            mutation_op: MutationOp::UniformRedraw,
            elitism: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population_size must be even and >= 2, got {}",
                self.population_size
            )));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if let MutationOp::Gaussian { relative_sigma } = self.mutation_op {
            if relative_sigma.is_nan() || relative_sigma <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "gaussian mutation needs a positive relative_sigma, got {relative_sigma}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-generation summary; generation 0 is the initial random population.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_cost: f64,
    pub mean_cost: f64,
    pub best_genes: Vec<f64>,
}

/// Full history of a GA run: per-generation summaries and every evaluated
/// individual (consumed by the scan's scatter analysis).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaTrace {
    pub records: Vec<GenerationRecord>,
    pub evaluations: Vec<Individual>,
}

/// Draws `population_size` gene vectors uniformly within the bounds.
pub fn init_population(
    space: &ParameterSpace,
    population_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<f64>> {
    (0..population_size)
        .map(|_| {
            space
                .lower()
                .iter()
                .zip(space.upper())
                .map(|(&lo, &hi)| rng.random_range(lo..=hi))
                .collect()
        })
        .collect()
}

/// Fitness-proportional (roulette-wheel) selection with replacement: draws
/// as many parents as there are fitness values and pairs them sequentially.
pub fn select_parents(fitnesses: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    if fitnesses.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::InvalidFitness(
            "fitness values must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = fitnesses.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::InvalidFitness("total fitness is zero or not finite".into()));
    }
    let mut cumulative = Vec::with_capacity(fitnesses.len());
    let mut acc = 0.0;
    for &f in fitnesses {
        acc += f;
        cumulative.push(acc);
    }
    let draw = |rng: &mut ChaCha8Rng| -> usize {
        let u = rng.random_range(0.0..total);
        cumulative.partition_point(|&c| c <= u).min(fitnesses.len() - 1)
    };
    Ok((0..fitnesses.len() / 2)
        .map(|_| (draw(rng), draw(rng)))
        .collect())
}

/// Arithmetic crossover with a fixed blend coefficient:
/// `y1 = a*x1 + (1-a)*x2`, `y2 = (1-a)*x1 + a*x2`.
///
/// Both children share the rounded difference term `a*(x1-x2)`, which keeps
/// `y1 + y2` within one ulp of `x1 + x2` per component, and are clamped into
/// the componentwise hull of the parents so bound closure holds exactly.
pub fn crossover_blend(x1: &[f64], x2: &[f64], a: f64) -> (Vec<f64>, Vec<f64>) {
    if a >= 1.0 {
        return (x1.to_vec(), x2.to_vec());
    }
    if a <= 0.0 {
        return (x2.to_vec(), x1.to_vec());
    }
    let mut y1 = Vec::with_capacity(x1.len());
    let mut y2 = Vec::with_capacity(x1.len());
    for (&p, &q) in x1.iter().zip(x2) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let d = a * (p - q);
        y1.push((q + d).clamp(lo, hi));
        y2.push((p - d).clamp(lo, hi));
    }
    (y1, y2)
}

/// With probability `crossover_prob`, recombines the couple with a single
/// blend coefficient drawn uniformly from [0, 1]; otherwise the children
/// copy the parents.
pub fn crossover(
    x1: &[f64],
    x2: &[f64],
    crossover_prob: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    if rng.random::<f64>() < crossover_prob {
        let a = rng.random::<f64>();
        crossover_blend(x1, x2, a)
    } else {
        (x1.to_vec(), x2.to_vec())
    }
}

/// Per-gene mutation: each gene independently, with probability
/// `mutation_prob`, is rewritten by the mutation operator -- a fresh uniform
/// draw from its bound interval, or a clamped local Gaussian step.
pub fn mutate(
    genes: &[f64],
    space: &ParameterSpace,
    mutation_prob: f64,
    op: MutationOp,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    genes
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            if rng.random::<f64>() < mutation_prob {
                let (lo, hi) = (space.lower()[i], space.upper()[i]);
                match op {
                    MutationOp::UniformRedraw => rng.random_range(lo..=hi),
                    MutationOp::Gaussian { relative_sigma } => {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        (g + z * relative_sigma * (hi - lo)).clamp(lo, hi)
                    }
                }
            } else {
                g
            }
        })
        .collect()
}

fn evaluate<F>(cost_fn: &F, genes: Vec<Vec<f64>>) -> Vec<Individual>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    genes
        .into_par_iter()
        .map(|g| {
            let cost = cost_fn(&g);
            Individual::evaluated(g, cost)
        })
        .collect()
}

fn best_index(population: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in population.iter().enumerate() {
        if ind.cost < population[best].cost {
            best = i;
        }
    }
    best
}

fn record(generation: usize, population: &[Individual]) -> GenerationRecord {
    let best = &population[best_index(population)];
    let mean_cost = population.iter().map(|i| i.cost).sum::<f64>() / population.len() as f64;
    GenerationRecord {
        generation,
        best_cost: best.cost,
        mean_cost,
        best_genes: best.genes.clone(),
    }
}

/// Runs the generational loop: evaluate, select, crossover, mutate, replace,
/// for exactly `config.generations` generations. Returns the best-ever
/// individual and the full trace.
///
/// `cost_fn` must map evaluation failures to `+inf` rather than panicking;
/// such individuals get fitness 0 and die out of the selection pool.
pub fn run_ga<F>(
    cost_fn: &F,
    space: &ParameterSpace,
    config: &GaConfig,
) -> Result<(Individual, GaTrace)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = GaTrace::default();

    let mut population = evaluate(cost_fn, init_population(space, config.population_size, &mut rng));
    trace.evaluations.extend(population.iter().cloned());
    trace.records.push(record(0, &population));
    let mut best_ever = population[best_index(&population)].clone();

    for generation in 1..=config.generations {
        let fitnesses: Vec<f64> = population.iter().map(|i| i.fitness).collect();
        let couples = select_parents(&fitnesses, &mut rng)?;

        let mut children_genes = Vec::with_capacity(config.population_size);
        for (p1, p2) in couples {
            let (y1, y2) = crossover(
                &population[p1].genes,
                &population[p2].genes,
                config.crossover_prob,
                &mut rng,
            );
            children_genes.push(mutate(&y1, space, config.mutation_prob, config.mutation_op, &mut rng));
            children_genes.push(mutate(&y2, space, config.mutation_prob, config.mutation_op, &mut rng));
        }

        let mut children = evaluate(cost_fn, children_genes);
        trace.evaluations.extend(children.iter().cloned());

        if config.elitism {
            let child_best = best_index(&children);
            if best_ever.cost < children[child_best].cost {
                let mut worst = 0;
                for (i, c) in children.iter().enumerate() {
                    if c.cost > children[worst].cost {
                        worst = i;
                    }
                }
                children[worst] = best_ever.clone();
            }
        }

        let gen_best = best_index(&children);
        if children[gen_best].cost < best_ever.cost {
            best_ever = children[gen_best].clone();
        }
        trace.records.push(record(generation, &children));
        population = children;
    }

    Ok((best_ever, trace))
}
