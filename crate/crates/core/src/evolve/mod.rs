//! Generational genetic algorithm over bit-string chromosomes.
//!
//! One generation: keep the `elite_count` best individuals unchanged, pick
//! the remaining parents with stochastic universal sampling over linear
//! rank probabilities, recombine consecutive pairs with uniform crossover,
//! apply bit-flip mutation to the offspring, evaluate, and re-sort.
//!
//! All randomness comes from one ChaCha8 stream owned by [`GaRunState`];
//! fitness evaluations are pure and run in parallel without touching it,
//! so results are identical regardless of thread count.

mod checkpoint;
mod objective;

pub use checkpoint::{checkpoint_load, checkpoint_save, config_hash, Checkpoint};
pub use objective::{objective, ErrorMode, Target};

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genome::Chromosome;

/// Objective value of a chromosome in ms^2; lower is better.
pub trait Fitness: Sync {
    fn evaluate(&self, chromosome: &Chromosome) -> Result<f64>;
}

impl<F> Fitness for F
where
    F: Fn(&Chromosome) -> Result<f64> + Sync,
{
    fn evaluate(&self, chromosome: &Chromosome) -> Result<f64> {
        self(chromosome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability.
    pub mutation_rate: f64,
    /// Expected offspring count of the best individual, in `[1, 2]`.
    pub selective_pressure: f64,
    pub elite_count: usize,
    pub max_generations: usize,
    /// Stop once the best objective is at or below this value (ms^2).
    pub mse_target: f64,
    pub seed: u64,
    /// Squared error charged when an output spike is missing or spurious (ms^2).
    pub miss_penalty: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 200,
            crossover_rate: 0.6,
            mutation_rate: 0.01,
            selective_pressure: 1.5,
            elite_count: 8,
            max_generations: 500,
            mse_target: 0.25,
            seed: 0,
            miss_penalty: 100.0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::param("population_size must be >= 1"));
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !(1.0..=2.0).contains(&self.selective_pressure) {
            return Err(Error::param(format!(
                "selective_pressure must be in [1, 2], got {}",
                self.selective_pressure
            )));
        }
        if self.elite_count > self.population_size {
            return Err(Error::param("elite_count cannot exceed population_size"));
        }
        if self.mse_target.is_nan() {
            return Err(Error::param("mse_target must be a number"));
        }
        if !(self.miss_penalty >= 0.0) {
            return Err(Error::param("miss_penalty must be >= 0"));
        }
        Ok(())
    }

    /// Canonical text of every field, used to fingerprint runs.
    pub fn canonical_text(&self) -> String {
        format!(
            "population_size={}\ncrossover_rate={:?}\nmutation_rate={:?}\nselective_pressure={:?}\n\
             elite_count={}\nmax_generations={}\nmse_target={:?}\nseed={}\nmiss_penalty={:?}\n",
            self.population_size,
            self.crossover_rate,
            self.mutation_rate,
            self.selective_pressure,
            self.elite_count,
            self.max_generations,
            self.mse_target,
            self.seed,
            self.miss_penalty
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MseTarget,
    MaxGenerations,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MseTarget => "mse_target",
            StopReason::MaxGenerations => "max_generations",
        }
    }
}

/// Everything needed to continue a run: the sorted population, the RNG
/// position and the per-generation history.
#[derive(Debug, Clone)]
pub struct GaRunState {
    pub generation: usize,
    /// Sorted best-first.
    pub population: Vec<Individual>,
    pub rng: ChaCha8Rng,
    pub history: Vec<GenerationStats>,
}

impl PartialEq for GaRunState {
    fn eq(&self, other: &Self) -> bool {
        self.generation == other.generation
            && self.population == other.population
            && self.history == other.history
            && self.rng.get_seed() == other.rng.get_seed()
            && self.rng.get_stream() == other.rng.get_stream()
            && self.rng.get_word_pos() == other.rng.get_word_pos()
    }
}

fn evaluate_all<F: Fitness + ?Sized>(
    fitness: &F,
    chromosomes: Vec<Chromosome>,
) -> Result<Vec<Individual>> {
    chromosomes
        .into_par_iter()
        .map(|chromosome| {
            let objective = fitness.evaluate(&chromosome)?;
            if objective.is_nan() || objective < 0.0 {
                return Err(Error::param(format!("fitness returned {objective}")));
            }
            Ok(Individual {
                chromosome,
                objective,
            })
        })
        .collect()
}

fn sort_population(pop: &mut [Individual]) {
    // stable: ties keep their previous order
    pop.sort_by(|a, b| a.objective.total_cmp(&b.objective));
}

impl GaRunState {
    /// Draws a uniformly random population from `cfg.seed` and evaluates it.
    pub fn initialize<F: Fitness + ?Sized>(
        cfg: &GaConfig,
        chromosome_len: usize,
        fitness: &F,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let chromosomes: Vec<_> = (0..cfg.population_size)
            .map(|_| {
                Chromosome::from_bits((0..chromosome_len).map(|_| rng.random::<bool>()).collect())
            })
            .collect();
        let mut population = evaluate_all(fitness, chromosomes)?;
        sort_population(&mut population);
        let mut state = GaRunState {
            generation: 0,
            population,
            rng,
            history: Vec::new(),
        };
        state.record();
        Ok(state)
    }

    fn record(&mut self) {
        let n = self.population.len() as f64;
        self.history.push(GenerationStats {
            generation: self.generation,
            best: self.best().objective,
            mean: self.population.iter().map(|i| i.objective).sum::<f64>() / n,
        });
    }

    pub fn best(&self) -> &Individual {
        &self.population[0]
    }

    pub fn stop_reason(&self, cfg: &GaConfig) -> Option<StopReason> {
        if self.best().objective <= cfg.mse_target {
            Some(StopReason::MseTarget)
        } else if self.generation >= cfg.max_generations {
            Some(StopReason::MaxGenerations)
        } else {
            None
        }
    }
}

/// Linear ranking probabilities, index 0 being the best individual.
pub fn rank_probabilities(n: usize, eta_max: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("cannot rank an empty population"));
    }
    if !(1.0..=2.0).contains(&eta_max) {
        return Err(Error::param(format!(
            "eta_max must be in [1, 2], got {eta_max}"
        )));
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let eta_min = 2.0 - eta_max;
    let nf = n as f64;
    Ok((0..n)
        .map(|i| (eta_max - (eta_max - eta_min) * i as f64 / (nf - 1.0)) / nf)
        .collect())
}

/// Stochastic universal sampling: `k` equally spaced markers with a single
/// random offset, walked over the cumulative distribution. Returns indices
/// in marker order.
pub fn sus_select<R: Rng + ?Sized>(probs: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if probs.is_empty() {
        return Err(Error::param("no probabilities to sample from"));
    }
    if k == 0 {
        return Err(Error::param("must select at least one index"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::param(
            "probabilities must be finite and non-negative",
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("probabilities sum to {total}, not 1")));
    }
    let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let step = 1.0 / k as f64;
    let offset = rng.random::<f64>() * step;
    let mut picks = Vec::with_capacity(k);
    let mut i = 0;
    let mut cumulative = probs[0];
    for j in 0..k {
        let marker = offset + j as f64 * step;
        while marker >= cumulative && i < last_positive {
            i += 1;
            cumulative += probs[i];
        }
        picks.push(i);
    }
    Ok(picks)
}

/// With probability `crossover_rate` the parents exchange every bit where a
/// uniform random mask is set; otherwise the children are copies.
pub fn uniform_crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    crossover_rate: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if a.len() != b.len() {
        return Err(Error::shape(format!(
            "cannot cross chromosomes of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if rng.random::<f64>() < crossover_rate {
        let mask: Vec<bool> = (0..a.len()).map(|_| rng.random::<bool>()).collect();
        crossover_with_mask(a, b, &mask)
    } else {
        Ok((a.clone(), b.clone()))
    }
}

/// Children exchange the parents' bits wherever `mask` is set.
pub fn crossover_with_mask(
    a: &Chromosome,
    b: &Chromosome,
    mask: &[bool],
) -> Result<(Chromosome, Chromosome)> {
    if a.len() != b.len() || mask.len() != a.len() {
        return Err(Error::shape("parents and mask must have equal lengths"));
    }
    let mut c = a.clone();
    let mut d = b.clone();
    let (cb, db) = (c.bits_mut(), d.bits_mut());
    for (k, &swap) in mask.iter().enumerate() {
        if swap {
            std::mem::swap(&mut cb[k], &mut db[k]);
        }
    }
    Ok((c, d))
}

/// Flips each bit independently with probability `p_m`.
pub fn bitflip_mutate<R: Rng + ?Sized>(chromosome: &mut Chromosome, p_m: f64, rng: &mut R) {
    for bit in chromosome.bits_mut() {
        if rng.random::<f64>() < p_m {
            *bit = !*bit;
        }
    }
}

/// Advances `state` by one generation.
pub fn evolve_generation<F: Fitness + ?Sized>(
    state: &mut GaRunState,
    cfg: &GaConfig,
    fitness: &F,
) -> Result<()> {
    let n = state.population.len();
    if n != cfg.population_size {
        return Err(Error::shape(format!(
            "population has {n} individuals, config expects {}",
            cfg.population_size
        )));
    }
    let elites = cfg.elite_count.min(n);
    let offspring_count = n - elites;

    let mut next: Vec<Individual> = state.population[..elites].to_vec();
    if offspring_count > 0 {
        let probs = rank_probabilities(n, cfg.selective_pressure)?;
        let mut parents = sus_select(&probs, offspring_count, &mut state.rng)?;
        parents.shuffle(&mut state.rng);

        let mut children = Vec::with_capacity(offspring_count);
        for pair in parents.chunks(2) {
            match *pair {
                [i, j] => {
                    let (c, d) = uniform_crossover(
                        &state.population[i].chromosome,
                        &state.population[j].chromosome,
                        cfg.crossover_rate,
                        &mut state.rng,
                    )?;
                    children.push(c);
                    children.push(d);
                }
                [i] => children.push(state.population[i].chromosome.clone()),
                _ => unreachable!(),
            }
        }
        for child in &mut children {
            bitflip_mutate(child, cfg.mutation_rate, &mut state.rng);
        }
        next.extend(evaluate_all(fitness, children)?);
    }
    sort_population(&mut next);
    state.population = next;
    state.generation += 1;
    state.record();
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub state: GaRunState,
    pub stop: StopReason,
}

impl GaOutcome {
    pub fn best(&self) -> &Individual {
        self.state.best()
    }

    pub fn history(&self) -> &[GenerationStats] {
        &self.state.history
    }
}

/// Runs from a fresh random population until a stop condition holds.
pub fn run_ga<F: Fitness + ?Sized>(
    cfg: &GaConfig,
    chromosome_len: usize,
    fitness: &F,
) -> Result<GaOutcome> {
    let mut state = GaRunState::initialize(cfg, chromosome_len, fitness)?;
    let stop = advance(&mut state, cfg, fitness, None, |_| Ok(()))?.expect("no pause requested");
    Ok(GaOutcome { state, stop })
}

/// Evolves until a stop condition holds or, if `pause_at` is given, until
/// that generation is reached (returning `None`). `after_generation` runs
/// after every completed generation, e.g. to write checkpoints.
pub fn advance<F, H>(
    state: &mut GaRunState,
    cfg: &GaConfig,
    fitness: &F,
    pause_at: Option<usize>,
    mut after_generation: H,
) -> Result<Option<StopReason>>
where
    F: Fitness + ?Sized,
    H: FnMut(&GaRunState) -> Result<()>,
{
    cfg.validate()?;
    loop {
        if let Some(reason) = state.stop_reason(cfg) {
            return Ok(Some(reason));
        }
        if pause_at.is_some_and(|g| state.generation >= g) {
            return Ok(None);
        }
        evolve_generation(state, cfg, fitness)?;
        after_generation(state)?;
    }
}

/// Tab-separated `generation, best_mse, avg_mse` table.
pub fn write_history<W: Write>(mut w: W, history: &[GenerationStats]) -> io::Result<()> {
    writeln!(w, "generation\tbest_mse\tavg_mse")?;
    for h in history {
        writeln!(w, "{}\t{}\t{}", h.generation, h.best, h.mean)?;
    }
    Ok(())
}
