//! Differential evolution with fitness sharing and an elite set.

mod sharing;

use std::cmp::Ordering;
use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Rng};
use crate::scalar::Real;

pub use sharing::{
    genome_distance, niche_count, niche_counts, shared_fitness_max, shared_fitness_min, sharing_value,
};

const INIT_STREAM: u64 = 0x696e_6974;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scored<T> {
    /// Objective plus penalty; lower is better.
    pub raw: T,
    pub feasible: bool,
}

/// A minimisation problem over the unit box `[0, 1]^dim`.
pub trait Problem<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, genome: &[T]) -> Scored<T>;
    /// Individuals injected into the initial population.
    fn seeds(&self) -> Vec<Vec<T>> {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdeConfig {
    pub pop_size: usize,
    /// `None` means 0.1 * sqrt(genome length).
    pub niche_radius: Option<f64>,
    pub share_exponent: f64,
    pub diff_weight: f64,
    pub crossover_rate: f64,
    pub elite_fraction: f64,
    pub max_generations: usize,
    /// Generations without relative improvement beyond `target_tolerance`
    /// before stopping.
    pub stagnation: usize,
    pub target_tolerance: f64,
    pub seed: u64,
}

impl Default for MdeConfig {
    fn default() -> Self {
        MdeConfig {
            pop_size: 60,
            niche_radius: None,
            share_exponent: 1.0,
            diff_weight: 0.5,
            crossover_rate: 0.9,
            elite_fraction: 0.5,
            max_generations: 500,
            stagnation: 50,
            target_tolerance: 1e-9,
            seed: 1,
        }
    }
}

impl MdeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.pop_size < 4 {
            return bad("pop_size must be at least 4");
        }
        if !(0.0..1.0).contains(&self.elite_fraction) {
            return bad("elite_fraction must be in [0, 1)");
        }
        if self.niche_radius.is_some_and(|r| r.is_nan() || r <= 0.0) {
            return bad("niche_radius must be positive");
        }
        if !(self.share_exponent > 0.0) {
            return bad("share_exponent must be positive");
        }
        if !(self.diff_weight >= 0.0 && self.diff_weight <= 2.0) {
            return bad("diff_weight must be in [0, 2]");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must be in [0, 1]");
        }
        Ok(())
    }

    pub fn elites(&self) -> usize {
        ((self.pop_size as f64 * self.elite_fraction).floor() as usize).min(self.pop_size - 1)
    }

    pub fn radius(&self, dim: usize) -> f64 {
        self.niche_radius.unwrap_or(0.1 * (dim.max(1) as f64).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best raw fitness seen so far.
    pub best_raw: f64,
    pub mean_raw: f64,
    pub best_shared: f64,
    pub feasible_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Stagnation,
    MaxGenerations,
}

#[derive(Clone, Debug)]
pub struct Individual<T> {
    pub genome: Vec<T>,
    pub score: Scored<T>,
}

#[derive(Clone, Debug)]
pub struct MdeResult<T> {
    /// Best feasible individual ever seen, or the lowest-penalty one if none
    /// was feasible.
    pub best: Individual<T>,
    pub generations: usize,
    pub stop: StopReason,
    pub history: Vec<GenerationStats>,
    /// Population after the last generation.
    pub population: Vec<Individual<T>>,
}

fn evaluate_all<T: Real, P: Problem<T>>(problem: &P, genomes: Vec<Vec<T>>) -> Vec<Individual<T>> {
    genomes
        .into_par_iter()
        .map(|g| Individual {
            score: problem.evaluate(&g),
            genome: g,
        })
        .collect()
}

fn cmp_t<T: Real>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}

/// Feasible beats infeasible, then lower raw fitness.
fn preferred<T: Real>(a: &Scored<T>, b: &Scored<T>) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => a.raw < b.raw,
    }
}

fn pick3(rng: &mut Rng, n: usize, skip: usize) -> [usize; 3] {
    let mut out = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let c = rng.random_range(0..n);
        if c != skip && !out[..k].contains(&c) {
            out[k] = c;
            k += 1;
        }
    }
    out
}

/// DE/rand/1/bin trial vector for target `i`, clamped to the unit box.
pub fn de_variation<T: Real>(pop: &[&[T]], i: usize, cfg: &MdeConfig, rng: &mut Rng) -> Vec<T> {
    let dim = pop[i].len();
    let [r1, r2, r3] = pick3(rng, pop.len(), i);
    let f = T::lit(cfg.diff_weight);
    let forced = rng.random_range(0..dim.max(1));
    (0..dim)
        .map(|j| {
            if j == forced || rng.random::<f64>() < cfg.crossover_rate {
                let v = pop[r1][j] + f * (pop[r2][j] - pop[r3][j]);
                v.max(T::zero()).min(T::one())
            } else {
                pop[i][j]
            }
        })
        .collect()
}

/// Minimise `problem`. For a given config the run is reproducible whatever
/// the number of worker threads.
pub fn evolve<T: Real, P: Problem<T>>(problem: &P, cfg: &MdeConfig) -> Result<MdeResult<T>> {
    cfg.validate()?;
    let dim = problem.dim();
    let n = cfg.pop_size;
    let n_elite = cfg.elites();
    let mut genomes: Vec<Vec<T>> = problem
        .seeds()
        .into_iter()
        .filter(|g| g.len() == dim)
        .take(n)
        .collect();
    while genomes.len() < n {
        let mut rng = stream(cfg.seed, INIT_STREAM, genomes.len() as u64);
        genomes.push((0..dim).map(|_| T::lit(rng.random::<f64>())).collect());
    }
    let mut pop = evaluate_all(problem, genomes);
    let mut best = pop[0].clone();
    let mut best_raw = pop[0].score.raw;
    for m in &pop {
        if preferred(&m.score, &best.score) {
            best = m.clone();
        }
        best_raw = best_raw.min(m.score.raw);
    }

    let rho = T::lit(cfg.radius(dim));
    let phi = T::lit(cfg.share_exponent);
    let mut history = Vec::new();
    let mut stagnant = 0;
    let mut generation = 0;
    let stop = loop {
        if generation >= cfg.max_generations {
            break StopReason::MaxGenerations;
        }
        generation += 1;
        let trials: Vec<Vec<T>> = {
            let views: Vec<&[T]> = pop.iter().map(|m| m.genome.as_slice()).collect();
            (0..n)
                .map(|i| de_variation(&views, i, cfg, &mut stream(cfg.seed, generation as u64, i as u64)))
                .collect()
        };
        let mut h = pop;
        h.extend(evaluate_all(problem, trials));

        // the elite set is refreshed by raw fitness; the remaining places
        // go to the best shared fitness
        let mut by_raw: Vec<usize> = (0..h.len()).collect();
        by_raw.sort_by(|a, b| cmp_t(h[*a].score.raw, h[*b].score.raw).then(a.cmp(b)));
        let elites = &by_raw[..n_elite];
        let views: Vec<&[T]> = h.iter().map(|m| m.genome.as_slice()).collect();
        let counts = niche_counts(&views, rho, phi);
        let shared: Vec<T> = h
            .iter()
            .zip(&counts)
            .map(|(m, c)| shared_fitness_min(m.score.raw, *c))
            .collect();
        let mut rest: Vec<usize> = (0..h.len()).filter(|i| !elites.contains(i)).collect();
        rest.sort_by(|a, b| cmp_t(shared[*a], shared[*b]).then(a.cmp(b)));
        let mut keep: Vec<usize> = elites.to_vec();
        keep.extend(rest.into_iter().take(n - n_elite));
        let best_shared = keep.iter().map(|i| shared[*i]).fold(T::infinity(), |a, b| a.min(b));
        keep.sort_unstable();
        let mut slots: Vec<Option<Individual<T>>> = h.into_iter().map(Some).collect();
        pop = keep.iter().map(|i| slots[*i].take().expect("kept once")).collect();

        let previous = best_raw;
        for m in &pop {
            if preferred(&m.score, &best.score) {
                best = m.clone();
            }
            best_raw = best_raw.min(m.score.raw);
        }
        let improved = previous - best_raw > T::lit(cfg.target_tolerance) * previous.abs();
        stagnant = if improved { 0 } else { stagnant + 1 };

        let mean = pop.iter().fold(T::zero(), |a, m| a + m.score.raw) / T::from_usize_exact(n);
        history.push(GenerationStats {
            generation,
            best_raw: best_raw.as_f64(),
            mean_raw: mean.as_f64(),
            best_shared: best_shared.as_f64(),
            feasible_count: pop.iter().filter(|m| m.score.feasible).count(),
        });
        if stagnant >= cfg.stagnation {
            break StopReason::Stagnation;
        }
    };
    Ok(MdeResult {
        best,
        generations: generation,
        stop,
        history,
        population: pop,
    })
}

pub fn write_history_csv<W: Write>(history: &[GenerationStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in history {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
