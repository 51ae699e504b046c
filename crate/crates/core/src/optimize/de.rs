//! DE/rand/1/bin over the unit square.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    pub population_size: usize,
    pub mutation_factor: f64,
    pub crossover_rate: f64,
    pub max_generations: usize,
    pub seed: u64,
    pub convergence_tolerance: f64,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self {
            population_size: 30,
            mutation_factor: 0.8,
            crossover_rate: 0.9,
            max_generations: 200,
            seed: 0,
            convergence_tolerance: 1e-10,
        }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(CascadeError::InvalidInput(format!(
                "population_size {} must be at least 4",
                self.population_size
            )));
        }
        if !(self.mutation_factor > 0.0 && self.mutation_factor < 2.0) {
            return Err(CascadeError::InvalidInput(format!(
                "mutation_factor {} outside (0, 2)",
                self.mutation_factor
            )));
        }
        if !(self.crossover_rate > 0.0 && self.crossover_rate <= 1.0) {
            return Err(CascadeError::InvalidInput(format!(
                "crossover_rate {} outside (0, 1]",
                self.crossover_rate
            )));
        }
        if !(self.convergence_tolerance >= 0.0) {
            return Err(CascadeError::InvalidInput(format!(
                "convergence_tolerance {} must be non-negative",
                self.convergence_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DEResult {
    pub y1: f64,
    pub y2: f64,
    pub value: f64,
    pub generations: usize,
}

/// Minimizes `f` over `[0, 1]^2`. Each generation builds every trial from
/// the previous generation's population, then applies greedy selection;
/// the result depends only on `config`.
pub fn differential_evolution<F>(f: F, config: &DEConfig) -> Result<DEResult>
where
    F: Fn(f64, f64) -> f64,
{
    config.validate()?;
    let np = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pop: Vec<[f64; 2]> = (0..np).map(|_| [rng.random(), rng.random()]).collect();
    let mut values: Vec<f64> = pop.iter().map(|p| f(p[0], p[1])).collect();

    let mut generations = 0;
    while generations < config.max_generations {
        let (lo, hi) = spread(&values);
        if hi - lo < config.convergence_tolerance {
            break;
        }
        generations += 1;
        let mut next = pop.clone();
        let mut next_values = values.clone();
        for i in 0..np {
            let [a, b, c] = distinct_others(&mut rng, np, i);
            let forced = rng.random_range(0..2);
            let mut trial = pop[i];
            for d in 0..2 {
                if d == forced || rng.random::<f64>() < config.crossover_rate {
                    let v = pop[a][d] + config.mutation_factor * (pop[b][d] - pop[c][d]);
                    trial[d] = v.clamp(0.0, 1.0);
                }
            }
            let value = f(trial[0], trial[1]);
            if value <= values[i] {
                next[i] = trial;
                next_values[i] = value;
            }
        }
        pop = next;
        values = next_values;
    }

    let best = (0..np)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("population is non-empty");
    Ok(DEResult {
        y1: pop[best][0],
        y2: pop[best][1],
        value: values[best],
        generations,
    })
}

fn spread(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn distinct_others<R: Rng>(rng: &mut R, np: usize, exclude: usize) -> [usize; 3] {
    let picked = sample(rng, np - 1, 3);
    let mut out = [0; 3];
    for (slot, idx) in out.iter_mut().zip(picked.iter()) {
        *slot = if idx >= exclude { idx + 1 } else { idx };
    }
    out
}
