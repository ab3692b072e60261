//! Fitness sharing for niching.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn genome_distance<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Length(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
        .sqrt())
}

/// 1 - (d/rho)^phi inside the niche, 0 outside.
pub fn sharing_value<T: Real>(d: T, rho: T, phi: T) -> T {
    if d < rho {
        T::one() - (d / rho).powf(phi)
    } else {
        T::zero()
    }
}

/// Niche count of every member, self included, so each count is at least 1.
pub fn niche_counts<T: Real>(pop: &[&[T]], rho: T, phi: T) -> Vec<T> {
    let n = pop.len();
    let mut counts = vec![T::one(); n];
    for i in 0..n {
        for j in i + 1..n {
            let d = genome_distance(pop[i], pop[j]).unwrap_or(T::infinity());
            let s = sharing_value(d, rho, phi);
            counts[i] = counts[i] + s;
            counts[j] = counts[j] + s;
        }
    }
    counts
}

pub fn niche_count<T: Real>(i: usize, pop: &[&[T]], rho: T, phi: T) -> T {
    pop.iter().fold(T::zero(), |acc, g| {
        acc + sharing_value(genome_distance(pop[i], g).unwrap_or(T::infinity()), rho, phi)
    })
}

/// Shared fitness when minimising: crowded individuals are pushed up.
pub fn shared_fitness_min<T: Real>(raw: T, count: T) -> T {
    raw * count
}

/// Shared fitness when maximising.
pub fn shared_fitness_max<T: Real>(raw: T, count: T) -> T {
    raw / count
}
