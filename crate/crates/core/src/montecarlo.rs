//! Latin hypercube Monte Carlo with a confidence-interval stopping rule.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::costmodel::{evaluate, total_cloud_cost, ScenarioParams};
use crate::error::{Error, Result};
use crate::feasibility::nominal_decision;
use crate::rng::{stream, Rng};
use crate::topology::Topology;

const LHS_STREAM: u64 = 0x6c68_7300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub max_trials: usize,
    /// Trials drawn per Latin hypercube batch; the rule is checked after
    /// each batch.
    pub batch: usize,
    pub ci_level: f64,
    pub target_rel_error: f64,
    /// Compare the halfwidth with the target directly instead of relative
    /// to the running mean.
    pub absolute: bool,
    /// Extra sampled ranges besides the offload probability.
    pub pi_f_range: Option<(f64, f64)>,
    pub arrival_range: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            max_trials: 1000,
            batch: 50,
            ci_level: 0.95,
            target_rel_error: 0.01,
            absolute: false,
            pi_f_range: None,
            arrival_range: None,
            seed: 1,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.max_trials < 2 {
            return bad("max_trials must be at least 2");
        }
        if self.batch < 2 {
            return bad("batch must be at least 2");
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad("ci_level must be in (0, 1)");
        }
        if !(self.target_rel_error > 0.0) {
            return bad("target_rel_error must be positive");
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        1 + self.pi_f_range.is_some() as usize + self.arrival_range.is_some() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial: usize,
    pub pi_c: f64,
    pub savings: f64,
    pub running_mean: f64,
    pub halfwidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    /// Offload probability maximising the fitted savings.
    pub estimate: f64,
    pub estimate_halfwidth: f64,
    pub mean_savings: f64,
    pub ci_halfwidth: f64,
    pub trials_used: usize,
    pub samples: Vec<Trial>,
}

/// `n` points in `[0, 1)^dims`, one per stratum in every dimension.
pub fn lhs_sample(n: usize, dims: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; dims]; n];
    for d in 0..dims {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, k) in pts.iter_mut().zip(strata) {
            let x = (k as f64 + rng.random::<f64>()) / n as f64;
            // guard against rounding up to the next stratum
            p[d] = x.min(((k + 1) as f64 / n as f64).next_down());
        }
    }
    pts
}

pub fn z_value(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + level / 2.0)
}

pub fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Normal-approximation halfwidth z * s / sqrt(n).
pub fn ci_halfwidth(samples: &[f64], level: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (_, sd) = mean_sd(samples);
    Ok(z_value(level) * sd / (samples.len() as f64).sqrt())
}

fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<([f64; 3], [[f64; 3]; 3])> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *x = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    let mut x = [0.0; 3];
    for i in 0..3 {
        x[i] = (0..3).map(|k| inv[i][k] * v[k]).sum();
    }
    Some((x, inv))
}

/// Arg-max over [0, 1] of the least-squares quadratic through (x, y), with
/// a delta-method halfwidth for interior maxima.
pub fn quadratic_argmax(xs: &[f64], ys: &[f64], z: f64) -> (f64, f64) {
    let mut m = [[0.0; 3]; 3];
    let mut v = [0.0; 3];
    for (x, y) in xs.iter().zip(ys) {
        let p = [1.0, *x, x * x];
        for i in 0..3 {
            for k in 0..3 {
                m[i][k] += p[i] * p[k];
            }
            v[i] += p[i] * y;
        }
    }
    let Some((beta, inv)) = solve3(m, v) else {
        return (0.0, 0.0);
    };
    let [a, b, c] = beta;
    let fit = |x: f64| a + b * x + c * x * x;
    if c < 0.0 {
        let x = -b / (2.0 * c);
        if (0.0..=1.0).contains(&x) {
            let dof = xs.len().saturating_sub(3).max(1) as f64;
            let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - fit(*x)).powi(2)).sum();
            let s2 = rss / dof;
            let g = [0.0, -1.0 / (2.0 * c), b / (2.0 * c * c)];
            let var: f64 = (0..3)
                .map(|i| (0..3).map(|k| g[i] * inv[i][k] * g[k]).sum::<f64>())
                .sum::<f64>()
                * s2;
            return (x, z * var.max(0.0).sqrt());
        }
    }
    if fit(1.0) > fit(0.0) {
        (1.0, 0.0)
    } else {
        (0.0, 0.0)
    }
}

/// Sample the offload probability (first coordinate of each point) and any
/// extra dimensions, evaluating `objective` until the savings mean is known
/// to the target precision or the trial budget runs out.
pub fn estimate_pi_c<F>(objective: F, cfg: &McConfig) -> Result<McResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let z = z_value(cfg.ci_level);
    let mut points: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut samples = Vec::new();
    let mut batch_no = 0u64;
    let mut halfwidth = f64::INFINITY;
    while values.len() < cfg.max_trials {
        let n = cfg.batch.min(cfg.max_trials - values.len());
        let pts = lhs_sample(n, cfg.dims(), &mut stream(cfg.seed, LHS_STREAM, batch_no));
        batch_no += 1;
        let base = values.len();
        let out: Vec<Result<f64>> = pts.par_iter().map(|p| objective(p)).collect();
        for (k, (p, r)) in pts.iter().zip(out).enumerate() {
            let trial = base + k;
            let s = r.map_err(|e| Error::Trial {
                trial,
                message: e.to_string(),
            })?;
            points.push(p[0]);
            values.push(s);
            let (mean, sd) = mean_sd(&values);
            halfwidth = if values.len() >= 2 {
                z * sd / (values.len() as f64).sqrt()
            } else {
                f64::INFINITY
            };
            samples.push(Trial {
                trial,
                pi_c: p[0],
                savings: s,
                running_mean: mean,
                halfwidth,
            });
        }
        let mean = samples.last().map_or(0.0, |t| t.running_mean);
        let err = if cfg.absolute || mean == 0.0 {
            halfwidth
        } else {
            halfwidth / mean.abs()
        };
        if err == 0.0 || err < cfg.target_rel_error {
            break;
        }
    }
    let (estimate, estimate_halfwidth) = quadratic_argmax(&points, &values, z);
    Ok(McResult {
        estimate,
        estimate_halfwidth,
        mean_savings: samples.last().map_or(0.0, |t| t.running_mean),
        ci_halfwidth: halfwidth,
        trials_used: values.len(),
        samples,
    })
}

fn lerp(r: (f64, f64), u: f64) -> f64 {
    r.0 + u * (r.1 - r.0)
}

/// Cloud-only minus fog-assisted total cost of the nominal placement at the
/// sampled scenario.
pub fn savings_objective<'a>(
    topo: &'a Topology,
    params: &'a ScenarioParams,
    cfg: &'a McConfig,
) -> impl Fn(&[f64]) -> Result<f64> + Sync + 'a {
    move |p: &[f64]| {
        let mut sp = params.clone();
        sp.pi_c = p[0];
        let mut d = 1;
        if let Some(r) = cfg.pi_f_range {
            sp.pi_f = lerp(r, p[d]);
            d += 1;
        }
        if let Some(r) = cfg.arrival_range {
            sp.arrival_rate = lerp(r, p[d]);
        }
        let cloud = total_cloud_cost(topo, &sp)?.breakdown.total;
        let dv = nominal_decision(topo, &sp);
        Ok(cloud - evaluate(&dv, topo, &sp).breakdown.total)
    }
}

pub fn write_trials_csv<W: Write>(samples: &[Trial], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
