//! Run configuration loaded from JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::costmodel::ScenarioParams;
use crate::error::{Error, Result};
use crate::feasibility::PenaltyWeights;
use crate::mde::MdeConfig;
use crate::montecarlo::McConfig;
use crate::topology::TopologyConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostSweepConfig {
    pub consumers: Vec<usize>,
    pub arrival_rates: Vec<f64>,
    pub fog_nodes: Vec<usize>,
    pub generations: usize,
    pub pop_size: usize,
}

impl Default for CostSweepConfig {
    fn default() -> Self {
        CostSweepConfig {
            consumers: (50..=95).step_by(5).collect(),
            arrival_rates: vec![0.5, 1.0, 1.5, 2.0],
            fog_nodes: vec![20, 30, 40, 50],
            generations: 200,
            pop_size: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Consumer counts for the latency and energy comparisons.
    pub consumers: Vec<u64>,
    /// Fog network efficiency used by the latency comparison.
    pub latency_fne: f64,
    pub fne_levels: Vec<f64>,
    pub energy_fne: f64,
    pub cost: CostSweepConfig,
    pub replications: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            consumers: (1..=10).map(|k| k * 10_000).collect(),
            latency_fne: 0.25,
            fne_levels: vec![1.0, 0.8, 0.5, 0.01, 0.0],
            energy_fne: 0.5,
            cost: CostSweepConfig::default(),
            replications: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub topology: TopologyConfig,
    /// Small network used by the optimizer cost sweeps.
    pub pilot: TopologyConfig,
    pub params: ScenarioParams,
    pub mde: MdeConfig,
    pub mc: McConfig,
    pub penalty: PenaltyWeights,
    pub sweeps: SweepConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            topology: TopologyConfig::default(),
            pilot: TopologyConfig::pilot(),
            params: ScenarioParams::default(),
            mde: MdeConfig::default(),
            mc: McConfig::default(),
            penalty: PenaltyWeights::default(),
            sweeps: SweepConfig::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.mde.validate()?;
        self.mc.validate()?;
        let s = &self.sweeps;
        let bad = |m: &str| Err(Error::Config(m.into()));
        if s.consumers.is_empty() || s.fne_levels.is_empty() {
            return bad("sweep ranges must be non-empty");
        }
        if s.cost.consumers.is_empty() || s.cost.arrival_rates.is_empty() || s.cost.fog_nodes.is_empty() {
            return bad("cost sweep ranges must be non-empty");
        }
        if s.replications == 0 {
            return bad("replications must be at least 1");
        }
        let in_unit = |x: &f64| (0.0..=1.0).contains(x);
        if !s.fne_levels.iter().all(in_unit) || !in_unit(&s.latency_fne) || !in_unit(&s.energy_fne) {
            return bad("fog network efficiency levels must lie in [0, 1]");
        }
        if s.cost.arrival_rates.iter().any(|r| !(*r > 0.0)) {
            return bad("arrival rates must be positive");
        }
        Ok(())
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
