//! Fog-assisted cloud workload placement for smart-grid networks.
//!
//! The crate evaluates a latency/energy/emission cost model over a synthetic
//! city topology, checks placements against the full constraint set, and
//! searches for cheap placements with a niching differential evolution.

pub mod config;
pub mod costmodel;
pub mod error;
pub mod feasibility;
pub mod harness;
pub mod mde;
pub mod montecarlo;
pub mod problem;
pub mod queueing;
pub mod rng;
pub mod scalar;
pub mod topology;
pub mod toy;

pub use config::Config;
pub use costmodel::{CostBreakdown, LatencyTerms, PowerTerms, ScenarioParams};
pub use error::{Error, Result};
pub use feasibility::{DecisionVector, FeasibilityReport};
pub use scalar::{Field, Real};
pub use topology::{Topology, TopologyConfig};

/// Default floating scalar used by the physical model.
pub type Cost = f64;
/// Exact rational scalar used by the unit-cost worked example.
pub type Exact = num_rational::Ratio<i64>;
/// Cost breakdown in physical units.
pub type Breakdown = CostBreakdown<Cost>;
/// Cost breakdown in exact unit-cost arithmetic.
pub type ExactBreakdown = CostBreakdown<Exact>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
