//! Latency, energy and emission cost of fog-assisted and cloud-only
//! execution.

mod breakdown;
pub mod engine;
mod formulas;
mod params;

pub use breakdown::{write_breakdown_csv, BreakdownRow, CostBreakdown, PowerTerms};
pub use engine::{analyze, evaluate, total_cloud_cost, total_fog_cost, Analysis, Evaluation};
pub use formulas::{
    cloud_comp_power, dispatch_latency, emission_cost, fne, fog_comm_cost, fog_comp_power,
    interfog_latency, traffic_cost, tx_power, upload_latency, LatencyTerms, Regime,
};
pub use params::{CloudPower, FogPower, Prices, ScenarioParams, TxEnergy, Volumes};
