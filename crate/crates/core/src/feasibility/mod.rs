//! Decision vector, constraint checks and greedy repair.

mod checks;
mod flows;
mod repair;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::costmodel::ScenarioParams;
use crate::error::{Error, Result};
use crate::topology::Topology;

pub use checks::{
    check_all, check_association, check_network, check_vm, check_workload, penalty, Constraint,
    FeasibilityReport, PenaltyWeights,
};
pub use flows::{
    cloud_only_decision, complete_flows, distribute_free_bus, nominal_decision, provision_cloud,
};
pub use repair::{repair, RepairOutcome};
pub(crate) use checks::check_with;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub schema_version: u32,
    /// Offload flag per consumer.
    pub bv1: Vec<bool>,
    /// Association, consumer x fog.
    pub bv2: Array2<bool>,
    /// Bandwidth unit allocation, BU x consumer.
    pub bv3: Array2<bool>,
    /// Inter-fog distribution indicator, fog x fog x app.
    pub bv4: Array3<bool>,
    /// VM placement, app x fog.
    pub bv5: Array2<bool>,
    /// Reachability, consumer x fog.
    pub bv_l: Array2<bool>,
    /// Cloud server on/off.
    pub bv_c: Vec<bool>,
    /// Requests/s from consumer to fog.
    pub workload: Array2<f64>,
    /// Requests/s forwarded from fog to fog per app.
    pub interfog_rate: Array3<f64>,
    /// Requests/s computed at each server.
    pub cloud_workload: Vec<f64>,
    /// Requests/s dispatched from fog to server.
    pub dispatch_rate: Array2<f64>,
    /// Requests/s sent by each consumer straight to the cloud.
    pub direct_rate: Vec<f64>,
    /// GHz.
    pub cpu_freq: Vec<f64>,
    pub machines_on: Vec<u32>,
}

impl DecisionVector {
    /// All-zero decision shaped for `topo`, with reachability filled in.
    pub fn empty(topo: &Topology) -> Self {
        let (nc, nf, ns, na, nb) = (
            topo.n_consumers(),
            topo.n_fogs(),
            topo.n_servers(),
            topo.apps,
            topo.n_bus(),
        );
        let mut bv_l = Array2::from_elem((nc, nf), false);
        for (j, fogs) in topo.consumer_reach.iter().enumerate() {
            for &f in fogs {
                bv_l[[j, f]] = true;
            }
        }
        DecisionVector {
            schema_version: SCHEMA_VERSION,
            bv1: vec![true; nc],
            bv2: Array2::from_elem((nc, nf), false),
            bv3: Array2::from_elem((nb, nc), false),
            bv4: Array3::from_elem((nf, nf, na), false),
            bv5: Array2::from_elem((na, nf), false),
            bv_l,
            bv_c: vec![false; ns],
            workload: Array2::zeros((nc, nf)),
            interfog_rate: Array3::zeros((nf, nf, na)),
            cloud_workload: vec![0.0; ns],
            dispatch_rate: Array2::zeros((nf, ns)),
            direct_rate: vec![0.0; nc],
            cpu_freq: topo.servers.iter().map(|s| s.cpu_freq_range.0).collect(),
            machines_on: vec![0; ns],
        }
    }

    pub fn shape_matches(&self, topo: &Topology) -> bool {
        let (nc, nf, ns, na, nb) = (
            topo.n_consumers(),
            topo.n_fogs(),
            topo.n_servers(),
            topo.apps,
            topo.n_bus(),
        );
        self.bv1.len() == nc
            && self.bv2.dim() == (nc, nf)
            && self.bv3.dim() == (nb, nc)
            && self.bv4.dim() == (nf, nf, na)
            && self.bv5.dim() == (na, nf)
            && self.bv_l.dim() == (nc, nf)
            && self.bv_c.len() == ns
            && self.workload.dim() == (nc, nf)
            && self.interfog_rate.dim() == (nf, nf, na)
            && self.cloud_workload.len() == ns
            && self.dispatch_rate.dim() == (nf, ns)
            && self.direct_rate.len() == nc
            && self.cpu_freq.len() == ns
            && self.machines_on.len() == ns
    }

    /// Fogs the consumer is associated with, in index order.
    pub fn fogs_of(&self, consumer: usize) -> Vec<usize> {
        self.bv2
            .row(consumer)
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(f, _)| f)
            .collect()
    }

    pub fn fog_of(&self, consumer: usize) -> Option<usize> {
        self.bv2.row(consumer).iter().position(|b| *b)
    }

    pub fn bus_of(&self, consumer: usize) -> Vec<usize> {
        self.bv3
            .column(consumer)
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(u, _)| u)
            .collect()
    }

    pub fn bu_count(&self, consumer: usize) -> usize {
        self.bv3.column(consumer).iter().filter(|b| **b).count()
    }

    pub fn vm_count(&self, fog: usize) -> usize {
        self.bv5.column(fog).iter().filter(|b| **b).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dv: DecisionVector = serde_json::from_str(text)?;
        if dv.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema {
                found: dv.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(dv)
    }
}

/// Request rate of each consumer node, and the share entering the fog layer.
pub fn consumer_rates(topo: &Topology, params: &ScenarioParams, bv1: &[bool]) -> Vec<(f64, f64)> {
    topo.consumers
        .iter()
        .zip(bv1)
        .map(|(c, &offload)| {
            let rate = c.devices as f64 * params.arrival_rate;
            let share = if offload { 1.0 - params.pi_c } else { 0.0 };
            (rate, rate * share)
        })
        .collect()
}
