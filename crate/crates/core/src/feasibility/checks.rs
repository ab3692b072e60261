use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DecisionVector;
use crate::costmodel::{analyze, Analysis, ScenarioParams};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Association and bandwidth units only from reachable fog nodes.
    ListedFog,
    /// Associated iff at least one bandwidth unit is held there.
    BuCoupling,
    /// A bandwidth unit serves at most one consumer.
    BuExclusive,
    /// Offloading consumers associate with exactly one fog node.
    SingleFog,
    /// Distribution only from fog nodes holding a matching consumer.
    ListedFlow,
    /// Distribution indicator agrees with the forwarded rate.
    FlowIndicator,
    /// Everything uploaded to a fog node is forwarded for processing.
    FlowConservation,
    /// VMs per fog node within the host limit.
    VmCount,
    /// Processing only where a VM of the app is deployed.
    VmService,
    /// Distribution only towards fog nodes hosting the app.
    VmFlow,
    /// VM storage within node storage.
    Storage,
    /// Scaled processing load within node capacity.
    Processing,
    /// Fog queue strictly below its service rate.
    Stability,
    /// End-to-end latency within the application bound.
    Delay,
}

impl Constraint {
    pub const ALL: [Constraint; 14] = [
        Constraint::ListedFog,
        Constraint::BuCoupling,
        Constraint::BuExclusive,
        Constraint::SingleFog,
        Constraint::ListedFlow,
        Constraint::FlowIndicator,
        Constraint::FlowConservation,
        Constraint::VmCount,
        Constraint::VmService,
        Constraint::VmFlow,
        Constraint::Storage,
        Constraint::Processing,
        Constraint::Stability,
        Constraint::Delay,
    ];
}

/// Violation magnitude per checked constraint; zero means satisfied.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: BTreeMap<Constraint, f64>,
}

impl FeasibilityReport {
    fn with(keys: &[Constraint]) -> Self {
        FeasibilityReport {
            violations: keys.iter().map(|k| (*k, 0.0)).collect(),
        }
    }

    fn add(&mut self, c: Constraint, m: f64) {
        if m > 0.0 {
            *self.violations.entry(c).or_insert(0.0) += m;
        }
    }

    pub fn magnitude(&self, c: Constraint) -> f64 {
        self.violations.get(&c).copied().unwrap_or(0.0)
    }

    pub fn passes(&self, c: Constraint) -> bool {
        self.magnitude(c) == 0.0
    }

    pub fn feasible(&self) -> bool {
        self.violations.values().all(|m| *m == 0.0)
    }

    pub fn failing(&self) -> Vec<Constraint> {
        self.violations
            .iter()
            .filter(|(_, m)| **m > 0.0)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn merge(mut self, other: FeasibilityReport) -> Self {
        for (c, m) in other.violations {
            *self.violations.entry(c).or_insert(0.0) += m;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyWeights {
    pub default: f64,
    pub overrides: BTreeMap<Constraint, f64>,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        PenaltyWeights {
            default: 1e4,
            overrides: BTreeMap::new(),
        }
    }
}

impl PenaltyWeights {
    pub fn weight(&self, c: Constraint) -> f64 {
        self.overrides.get(&c).copied().unwrap_or(self.default)
    }
}

pub fn penalty(report: &FeasibilityReport, weights: &PenaltyWeights) -> f64 {
    report
        .violations
        .iter()
        .map(|(c, m)| weights.weight(*c) * m)
        .sum()
}

pub fn check_association(dv: &DecisionVector, topo: &Topology) -> FeasibilityReport {
    let mut r = FeasibilityReport::with(&[
        Constraint::ListedFog,
        Constraint::BuCoupling,
        Constraint::BuExclusive,
        Constraint::SingleFog,
    ]);
    let (nc, nf) = dv.bv2.dim();
    let owner = topo.bu_owner();
    let mut held = ndarray::Array2::<usize>::zeros((nc, nf));
    for ((b, j), x) in dv.bv3.indexed_iter() {
        if *x {
            held[[j, owner[b]]] += 1;
        }
    }
    for b in 0..dv.bv3.nrows() {
        let users = dv.bv3.row(b).iter().filter(|x| **x).count();
        r.add(Constraint::BuExclusive, users.saturating_sub(1) as f64);
    }
    for j in 0..nc {
        let mut assoc = 0;
        for f in 0..nf {
            let a = dv.bv2[[j, f]];
            let units = held[[j, f]];
            let size = topo.fog_nodes[f].bandwidth_units.len() as f64;
            if !dv.bv_l[[j, f]] && (a || units > 0) {
                r.add(Constraint::ListedFog, 1.0);
            }
            let a = a as u8 as f64;
            let units = units as f64;
            r.add(
                Constraint::BuCoupling,
                (units / size - a).max(0.0) + (a - units).max(0.0),
            );
            assoc += dv.bv2[[j, f]] as i64;
        }
        let want = dv.bv1[j] as i64;
        r.add(Constraint::SingleFog, (assoc - want).abs() as f64);
    }
    r
}

pub fn check_workload(dv: &DecisionVector, topo: &Topology) -> FeasibilityReport {
    let mut r = FeasibilityReport::with(&[
        Constraint::ListedFlow,
        Constraint::FlowIndicator,
        Constraint::FlowConservation,
    ]);
    let (nf, _, na) = dv.bv4.dim();
    let mut holds = ndarray::Array2::from_elem((nf, na), false);
    let mut inflow = ndarray::Array2::<f64>::zeros((nf, na));
    for (j, c) in topo.consumers.iter().enumerate() {
        for f in 0..nf {
            if dv.bv2[[j, f]] {
                if dv.bv_l[[j, f]] {
                    holds[[f, c.app]] = true;
                }
                inflow[[f, c.app]] += dv.workload[[j, f]];
            }
        }
    }
    for f in 0..nf {
        for a in 0..na {
            let mut out = 0.0;
            for g in 0..nf {
                let lam = dv.interfog_rate[[f, g, a]];
                let on = dv.bv4[[f, g, a]];
                out += lam;
                if on && !holds[[f, a]] {
                    r.add(Constraint::ListedFlow, 1.0);
                }
                if (lam > 0.0 && !on) || (on && lam * 1e9 < 1.0) {
                    r.add(Constraint::FlowIndicator, 1.0);
                }
            }
            r.add(Constraint::FlowConservation, (inflow[[f, a]] - out).abs());
        }
    }
    r
}

pub fn check_vm(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> FeasibilityReport {
    let mut r = FeasibilityReport::with(&[
        Constraint::VmCount,
        Constraint::VmService,
        Constraint::VmFlow,
        Constraint::Storage,
        Constraint::Processing,
    ]);
    let (nf, _, na) = dv.bv4.dim();
    let mut load = ndarray::Array2::<f64>::zeros((nf, na));
    for ((f, p, a), lam) in dv.interfog_rate.indexed_iter() {
        load[[p, a]] += lam;
        if dv.bv4[[f, p, a]] && !dv.bv5[[a, p]] {
            r.add(Constraint::VmFlow, 1.0);
        }
    }
    for (p, fog) in topo.fog_nodes.iter().enumerate() {
        let vms = dv.vm_count(p);
        r.add(Constraint::VmCount, vms.saturating_sub(fog.max_vms() as usize) as f64);
        let storage = vms as f64 * params.vm_storage;
        r.add(Constraint::Storage, (storage - fog.storage_cap).max(0.0) / fog.storage_cap);
        let mut scaled = 0.0;
        for a in 0..na {
            if load[[p, a]] > 0.0 && !dv.bv5[[a, p]] {
                r.add(Constraint::VmService, 1.0);
            }
            scaled += params.scale_factor * load[[p, a]];
        }
        r.add(Constraint::Processing, (scaled - fog.proc_cap).max(0.0) / fog.proc_cap);
    }
    r
}

pub fn check_network(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> FeasibilityReport {
    network_from(&analyze(dv, topo, params), topo, params)
}

pub(crate) fn network_from(an: &Analysis, topo: &Topology, params: &ScenarioParams) -> FeasibilityReport {
    let mut r = FeasibilityReport::with(&[Constraint::Stability, Constraint::Delay]);
    for (p, fog) in topo.fog_nodes.iter().enumerate() {
        let cap = fog.service_rate * (1.0 - params.stability_margin);
        r.add(Constraint::Stability, (an.fog_load[p] - cap).max(0.0) / fog.service_rate);
    }
    let mut excess = vec![0.0f64; topo.apps];
    for (j, c) in topo.consumers.iter().enumerate() {
        if an.rates[j].0 > 0.0 {
            let e = an.chain[j] - params.delay_limit(c.app);
            excess[c.app] = excess[c.app].max(e);
        }
    }
    for e in excess {
        r.add(Constraint::Delay, e.max(0.0));
    }
    r
}

pub fn check_all(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> FeasibilityReport {
    check_with(dv, topo, params, &analyze(dv, topo, params))
}

pub(crate) fn check_with(
    dv: &DecisionVector,
    topo: &Topology,
    params: &ScenarioParams,
    an: &Analysis,
) -> FeasibilityReport {
    check_association(dv, topo)
        .merge(check_workload(dv, topo))
        .merge(check_vm(dv, topo, params))
        .merge(network_from(an, topo, params))
}
