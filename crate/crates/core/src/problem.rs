//! Genome encoding of a placement and its evaluation for the optimiser.
//!
//! Genes live in [0, 1]. Association genes cover every (consumer, listed fog)
//! pair, VM genes every (app, fog) pair, and each server carries a
//! utilization-target gene and a CPU-frequency gene. Binary genes are on at
//! 0.5 and above.

use crate::costmodel::{evaluate, ScenarioParams};
use crate::feasibility::{
    check_all, check_with, complete_flows, distribute_free_bus, nominal_decision, penalty, provision_cloud,
    repair, DecisionVector, FeasibilityReport, PenaltyWeights,
};
use crate::mde::{Problem, Scored};
use crate::toy::{self, Fixture};
use crate::topology::Topology;

pub const THRESHOLD: f64 = 0.5;
pub const UTIL_RANGE: (f64, f64) = (0.5, 0.95);

#[derive(Clone, Debug)]
pub enum Objective {
    /// Total physical cost.
    Physical,
    /// Unit cost of the vehicular fixture.
    UnitCost(Box<Fixture>),
}

#[derive(Clone, Debug)]
pub struct PlacementProblem {
    pub topo: Topology,
    pub params: ScenarioParams,
    pub weights: PenaltyWeights,
    pub objective: Objective,
    pairs: Vec<(usize, usize)>,
    seeds: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub decision: DecisionVector,
    pub cost: f64,
    pub report: FeasibilityReport,
    pub penalty: f64,
}

impl PlacementProblem {
    pub fn new(topo: Topology, params: ScenarioParams, weights: PenaltyWeights) -> Self {
        let pairs = topo
            .consumer_reach
            .iter()
            .enumerate()
            .flat_map(|(j, l)| l.iter().map(move |f| (j, *f)))
            .collect();
        let mut p = PlacementProblem {
            topo,
            params,
            weights,
            objective: Objective::Physical,
            pairs,
            seeds: Vec::new(),
        };
        let nominal = nominal_decision(&p.topo, &p.params);
        p.seeds.push(p.encode(&nominal));
        p
    }

    pub fn toy(fx: Fixture) -> Self {
        let mut p = PlacementProblem::new(fx.topo.clone(), fx.params.clone(), PenaltyWeights::default());
        p.objective = Objective::UnitCost(Box::new(fx));
        p
    }

    /// Add a starting individual, typically the best decision of a nearby
    /// scenario. Decisions shaped for another topology are mapped by index.
    pub fn with_seed(mut self, dv: &DecisionVector) -> Self {
        let g = self.encode(dv);
        self.seeds.insert(0, g);
        self
    }

    fn vm_offset(&self) -> usize {
        self.pairs.len()
    }

    fn server_offset(&self) -> usize {
        self.pairs.len() + self.topo.apps * self.topo.n_fogs()
    }

    /// Genome of a decision. Out-of-range indices read as off.
    pub fn encode(&self, dv: &DecisionVector) -> Vec<f64> {
        let on = |b: bool| if b { 1.0 } else { 0.0 };
        let get2 = |a: &ndarray::Array2<bool>, i: usize, k: usize| a.get([i, k]).copied().unwrap_or(false);
        let mut g: Vec<f64> = self.pairs.iter().map(|&(j, f)| on(get2(&dv.bv2, j, f))).collect();
        for a in 0..self.topo.apps {
            for f in 0..self.topo.n_fogs() {
                g.push(on(get2(&dv.bv5, a, f)));
            }
        }
        for (c, s) in self.topo.servers.iter().enumerate() {
            let n = dv.machines_on.get(c).copied().unwrap_or(0);
            let y = dv.cloud_workload.get(c).copied().unwrap_or(0.0);
            let eta = dv.cpu_freq.get(c).copied().unwrap_or(s.cpu_freq_range.0);
            let util = if n > 0 && y > 0.0 {
                y / (n as f64 * self.params.machine_rate(eta))
            } else {
                self.params.target_utilization
            };
            g.push(((util - UTIL_RANGE.0) / (UTIL_RANGE.1 - UTIL_RANGE.0)).clamp(0.0, 1.0));
            let (lo, hi) = s.cpu_freq_range;
            g.push(if hi > lo { ((eta - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 });
        }
        g
    }

    /// Binary decisions read straight off the genome, before any repair.
    pub fn decode(&self, genome: &[f64]) -> DecisionVector {
        let mut dv = DecisionVector::empty(&self.topo);
        dv.bv1.iter_mut().for_each(|b| *b = self.params.offload);
        for (k, &(j, f)) in self.pairs.iter().enumerate() {
            dv.bv2[[j, f]] = genome[k] >= THRESHOLD;
        }
        let nf = self.topo.n_fogs();
        let off = self.vm_offset();
        for a in 0..self.topo.apps {
            for f in 0..nf {
                dv.bv5[[a, f]] = genome[off + a * nf + f] >= THRESHOLD;
            }
        }
        let off = self.server_offset();
        for (c, s) in self.topo.servers.iter().enumerate() {
            let (lo, hi) = s.cpu_freq_range;
            dv.cpu_freq[c] = lo + genome[off + 2 * c + 1] * (hi - lo);
        }
        dv
    }

    fn utilization(&self, genome: &[f64]) -> Vec<f64> {
        let off = self.server_offset();
        (0..self.topo.n_servers())
            .map(|c| UTIL_RANGE.0 + genome[off + 2 * c] * (UTIL_RANGE.1 - UTIL_RANGE.0))
            .collect()
    }

    /// Decode, repair and complete a genome into an evaluable decision.
    pub fn realize(&self, genome: &[f64]) -> DecisionVector {
        let (topo, params) = (&self.topo, &self.params);
        let mut dv = self.decode(genome);
        repair(&mut dv, topo, params);
        distribute_free_bus(&mut dv, topo, params);
        complete_flows(&mut dv, topo, params);
        for a in 0..topo.apps {
            for f in 0..topo.n_fogs() {
                let load: f64 = (0..topo.n_fogs()).map(|g| dv.interfog_rate[[g, f, a]]).sum();
                if dv.bv5[[a, f]] && load <= 0.0 {
                    dv.bv5[[a, f]] = false;
                }
            }
        }
        provision_cloud(&mut dv, topo, params, Some(&self.utilization(genome)));
        dv
    }

    pub fn cost_of(&self, dv: &DecisionVector) -> f64 {
        match &self.objective {
            Objective::Physical => evaluate(dv, &self.topo, &self.params).breakdown.total,
            Objective::UnitCost(fx) => toy::evaluate::<f64>(dv, fx).map_or(f64::INFINITY, |b| b.total),
        }
    }

    pub fn outcome(&self, genome: &[f64]) -> Outcome {
        let decision = self.realize(genome);
        let (cost, report) = match &self.objective {
            Objective::Physical => {
                let ev = evaluate(&decision, &self.topo, &self.params);
                let report = check_with(&decision, &self.topo, &self.params, &ev.analysis);
                (ev.breakdown.total, report)
            }
            Objective::UnitCost(_) => (self.cost_of(&decision), check_all(&decision, &self.topo, &self.params)),
        };
        Outcome {
            cost,
            penalty: penalty(&report, &self.weights),
            report,
            decision,
        }
    }
}

impl Problem<f64> for PlacementProblem {
    fn dim(&self) -> usize {
        self.server_offset() + 2 * self.topo.n_servers()
    }

    fn evaluate(&self, genome: &[f64]) -> Scored<f64> {
        let o = self.outcome(genome);
        Scored {
            raw: o.cost + o.penalty,
            feasible: o.report.feasible(),
        }
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        self.seeds.clone()
    }
}
