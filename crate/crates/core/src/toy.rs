//! The ten-RSU vehicular example in abstract unit costs.
//!
//! Costs are integers (uplink charge per associated RSU, a flat charge per
//! hosted VM and a charge per hop between an EV's RSU and the RSU processing
//! its app), so the fixture is evaluated in exact rational arithmetic.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::costmodel::{traffic_cost, upload_latency, CostBreakdown, LatencyTerms, PowerTerms, ScenarioParams};
use crate::error::{Error, Result};
use crate::feasibility::{complete_flows, DecisionVector};
use crate::scalar::Field;
use crate::topology::{City, CloudServer, Consumer, Coord, FogNode, Reach, Topology};

pub const RSUS: usize = 10;
pub const EVS: usize = 4;
pub const BUS_PER_RSU: usize = 4;

/// Road links between RSUs (0-based).
pub const LINKS: [(usize, usize); 11] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (2, 6),
    (6, 3),
    (6, 9),
    (5, 7),
    (7, 8),
    (8, 9),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCosts {
    /// Uplink charge per RSU; `None` where EVs cannot upload.
    pub uplink: Vec<Option<i64>>,
    pub vm: i64,
    pub hop: i64,
}

impl Default for UnitCosts {
    fn default() -> Self {
        let mut uplink = vec![None; RSUS];
        uplink[0] = Some(5);
        uplink[1] = Some(2);
        uplink[2] = Some(2);
        uplink[4] = Some(3);
        uplink[9] = Some(5);
        UnitCosts { uplink, vm: 2, hop: 5 }
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub topo: Topology,
    pub params: ScenarioParams,
    pub costs: UnitCosts,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyBreakdown<T> {
    pub upload: T,
    pub vm: T,
    pub inter_rsu: T,
    pub total: T,
    /// Longest upload time over all EVs, in time units.
    pub upload_delay: T,
}

impl<T: Field> ToyBreakdown<T> {
    /// Upload and inter-RSU charges are latency-driven; VM hosting is the
    /// computation charge.
    pub fn to_cost_breakdown(&self) -> CostBreakdown<T> {
        let latency = LatencyTerms {
            upload: self.upload_delay,
            ..LatencyTerms::zero()
        };
        CostBreakdown::new(
            self.upload + self.inter_rsu,
            self.vm,
            T::zero(),
            T::zero(),
            latency,
            PowerTerms::zero(),
        )
    }
}

/// Hop counts by breadth-first search over `LINKS`.
pub fn hop_matrix() -> Array2<u32> {
    let mut hops = Array2::from_elem((RSUS, RSUS), u32::MAX);
    for s in 0..RSUS {
        hops[[s, s]] = 0;
        let mut frontier = vec![s];
        while let Some(u) = frontier.pop() {
            for &(a, b) in &LINKS {
                for (x, y) in [(a, b), (b, a)] {
                    if x == u && hops[[s, y]] > hops[[s, u]] + 1 {
                        hops[[s, y]] = hops[[s, u]] + 1;
                        frontier.push(y);
                    }
                }
            }
        }
    }
    hops
}

pub fn fixture() -> Fixture {
    let costs = UnitCosts::default();
    let cities: Vec<City> = (0..RSUS)
        .map(|i| City {
            id: i,
            name: format!("R{}", i + 1),
            population: 1,
            coord: Coord::new(0.0, i as f64 * 0.01),
        })
        .collect();
    let fogs: Vec<FogNode> = (0..RSUS)
        .map(|i| FogNode {
            id: i,
            city: i,
            coord: cities[i].coord,
            bandwidth_units: (i * BUS_PER_RSU..(i + 1) * BUS_PER_RSU).collect(),
            per_bu_rate: 1.0,
            service_rate: 1e6,
            processing_elements: 1,
            physical_servers: 1,
            vm_cap_per_server: 1,
            storage_cap: 1.0,
            proc_cap: 1e6,
            energy_rate: 0.0,
        })
        .collect();
    let consumers: Vec<Consumer> = (0..EVS)
        .map(|i| Consumer {
            id: i,
            city: 0,
            coord: cities[0].coord,
            devices: 1,
            app: i,
        })
        .collect();
    let server = CloudServer {
        id: 0,
        coord: Coord::new(1.0, 0.0),
        device_capacity: 16_000,
        power_draw_mw: 9.7,
        machine_count_max: 1,
        cpu_freq_range: (2.0, 3.0),
    };
    let mut topo = Topology::assemble(cities, consumers, fogs, vec![server], EVS, Reach::NthNearest(1), 1.0, 1.0);
    topo.fog_hops = hop_matrix();
    // uplink charge doubles as the distance used for tie-breaking
    for j in 0..EVS {
        for f in 0..RSUS {
            topo.consumer_fog_dist[[j, f]] = costs.uplink[f].map_or(1e6, |c| c as f64);
        }
    }
    topo.consumer_reach = (0..EVS)
        .map(|j| {
            let mut l: Vec<usize> = (0..RSUS).filter(|f| costs.uplink[*f].is_some()).collect();
            l.sort_by(|a, b| {
                topo.consumer_fog_dist[[j, *a]]
                    .total_cmp(&topo.consumer_fog_dist[[j, *b]])
                    .then(a.cmp(b))
            });
            l
        })
        .collect();
    topo.reach_radius = vec![5.0; EVS];
    topo.rebuild_pref_lists();

    let params = ScenarioParams {
        horizon: 1,
        pi_c: 0.0,
        pi_f: 1.0,
        pi_cs: 0.0,
        arrival_rate: 1.0,
        interfog_payload: costs.hop as f64,
        interfog_rate: 1.0,
        volumes: crate::costmodel::Volumes {
            total: 2.0,
            to_cloud: 1.0,
            to_fog: 1.0,
            fog_output: 0.0,
        },
        vm_storage: 1.0,
        delay_limits: vec![1e9],
        ..ScenarioParams::default()
    };
    Fixture { topo, params, costs }
}

impl Fixture {
    fn decision(&self, assoc: [usize; EVS], bus: [usize; EVS], vms: [usize; EVS]) -> DecisionVector {
        let mut dv = DecisionVector::empty(&self.topo);
        for j in 0..EVS {
            dv.bv2[[j, assoc[j]]] = true;
            dv.bv5[[j, vms[j]]] = true;
        }
        let mut next = [0usize; RSUS];
        for j in 0..EVS {
            for _ in 0..bus[j] {
                let f = assoc[j];
                dv.bv3[[f * BUS_PER_RSU + next[f], j]] = true;
                next[f] += 1;
            }
        }
        complete_flows(&mut dv, &self.topo, &self.params);
        dv
    }

    /// All EVs upload through R1 on one unit each; apps run at R1, R3, R4
    /// and R10.
    pub fn scenario_1(&self) -> DecisionVector {
        self.decision([0, 0, 0, 0], [1, 1, 1, 1], [0, 2, 3, 9])
    }

    /// EVs on R1, R3, R10, R5 with all four units; apps at R1, R2, R4, R6.
    pub fn scenario_2(&self) -> DecisionVector {
        self.decision([0, 2, 9, 4], [4, 4, 4, 4], [0, 1, 3, 5])
    }
}

/// Unit cost of a decision on the fixture.
pub fn evaluate<T: Field>(dv: &DecisionVector, fx: &Fixture) -> Result<ToyBreakdown<T>> {
    let int = |x: i64| T::from_i64(x).expect("unit cost fits");
    let topo = &fx.topo;
    let (nf, _, na) = dv.bv4.dim();
    let mut upload = T::zero();
    let mut delay = T::zero();
    // rows 0..EVS: the EV's upload point; rows EVS..: where its app runs
    let n = 2 * topo.n_consumers();
    let mut placement = Array2::from_elem((n, nf), false);
    let mut traffic = Array2::from_elem((n, n), T::zero());
    for (j, c) in topo.consumers.iter().enumerate() {
        let Some(f) = dv.fog_of(j) else { continue };
        let charge = fx.costs.uplink[f].ok_or(Error::Config(format!("RSU {f} has no uplink")))?;
        upload = upload + int(charge);
        let t = upload_latency(T::one(), dv.bu_count(j), T::one())?;
        delay = delay.max_of(t);
        let p = (0..nf)
            .filter(|&p| dv.interfog_rate[[f, p, c.app.min(na - 1)]] > 0.0)
            .max_by(|&a, &b| {
                dv.interfog_rate[[f, a, c.app]]
                    .total_cmp(&dv.interfog_rate[[f, b, c.app]])
                    .then(b.cmp(&a))
            })
            .unwrap_or(f);
        placement[[j, f]] = true;
        placement[[topo.n_consumers() + j, p]] = true;
        traffic[[j, topo.n_consumers() + j]] = T::one();
    }
    let price = topo.fog_hops.mapv(|h| int(h as i64 * fx.costs.hop));
    let inter_rsu = traffic_cost(&placement, &traffic, &price)?;
    let vm = int(fx.costs.vm) * T::from_usize_exact(dv.bv5.iter().filter(|b| **b).count());
    Ok(ToyBreakdown {
        upload,
        vm,
        inter_rsu,
        total: upload + vm + inter_rsu,
        upload_delay: delay,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyReport<T> {
    pub scenario_1: ToyBreakdown<T>,
    pub scenario_2: ToyBreakdown<T>,
    /// Relative cost reduction from scenario 1 to 2.
    pub improvement: T,
    /// Relative reduction of the upload delay.
    pub delay_reduction: T,
}

pub fn run_toy_vanet<T: Field>() -> Result<ToyReport<T>> {
    let fx = fixture();
    let s1 = evaluate::<T>(&fx.scenario_1(), &fx)?;
    let s2 = evaluate::<T>(&fx.scenario_2(), &fx)?;
    Ok(ToyReport {
        improvement: (s1.total - s2.total) / s1.total,
        delay_reduction: (s1.upload_delay - s2.upload_delay) / s1.upload_delay,
        scenario_1: s1,
        scenario_2: s2,
    })
}

/// A ratio as a percentage truncated to two decimals, e.g. 30/73 -> "41.09".
pub fn percent_2dp(r: crate::Exact) -> String {
    let hundredths = (r * crate::Exact::from(10_000)).floor().to_integer();
    format!("{}.{:02}", hundredths / 100, (hundredths % 100).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    #[test]
    fn scenario_costs() {
        let r = run_toy_vanet::<Exact>().unwrap();
        assert_eq!(r.scenario_1.total, Exact::from(73));
        assert_eq!(r.scenario_2.total, Exact::from(43));
        assert_eq!(r.scenario_2.upload_delay, Exact::new(1, 4));
        assert_eq!(percent_2dp(r.improvement), "41.09");
        assert_eq!(percent_2dp(r.delay_reduction), "75.00");
    }
}
