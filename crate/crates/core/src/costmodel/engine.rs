//! Evaluation of a complete decision vector on a topology.

use ndarray::Array2;

use super::breakdown::{CostBreakdown, PowerTerms};
use super::formulas::{
    cloud_comp_power, dispatch_latency, emission_cost, fne, fog_comp_power, tx_power,
    upload_latency, LatencyTerms,
};
use super::params::ScenarioParams;
use crate::error::{Error, Result};
use crate::feasibility::{consumer_rates, DecisionVector};
use crate::queueing::{mm1_latency, mmn_response_time};
use crate::topology::Topology;

const YEAR_SECONDS: f64 = 365.0 * 24.0 * 3600.0;

/// Per-node queueing state and per-consumer path latencies.
#[derive(Clone, Debug)]
pub struct Analysis {
    /// (total, fog-bound) request rate per consumer.
    pub rates: Vec<(f64, f64)>,
    pub fog_ingress: Vec<f64>,
    /// Processing load per fog and app.
    pub fog_app_load: Array2<f64>,
    pub fog_load: Vec<f64>,
    pub fog_latency: Vec<f64>,
    pub fog_unstable: Vec<bool>,
    pub server_latency: Vec<f64>,
    pub server_unstable: Vec<bool>,
    /// Unweighted fog-path terms per consumer.
    pub fog_path: Vec<LatencyTerms<f64>>,
    /// Terms of the direct-to-cloud path per consumer.
    pub direct_path: Vec<LatencyTerms<f64>>,
    /// End-to-end latency of the slowest branch each consumer can take.
    pub chain: Vec<f64>,
}

impl Analysis {
    pub fn unstable(&self) -> bool {
        self.fog_unstable.iter().chain(&self.server_unstable).any(|u| *u)
    }
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub breakdown: CostBreakdown<f64>,
    pub fne: Option<f64>,
    pub packets_into_fog: f64,
    pub packets_to_cloud: f64,
    pub total_rate: f64,
    pub analysis: Analysis,
}

fn wan_factor(params: &ScenarioParams, km: f64) -> f64 {
    params.wan_delay_factor * (1.0 + km / params.wan_ref_km)
}

pub fn analyze(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> Analysis {
    let (nf, ns, na) = (topo.n_fogs(), topo.n_servers(), topo.apps);
    let rates = consumer_rates(topo, params, &dv.bv1);
    let margin = 1.0 - params.stability_margin;

    let mut fog_ingress = vec![0.0; nf];
    for ((_, f), w) in dv.workload.indexed_iter() {
        fog_ingress[f] += w;
    }
    let mut fog_app_load = Array2::zeros((nf, na));
    for ((_, p, a), r) in dv.interfog_rate.indexed_iter() {
        fog_app_load[[p, a]] += r;
    }
    let fog_load: Vec<f64> = fog_app_load.rows().into_iter().map(|r| r.sum()).collect();
    let mut fog_latency = vec![0.0; nf];
    let mut fog_unstable = vec![false; nf];
    for p in 0..nf {
        let rs = topo.fog_nodes[p].service_rate;
        let cap = rs * margin;
        fog_unstable[p] = fog_load[p] > cap;
        fog_latency[p] = mm1_latency(rs, fog_load[p].min(cap)).unwrap_or(f64::INFINITY);
    }

    let mut server_latency = vec![0.0; ns];
    let mut server_unstable = vec![false; ns];
    for c in 0..ns {
        let mu = params.machine_rate(dv.cpu_freq[c]);
        let y = dv.cloud_workload[c];
        let n = dv.machines_on[c];
        if y <= 0.0 {
            server_latency[c] = 1.0 / mu;
            continue;
        }
        let n_eff = n.max(1);
        let cap = n_eff as f64 * mu * margin;
        server_unstable[c] = n == 0 || !dv.bv_c[c] || y > cap;
        server_latency[c] = mmn_response_time(n_eff, y.min(cap), mu).unwrap_or(f64::INFINITY);
    }

    // dispatch delay and cloud response seen by output leaving fog p
    let mut out_dispatch = vec![0.0; nf];
    let mut out_cloud = vec![0.0; nf];
    for p in 0..nf {
        let total: f64 = dv.dispatch_rate.row(p).sum();
        if total > 0.0 {
            for c in 0..ns {
                let g = dv.dispatch_rate[[p, c]];
                if g > 0.0 {
                    let chi = wan_factor(params, topo.fog_server_dist[[p, c]]);
                    out_dispatch[p] += g / total * dispatch_latency(chi, g);
                    out_cloud[p] += g / total * server_latency[c];
                }
            }
        } else {
            out_cloud[p] = server_latency[topo.nearest_server_of_fog[p]];
        }
    }

    // routed terms per (ingress fog, app)
    let hop_time = params.interfog_payload / params.interfog_rate;
    let mut route = vec![LatencyTerms::<f64>::zero(); nf * na];
    for f in 0..nf {
        for a in 0..na {
            let out: f64 = (0..nf).map(|p| dv.interfog_rate[[f, p, a]]).sum();
            let t = &mut route[f * na + a];
            if out <= 0.0 {
                *t = LatencyTerms {
                    upload: 0.0,
                    fog_comp: fog_latency[f],
                    interfog: 0.0,
                    dispatch: out_dispatch[f],
                    cloud_comp: out_cloud[f],
                };
                continue;
            }
            for p in 0..nf {
                let r = dv.interfog_rate[[f, p, a]];
                if r > 0.0 {
                    let s = r / out;
                    t.fog_comp += s * fog_latency[p];
                    t.interfog += s * topo.fog_hops[[f, p]] as f64 * hop_time;
                    t.dispatch += s * out_dispatch[p];
                    t.cloud_comp += s * out_cloud[p];
                }
            }
        }
    }

    let mut city_direct = vec![vec![0.0; ns]; topo.cities.len()];
    for (j, c) in topo.consumers.iter().enumerate() {
        city_direct[c.city][topo.nearest_server_of_consumer[j]] += dv.direct_rate[j];
    }

    let v = &params.volumes;
    let mut fog_path = Vec::with_capacity(rates.len());
    let mut direct_path = Vec::with_capacity(rates.len());
    let mut chain = Vec::with_capacity(rates.len());
    for (j, consumer) in topo.consumers.iter().enumerate() {
        let fog_total: f64 = dv.workload.row(j).sum();
        let mut fp = LatencyTerms::zero();
        if fog_total > 0.0 {
            let k = dv.bu_count(j).max(1);
            for f in 0..nf {
                let w = dv.workload[[j, f]];
                if w <= 0.0 {
                    continue;
                }
                let up = upload_latency(v.to_fog, k, topo.fog_nodes[f].per_bu_rate)
                    .unwrap_or(f64::INFINITY);
                let mut t = route[f * na + consumer.app];
                t.upload = up;
                fp = fp.add(&t.scale(w / fog_total));
            }
        }
        let c = topo.nearest_server_of_consumer[j];
        let chi = wan_factor(params, topo.consumer_server_dist[[j, c]]);
        let dp = LatencyTerms {
            upload: v.to_cloud / params.access_rate,
            fog_comp: 0.0,
            interfog: 0.0,
            dispatch: dispatch_latency(chi, city_direct[consumer.city][c]),
            cloud_comp: server_latency[c],
        };
        let mut worst = 0.0f64;
        if rates[j].1 > 0.0 {
            let mut l = fp.upload + fp.fog_comp + fp.interfog;
            if params.pi_f < 1.0 {
                l += fp.dispatch;
                if params.pi_cs < 1.0 {
                    l += fp.cloud_comp;
                }
            }
            worst = worst.max(l);
        }
        if rates[j].0 > rates[j].1 {
            worst = worst.max(dp.sum());
        }
        fog_path.push(fp);
        direct_path.push(dp);
        chain.push(worst);
    }

    Analysis {
        rates,
        fog_ingress,
        fog_app_load,
        fog_load,
        fog_latency,
        fog_unstable,
        server_latency,
        server_unstable,
        fog_path,
        direct_path,
        chain,
    }
}

/// Cost of a decision vector whose flows are complete. Unstable queues are
/// evaluated at the stability margin and flagged in the analysis.
pub fn evaluate(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> Evaluation {
    let an = analyze(dv, topo, params);
    let h = params.horizon_seconds();
    let v = &params.volumes;
    let (pi_f, pi_cs) = (params.pi_f, params.pi_cs);

    let mut lat_sum = LatencyTerms::zero();
    let mut total_rate = 0.0;
    let mut fog_rate = 0.0;
    let mut direct_rate = 0.0;
    for (j, &(rate, fr)) in an.rates.iter().enumerate() {
        total_rate += rate;
        fog_rate += fr;
        direct_rate += rate - fr;
        lat_sum = lat_sum.add(&an.fog_path[j].weighted(pi_f, pi_cs).scale(fr));
        if rate > fr {
            lat_sum = lat_sum.add(&an.direct_path[j].scale(rate - fr));
        }
    }
    if total_rate <= 0.0 {
        return Evaluation {
            breakdown: CostBreakdown::zero(),
            fne: None,
            packets_into_fog: 0.0,
            packets_to_cloud: 0.0,
            total_rate,
            analysis: an,
        };
    }
    let latency = lat_sum.scale(1.0 / total_rate);
    let comm = params.alpha_comm * h * lat_sum.sum();

    let nf = topo.n_fogs();
    let mut hop_requests = 0.0;
    let mut forwarded = 0.0;
    for ((f, p, _), r) in dv.interfog_rate.indexed_iter() {
        if f != p && *r > 0.0 {
            hop_requests += r * topo.fog_hops[[f, p]] as f64;
            forwarded += r;
        }
    }
    let dispatched: f64 = dv.dispatch_rate.sum();
    let processed: f64 = an.fog_load.iter().sum();
    let pr = &params.prices;
    let upload_bytes = fog_rate * v.to_fog + direct_rate * v.to_cloud;
    let wan_bytes = dispatched * v.fog_output + direct_rate * v.to_cloud;
    let active: Vec<usize> = (0..nf)
        .filter(|&f| an.fog_ingress[f] > 0.0 || an.fog_load[f] > 0.0)
        .collect();
    let vms = dv.bv5.iter().filter(|b| **b).count() as f64;
    let machines: f64 = dv.machines_on.iter().map(|n| *n as f64).sum();
    let comp = h
        * (hop_requests * params.interfog_payload / 1e9 * pr.interfog
            + wan_bytes / 1e9 * pr.wan
            + upload_bytes * pr.upload_per_byte()
            + active.len() as f64 * pr.router_ports_per_fog as f64 * pr.router_port / YEAR_SECONDS
            + vms * pr.storage / 3600.0
            + machines * pr.server / YEAR_SECONDS);

    let te = &params.tx_energy;
    let tx = tx_power(
        (te.consumer_fog, te.fog_fog, te.fog_cloud),
        fog_rate * v.to_fog,
        forwarded * (v.to_fog - v.fog_output),
        processed * v.fog_output,
        pi_f,
    ) + te.fog_cloud * v.to_cloud * direct_rate;
    let fp = &params.fog_power;
    let fog_power: f64 = active
        .iter()
        .map(|&f| {
            fog_comp_power(
                &[an.fog_load[f]],
                (fp.a, fp.b, topo.fog_nodes[f].energy_rate),
                params.fog_weight,
                params.fog_comp_energy,
                true,
            )
            .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, |a, b| a + b);
    let cp = &params.cloud_power;
    let cloud_power: f64 = (0..topo.n_servers())
        .map(|c| {
            cloud_comp_power(
                dv.bv_c[c],
                dv.machines_on[c],
                dv.cpu_freq[c],
                (cp.a, cp.b, cp.delta),
                false,
            )
        })
        .sum();
    let power = PowerTerms {
        tx,
        fog_comp: fog_power,
        cloud_comp: cloud_power,
    };
    let cons = params.alpha_cons * power.total() * h;
    let fog_served = pi_f * fog_rate / total_rate;
    let ems = emission_cost(
        fog_served,
        params.emission_price,
        params.emission_rate,
        params.pue,
        cloud_power,
        h / 3600.0,
    );

    let packets_into_fog = fog_rate * h;
    let packets_to_cloud = dispatched * h;
    Evaluation {
        breakdown: CostBreakdown::new(comm, comp, cons, ems, latency, power),
        fne: fne(packets_to_cloud, packets_into_fog).ok(),
        packets_into_fog,
        packets_to_cloud,
        total_rate,
        analysis: an,
    }
}

fn stable(ev: Evaluation, dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> Result<Evaluation> {
    let an = &ev.analysis;
    if let Some(p) = an.fog_unstable.iter().position(|u| *u) {
        return Err(Error::Unstable {
            arrival: an.fog_load[p],
            capacity: topo.fog_nodes[p].service_rate,
        });
    }
    if let Some(c) = an.server_unstable.iter().position(|u| *u) {
        return Err(Error::Unstable {
            arrival: dv.cloud_workload[c],
            capacity: dv.machines_on[c] as f64 * params.machine_rate(dv.cpu_freq[c]),
        });
    }
    Ok(ev)
}

/// Cost of sending every request straight to the cloud.
pub fn total_cloud_cost(topo: &Topology, params: &ScenarioParams) -> Result<Evaluation> {
    let dv = crate::feasibility::cloud_only_decision(topo, params);
    stable(evaluate(&dv, topo, params), &dv, topo, params)
}

/// Cost of a fog-assisted decision vector.
pub fn total_fog_cost(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> Result<Evaluation> {
    stable(evaluate(dv, topo, params), dv, topo, params)
}
