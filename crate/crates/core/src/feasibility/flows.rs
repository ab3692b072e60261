use super::{consumer_rates, repair, DecisionVector};
use crate::costmodel::ScenarioParams;
use crate::topology::Topology;

/// Nearest fog hosting a VM of `app`, by hop count, then distance, then index.
pub(crate) fn host_for(dv: &DecisionVector, topo: &Topology, from: usize, app: usize) -> Option<usize> {
    (0..topo.n_fogs())
        .filter(|&h| dv.bv5[[app, h]])
        .min_by(|&a, &b| {
            let ka = (topo.fog_hops[[from, a]], topo.fog_dist[[from, a]]);
            let kb = (topo.fog_hops[[from, b]], topo.fog_dist[[from, b]]);
            ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(a.cmp(&b))
        })
}

/// Ingress rate per (fog, app) implied by the current association.
pub(crate) fn ingress(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; topo.apps]; topo.n_fogs()];
    for (j, (_, fog_rate)) in consumer_rates(topo, params, &dv.bv1).into_iter().enumerate() {
        let fogs = dv.fogs_of(j);
        if fogs.is_empty() {
            continue;
        }
        let share = fog_rate / fogs.len() as f64;
        for f in fogs {
            out[f][topo.consumers[j].app] += share;
        }
    }
    out
}

/// Derive every continuous flow from the binary decisions: consumer
/// workloads, routing to the nearest VM host, dispatch to the nearest server
/// and the resulting cloud load.
pub fn complete_flows(dv: &mut DecisionVector, topo: &Topology, params: &ScenarioParams) {
    let rates = consumer_rates(topo, params, &dv.bv1);
    dv.workload.fill(0.0);
    for (j, (rate, fog_rate)) in rates.iter().enumerate() {
        let fogs = dv.fogs_of(j);
        if fogs.is_empty() {
            dv.direct_rate[j] = *rate;
            continue;
        }
        for &f in &fogs {
            dv.workload[[j, f]] = fog_rate / fogs.len() as f64;
        }
        dv.direct_rate[j] = rate - fog_rate;
    }
    let inflow = ingress(dv, topo, params);
    dv.interfog_rate.fill(0.0);
    dv.bv4.fill(false);
    for (f, apps) in inflow.iter().enumerate() {
        for (a, &r) in apps.iter().enumerate() {
            if r <= 0.0 {
                continue;
            }
            let h = host_for(dv, topo, f, a).unwrap_or(f);
            dv.interfog_rate[[f, h, a]] += r;
            dv.bv4[[f, h, a]] = true;
        }
    }
    dv.dispatch_rate.fill(0.0);
    dv.cloud_workload.iter_mut().for_each(|y| *y = 0.0);
    let keep = 1.0 - params.pi_f;
    for p in 0..topo.n_fogs() {
        let load: f64 = dv.interfog_rate.slice(ndarray::s![.., p, ..]).sum();
        if load > 0.0 && keep > 0.0 {
            let c = topo.nearest_server_of_fog[p];
            dv.dispatch_rate[[p, c]] += keep * load;
            dv.cloud_workload[c] += keep * load * (1.0 - params.pi_cs);
        }
    }
    for (j, &r) in dv.direct_rate.iter().enumerate() {
        if r > 0.0 {
            dv.cloud_workload[topo.nearest_server_of_consumer[j]] += r;
        }
    }
}

/// Turn on enough machines at each server to reach the target utilization
/// (per server if `utilization` is given).
pub fn provision_cloud(
    dv: &mut DecisionVector,
    topo: &Topology,
    params: &ScenarioParams,
    utilization: Option<&[f64]>,
) {
    for (c, server) in topo.servers.iter().enumerate() {
        let y = dv.cloud_workload[c];
        let u = utilization
            .and_then(|u| u.get(c).copied())
            .unwrap_or(params.target_utilization);
        let eta = dv.cpu_freq[c].clamp(server.cpu_freq_range.0, server.cpu_freq_range.1);
        dv.cpu_freq[c] = eta;
        let mu = params.machine_rate(eta);
        let n = if y > 0.0 {
            ((y / (mu * u)).ceil() as u32).clamp(1, server.machine_count_max)
        } else {
            0
        };
        dv.machines_on[c] = n;
        dv.bv_c[c] = n > 0;
    }
}

/// Hand out each fog's unallocated bandwidth units to its associated
/// consumers, largest marginal upload-time saving first.
pub fn distribute_free_bus(dv: &mut DecisionVector, topo: &Topology, params: &ScenarioParams) {
    let rates = consumer_rates(topo, params, &dv.bv1);
    let mut counts = vec![0usize; topo.n_consumers()];
    let mut used = vec![false; topo.n_bus()];
    for ((b, j), x) in dv.bv3.indexed_iter() {
        if *x {
            counts[j] += 1;
            used[b] = true;
        }
    }
    let mut members = vec![Vec::new(); topo.n_fogs()];
    for j in 0..topo.n_consumers() {
        if counts[j] > 0 && rates[j].1 > 0.0 {
            if let Some(f) = dv.fog_of(j) {
                members[f].push(j);
            }
        }
    }
    for fog in &topo.fog_nodes {
        let members = &members[fog.id];
        if members.is_empty() {
            continue;
        }
        for &b in fog.bandwidth_units.iter().filter(|b| !used[**b]) {
            let mut best = members[0];
            let mut gain = f64::NEG_INFINITY;
            for &j in members {
                let k = counts[j] as f64;
                let g = rates[j].1 * (1.0 / k - 1.0 / (k + 1.0));
                if g > gain {
                    gain = g;
                    best = j;
                }
            }
            dv.bv3[[b, best]] = true;
            counts[best] += 1;
        }
    }
}

/// Reference placement: nearest fog with a free unit, VMs wherever traffic
/// enters, machines at the target utilization.
pub fn nominal_decision(topo: &Topology, params: &ScenarioParams) -> DecisionVector {
    let mut dv = DecisionVector::empty(topo);
    dv.bv1.iter_mut().for_each(|b| *b = params.offload);
    repair(&mut dv, topo, params);
    let inflow = ingress(&dv, topo, params);
    for (f, apps) in inflow.iter().enumerate() {
        let mut order: Vec<usize> = (0..topo.apps).filter(|&a| apps[a] > 0.0).collect();
        order.sort_by(|a, b| apps[*b].total_cmp(&apps[*a]).then(a.cmp(b)));
        dv.bv5.column_mut(f).fill(false);
        for a in order.into_iter().take(topo.fog_nodes[f].max_vms() as usize) {
            dv.bv5[[a, f]] = true;
        }
    }
    repair(&mut dv, topo, params);
    distribute_free_bus(&mut dv, topo, params);
    complete_flows(&mut dv, topo, params);
    provision_cloud(&mut dv, topo, params, None);
    dv
}

/// Every request goes straight to its nearest server.
pub fn cloud_only_decision(topo: &Topology, params: &ScenarioParams) -> DecisionVector {
    let mut dv = DecisionVector::empty(topo);
    dv.bv1.iter_mut().for_each(|b| *b = false);
    complete_flows(&mut dv, topo, params);
    provision_cloud(&mut dv, topo, params, None);
    dv
}
