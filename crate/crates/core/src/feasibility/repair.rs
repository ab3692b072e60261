use super::checks::{check_vm, check_workload, Constraint};
use super::flows::{complete_flows, host_for, ingress};
use super::{consumer_rates, DecisionVector};
use crate::costmodel::ScenarioParams;
use crate::topology::Topology;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RepairOutcome {
    /// Consumers left without a bandwidth unit: no reachable fog had one free.
    pub unserved: Vec<usize>,
    /// Apps with demand but no fog able to host another VM.
    pub unhosted: Vec<usize>,
    pub changed: bool,
}

impl RepairOutcome {
    pub fn complete(&self) -> bool {
        self.unserved.is_empty() && self.unhosted.is_empty()
    }
}

fn vm_slots(topo: &Topology, params: &ScenarioParams, f: usize) -> usize {
    let fog = &topo.fog_nodes[f];
    let by_storage = if params.vm_storage > 0.0 {
        (fog.storage_cap / params.vm_storage).floor() as usize
    } else {
        usize::MAX
    };
    (fog.max_vms() as usize).min(by_storage)
}

/// Greedy, deterministic repair of association, bandwidth-unit and VM
/// structure. Flows are recomputed only when they no longer balance.
pub fn repair(dv: &mut DecisionVector, topo: &Topology, params: &ScenarioParams) -> RepairOutcome {
    let before = dv.clone();
    let mut out = RepairOutcome::default();
    let (nc, nf) = (topo.n_consumers(), topo.n_fogs());
    let owner = topo.bu_owner();

    dv.bv_l.fill(false);
    for (j, fogs) in topo.consumer_reach.iter().enumerate() {
        for &f in fogs {
            dv.bv_l[[j, f]] = true;
        }
    }

    // one listed fog per offloading consumer, nearest wins
    for j in 0..nc {
        let keep = if dv.bv1[j] {
            topo.consumer_reach[j].iter().copied().find(|&f| dv.bv2[[j, f]])
        } else {
            None
        };
        dv.bv2.row_mut(j).fill(false);
        if let Some(f) = keep {
            dv.bv2[[j, f]] = true;
        }
    }

    // units only to consumers associated with the owning fog, one each
    for b in 0..dv.bv3.nrows() {
        let o = owner[b];
        let mut kept = false;
        for j in 0..nc {
            if dv.bv3[[b, j]] {
                if !kept && dv.bv2[[j, o]] {
                    kept = true;
                } else {
                    dv.bv3[[b, j]] = false;
                }
            }
        }
    }

    let mut counts = vec![0usize; nc];
    let mut used = vec![false; dv.bv3.nrows()];
    for ((b, j), x) in dv.bv3.indexed_iter() {
        if *x {
            counts[j] += 1;
            used[b] = true;
        }
    }
    let free_unit = |f: usize, used: &[bool]| {
        topo.fog_nodes[f]
            .bandwidth_units
            .iter()
            .copied()
            .find(|b| !used[*b])
    };
    for j in 0..nc {
        if !dv.bv1[j] || counts[j] > 0 {
            continue;
        }
        let current = dv.fog_of(j);
        let mut candidates: Vec<usize> = current.into_iter().collect();
        candidates.extend(
            topo.consumer_reach[j]
                .iter()
                .copied()
                .filter(|f| Some(*f) != current),
        );
        let mut placed = false;
        for (i, &f) in candidates.iter().enumerate() {
            let mut unit = free_unit(f, &used);
            if unit.is_none() && i == 0 && current.is_some() {
                // take a spare unit from the best-served consumer at this fog
                let donor = (0..nc)
                    .filter(|&k| dv.bv2[[k, f]] && counts[k] > 1)
                    .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
                if let Some(d) = donor {
                    let b = *dv.bus_of(d).last().expect("donor holds units");
                    dv.bv3[[b, d]] = false;
                    counts[d] -= 1;
                    used[b] = false;
                    unit = Some(b);
                }
            }
            if let Some(b) = unit {
                dv.bv2.row_mut(j).fill(false);
                dv.bv2[[j, f]] = true;
                dv.bv3[[b, j]] = true;
                used[b] = true;
                counts[j] += 1;
                placed = true;
                break;
            }
        }
        if !placed {
            out.unserved.push(j);
            if current.is_none() {
                if let Some(&f) = topo.consumer_reach[j].first() {
                    dv.bv2[[j, f]] = true;
                }
            }
        }
    }

    // VM limits: drop the least loaded VMs first
    let inflow = ingress(dv, topo, params);
    for f in 0..nf {
        let slots = vm_slots(topo, params, f);
        if dv.vm_count(f) <= slots {
            continue;
        }
        let mut load = vec![0.0; topo.apps];
        for (g, apps) in inflow.iter().enumerate() {
            for (a, &r) in apps.iter().enumerate() {
                if r > 0.0 && host_for(dv, topo, g, a) == Some(f) {
                    load[a] += r;
                }
            }
        }
        let mut hosted: Vec<usize> = (0..topo.apps).filter(|&a| dv.bv5[[a, f]]).collect();
        hosted.sort_by(|a, b| load[*a].total_cmp(&load[*b]).then(b.cmp(a)));
        let excess = hosted.len() - slots;
        for &a in hosted.iter().take(excess) {
            dv.bv5[[a, f]] = false;
        }
    }
    for a in 0..topo.apps {
        let demand: f64 = inflow.iter().map(|apps| apps[a]).sum();
        if demand <= 0.0 || (0..nf).any(|f| dv.bv5[[a, f]]) {
            continue;
        }
        let site = (0..nf)
            .filter(|&f| dv.vm_count(f) < vm_slots(topo, params, f))
            .max_by(|&x, &y| inflow[x][a].total_cmp(&inflow[y][a]).then(y.cmp(&x)));
        match site {
            Some(f) => dv.bv5[[a, f]] = true,
            None => out.unhosted.push(a),
        }
    }

    for (c, server) in topo.servers.iter().enumerate() {
        dv.machines_on[c] = dv.machines_on[c].min(server.machine_count_max);
        dv.cpu_freq[c] = dv.cpu_freq[c].clamp(server.cpu_freq_range.0, server.cpu_freq_range.1);
        dv.bv_c[c] = dv.machines_on[c] > 0;
    }

    if !flows_consistent(dv, topo, params) {
        complete_flows(dv, topo, params);
    }
    out.changed = *dv != before;
    out
}

fn flows_consistent(dv: &DecisionVector, topo: &Topology, params: &ScenarioParams) -> bool {
    let rates = consumer_rates(topo, params, &dv.bv1);
    for (j, (rate, fog_rate)) in rates.iter().enumerate() {
        let row = dv.workload.row(j);
        let assigned: f64 = row.sum();
        let stray = row
            .iter()
            .enumerate()
            .any(|(f, w)| *w != 0.0 && !dv.bv2[[j, f]]);
        let want = if dv.fog_of(j).is_some() { *fog_rate } else { 0.0 };
        if stray || (assigned - want).abs() > 1e-9 * rate.max(1.0) {
            return false;
        }
        if (dv.direct_rate[j] - (rate - want)).abs() > 1e-9 * rate.max(1.0) {
            return false;
        }
    }
    let vm = check_vm(dv, topo, params);
    check_workload(dv, topo).feasible()
        && vm.passes(Constraint::VmService)
        && vm.passes(Constraint::VmFlow)
}
