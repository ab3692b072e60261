use std::collections::BTreeMap;

use fogplan::costmodel::{analyze, ScenarioParams};
use fogplan::feasibility::{
    check_all, check_association, check_network, check_vm, check_workload, complete_flows, nominal_decision,
    penalty, repair, Constraint, DecisionVector, FeasibilityReport, PenaltyWeights,
};
use fogplan::topology::{generate_topology, Topology, TopologyConfig};
use fogplan::toy;
use proptest::prelude::*;
use rand::Rng;

fn pilot() -> (Topology, ScenarioParams) {
    (generate_topology(&TopologyConfig::pilot(), 1).unwrap(), ScenarioParams::default())
}

#[test]
fn nominal_decision_is_feasible() {
    let (topo, params) = pilot();
    let dv = nominal_decision(&topo, &params);
    let r = check_all(&dv, &topo, &params);
    assert!(r.feasible(), "{:?}", r.failing());
    assert_eq!(penalty(&r, &PenaltyWeights::default()), 0.0);
    assert_eq!(r.violations.len(), Constraint::ALL.len());
}

#[test]
fn worked_example_scenarios_pass() {
    let fx = toy::fixture();
    for dv in [fx.scenario_1(), fx.scenario_2()] {
        let r = check_all(&dv, &fx.topo, &fx.params);
        assert!(r.feasible(), "{:?}", r.failing());
    }
    // all four drivers on the first unit's road-side unit
    let s1 = fx.scenario_1();
    assert!((0..toy::EVS).all(|j| s1.fog_of(j) == Some(0)));
    assert!(check_association(&s1, &fx.topo).feasible());
}

#[test]
fn double_association_and_shared_unit() {
    let (topo, params) = pilot();
    let mut dv = nominal_decision(&topo, &params);
    let j = (0..topo.n_consumers())
        .find(|j| topo.consumer_reach[*j].len() > 1)
        .unwrap();
    let other = topo.consumer_reach[j]
        .iter()
        .copied()
        .find(|f| Some(*f) != dv.fog_of(j))
        .unwrap();
    let mut two = dv.clone();
    two.bv2[[j, other]] = true;
    assert_eq!(check_association(&two, &topo).magnitude(Constraint::SingleFog), 1.0);

    let b = dv.bus_of(j)[0];
    let k = (0..topo.n_consumers()).find(|k| *k != j).unwrap();
    dv.bv3[[b, k]] = true;
    assert!(!check_association(&dv, &topo).passes(Constraint::BuExclusive));
}

#[test]
fn unlisted_association_is_flagged() {
    let (topo, params) = pilot();
    let mut dv = nominal_decision(&topo, &params);
    let j = (0..topo.n_consumers())
        .find(|j| topo.consumer_reach[*j].len() < topo.n_fogs())
        .unwrap();
    let f = (0..topo.n_fogs()).find(|f| !topo.consumer_reach[j].contains(f)).unwrap();
    dv.bv2[[j, f]] = true;
    assert!(!check_association(&dv, &topo).passes(Constraint::ListedFog));
}

/// One consumer on fog `f`, uploading `inflow` and forwarding `out` to itself.
fn single_flow(topo: &Topology, inflow: f64, out: f64, mark: bool) -> DecisionVector {
    let mut dv = DecisionVector::empty(topo);
    let f = topo.consumer_reach[0][0];
    let app = topo.consumers[0].app;
    dv.bv1[0] = true;
    dv.bv2[[0, f]] = true;
    dv.bv3[[topo.fog_nodes[f].bandwidth_units[0], 0]] = true;
    dv.workload[[0, f]] = inflow;
    dv.interfog_rate[[f, f, app]] = out;
    dv.bv4[[f, f, app]] = mark;
    dv.bv5[[app, f]] = true;
    dv
}

#[test]
fn workload_checks() {
    let (topo, _) = pilot();
    assert!(check_workload(&DecisionVector::empty(&topo), &topo).feasible());
    let r = check_workload(&single_flow(&topo, 5.0, 4.0, true), &topo);
    assert_eq!(r.magnitude(Constraint::FlowConservation), 1.0);
    assert!(r.passes(Constraint::FlowIndicator));
    let r = check_workload(&single_flow(&topo, 5.0, 5.0, false), &topo);
    assert!(!r.passes(Constraint::FlowIndicator));
    assert!(r.passes(Constraint::FlowConservation));
    assert!(check_workload(&single_flow(&topo, 5.0, 5.0, true), &topo).feasible());
}

#[test]
fn vm_checks() {
    let (topo, params) = pilot();
    assert!(check_vm(&DecisionVector::empty(&topo), &topo, &params).feasible());

    let mut dv = single_flow(&topo, 5.0, 5.0, true);
    let f = topo.consumer_reach[0][0];
    dv.bv5[[topo.consumers[0].app, f]] = false;
    assert!(!check_vm(&dv, &topo, &params).passes(Constraint::VmFlow));

    let fog = &topo.fog_nodes[f];
    let exact = ScenarioParams {
        vm_storage: fog.storage_cap / topo.apps as f64,
        ..params.clone()
    };
    let mut full = DecisionVector::empty(&topo);
    full.bv5.column_mut(f).fill(true);
    let r = check_vm(&full, &topo, &exact);
    assert!(r.passes(Constraint::Storage));
    let over = ScenarioParams {
        vm_storage: exact.vm_storage * 1.01,
        ..params
    };
    assert!(!check_vm(&full, &topo, &over).passes(Constraint::Storage));
}

#[test]
fn stability_boundary() {
    let (topo, params) = pilot();
    let rs = topo.fog_nodes[topo.consumer_reach[0][0]].service_rate;
    let at = single_flow(&topo, rs, rs, true);
    assert!(!check_network(&at, &topo, &params).passes(Constraint::Stability));
    let below = single_flow(&topo, rs * 0.99, rs * 0.99, true);
    assert!(check_network(&below, &topo, &params).passes(Constraint::Stability));
}

#[test]
fn delay_excess_magnitude() {
    let (topo, params) = pilot();
    let dv = nominal_decision(&topo, &params);
    let relaxed = ScenarioParams {
        delay_limits: vec![1e9],
        ..params.clone()
    };
    assert!(check_network(&dv, &topo, &relaxed).feasible());
    let an = analyze(&dv, &topo, &params);
    let worst = (0..topo.n_consumers())
        .filter(|j| topo.consumers[*j].app == 0)
        .map(|j| an.chain[j])
        .fold(0.0, f64::max);
    let tight = ScenarioParams {
        delay_limits: vec![worst - 0.5, 1e9],
        ..params
    };
    let m = check_network(&dv, &topo, &tight).magnitude(Constraint::Delay);
    assert!((m - 0.5).abs() < 1e-12, "{m}");
}

#[test]
fn penalty_examples() {
    let w = PenaltyWeights {
        default: 10.0,
        overrides: BTreeMap::new(),
    };
    let mut r = FeasibilityReport::default();
    assert_eq!(penalty(&r, &w), 0.0);
    assert!(r.feasible());
    r.violations.insert(Constraint::Storage, 2.0);
    assert_eq!(penalty(&r, &w), 20.0);
    assert!(!r.feasible());
    assert_eq!(r.failing(), vec![Constraint::Storage]);
}

#[test]
fn repair_leaves_feasible_input_alone() {
    let (topo, params) = pilot();
    let mut dv = nominal_decision(&topo, &params);
    let before = dv.clone();
    let out = repair(&mut dv, &topo, &params);
    assert!(!out.changed);
    assert!(out.complete());
    assert_eq!(dv, before);
}

#[test]
fn repair_keeps_nearest_of_two() {
    let (topo, params) = pilot();
    let mut dv = nominal_decision(&topo, &params);
    let j = (0..topo.n_consumers())
        .find(|j| topo.consumer_reach[*j].len() > 2)
        .unwrap();
    let (near, far) = (topo.consumer_reach[j][1], topo.consumer_reach[j][2]);
    dv.bv2.row_mut(j).fill(false);
    dv.bv2[[j, near]] = true;
    dv.bv2[[j, far]] = true;
    repair(&mut dv, &topo, &params);
    assert_eq!(dv.fogs_of(j), vec![near]);
}

#[test]
fn json_round_trip() {
    let (topo, params) = pilot();
    let dv = nominal_decision(&topo, &params);
    let back = DecisionVector::from_json(&dv.to_json().unwrap()).unwrap();
    assert_eq!(back, dv);
}

fn random_decision(topo: &Topology, params: &ScenarioParams, seed: u64) -> DecisionVector {
    let mut rng = fogplan::rng::stream(seed, 3, 0);
    let mut dv = DecisionVector::empty(topo);
    let p: f64 = rng.random();
    dv.bv1.iter_mut().for_each(|b| *b = rng.random::<f64>() < 0.9);
    dv.bv2.iter_mut().for_each(|b| *b = rng.random::<f64>() < p * 0.1);
    dv.bv3.iter_mut().for_each(|b| *b = rng.random::<f64>() < 0.02);
    dv.bv5.iter_mut().for_each(|b| *b = rng.random::<f64>() < p);
    dv.bv_l.iter_mut().for_each(|b| *b = rng.random());
    dv.workload.iter_mut().for_each(|w| *w = rng.random_range(0.0..3.0));
    dv.interfog_rate.iter_mut().for_each(|w| {
        if rng.random::<f64>() < 0.01 {
            *w = rng.random_range(0.0..3.0)
        }
    });
    if rng.random() {
        complete_flows(&mut dv, topo, params);
    }
    dv
}

#[test]
fn repair_contract_over_random_inputs() {
    let (topo, params) = pilot();
    for seed in 0..100 {
        let mut dv = random_decision(&topo, &params, seed);
        let out = repair(&mut dv, &topo, &params);
        assert!(out.complete(), "seed {seed}: {out:?}");
        let a = check_association(&dv, &topo);
        let w = check_workload(&dv, &topo);
        assert!(a.feasible() && w.feasible(), "seed {seed}: {:?} {:?}", a.failing(), w.failing());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn repair_is_idempotent(seed in 0u64..100_000) {
        let (topo, params) = pilot();
        let mut dv = random_decision(&topo, &params, seed);
        repair(&mut dv, &topo, &params);
        let once = dv.clone();
        let out = repair(&mut dv, &topo, &params);
        prop_assert!(!out.changed);
        prop_assert_eq!(dv, once);
    }

    #[test]
    fn penalty_is_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, extra in 0.0f64..5.0) {
        let w = PenaltyWeights::default();
        let mut r = FeasibilityReport::default();
        r.violations.insert(Constraint::Delay, a);
        r.violations.insert(Constraint::VmCount, b);
        let base = penalty(&r, &w);
        r.violations.insert(Constraint::Delay, a + extra);
        prop_assert!(penalty(&r, &w) >= base);
        prop_assert_eq!(base == 0.0, a == 0.0 && b == 0.0);
    }
}
