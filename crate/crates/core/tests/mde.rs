use std::collections::VecDeque;

use fogplan::costmodel::ScenarioParams;
use fogplan::feasibility::{check_association, check_workload, nominal_decision, PenaltyWeights};
use fogplan::mde::{
    de_variation, evolve, genome_distance, niche_count, niche_counts, shared_fitness_max, shared_fitness_min,
    sharing_value, MdeConfig, Problem, Scored,
};
use fogplan::problem::PlacementProblem;
use fogplan::rng::stream;
use fogplan::topology::{
    generate_topology, City, CloudServer, Consumer, Coord, FogNode, Reach, Topology, TopologyConfig,
};
use fogplan::toy;
use proptest::prelude::*;
use rand::Rng;

struct Func<F: Fn(&[f64]) -> f64 + Sync> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Problem<f64> for Func<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, g: &[f64]) -> Scored<f64> {
        Scored {
            raw: (self.f)(g),
            feasible: true,
        }
    }
}

fn sphere(g: &[f64]) -> f64 {
    g.iter().map(|x| (x - 0.5).powi(2)).sum()
}

fn assert_elitist(history: &[fogplan::mde::GenerationStats]) {
    for w in history.windows(2) {
        assert!(w[1].best_raw <= w[0].best_raw, "{} > {}", w[1].best_raw, w[0].best_raw);
    }
}

#[test]
fn distance_examples() {
    let x = [0.1, 0.7, 0.3];
    assert_eq!(genome_distance(&x, &x).unwrap(), 0.0);
    assert_eq!(genome_distance(&[0.0], &[1.0]).unwrap(), 1.0);
    assert!(genome_distance(&[0.0, 1.0], &[1.0]).is_err());
}

#[test]
fn sharing_boundaries() {
    assert_eq!(sharing_value(0.0, 0.3, 1.0), 1.0);
    assert_eq!(sharing_value(0.3, 0.3, 1.0), 0.0);
    assert_eq!(sharing_value(0.9, 0.3, 2.0), 0.0);
    assert_eq!(sharing_value(0.15, 0.3, 1.0), 0.5);
    assert!((sharing_value(0.15f64, 0.3, 2.0) - 0.75).abs() < 1e-15);
}

#[test]
fn niche_count_examples() {
    let a = [0.2, 0.2];
    let b = [0.9, 0.1];
    assert_eq!(niche_count(0, &[&a[..]], 0.1, 1.0), 1.0);
    assert_eq!(niche_counts(&[&a[..], &a[..]], 0.1, 1.0), vec![2.0, 2.0]);
    assert_eq!(niche_counts(&[&a[..], &b[..]], 0.1, 1.0), vec![1.0, 1.0]);
}

#[test]
fn shared_fitness_examples() {
    assert_eq!(shared_fitness_min(3.0, 1.0), 3.0);
    assert_eq!(shared_fitness_min(3.0, 2.0), 6.0);
    assert_eq!(shared_fitness_max(4.0, 1.0), 4.0);
    assert_eq!(shared_fitness_max(4.0, 2.0), 2.0);
    let (f, c) = (2.5f64, 1.7);
    assert!((shared_fitness_max(f, c) * shared_fitness_min(f, c) - f * f).abs() < 1e-12);
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]).then(a.cmp(b)));
    idx
}

#[test]
fn isolated_niches_keep_raw_order() {
    let mut rng = stream(5, 0, 0);
    for _ in 0..50 {
        // points on a grid spaced wider than the radius
        let pts: Vec<Vec<f64>> = (0..16)
            .map(|k| vec![(k % 4) as f64 / 3.0, (k / 4) as f64 / 3.0])
            .collect();
        let views: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let raw: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..10.0)).collect();
        let counts = niche_counts(&views, 0.3, 1.0);
        assert!(counts.iter().all(|c| *c == 1.0));
        let shared: Vec<f64> = raw.iter().zip(&counts).map(|(r, c)| shared_fitness_min(*r, *c)).collect();
        assert_eq!(argsort(&shared), argsort(&raw));
    }
}

#[test]
fn variation_degeneracies() {
    let mut rng = stream(1, 0, 0);
    let pop: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random()).collect()).collect();
    let views: Vec<&[f64]> = pop.iter().map(|p| p.as_slice()).collect();
    let copy = MdeConfig {
        diff_weight: 0.0,
        crossover_rate: 1.0,
        ..MdeConfig::default()
    };
    for i in 0..6 {
        let t = de_variation(&views, i, &copy, &mut stream(2, 0, i as u64));
        assert!(pop.iter().enumerate().any(|(k, p)| k != i && *p == t));
    }
    let same = vec![vec![0.25, 0.5, 0.75]; 5];
    let views: Vec<&[f64]> = same.iter().map(|p| p.as_slice()).collect();
    let t = de_variation(&views, 0, &MdeConfig::default(), &mut stream(3, 0, 0));
    assert_eq!(t, same[0]);
}

#[test]
fn variation_stays_in_box() {
    let cfg = MdeConfig {
        diff_weight: 2.0,
        ..MdeConfig::default()
    };
    let mut rng = stream(9, 0, 0);
    for k in 0..10_000u64 {
        let pop: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
        let views: Vec<&[f64]> = pop.iter().map(|p| p.as_slice()).collect();
        let t = de_variation(&views, (k % 4) as usize, &cfg, &mut stream(9, 1, k));
        assert!(t.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

#[test]
fn config_validation() {
    assert!(MdeConfig { pop_size: 3, ..MdeConfig::default() }.validate().is_err());
    assert!(MdeConfig { niche_radius: Some(0.0), ..MdeConfig::default() }.validate().is_err());
    assert!(MdeConfig { crossover_rate: 1.5, ..MdeConfig::default() }.validate().is_err());
    assert!(MdeConfig::default().validate().is_ok());
    assert_eq!(MdeConfig::default().elites(), 30);
}

#[test]
fn sphere_beats_random_search() {
    let cfg = MdeConfig {
        pop_size: 40,
        max_generations: 200,
        stagnation: 1000,
        seed: 11,
        ..MdeConfig::default()
    };
    let problem = Func { dim: 10, f: sphere };
    let r = evolve(&problem, &cfg).unwrap();
    assert_elitist(&r.history);
    assert!(r.best.score.raw < 1e-3, "{}", r.best.score.raw);

    let mut rng = stream(11, 99, 0);
    let budget = 40 * 201;
    let random_best = (0..budget)
        .map(|_| sphere(&(0..10).map(|_| rng.random::<f64>()).collect::<Vec<_>>()))
        .fold(f64::INFINITY, f64::min);
    assert!(random_best >= 10.0 * r.best.score.raw);
}

#[test]
fn bimodal_population_keeps_both_basins() {
    let problem = Func {
        dim: 1,
        f: |g: &[f64]| ((g[0] - 0.2).powi(2)).min((g[0] - 0.8).powi(2)) + 1.0,
    };
    for seed in 1..=5 {
        let cfg = MdeConfig {
            pop_size: 40,
            niche_radius: Some(0.3),
            max_generations: 100,
            stagnation: 1000,
            seed,
            ..MdeConfig::default()
        };
        let r = evolve(&problem, &cfg).unwrap();
        let left = r.population.iter().filter(|m| m.genome[0] < 0.5).count() as f64 / 40.0;
        assert!((0.2..=0.8).contains(&left), "seed {seed}: {left}");
    }
}

#[test]
fn runs_are_reproducible() {
    let cfg = MdeConfig {
        pop_size: 12,
        max_generations: 30,
        seed: 4,
        ..MdeConfig::default()
    };
    let problem = Func { dim: 4, f: sphere };
    let a = evolve(&problem, &cfg).unwrap();
    let b = evolve(&problem, &cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.best.genome, b.best.genome);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| evolve(&problem, &cfg).unwrap());
    assert_eq!(a.history, c.history);
}

#[test]
fn stagnation_stops_early() {
    let problem = Func { dim: 2, f: |_: &[f64]| 1.0 };
    let cfg = MdeConfig {
        pop_size: 8,
        stagnation: 5,
        ..MdeConfig::default()
    };
    let r = evolve(&problem, &cfg).unwrap();
    assert_eq!(r.generations, 5);
    assert_eq!(r.stop, fogplan::mde::StopReason::Stagnation);
}

/// Hop counts between road-side units by breadth-first search on the links.
fn hops() -> Vec<Vec<usize>> {
    let n = toy::RSUS;
    let mut adj = vec![Vec::new(); n];
    for (a, b) in toy::LINKS {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut d = vec![usize::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if d[v] == usize::MAX {
                        d[v] = d[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

/// Exhaustive minimum over every association and one-VM-per-unit placement.
fn toy_optimum() -> i64 {
    let fx = toy::fixture();
    let c = &fx.costs;
    let h = hops();
    let sites: Vec<usize> = (0..toy::RSUS).filter(|r| c.uplink[*r].is_some()).collect();
    let mut best = i64::MAX;
    let mut vm = [0usize; toy::EVS];
    fn place(k: usize, vm: &mut [usize; toy::EVS], visit: &mut dyn FnMut(&[usize; toy::EVS])) {
        if k == toy::EVS {
            visit(vm);
            return;
        }
        for r in 0..toy::RSUS {
            if !vm[..k].contains(&r) {
                vm[k] = r;
                place(k + 1, vm, visit);
            }
        }
    }
    place(0, &mut vm, &mut |vm| {
        let mut total = c.vm * toy::EVS as i64;
        for &host in vm {
            total += sites
                .iter()
                .map(|&s| c.uplink[s].unwrap() + c.hop * h[s][host] as i64)
                .min()
                .unwrap();
        }
        best = best.min(total);
    });
    best
}

#[test]
fn toy_optimum_by_enumeration() {
    assert_eq!(toy_optimum(), 20);
}

#[test]
fn toy_runs_reach_enumeration_optimum() {
    let optimum = toy_optimum() as f64;
    let problem = PlacementProblem::toy(toy::fixture());
    for seed in 1..=10 {
        let cfg = MdeConfig { seed, ..MdeConfig::default() };
        let r = evolve(&problem, &cfg).unwrap();
        assert_elitist(&r.history);
        assert!(r.best.score.feasible);
        assert_eq!(r.best.score.raw, optimum, "seed {seed}");
    }
}

#[test]
fn best_decision_passes_structural_checks() {
    let topo = generate_topology(&TopologyConfig::pilot(), 1).unwrap().restrict(30, 20);
    let params = ScenarioParams::default();
    let problem = PlacementProblem::new(topo.clone(), params.clone(), PenaltyWeights::default());
    let cfg = MdeConfig {
        pop_size: 16,
        max_generations: 15,
        ..MdeConfig::default()
    };
    let r = evolve(&problem, &cfg).unwrap();
    assert_elitist(&r.history);
    let dv = problem.realize(&r.best.genome);
    assert!(check_association(&dv, &topo).feasible());
    assert!(check_workload(&dv, &topo).feasible());
    let nominal = problem.cost_of(&nominal_decision(&topo, &params));
    assert!(r.best.score.raw <= nominal);
}

#[test]
fn encode_decode_binaries() {
    let topo = generate_topology(&TopologyConfig::pilot(), 1).unwrap();
    let params = ScenarioParams::default();
    let problem = PlacementProblem::new(topo.clone(), params.clone(), PenaltyWeights::default());
    let dv = nominal_decision(&topo, &params);
    let back = problem.decode(&problem.encode(&dv));
    assert_eq!(back.bv2, dv.bv2);
    assert_eq!(back.bv5, dv.bv5);
    assert_eq!(back.bv1, dv.bv1);
}

fn tiny(consumers: [(f64, f64); 2], fogs: [(f64, f64); 2], devices: u64) -> Topology {
    let cities = vec![City {
        id: 0,
        name: "x".into(),
        population: 1,
        coord: Coord::new(0.0, 0.0),
    }];
    let consumers = consumers
        .iter()
        .enumerate()
        .map(|(id, c)| Consumer {
            id,
            city: 0,
            coord: Coord::new(c.0, c.1),
            devices,
            app: 0,
        })
        .collect();
    let fog_nodes = fogs
        .iter()
        .enumerate()
        .map(|(id, c)| FogNode {
            id,
            city: 0,
            coord: Coord::new(c.0, c.1),
            bandwidth_units: vec![id],
            per_bu_rate: 31.25e6,
            service_rate: 5000.0,
            processing_elements: 4,
            physical_servers: 1,
            vm_cap_per_server: 1,
            storage_cap: 100e9,
            proc_cap: 5000.0,
            energy_rate: 3.7,
        })
        .collect();
    let servers = vec![CloudServer {
        id: 0,
        coord: Coord::new(5.0, 5.0),
        device_capacity: 16_000,
        power_draw_mw: 9.7,
        machine_count_max: 1000,
        cpu_freq_range: (2.0, 3.0),
    }];
    Topology::assemble(cities, consumers, fog_nodes, servers, 1, Reach::Radius(1e5), 1e9, 10e9)
}

/// Minimum over all binary genes and a 10-point grid on each continuous gene.
fn grid_optimum(problem: &PlacementProblem) -> f64 {
    let dim = problem.dim();
    let n_bin = dim - 2;
    let mut best = f64::INFINITY;
    for mask in 0..(1u32 << n_bin) {
        for u in 0..10 {
            for e in 0..10 {
                let mut g: Vec<f64> = (0..n_bin).map(|k| ((mask >> k) & 1) as f64).collect();
                g.push(u as f64 / 9.0);
                g.push(e as f64 / 9.0);
                best = best.min(problem.evaluate(&g).raw);
            }
        }
    }
    best
}

#[test]
fn small_instances_match_grid_enumeration() {
    let instances = [
        ([(0.0, 0.0), (0.0, 0.1)], [(0.0, 0.0), (0.0, 0.1)], 100, 1.0),
        ([(0.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 1.0)], 500, 0.5),
        ([(0.0, 0.0), (2.0, 2.0)], [(1.0, 1.0), (2.0, 2.0)], 1000, 2.0),
        ([(3.0, 0.0), (0.0, 3.0)], [(0.0, 0.0), (3.0, 3.0)], 50, 1.5),
    ];
    for (k, (c, f, devices, rate)) in instances.into_iter().enumerate() {
        let topo = tiny(c, f, devices);
        let params = ScenarioParams {
            arrival_rate: rate,
            ..ScenarioParams::default()
        };
        let problem = PlacementProblem::new(topo, params, PenaltyWeights::default());
        assert_eq!(problem.dim(), 8);
        let oracle = grid_optimum(&problem);
        let cfg = MdeConfig {
            pop_size: 20,
            max_generations: 150,
            seed: k as u64 + 1,
            ..MdeConfig::default()
        };
        let r = evolve(&problem, &cfg).unwrap();
        assert_elitist(&r.history);
        assert!(r.best.score.raw <= oracle * 1.01, "instance {k}: {} vs {oracle}", r.best.score.raw);
    }
}

proptest! {
    #[test]
    fn distance_is_symmetric(a in proptest::collection::vec(0.0f64..=1.0, 6), b in proptest::collection::vec(0.0f64..=1.0, 6)) {
        let d = genome_distance(&a, &b).unwrap();
        prop_assert_eq!(d, genome_distance(&b, &a).unwrap());
        prop_assert!(d >= 0.0);
    }

    #[test]
    fn sharing_value_in_unit_range(d in 0.0f64..5.0, rho in 0.01f64..2.0, phi in 0.1f64..4.0) {
        let s = sharing_value(d, rho, phi);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 0.0, d >= rho);
    }

    #[test]
    fn niche_counts_at_least_one(pts in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 3), 1..12)) {
        let views: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        for c in niche_counts(&views, 0.4, 1.0) {
            prop_assert!(c >= 1.0 && c <= pts.len() as f64);
        }
    }

    #[test]
    fn best_ever_never_worsens(seed in 0u64..10_000) {
        let cfg = MdeConfig { pop_size: 8, max_generations: 20, seed, ..MdeConfig::default() };
        let problem = Func { dim: 3, f: |g: &[f64]| (g[0] * 7.0).sin() + g[1] * g[2] };
        let r = evolve(&problem, &cfg).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1].best_raw <= w[0].best_raw);
        }
    }
}
