use fogplan::costmodel::{evaluate, ScenarioParams};
use fogplan::feasibility::nominal_decision;
use fogplan::harness::{
    emit, fne_crossover, render_svg, run_cost_sweep, run_energy_compare, run_fne_sweep, run_latency_compare,
    run_toy_vanet, ExperimentKind, Format, Meta, ResultTable, Row,
};
use fogplan::topology::{generate_topology, TopologyConfig};
use fogplan::{Config, Error};

fn small() -> Config {
    let mut cfg = Config::default();
    cfg.sweeps.consumers = vec![10_000, 20_000, 40_000];
    cfg
}

fn same_table(a: &ResultTable, b: &ResultTable) {
    assert_eq!(a.kind, b.kind);
    assert_eq!(a.columns, b.columns);
    assert_eq!(a.meta, b.meta);
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!((&x.series, x.x, x.replication, &x.label, &x.flag), (&y.series, y.x, y.replication, &y.label, &y.flag));
        for (u, v) in x.values.iter().zip(&y.values) {
            assert!(u.to_bits() == v.to_bits() || (u.is_nan() && v.is_nan()), "{u} vs {v}");
        }
    }
}

#[test]
fn latency_rows_are_consistent() {
    let cfg = small();
    let t = run_latency_compare(&cfg, 7).unwrap();
    assert_eq!(t.rows.len(), 3);
    assert_eq!(t.meta.config_hash, cfg.hash());
    let col = |n: &str| t.column(n).unwrap();
    let mut prev = (0.0, 0.0);
    for r in &t.rows {
        assert!(r.flag.is_empty());
        let v = &r.values;
        assert_eq!(v[col("fog_service")], v[col("fog_transmission")] + v[col("fog_processing")]);
        assert_eq!(v[col("cloud_service")], v[col("cloud_transmission")] + v[col("cloud_processing")]);
        assert!(v[col("fog_service")] < v[col("cloud_service")]);
        // adjacent points may dip by at most 1%
        assert!(v[col("fog_service")] >= 0.99 * prev.0 && v[col("cloud_service")] >= 0.99 * prev.1);
        prev = (v[col("fog_service")], v[col("cloud_service")]);
    }
}

#[test]
fn fne_sweep_rows() {
    let cfg = small();
    let t = run_fne_sweep(&cfg, 1).unwrap();
    let labels: Vec<&str> = t.rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["Edge", "Fog-assisted", "Fog-assisted", "Fog-assisted", "Pure cloud"]);
    let fog = t.column("fog_service").unwrap();
    let cloud = t.column("cloud_service").unwrap();
    let last = t.rows.last().unwrap();
    assert_eq!(last.x, 0.0);
    assert_eq!(last.values[fog], last.values[cloud]);
    let half = t.rows.iter().find(|r| r.x == 0.5).unwrap();
    let ratio = half.values[fog] / half.values[cloud];
    assert!((0.4..=0.6).contains(&ratio), "{ratio}");
    let positive: Vec<f64> = t.values("fne", "fog_service").into_iter().filter(|p| p.0 > 0.0).map(|p| p.1).collect();
    for w in positive.windows(2) {
        assert!(w[1] >= w[0]);
    }
    assert!(fne_crossover(&t).is_none_or(|x| x > 0.0 && x < 1.0));
}

#[test]
fn full_efficiency_drops_downstream_terms() {
    let topo = generate_topology(&TopologyConfig::default(), 1).unwrap();
    let params = ScenarioParams {
        pi_f: 1.0,
        ..ScenarioParams::default()
    };
    let b = evaluate(&nominal_decision(&topo, &params), &topo, &params).breakdown;
    assert_eq!(b.latency.dispatch, 0.0);
    assert_eq!(b.latency.cloud_comp, 0.0);
}

#[test]
fn energy_rows() {
    let mut cfg = small();
    cfg.sweeps.consumers = vec![0, 10_000, 40_000];
    let t = run_energy_compare(&cfg, 1).unwrap();
    assert!(t.rows[0].values.iter().all(|v| *v == 0.0));
    let fog = t.values("consumers", "fog_total");
    let cloud = t.values("consumers", "cloud_total");
    for w in fog.windows(2).chain(cloud.windows(2)) {
        assert!(w[1].1 >= w[0].1);
    }
    for (f, c) in fog.iter().zip(&cloud).skip(1) {
        assert!(f.1 <= 0.6 * c.1);
    }
}

#[test]
fn toy_table_is_exact() {
    let (t, rep) = run_toy_vanet(&Config::default(), 1).unwrap();
    let total = t.column("total").unwrap();
    assert_eq!(t.rows[0].values[total], 73.0);
    assert_eq!(t.rows[1].values[total], 43.0);
    assert_eq!(t.rows[2].values[total], 41.09);
    assert_eq!(rep.scenario_2.upload_delay, fogplan::Exact::new(1, 4));
}

#[test]
fn csv_round_trip() {
    for t in [run_latency_compare(&small(), 3).unwrap(), run_toy_vanet(&Config::default(), 3).unwrap().0] {
        let text = t.to_csv().unwrap();
        let back = ResultTable::from_csv(&text).unwrap();
        same_table(&t, &back);
        assert_eq!(back.to_csv().unwrap(), text);
    }
}

#[test]
fn json_preserves_values() {
    let t = run_latency_compare(&small(), 3).unwrap();
    let back: ResultTable = serde_json::from_str(&t.to_json().unwrap()).unwrap();
    same_table(&t, &back);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = small();
    let a = run_energy_compare(&cfg, 5).unwrap();
    let b = run_energy_compare(&cfg, 5).unwrap();
    for f in [Format::Csv, Format::Json, Format::Svg] {
        assert_eq!(a.render(f).unwrap(), b.render(f).unwrap());
    }
}

#[test]
fn svg_structure() {
    let t = run_latency_compare(&small(), 1).unwrap();
    let text = render_svg(&t).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    assert_eq!(lines, t.series_names().len() * ExperimentKind::LatencyCompare.plotted().len());
    assert!(text.contains(&format!("config_hash: {}", t.meta.config_hash)));
    assert!(doc.descendants().any(|n| n.has_tag_name("text")));

    let empty = ResultTable::new(
        ExperimentKind::CostSweep,
        &["total"],
        Meta {
            config_hash: "x".into(),
            seed: 0,
            tool_version: "0".into(),
        },
    );
    assert!(render_svg(&empty).is_err());
}

#[test]
fn emit_writes_and_reports_bad_paths() {
    let (t, _) = run_toy_vanet(&Config::default(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    emit(&t, Format::Csv, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), t.to_csv().unwrap());
    let bad = dir.path().join("missing").join("toy.csv");
    assert!(matches!(emit(&t, Format::Csv, &bad), Err(Error::Io(_))));
}

#[test]
fn config_round_trip_and_hash() {
    let cfg = small();
    let back = Config::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
    assert_ne!(Config::default().hash(), cfg.hash());
    assert!(matches!(Config::from_json("{\"sweeps\": {\"replications\": 0}}"), Err(Error::Config(_))));
    assert!(matches!(Config::from_json("not json"), Err(Error::Config(_))));
    let partial = Config::from_json("{\"params\": {\"arrival_rate\": 2.0}}").unwrap();
    assert_eq!(partial.params.arrival_rate, 2.0);
}

#[test]
fn replications_give_one_row_each() {
    let mut cfg = small();
    cfg.sweeps.replications = 2;
    let t = run_latency_compare(&cfg, 1).unwrap();
    assert_eq!(t.rows.len(), 6);
    assert_eq!(t.rows.iter().filter(|r| r.replication == 1).count(), 3);
}

#[test]
fn unstable_points_are_flagged() {
    let mut cfg = small();
    cfg.topology.fog.service_rate = 1.0;
    cfg.params.pi_f = 0.5;
    let t = run_latency_compare(&cfg, 1).unwrap();
    assert!(t.rows.iter().all(|r: &Row| r.flag == "unstable" && r.values.iter().all(|v| v.is_nan())));
    assert!(t.values("consumers", "fog_service").is_empty());
}

#[test]
fn small_cost_sweep_shape() {
    let mut cfg = Config::default();
    let cs = &mut cfg.sweeps.cost;
    cs.consumers = vec![50, 60];
    cs.arrival_rates = vec![1.0, 2.0];
    cs.fog_nodes = vec![20, 30];
    cs.generations = 5;
    cs.pop_size = 8;
    let (t, points) = run_cost_sweep(&cfg, 1).unwrap();
    assert_eq!(t.rows.len(), 6);
    assert_eq!(points.len(), 6);
    assert_eq!(t.series_names(), ["consumers", "arrival_rate", "fog_nodes"]);
    for s in t.series_names() {
        let xs: Vec<f64> = t.rows.iter().filter(|r| r.series == s).map(|r| r.x).collect();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }
    let total = t.column("total").unwrap();
    assert!(t.rows.iter().all(|r| r.values[total] > 0.0));
}
