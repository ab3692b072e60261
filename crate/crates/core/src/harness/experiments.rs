use super::{ExperimentKind, Meta, ResultTable, Row};
use crate::config::Config;
use crate::costmodel::{total_cloud_cost, total_fog_cost, Evaluation, Regime, ScenarioParams};
use crate::error::{Error, Result};
use crate::feasibility::{nominal_decision, DecisionVector};
use crate::mde::{evolve, MdeConfig};
use crate::montecarlo::{estimate_pi_c, savings_objective, McResult};
use crate::problem::PlacementProblem;
use crate::rng::stream;
use crate::topology::{generate_topology, Topology};
use crate::toy;
use crate::Exact;
use rand::RngCore;

const LATENCY_COLUMNS: [&str; 8] = [
    "fog_transmission",
    "fog_processing",
    "fog_service",
    "cloud_transmission",
    "cloud_processing",
    "cloud_service",
    "ratio",
    "fne",
];

fn meta(cfg: &Config, seed: u64) -> Meta {
    Meta {
        config_hash: cfg.hash(),
        seed,
        tool_version: crate::VERSION.to_string(),
    }
}

fn replica_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

fn topology_with(cfg: &Config, consumers: u64, seed: u64) -> Result<Topology> {
    let mut t = cfg.topology.clone();
    t.consumers = consumers;
    generate_topology(&t, seed)
}

fn compare(topo: &Topology, params: &ScenarioParams) -> Result<(Evaluation, Evaluation)> {
    let cloud = total_cloud_cost(topo, params)?;
    let fog = if params.pi_c >= 1.0 || !params.offload {
        total_cloud_cost(topo, params)?
    } else {
        total_fog_cost(&nominal_decision(topo, params), topo, params)?
    };
    Ok((fog, cloud))
}

fn latency_values(fog: &Evaluation, cloud: &Evaluation) -> Vec<f64> {
    let (f, c) = (&fog.breakdown.latency, &cloud.breakdown.latency);
    let (ft, fp) = (f.transmission(), f.processing());
    let (ct, cp) = (c.transmission(), c.processing());
    vec![ft, fp, ft + fp, ct, cp, ct + cp, (ft + fp) / (ct + cp), fog.fne.unwrap_or(0.0)]
}

fn unstable_row(series: &str, x: f64, replication: usize, label: &str, n: usize, e: &Error) -> Row {
    Row {
        series: series.into(),
        x,
        replication,
        label: label.into(),
        values: vec![f64::NAN; n],
        flag: match e {
            Error::Unstable { .. } => "unstable".into(),
            other => other.to_string(),
        },
    }
}

/// Fog-assisted vs cloud-only latency over the consumer sweep.
pub fn run_latency_compare(cfg: &Config, seed: u64) -> Result<ResultTable> {
    let mut table = ResultTable::new(ExperimentKind::LatencyCompare, &LATENCY_COLUMNS, meta(cfg, seed));
    let mut params = cfg.params.clone();
    params.pi_f = cfg.sweeps.latency_fne;
    for r in 0..cfg.sweeps.replications {
        for &n in &cfg.sweeps.consumers {
            let topo = topology_with(cfg, n, replica_seed(seed, r))?;
            let label = Regime::of(params.pi_f).label();
            table.rows.push(match compare(&topo, &params) {
                Ok((fog, cloud)) => Row {
                    series: "consumers".into(),
                    x: n as f64,
                    replication: r,
                    label: label.into(),
                    values: latency_values(&fog, &cloud),
                    flag: String::new(),
                },
                Err(e) => unstable_row("consumers", n as f64, r, label, LATENCY_COLUMNS.len(), &e),
            });
        }
    }
    Ok(table)
}

/// Latency at each fog network efficiency level. The zero level runs
/// every request straight to the cloud.
pub fn run_fne_sweep(cfg: &Config, seed: u64) -> Result<ResultTable> {
    let mut table = ResultTable::new(ExperimentKind::FneSweep, &LATENCY_COLUMNS, meta(cfg, seed));
    for r in 0..cfg.sweeps.replications {
        let topo = topology_with(cfg, cfg.topology.consumers, replica_seed(seed, r))?;
        for &level in &cfg.sweeps.fne_levels {
            let mut params = cfg.params.clone();
            params.pi_f = level;
            if level <= 0.0 {
                params.pi_c = 1.0;
            }
            let label = Regime::of(level).label();
            table.rows.push(match compare(&topo, &params) {
                Ok((fog, cloud)) => Row {
                    series: "fne".into(),
                    x: level,
                    replication: r,
                    label: label.into(),
                    values: latency_values(&fog, &cloud),
                    flag: String::new(),
                },
                Err(e) => unstable_row("fne", level, r, label, LATENCY_COLUMNS.len(), &e),
            });
        }
    }
    Ok(table)
}

/// Largest swept efficiency above zero at which the fog service latency is
/// still within 1% of the cloud one.
pub fn fne_crossover(table: &ResultTable) -> Option<f64> {
    table
        .values("fne", "ratio")
        .into_iter()
        .filter(|(x, ratio)| *x > 0.0 && *ratio >= 0.99)
        .map(|(x, _)| x)
        .reduce(f64::max)
}

const ENERGY_COLUMNS: [&str; 9] = [
    "fog_tx",
    "fog_fogcomp",
    "fog_cloudcomp",
    "fog_total",
    "cloud_tx",
    "cloud_fogcomp",
    "cloud_cloudcomp",
    "cloud_total",
    "savings_pct",
];

/// Total power of both paradigms over the consumer sweep.
pub fn run_energy_compare(cfg: &Config, seed: u64) -> Result<ResultTable> {
    let mut table = ResultTable::new(ExperimentKind::EnergyCompare, &ENERGY_COLUMNS, meta(cfg, seed));
    let mut params = cfg.params.clone();
    params.pi_f = cfg.sweeps.energy_fne;
    for r in 0..cfg.sweeps.replications {
        for &n in &cfg.sweeps.consumers {
            let label = Regime::of(params.pi_f).label();
            let row = if n == 0 {
                Ok(vec![0.0; ENERGY_COLUMNS.len()])
            } else {
                topology_with(cfg, n, replica_seed(seed, r))
                    .and_then(|topo| compare(&topo, &params))
                    .map(|(fog, cloud)| {
                        let (f, c) = (&fog.breakdown.power, &cloud.breakdown.power);
                        let (ft, ct) = (f.total(), c.total());
                        vec![
                            f.tx,
                            f.fog_comp,
                            f.cloud_comp,
                            ft,
                            c.tx,
                            c.fog_comp,
                            c.cloud_comp,
                            ct,
                            if ct > 0.0 { 100.0 * (1.0 - ft / ct) } else { 0.0 },
                        ]
                    })
            };
            table.rows.push(match row {
                Ok(values) => Row {
                    series: "consumers".into(),
                    x: n as f64,
                    replication: r,
                    label: label.into(),
                    values,
                    flag: String::new(),
                },
                Err(e) => unstable_row("consumers", n as f64, r, label, ENERGY_COLUMNS.len(), &e),
            });
        }
    }
    Ok(table)
}

const COST_COLUMNS: [&str; 8] = ["total", "objective", "comm", "comp", "cons", "ems", "feasible", "generations"];

#[derive(Clone, Debug)]
pub struct CostPoint {
    pub series: &'static str,
    pub x: f64,
    pub decision: DecisionVector,
    pub feasible: bool,
    pub total: f64,
}

fn optimize_point(
    topo: Topology,
    params: ScenarioParams,
    cfg: &Config,
    warm: Option<&DecisionVector>,
    seed: u64,
) -> Result<(CostPoint, Vec<f64>)> {
    let mut problem = PlacementProblem::new(topo, params, cfg.penalty.clone());
    if let Some(dv) = warm {
        problem = problem.with_seed(dv);
    }
    let mde = MdeConfig {
        pop_size: cfg.sweeps.cost.pop_size,
        max_generations: cfg.sweeps.cost.generations,
        seed,
        ..cfg.mde.clone()
    };
    let res = evolve(&problem, &mde)?;
    let out = problem.outcome(&res.best.genome);
    let ev = crate::costmodel::evaluate(&out.decision, &problem.topo, &problem.params);
    let b = &ev.breakdown;
    let feasible = out.report.feasible();
    let values = vec![
        b.total,
        out.cost + out.penalty,
        b.comm,
        b.comp,
        b.cons,
        b.ems,
        feasible as u8 as f64,
        res.generations as f64,
    ];
    Ok((
        CostPoint {
            series: "",
            x: 0.0,
            decision: out.decision,
            feasible,
            total: b.total,
        },
        values,
    ))
}

/// Optimised total cost on the pilot network against consumer count,
/// arrival rate and fog-node count. Each curve is walked in the direction
/// where the previous optimum stays valid and seeds the next point.
pub fn run_cost_sweep(cfg: &Config, seed: u64) -> Result<(ResultTable, Vec<CostPoint>)> {
    let cs = &cfg.sweeps.cost;
    let mut table = ResultTable::new(ExperimentKind::CostSweep, &COST_COLUMNS, meta(cfg, seed));
    let mut points = Vec::new();
    for r in 0..cfg.sweeps.replications {
        let mut pilot = cfg.pilot.clone();
        let max_consumers = cs.consumers.iter().copied().max().unwrap_or(0).max(pilot.consumers as usize);
        pilot.consumers = max_consumers as u64;
        pilot.fog_nodes = cs.fog_nodes.iter().copied().max().unwrap_or(0).max(pilot.fog_nodes);
        let base = generate_topology(&pilot, replica_seed(seed, r))?;
        let (nc0, nf0) = (cfg.pilot.consumers as usize, cfg.pilot.fog_nodes);

        let mut curves: Vec<(&'static str, Vec<f64>)> = vec![
            ("consumers", cs.consumers.iter().map(|n| *n as f64).collect()),
            ("arrival_rate", cs.arrival_rates.clone()),
            ("fog_nodes", cs.fog_nodes.iter().map(|n| *n as f64).collect()),
        ];
        for (name, xs) in curves.iter_mut() {
            // consumers and rates shrink the problem, fog nodes only add options
            xs.sort_by(|a, b| a.total_cmp(b));
            if *name != "fog_nodes" {
                xs.reverse();
            }
        }
        for (c, (name, xs)) in curves.iter().enumerate() {
            let mut warm: Option<DecisionVector> = None;
            let mut rows = Vec::new();
            for (k, &x) in xs.iter().enumerate() {
                let mut params = cfg.params.clone();
                let topo = match *name {
                    "consumers" => base.restrict(x as usize, nf0),
                    "arrival_rate" => {
                        params.arrival_rate = x;
                        base.restrict(nc0, nf0)
                    }
                    _ => base.restrict(nc0, x as usize),
                };
                let point_seed = stream(seed, 0x636f_7374 + c as u64, (r * 1000 + k) as u64).next_u64();
                let (mut point, values) = optimize_point(topo, params, cfg, warm.as_ref(), point_seed)?;
                point.series = name;
                point.x = x;
                rows.push(Row {
                    series: name.to_string(),
                    x,
                    replication: r,
                    label: String::new(),
                    values,
                    flag: if point.feasible { String::new() } else { "infeasible".into() },
                });
                warm = Some(point.decision.clone());
                points.push(point);
            }
            rows.sort_by(|a, b| a.x.total_cmp(&b.x));
            table.rows.extend(rows);
        }
    }
    Ok((table, points))
}

/// Both worked-example scenarios with the relative improvements as a third
/// row (percent, truncated to two decimals).
pub fn run_toy_vanet(cfg: &Config, seed: u64) -> Result<(ResultTable, toy::ToyReport<Exact>)> {
    let rep = toy::run_toy_vanet::<Exact>()?;
    let cols = ["upload", "vm", "inter_rsu", "total", "upload_delay"];
    let mut table = ResultTable::new(ExperimentKind::ToyVanet, &cols, meta(cfg, seed));
    let f = |x: Exact| *x.numer() as f64 / *x.denom() as f64;
    for (k, (label, s)) in [("scenario_1", &rep.scenario_1), ("scenario_2", &rep.scenario_2)]
        .into_iter()
        .enumerate()
    {
        table.rows.push(Row {
            series: "scenario".into(),
            x: (k + 1) as f64,
            replication: 0,
            label: label.into(),
            values: vec![f(s.upload), f(s.vm), f(s.inter_rsu), f(s.total), f(s.upload_delay)],
            flag: String::new(),
        });
    }
    let pct = |x: Exact| toy::percent_2dp(x).parse::<f64>().unwrap_or(f64::NAN);
    table.rows.push(Row {
        series: "reduction_pct".into(),
        x: 0.0,
        replication: 0,
        label: "scenario_1_to_2".into(),
        values: vec![f64::NAN, f64::NAN, f64::NAN, pct(rep.improvement), pct(rep.delay_reduction)],
        flag: String::new(),
    });
    Ok((table, rep))
}

/// Monte Carlo estimate of the savings-maximising offload probability on
/// the pilot network.
pub fn run_pic_estimate(cfg: &Config, seed: u64) -> Result<(ResultTable, McResult)> {
    let topo = generate_topology(&cfg.pilot, seed)?;
    let mc = crate::montecarlo::McConfig {
        seed,
        ..cfg.mc.clone()
    };
    let res = estimate_pi_c(savings_objective(&topo, &cfg.params, &mc), &mc)?;
    let cols = ["pi_c", "savings", "running_mean", "halfwidth"];
    let mut table = ResultTable::new(ExperimentKind::PicEstimate, &cols, meta(cfg, seed));
    for t in &res.samples {
        table.rows.push(Row {
            series: "trial".into(),
            x: t.trial as f64,
            replication: 0,
            label: String::new(),
            values: vec![t.pi_c, t.savings, t.running_mean, t.halfwidth],
            flag: String::new(),
        });
    }
    Ok((table, res))
}
