use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fogplan::costmodel::{evaluate, write_breakdown_csv, BreakdownRow};
use fogplan::feasibility::{check_all, nominal_decision, DecisionVector};
use fogplan::harness::{self, ExperimentKind, Format, ResultTable};
use fogplan::mde::{evolve, write_history_csv};
use fogplan::problem::PlacementProblem;
use fogplan::topology::{generate_topology, Topology};
use fogplan::{Config, Error};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fogplan", version, about = "Fog-assisted cloud placement simulator and optimizer")]
struct Cli {
    /// JSON configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Latency,
    Fne,
    Energy,
    Cost,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology and write it as JSON (or a node list as CSV).
    GenTopology {
        /// Use the pilot network instead of the full one.
        #[arg(long)]
        pilot: bool,
    },
    /// Cost and feasibility of a decision (the nominal placement by default).
    Evaluate {
        #[arg(long)]
        pilot: bool,
        /// Topology JSON to use instead of generating one.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Decision vector JSON.
        #[arg(long)]
        decision: Option<PathBuf>,
    },
    /// Search for a cheap feasible placement.
    Optimize {
        /// Optimize the full network instead of the pilot.
        #[arg(long)]
        full: bool,
        /// Write the per-generation history CSV here.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Write the best decision vector JSON here.
        #[arg(long)]
        decision_out: Option<PathBuf>,
    },
    /// Run one of the comparison experiments.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
    },
    /// The ten-RSU worked example in exact arithmetic.
    ToyVanet,
    /// Monte Carlo estimate of the offload probability.
    EstimatePic,
}

enum Outcome {
    Done,
    Infeasible,
}

fn format_of(f: OutFormat) -> Format {
    match f {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
        OutFormat::Svg => Format::Svg,
    }
}

fn write_out(cli: &Cli, text: &str) -> fogplan::Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &PathBuf) -> fogplan::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn unsupported(what: &str) -> Error {
    Error::Config(format!("{what} cannot be written as svg"))
}

fn pretty(v: &serde_json::Value) -> fogplan::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn load_config(cli: &Cli) -> fogplan::Result<Config> {
    match &cli.config {
        Some(p) => Config::from_json(&read(p)?),
        None => Ok(Config::default()),
    }
}

fn topology_csv(t: &Topology) -> fogplan::Result<String> {
    let mut s = String::from("kind,id,lat,lon,capacity\n");
    for f in &t.fog_nodes {
        s += &format!("fog,{},{},{},{}\n", f.id, f.coord.lat, f.coord.lon, f.bandwidth_units.len());
    }
    for c in &t.servers {
        s += &format!("server,{},{},{},{}\n", c.id, c.coord.lat, c.coord.lon, c.machine_count_max);
    }
    for c in &t.consumers {
        s += &format!("consumer,{},{},{},{}\n", c.id, c.coord.lat, c.coord.lon, c.devices);
    }
    Ok(s)
}

fn table_out(cli: &Cli, table: &ResultTable) -> fogplan::Result<()> {
    write_out(cli, &table.render(format_of(cli.format))?)
}

fn run(cli: &Cli) -> fogplan::Result<Outcome> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::GenTopology { pilot } => {
            let t = generate_topology(if *pilot { &cfg.pilot } else { &cfg.topology }, cli.seed)?;
            let text = match cli.format {
                OutFormat::Json => t.to_json()? + "\n",
                OutFormat::Csv => topology_csv(&t)?,
                OutFormat::Svg => return Err(unsupported("a topology")),
            };
            write_out(cli, &text)?;
            Ok(Outcome::Done)
        }
        Command::Evaluate {
            pilot,
            topology,
            decision,
        } => {
            let topo = match topology {
                Some(p) => Topology::from_json(&read(p)?)?,
                None => generate_topology(if *pilot { &cfg.pilot } else { &cfg.topology }, cli.seed)?,
            };
            let dv = match decision {
                Some(p) => DecisionVector::from_json(&read(p)?)?,
                None => nominal_decision(&topo, &cfg.params),
            };
            if !dv.shape_matches(&topo) {
                return Err(Error::Config("decision vector does not fit the topology".into()));
            }
            let ev = evaluate(&dv, &topo, &cfg.params);
            let report = check_all(&dv, &topo, &cfg.params);
            let text = match cli.format {
                OutFormat::Csv => {
                    let row = BreakdownRow::new("evaluate", topo.total_devices(), ev.fne.unwrap_or(0.0), &ev.breakdown);
                    let mut buf = Vec::new();
                    write_breakdown_csv(&[row], &mut buf)?;
                    String::from_utf8_lossy(&buf).into_owned()
                }
                OutFormat::Json => pretty(&json!({
                    "breakdown": ev.breakdown,
                    "fne": ev.fne,
                    "feasible": report.feasible(),
                    "violations": report.violations,
                }))?,
                OutFormat::Svg => return Err(unsupported("a cost breakdown")),
            };
            write_out(cli, &text)?;
            Ok(if report.feasible() { Outcome::Done } else { Outcome::Infeasible })
        }
        Command::Optimize {
            full,
            history,
            decision_out,
        } => {
            let topo = generate_topology(if *full { &cfg.topology } else { &cfg.pilot }, cli.seed)?;
            let problem = PlacementProblem::new(topo, cfg.params.clone(), cfg.penalty.clone());
            let mde = fogplan::mde::MdeConfig {
                seed: cli.seed,
                ..cfg.mde.clone()
            };
            let res = evolve(&problem, &mde)?;
            let out = problem.outcome(&res.best.genome);
            let ev = evaluate(&out.decision, &problem.topo, &problem.params);
            if let Some(p) = history {
                let f = std::fs::File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                write_history_csv(&res.history, f)?;
            }
            if let Some(p) = decision_out {
                std::fs::write(p, out.decision.to_json()?).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            }
            let feasible = out.report.feasible();
            let text = match cli.format {
                OutFormat::Csv => {
                    let row = BreakdownRow::new(
                        "optimize",
                        problem.topo.total_devices(),
                        ev.fne.unwrap_or(0.0),
                        &ev.breakdown,
                    );
                    let mut buf = Vec::new();
                    write_breakdown_csv(&[row], &mut buf)?;
                    String::from_utf8_lossy(&buf).into_owned()
                }
                OutFormat::Json => pretty(&json!({
                    "breakdown": ev.breakdown,
                    "fne": ev.fne,
                    "feasible": feasible,
                    "violations": out.report.violations,
                    "generations": res.generations,
                    "history": res.history,
                }))?,
                OutFormat::Svg => return Err(unsupported("an optimization result")),
            };
            write_out(cli, &text)?;
            Ok(if feasible { Outcome::Done } else { Outcome::Infeasible })
        }
        Command::Sweep { kind } => {
            let table = match kind {
                SweepKind::Latency => harness::run_latency_compare(&cfg, cli.seed)?,
                SweepKind::Fne => {
                    let t = harness::run_fne_sweep(&cfg, cli.seed)?;
                    if let Some(x) = harness::fne_crossover(&t) {
                        eprintln!("fog and cloud latency meet at efficiency {x}");
                    }
                    t
                }
                SweepKind::Energy => harness::run_energy_compare(&cfg, cli.seed)?,
                SweepKind::Cost => harness::run_cost_sweep(&cfg, cli.seed)?.0,
            };
            table_out(cli, &table)?;
            let infeasible = table.kind == ExperimentKind::CostSweep && table.rows.iter().any(|r| r.flag == "infeasible");
            Ok(if infeasible { Outcome::Infeasible } else { Outcome::Done })
        }
        Command::ToyVanet => {
            let (table, rep) = harness::run_toy_vanet(&cfg, cli.seed)?;
            match cli.format {
                OutFormat::Json => {
                    let s = |x: fogplan::Exact| x.to_string();
                    let side = |b: &fogplan::toy::ToyBreakdown<fogplan::Exact>| {
                        json!({
                            "upload": s(b.upload),
                            "vm": s(b.vm),
                            "inter_rsu": s(b.inter_rsu),
                            "total": s(b.total),
                            "upload_delay": s(b.upload_delay),
                        })
                    };
                    write_out(
                        cli,
                        &pretty(&json!({
                            "scenario_1": side(&rep.scenario_1),
                            "scenario_2": side(&rep.scenario_2),
                            "improvement": s(rep.improvement),
                            "improvement_pct": fogplan::toy::percent_2dp(rep.improvement),
                            "delay_reduction_pct": fogplan::toy::percent_2dp(rep.delay_reduction),
                            "config_hash": table.meta.config_hash,
                        }))?,
                    )?;
                }
                _ => table_out(cli, &table)?,
            }
            Ok(Outcome::Done)
        }
        Command::EstimatePic => {
            let (table, res) = harness::run_pic_estimate(&cfg, cli.seed)?;
            match cli.format {
                OutFormat::Json => write_out(
                    cli,
                    &pretty(&json!({
                        "estimate": res.estimate,
                        "estimate_halfwidth": res.estimate_halfwidth,
                        "mean_savings": res.mean_savings,
                        "ci_halfwidth": res.ci_halfwidth,
                        "trials_used": res.trials_used,
                        "config_hash": table.meta.config_hash,
                    }))?,
                )?,
                _ => table_out(cli, &table)?,
            }
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = std::env::var("FOGPLAN_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => {
            eprintln!("fogplan: infeasible");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("fogplan: {e}");
            ExitCode::from(1)
        }
    }
}
