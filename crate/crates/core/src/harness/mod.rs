//! Experiment runner and result tables.

mod experiments;
mod svg;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use experiments::{
    fne_crossover, run_cost_sweep, run_energy_compare, run_fne_sweep, run_latency_compare,
    run_pic_estimate, run_toy_vanet, CostPoint,
};
pub use svg::render_svg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LatencyCompare,
    FneSweep,
    EnergyCompare,
    CostSweep,
    ToyVanet,
    PicEstimate,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::LatencyCompare => "latency_compare",
            ExperimentKind::FneSweep => "fne_sweep",
            ExperimentKind::EnergyCompare => "energy_compare",
            ExperimentKind::CostSweep => "cost_sweep",
            ExperimentKind::ToyVanet => "toy_vanet",
            ExperimentKind::PicEstimate => "pic_estimate",
        }
    }

    pub fn parse(s: &str) -> Option<ExperimentKind> {
        [
            ExperimentKind::LatencyCompare,
            ExperimentKind::FneSweep,
            ExperimentKind::EnergyCompare,
            ExperimentKind::CostSweep,
            ExperimentKind::ToyVanet,
            ExperimentKind::PicEstimate,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// Columns drawn as lines in the SVG chart.
    pub fn plotted(&self) -> &'static [&'static str] {
        match self {
            ExperimentKind::LatencyCompare | ExperimentKind::FneSweep => &["fog_service", "cloud_service"],
            ExperimentKind::EnergyCompare => &["fog_total", "cloud_total"],
            ExperimentKind::CostSweep | ExperimentKind::ToyVanet => &["total"],
            ExperimentKind::PicEstimate => &["savings"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Name of the swept variable.
    pub series: String,
    pub x: f64,
    pub replication: usize,
    pub label: String,
    pub values: Vec<f64>,
    /// Empty, or why the point is unusable (e.g. "unstable").
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub kind: ExperimentKind,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub meta: Meta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl ResultTable {
    pub fn new(kind: ExperimentKind, columns: &[&str], meta: Meta) -> Self {
        ResultTable {
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta,
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of `name` over unflagged rows of `series`, in row order.
    pub fn values(&self, series: &str, name: &str) -> Vec<(f64, f64)> {
        let Some(k) = self.column(name) else { return Vec::new() };
        self.rows
            .iter()
            .filter(|r| r.series == series && r.flag.is_empty())
            .map(|r| (r.x, r.values[k]))
            .collect()
    }

    pub fn series_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.series) {
                out.push(r.series.clone());
            }
        }
        out
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["kind", "series", "x", "replication", "label"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(self.columns.iter().cloned());
        h.extend(["flag", "config_hash", "seed", "tool_version"].iter().map(|s| s.to_string()));
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                self.kind.name().to_string(),
                r.series.clone(),
                r.x.to_string(),
                r.replication.to_string(),
                r.label.clone(),
            ];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            rec.extend([
                r.flag.clone(),
                self.meta.config_hash.clone(),
                self.meta.seed.to_string(),
                self.meta.tool_version.clone(),
            ]);
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<ResultTable> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.to_string()).collect();
        if header.len() < 9 {
            return Err(Error::Parse("result table header too short".into()));
        }
        let columns = header[5..header.len() - 4].to_vec();
        let nv = columns.len();
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s}: {e}")));
        let mut table: Option<ResultTable> = None;
        for rec in rd.records() {
            let rec = rec?;
            let kind = ExperimentKind::parse(&rec[0]).ok_or_else(|| Error::Parse(format!("kind {}", &rec[0])))?;
            let meta = Meta {
                config_hash: rec[6 + nv].to_string(),
                seed: rec[7 + nv].parse().map_err(|_| Error::Parse("seed".into()))?,
                tool_version: rec[8 + nv].to_string(),
            };
            let t = table.get_or_insert_with(|| ResultTable {
                kind,
                columns: columns.clone(),
                rows: Vec::new(),
                meta,
            });
            t.rows.push(Row {
                series: rec[1].to_string(),
                x: num(&rec[2])?,
                replication: rec[3].parse().map_err(|_| Error::Parse("replication".into()))?,
                label: rec[4].to_string(),
                values: (0..nv).map(|k| num(&rec[5 + k])).collect::<Result<_>>()?,
                flag: rec[5 + nv].to_string(),
            });
        }
        table.ok_or_else(|| Error::Parse("result table has no rows".into()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
            Format::Svg => render_svg(self),
        }
    }
}

pub fn emit(table: &ResultTable, format: Format, path: &Path) -> Result<()> {
    let text = table.render(format)?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
