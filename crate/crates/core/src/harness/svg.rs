use std::fmt::Write;

use super::ResultTable;
use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn extent(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Line chart with one polyline per (series, plotted column). Each series
/// is drawn against its own x range.
pub fn render_svg(table: &ResultTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Config("cannot plot an empty table".into()));
    }
    let series = table.series_names();
    let plotted: Vec<&str> = table
        .kind
        .plotted()
        .iter()
        .copied()
        .filter(|c| table.column(c).is_some())
        .collect();
    let mut lines = Vec::new();
    for s in &series {
        for c in &plotted {
            lines.push((format!("{s}/{c}"), table.values(s, c)));
        }
    }
    let (ylo, yhi) = extent(lines.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(out, "<!-- config_hash: {} seed: {} -->", table.meta.config_hash, table.meta.seed);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, table.kind.name());
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(out, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#, H - PAD);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 15.0,
        series.join(", ")
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        plotted.join(", ")
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10">{ylo:.4e}</text>"#, 2.0, H - PAD);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10">{yhi:.4e}</text>"#, 2.0, PAD);
    for (k, (name, pts)) in lines.iter().enumerate() {
        let (xlo, xhi) = extent(pts.iter().map(|p| p.0));
        let coords: Vec<String> = pts
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|(x, y)| {
                let px = PAD + (x - xlo) / (xhi - xlo) * (W - 2.0 * PAD);
                let py = H - PAD - (y - ylo) / (yhi - ylo) * (H - 2.0 * PAD);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{name}</title></polyline>"#,
            COLORS[k % COLORS.len()],
            coords.join(" ")
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}
