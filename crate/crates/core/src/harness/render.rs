use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::analyze::SweepPointResult;
use crate::error::{Error, Result};
use crate::schedule::ProtocolKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
    Svg,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Parameter(format!(
                "unknown format '{other}' (expected csv, jsonl or svg)"
            ))),
        }
    }
}

pub const CSV_COLUMNS: &[&str] = &[
    "point",
    "protocol",
    "tau",
    "h_scale",
    "records",
    "p_gs",
    "se_p_gs",
    "f_gs",
    "mean_de1",
    "se_mean_de1",
    "mean_sq_de1",
    "beta1",
    "beta2",
    "sigma_lb",
    "neg_q_lb",
    "w_lb",
    "eta_th_ub",
    "eta_comp_ub",
    "flags",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn finite(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

/// Writes `results` in the requested format and returns the files created.
pub fn render(
    results: &[SweepPointResult],
    format: Format,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match format {
        Format::Csv => {
            let path = out_dir.join("results.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(CSV_COLUMNS)?;
            for r in results {
                w.write_record([
                    r.point.to_string(),
                    r.protocol.as_str().to_string(),
                    r.tau.to_string(),
                    r.h_scale.to_string(),
                    r.records.to_string(),
                    r.report.p_gs.to_string(),
                    r.se_p_gs.to_string(),
                    r.report.f_gs.to_string(),
                    r.mean_de1.to_string(),
                    r.se_mean_de1.to_string(),
                    r.mean_sq_de1.to_string(),
                    r.report.beta1.to_string(),
                    r.report.beta2.to_string(),
                    finite(r.report.sigma_lb),
                    finite(r.report.neg_q_lb),
                    finite(r.report.w_lb),
                    opt(r.report.eta_th_ub),
                    opt(r.report.eta_comp_ub),
                    r.report.flags.join(";"),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            Ok(vec![path])
        }
        Format::Jsonl => {
            let path = out_dir.join("results.jsonl");
            let mut buf = Vec::new();
            for r in results {
                serde_json::to_writer(&mut buf, r)?;
                buf.push(b'\n');
            }
            fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            Ok(vec![path])
        }
        Format::Svg => {
            let mut by_protocol: BTreeMap<&'static str, Vec<&SweepPointResult>> = BTreeMap::new();
            for r in results {
                by_protocol.entry(r.protocol.as_str()).or_default().push(r);
            }
            let mut files = Vec::new();
            for (name, rows) in by_protocol {
                let kind: ProtocolKind = name.parse()?;
                let panels: [(&str, &str, [Metric<'_>; 2]); 2] = [
                    (
                        "success",
                        "success metrics",
                        [
                            ("P_GS", |r| Some(r.report.p_gs)),
                            ("F_GS", |r| Some(r.report.f_gs)),
                        ],
                    ),
                    (
                        "efficiency",
                        "efficiency bounds",
                        [
                            ("eta_th", |r| r.report.eta_th_ub),
                            ("eta_comp", |r| r.report.eta_comp_ub),
                        ],
                    ),
                ];
                for (suffix, title, metrics) in panels {
                    let path = out_dir.join(format!("{name}_{suffix}.svg"));
                    let svg = line_plot(&format!("{} {title}", kind.as_str()), &rows, &metrics);
                    fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
                    files.push(path);
                }
            }
            Ok(files)
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn map(&self, x: f64, from: f64, to: f64) -> f64 {
        let (a, b, v) = if self.log {
            (self.lo.log10(), self.hi.log10(), x.log10())
        } else {
            (self.lo, self.hi, x)
        };
        if b == a {
            return 0.5 * (from + to);
        }
        from + (v - a) / (b - a) * (to - from)
    }
}

type Metric<'a> = (&'a str, fn(&SweepPointResult) -> Option<f64>);

/// Self-contained SVG: one line per (metric, h_scale) against tau.
fn line_plot(title: &str, rows: &[&SweepPointResult], metrics: &[Metric<'_>]) -> String {
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let tmin = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_axis = Axis {
        lo: tmin,
        hi: tmax,
        log: tmin > 0.0 && tmax / tmin >= 10.0,
    };
    let values: Vec<f64> = rows
        .iter()
        .flat_map(|r| metrics.iter().filter_map(move |(_, f)| f(r)))
        .filter(|v| v.is_finite())
        .collect();
    let ymin = values.iter().cloned().fold(0.0, f64::min);
    let mut ymax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(ymax > ymin) {
        ymax = ymin + 1.0;
    }
    let y_axis = Axis {
        lo: ymin,
        hi: ymax + 0.05 * (ymax - ymin),
        log: false,
    };
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        (x0 + x1) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = y_axis.lo + (y_axis.hi - y_axis.lo) * k as f64 / 4.0;
        let y = y_axis.map(v, y0, y1);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        );
    }
    let mut ticks = taus.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in &ticks {
        let x = x_axis.map(*t, x0, x1);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{t}</text>"#,
            y0 + 4.0,
            y0 + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">tau (us){}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        if x_axis.log { ", log scale" } else { "" }
    );

    let mut h_values: Vec<f64> = rows.iter().map(|r| r.h_scale).collect();
    h_values.sort_by(f64::total_cmp);
    h_values.dedup();
    let mut legend_y = TOP + 6.0;
    for (mi, (name, f)) in metrics.iter().enumerate() {
        let dash = if mi == 0 {
            ""
        } else {
            r#" stroke-dasharray="6 3""#
        };
        for (hi, h) in h_values.iter().enumerate() {
            let color = COLORS[hi % COLORS.len()];
            let mut series: Vec<(f64, Option<f64>)> = rows
                .iter()
                .filter(|r| r.h_scale == *h)
                .map(|r| (r.tau, f(r).filter(|v| v.is_finite())))
                .collect();
            series.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut segment: Vec<(f64, f64)> = Vec::new();
            let flush = |seg: &mut Vec<(f64, f64)>, s: &mut String| {
                if seg.len() > 1 {
                    let pts: Vec<String> =
                        seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        pts.join(" ")
                    );
                }
                seg.clear();
            };
            for (t, v) in series {
                match v {
                    Some(v) => {
                        let (x, y) = (x_axis.map(t, x0, x1), y_axis.map(v, y0, y1));
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                        );
                        segment.push((x, y));
                    }
                    None => flush(&mut segment, &mut s),
                }
            }
            flush(&mut segment, &mut s);
            let lx = x1 + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{} h={h}</text>"#,
                lx + 24.0,
                lx + 30.0,
                legend_y + 4.0,
                escape(name)
            );
            legend_y += 16.0;
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
