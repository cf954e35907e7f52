//! CSV, run-manifest, and SVG emission. All floats are printed with 17
//! significant digits and all files use `\n` line endings, so reruns with the
//! same seed are byte-identical.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use geomedian::lab::{BreakdownRow, PerturbationRow, SweepResult};

use crate::errors::{CliError, CliResult};

/// 17-significant-digit float formatting shared by every CSV column.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| CliError::internal(e.to_string()))
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> CliResult<()> {
    let mut out = String::from("alpha,trial,estimator,error,termination\n");
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(row.alpha),
            row.trial,
            row.estimator.as_str(),
            fmt_f64(row.error),
            row.termination.as_str()
        ));
    }
    write_file(path, &out)
}

pub fn write_breakdown_csv(path: &Path, rows: &[BreakdownRow]) -> CliResult<()> {
    let mut out = String::from("R,distance\n");
    for row in rows {
        out.push_str(&format!("{},{}\n", fmt_f64(row.r), fmt_f64(row.distance)));
    }
    write_file(path, &out)
}

pub fn write_perturbation_csv(path: &Path, rows: &[PerturbationRow]) -> CliResult<()> {
    let mut out = String::from("epsilon,displacement\n");
    for row in rows {
        out.push_str(&format!(
            "{},{}\n",
            fmt_f64(row.epsilon),
            fmt_f64(row.displacement)
        ));
    }
    write_file(path, &out)
}

/// Resolved run description: command, library version, seed, and the full
/// configuration, plus a small result summary. No timestamps, so reruns
/// produce identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: C,
    pub result: R,
}

pub fn write_manifest<C: Serialize, R: Serialize>(
    path: &Path,
    manifest: &Manifest<'_, C, R>,
) -> CliResult<()> {
    let json = crate::dataset::to_json_17(manifest)?;
    write_file(path, &format!("{json}\n"))
}

/// A named polyline for the sweep chart.
pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Self-contained static SVG line chart: axes, ticks, legend, one polyline
/// per series.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let (x_min, x_max) = bounds(&xs);
    let (_, y_raw_max) = bounds(&ys);
    let y_min = 0.0;
    let y_max = if y_raw_max > 0.0 { y_raw_max * 1.05 } else { 1.0 };

    let px = |x: f64| ml + (x - x_min) / (x_max - x_min).max(1e-300) * pw;
    let py = |y: f64| mt + ph - (y - y_min) / (y_max - y_min).max(1e-300) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        w / 2.0,
        title
    ));

    // Grid and ticks.
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = x_min + t * (x_max - x_min);
        let yv = y_min + t * (y_max - y_min);
        let gx = px(xv);
        let gy = py(yv);
        svg.push_str(&format!(
            "<line x1=\"{gx:.2}\" y1=\"{mt}\" x2=\"{gx:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>\n",
            mt + ph
        ));
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{gy:.2}\" x2=\"{:.2}\" y2=\"{gy:.2}\" stroke=\"#dddddd\"/>\n",
            ml + pw
        ));
        svg.push_str(&format!(
            "<text x=\"{gx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            mt + ph + 18.0,
            tick_label(xv)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            ml - 8.0,
            gy + 4.0,
            tick_label(yv)
        ));
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        mt + ph,
        ml + pw,
        mt + ph
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0,
        h - 12.0,
        x_label
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0,
        y_label
    ));

    // Polylines and legend.
    for (si, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
            s.color,
            pts.join(" ")
        ));
        let ly = mt + 14.0 + 18.0 * si as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            ml + 10.0,
            ml + 34.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            ml + 40.0,
            ly + 4.0,
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 1000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

pub fn write_svg(path: &Path, svg: &str) -> CliResult<()> {
    write_file(path, svg)
}
