//! SVG rendering of result tables and exploration traces.

use std::collections::BTreeMap;
use std::fmt::Write;

use vperc_core::estimators::Z95;
use vperc_core::explorer::ExplorationTrace;
use vperc_core::io::{ResultRow, ResultSet};

use crate::args::PlotKind;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render(text: &str, kind: PlotKind) -> Result<String, String> {
    match kind {
        PlotKind::Curve => {
            let set = parse_results(text)?;
            if set.is_empty() {
                return Err("empty result set".into());
            }
            if set.rows.iter().any(|r| r.op == "crossing_curve") {
                Ok(threshold_plot(&set))
            } else {
                scaling_plot(&set)
            }
        }
        PlotKind::Trace => {
            let trace = ExplorationTrace::from_json(text).map_err(|e| e.to_string())?;
            Ok(trace_plot(&trace))
        }
    }
}

fn parse_results(text: &str) -> Result<ResultSet, String> {
    let t = text.trim_start();
    if t.is_empty() {
        return Err("empty result set".into());
    }
    let parsed = if t.starts_with('{') { ResultSet::from_json(t) } else { ResultSet::from_csv(t) };
    parsed.map_err(|e| e.to_string())
}

pub fn param<'a>(row: &'a ResultRow, key: &str) -> Option<&'a str> {
    row.params.split(';').filter_map(|kv| kv.split_once('=')).find(|(k, _)| *k == key).map(|(_, v)| v)
}

fn param_f64(row: &ResultRow, key: &str) -> Option<f64> {
    param(row, key).and_then(|v| v.parse().ok())
}

/// Maps data coordinates to the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log: bool,
}

impl Frame {
    fn tx(&self, v: f64) -> f64 {
        let (v, (lo, hi)) = if self.log { (v.log10(), (self.x.0.log10(), self.x.1.log10())) } else { (v, self.x) };
        MARGIN + (v - lo) / (hi - lo) * (W - 2.0 * MARGIN)
    }

    fn ty(&self, v: f64) -> f64 {
        let (v, (lo, hi)) = if self.log { (v.log10(), (self.y.0.log10(), self.y.1.log10())) } else { (v, self.y) };
        H - MARGIN - (v - lo) / (hi - lo) * (H - 2.0 * MARGIN)
    }
}

fn open(svg: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

fn axes(svg: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for (v, label) in ticks(f.x, f.log) {
        let x = f.tx(v);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
    }
    for (v, label) in ticks(f.y, f.log) {
        let y = f.ty(v);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
}

fn ticks((lo, hi): (f64, f64), log: bool) -> Vec<(f64, String)> {
    if log {
        let (a, b) = (lo.log10().ceil() as i32, hi.log10().floor() as i32);
        (a..=b).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
    } else {
        (0..=5).map(|i| lo + (hi - lo) * i as f64 / 5.0).map(|v| (v, format!("{v:.2}"))).collect()
    }
}

fn polyline(svg: &mut String, pts: &[(f64, f64)], color: &str, dash: bool) {
    if pts.is_empty() {
        return;
    }
    let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dash { r#" stroke-dasharray="4 3""# } else { "" };
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.join(" "));
}

fn error_bar(svg: &mut String, x: f64, y_lo: f64, y_hi: f64, color: &str) {
    let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y_lo:.2}" x2="{x:.2}" y2="{y_hi:.2}" stroke="{color}"/>"#);
}

fn legend(svg: &mut String, i: usize, label: &str) {
    let y = MARGIN + 14.0 + 16.0 * i as f64;
    let x = W - MARGIN - 180.0;
    let color = PALETTE[i % PALETTE.len()];
    let _ = writeln!(svg, r#"<line x1="{x}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, y - 4.0, x + 18.0, y - 4.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{y}">{}</text>"#, x + 24.0, escape(label));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Crossing curves in `p` with 95% bars, the isotonic fit dashed and the
/// window shaded.
fn threshold_plot(set: &ResultSet) -> String {
    let f = Frame { x: (0.0, 1.0), y: (0.0, 1.0), log: false };
    let mut svg = String::new();
    open(&mut svg, W, H);
    let mut series: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in set.rows.iter().filter(|r| r.op == "crossing_curve") {
        series.entry(param(r, "n").unwrap_or("?").to_string()).or_default().push(r);
    }
    let windows: Vec<&ResultRow> = set.rows.iter().filter(|r| r.op == "threshold_window").collect();
    for (i, (n, _)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(w) = windows.iter().find(|w| param(w, "n") == Some(n.as_str())) {
            if let (Some(lo), Some(hi)) = (param_f64(w, "p_lo"), param_f64(w, "p_hi")) {
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="{color}" fill-opacity="0.12"/>"#,
                    f.tx(lo),
                    f.tx(hi) - f.tx(lo),
                    H - 2.0 * MARGIN
                );
            }
        }
    }
    axes(&mut svg, &f, "p", "crossing probability");
    for (i, (n, rows)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut raw = Vec::new();
        let mut fit = Vec::new();
        for r in rows {
            let Some(p) = param_f64(r, "p") else { continue };
            let x = f.tx(p);
            raw.push((x, f.ty(r.mean)));
            if let Some(se) = r.stderr {
                let (lo, hi) = ((r.mean - Z95 * se).max(0.0), (r.mean + Z95 * se).min(1.0));
                error_bar(&mut svg, x, f.ty(lo), f.ty(hi), color);
            }
            if let Some(v) = param_f64(r, "fitted") {
                fit.push((x, f.ty(v)));
            }
        }
        polyline(&mut svg, &raw, color, false);
        polyline(&mut svg, &fit, color, true);
        legend(&mut svg, i, &format!("n = {n}"));
    }
    svg.push_str("</svg>\n");
    svg
}

fn series_key(r: &ResultRow) -> String {
    let rest: Vec<&str> = r.params.split(';').filter(|kv| !kv.starts_with("n=") && !kv.starts_with("median=")).collect();
    format!("{} {}", r.op, rest.join(" "))
}

/// Estimates against `n` on log-log axes, one series per operation and
/// remaining parameters; non-positive estimates are left out.
fn scaling_plot(set: &ResultSet) -> Result<String, String> {
    let mut series: BTreeMap<String, Vec<(f64, f64, Option<f64>)>> = BTreeMap::new();
    for r in &set.rows {
        let Some(n) = param_f64(r, "n") else { continue };
        if n > 0.0 && r.mean > 0.0 {
            series.entry(series_key(r)).or_default().push((n, r.mean, r.stderr));
        }
    }
    if series.is_empty() {
        return Err("no rows with a positive n and a positive estimate to plot".into());
    }
    let all = || series.values().flatten();
    let xmin = all().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = all().map(|p| p.0).fold(0.0, f64::max);
    let ymin = all().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ymax = all().map(|p| p.1 + Z95 * p.2.unwrap_or(0.0)).fold(0.0, f64::max);
    let pad = |lo: f64, hi: f64| {
        let (a, b) = (lo.log10().floor(), hi.log10().ceil());
        (10f64.powf(a), 10f64.powf(if b > a { b } else { a + 1.0 }))
    };
    let f = Frame { x: pad(xmin, xmax), y: pad(ymin, ymax), log: true };
    let mut svg = String::new();
    open(&mut svg, W, H);
    axes(&mut svg, &f, "n", "estimate");
    for (i, (label, pts)) in series.iter_mut().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[i % PALETTE.len()];
        let mut line = Vec::new();
        for &(n, m, se) in pts.iter() {
            let (x, y) = (f.tx(n), f.ty(m));
            line.push((x, y));
            let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
            if let Some(se) = se {
                let lo = (m - Z95 * se).max(f.y.0);
                error_bar(&mut svg, x, f.ty(lo), f.ty((m + Z95 * se).min(f.y.1)), color);
            }
        }
        polyline(&mut svg, &line, color, false);
        legend(&mut svg, i, label);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Meso grid with explored and safe squares, queried points and the line `x = x0`.
fn trace_plot(t: &ExplorationTrace) -> String {
    let side = 600.0;
    let pad = 20.0;
    let sx = |x: f64| pad + x * side;
    let sy = |y: f64| pad + (1.0 - y) * side;
    let mut svg = String::new();
    open(&mut svg, side + 2.0 * pad, side + 2.0 * pad);
    let cell_rect = |svg: &mut String, cell: u32, fill: &str| {
        let r = t.grid.cell_rect(cell as usize);
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            sx(r.a),
            sy(r.d),
            (r.b - r.a) * side,
            (r.d - r.c) * side
        );
    };
    for &c in &t.explored_cells {
        cell_rect(&mut svg, c, "#c6dbef");
    }
    for &c in &t.safe_cells {
        cell_rect(&mut svg, c, "#c7e9c0");
    }
    let g = t.grid.per_axis();
    for i in 0..=g {
        let v = i as f64 / g as f64;
        let _ = writeln!(svg, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-width="0.5"/>"##, sx(v), sy(0.0), sx(v), sy(1.0));
        let _ = writeln!(svg, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-width="0.5"/>"##, sx(0.0), sy(v), sx(1.0), sy(v));
    }
    let r = &t.rect;
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="2"/>"#,
        sx(r.a),
        sy(r.d),
        r.width() * side,
        r.height() * side
    );
    for q in &t.queried_locations {
        let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="#08306b"/>"##, sx(q.x), sy(q.y));
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2"/>"##,
        sx(t.x0),
        sy(r.c),
        sx(t.x0),
        sy(r.d)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{pad}" y="14">output={} queried={}/{} iterations={}</text>"#,
        t.output,
        t.queried.len(),
        t.total_points,
        t.iterations
    );
    svg.push_str("</svg>\n");
    svg
}
