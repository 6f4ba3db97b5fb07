//! Minimal first-party SVG plots.

use std::fmt::Write;

use crate::geometry::Point;
use crate::harness::{BetaRow, McReport};
use crate::sim::SimResult;
use crate::spline::{ControlPolygon, SampledPath};
use crate::workspace::Workspace;

const PX_PER_M: f64 = 150.0;
const PAD: f64 = 30.0;
const CHART_W: f64 = 640.0;
const CHART_H: f64 = 320.0;

/// A polyline to draw over the workspace.
pub struct Curve<'a> {
    pub points: &'a [Point],
    pub color: &'a str,
    pub label: &'a str,
    pub dashed: bool,
}

struct Frame {
    x0: f64,
    y1: f64,
    height: f64,
}

impl Frame {
    fn of(ws: &Workspace) -> Self {
        Self { x0: ws.bounds.x[0], y1: ws.bounds.y[1], height: ws.bounds.height() * PX_PER_M + 2.0 * PAD }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (PAD + (p.x - self.x0) * PX_PER_M, PAD + (self.y1 - p.y) * PX_PER_M)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn polyline(out: &mut String, pts: impl Iterator<Item = (f64, f64)>, color: &str, width: f64, dashed: bool) {
    let coords: Vec<String> = pts.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{}"/>"#,
        coords.join(" ")
    );
}

fn open(width: f64, height: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Workspace bounds, obstacles, start/target markers, any curves and optionally the control polygon.
pub fn workspace_svg(ws: &Workspace, curves: &[Curve], control: Option<&ControlPolygon>) -> String {
    let f = Frame::of(ws);
    let w = ws.bounds.width() * PX_PER_M + 2.0 * PAD;
    let mut s = open(w, f.height);
    let _ = writeln!(
        s,
        r#"<rect class="bounds" x="{PAD}" y="{PAD}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        ws.bounds.width() * PX_PER_M,
        ws.bounds.height() * PX_PER_M
    );
    for o in &ws.obstacles {
        let (cx, cy) = f.map(o.center);
        let _ = writeln!(
            s,
            r##"<circle class="obstacle" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#9aa3ad" stroke="#4a525a"/>"##,
            o.radius * PX_PER_M
        );
    }
    for c in curves {
        polyline(&mut s, c.points.iter().map(|p| f.map(*p)), c.color, 2.0, c.dashed);
    }
    if let Some(poly) = control {
        let pts: Vec<Point> = poly.points().collect();
        polyline(&mut s, pts.iter().map(|p| f.map(*p)), "#888888", 1.0, true);
        for p in &pts {
            let (x, y) = f.map(*p);
            let _ = writeln!(s, r##"<rect class="control" x="{:.2}" y="{:.2}" width="6" height="6" fill="#555555"/>"##, x - 3.0, y - 3.0);
        }
    }
    for (class, p, color) in [("start", ws.start, "#1a9850"), ("target", ws.target, "#d73027")] {
        let (x, y) = f.map(p);
        let _ = writeln!(s, r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="6" fill="{color}"/>"#);
    }
    let mut ly = PAD + 14.0;
    for c in curves.iter().filter(|c| !c.label.is_empty()) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            PAD + 6.0,
            c.color,
            escape(c.label)
        );
        ly += 16.0;
    }
    s.push_str("</svg>\n");
    s
}

pub fn path_svg(ws: &Workspace, path: &SampledPath, control: Option<&ControlPolygon>) -> String {
    workspace_svg(ws, &[Curve { points: &path.points, color: "#2166ac", label: "path", dashed: false }], control)
}

/// Reference and simulated robot position over the workspace.
pub fn tracking_svg(ws: &Workspace, sim: &SimResult) -> String {
    let reference: Vec<Point> = sim.tracked_path.points.clone();
    let stride = (sim.len() / 2000).max(1);
    let actual: Vec<Point> = sim.actual.iter().step_by(stride).map(|p| p.position()).collect();
    workspace_svg(
        ws,
        &[
            Curve { points: &reference, color: "#2166ac", label: "reference", dashed: true },
            Curve { points: &actual, color: "#d6604d", label: "actual", dashed: false },
        ],
        None,
    )
}

/// Series for [`line_chart`].
pub struct Series<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub color: &'a str,
    pub label: &'a str,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn axes(s: &mut String, title: &str, xr: (f64, f64), yr: (f64, f64), left: f64) {
    let (w, h) = (CHART_W - left - PAD, CHART_H - 2.0 * PAD);
    let _ = writeln!(s, r#"<rect x="{left}" y="{PAD}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        left + w / 2.0,
        escape(title)
    );
    for (v, y) in [(yr.0, PAD + h), (yr.1, PAD)] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.3}</text>"#, left - 4.0, y + 4.0);
    }
    for (v, x) in [(xr.0, left), (xr.1, left + w)] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="middle">{v:.3}</text>"#, PAD + h + 14.0);
    }
}

pub fn line_chart(title: &str, series: &[Series]) -> String {
    let left = 60.0;
    let xr = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let yr = range(series.iter().flat_map(|s| s.y.iter().copied()));
    let (w, h) = (CHART_W - left - PAD, CHART_H - 2.0 * PAD);
    let mut s = open(CHART_W, CHART_H);
    axes(&mut s, title, xr, yr, left);
    for (i, ser) in series.iter().enumerate() {
        let stride = (ser.x.len() / 2000).max(1);
        let pts = ser.x.iter().zip(ser.y).step_by(stride).filter(|(_, y)| y.is_finite()).map(|(x, y)| {
            (left + (x - xr.0) / (xr.1 - xr.0) * w, PAD + (yr.1 - y) / (yr.1 - yr.0) * h)
        });
        polyline(&mut s, pts, ser.color, 1.5, false);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            left + 8.0,
            PAD + 14.0 + 14.0 * i as f64,
            ser.color,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn history_svg(best: &[f64], mean: &[f64]) -> String {
    let it: Vec<f64> = (1..=best.len()).map(|k| k as f64).collect();
    line_chart(
        "cost per iteration",
        &[
            Series { x: &it, y: best, color: "#2166ac", label: "best" },
            Series { x: &it, y: mean, color: "#d6604d", label: "mean" },
        ],
    )
}

/// Signed duty cycles (negative when reversing) against time.
pub fn duty_svg(sim: &SimResult) -> String {
    use crate::control::Direction;
    let sign = |d: Direction| if d == Direction::Forward { 1.0 } else { -1.0 };
    let left: Vec<f64> = sim.duty.iter().map(|d| sign(d.left_direction) * d.left as f64).collect();
    let right: Vec<f64> = sim.duty.iter().map(|d| sign(d.right_direction) * d.right as f64).collect();
    line_chart(
        "PWM duty",
        &[
            Series { x: &sim.time, y: &left, color: "#1b7837", label: "left" },
            Series { x: &sim.time, y: &right, color: "#762a83", label: "right" },
        ],
    )
}

fn bar_chart(title: &str, labels: &[String], values: &[f64], color: &str) -> String {
    let left = 60.0;
    let (w, h) = (CHART_W - left - PAD, CHART_H - 2.0 * PAD);
    let top = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max).max(1e-12);
    let mut s = open(CHART_W, CHART_H);
    axes(&mut s, title, (0.0, labels.len() as f64), (0.0, top), left);
    let slot = w / labels.len().max(1) as f64;
    for (i, (label, v)) in labels.iter().zip(values).enumerate() {
        let v = if v.is_finite() { *v } else { 0.0 };
        let bh = v / top * h;
        let x = left + slot * (i as f64 + 0.15);
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="{color}"/>"#,
            PAD + h - bh,
            slot * 0.7
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            PAD + h - bh - 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Success rate and mean successful length per coefficient, side by side.
pub fn sweep_svg(rows: &[BetaRow]) -> String {
    let labels: Vec<String> = rows.iter().map(|r| format!("beta {}", r.beta)).collect();
    let sr: Vec<f64> = rows.iter().map(|r| r.report.success_rate).collect();
    let len: Vec<f64> = rows.iter().map(|r| r.report.avg_length.unwrap_or(f64::NAN)).collect();
    let a = bar_chart("success rate", &labels, &sr, "#4393c3");
    let b = bar_chart("mean successful length (m)", &labels, &len, "#f4a582");
    stack(&[a, b])
}

/// Path length per run, successful runs in blue.
pub fn report_svg(report: &McReport) -> String {
    let labels: Vec<String> = report.records.iter().map(|r| if r.success { r.run.to_string() } else { format!("{}x", r.run) }).collect();
    let lengths: Vec<f64> = report.records.iter().map(|r| r.length).collect();
    let title = format!("path length per run, SR {:.3}", report.success_rate);
    bar_chart(&title, &labels, &lengths, "#4393c3")
}

/// Stacks complete SVG documents vertically into one.
fn stack(parts: &[String]) -> String {
    let mut s = open(CHART_W, CHART_H * parts.len() as f64);
    for (i, p) in parts.iter().enumerate() {
        let body = p.split_once("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n").map_or("", |(_, b)| b);
        let body = body.trim_end().trim_end_matches("</svg>");
        let _ = writeln!(s, r#"<g transform="translate(0 {:.0})">"#, CHART_H * i as f64);
        s.push_str(body);
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
