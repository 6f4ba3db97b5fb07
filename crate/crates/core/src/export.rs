//! CSV and JSON writers (and the path CSV reader) used by the CLI.
//!
//! Column orders are fixed and every CSV starts with a header row.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::geometry::Point;
use crate::harness::{BetaRow, McReport};
use crate::sim::SimResult;
use crate::spline::SampledPath;
use crate::{Error, Result};

pub const PATH_COLUMNS: [&str; 7] = ["t", "x", "y", "xd", "yd", "xdd", "ydd"];
pub const HISTORY_COLUMNS: [&str; 3] = ["iteration", "best_cost", "mean_cost"];
pub const TRACE_COLUMNS: [&str; 14] = [
    "t", "x_ref", "y_ref", "theta_ref", "v_ref", "x", "y", "theta", "omega_left", "omega_right", "voltage_left",
    "voltage_right", "tracking_error", "v",
];
pub const DUTY_COLUMNS: [&str; 5] = ["t", "duty_left", "dir_left", "duty_right", "dir_right"];
pub const SWEEP_COLUMNS: [&str; 9] = [
    "beta", "runs", "success_rate", "avg_length", "shortest_length", "length_sd", "avg_cpu_time", "avg_convergence_iteration",
    "avg_convergence_time",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_path_csv<W: Write>(path: &SampledPath, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(PATH_COLUMNS)?;
    for k in 0..path.len() {
        let (p, d, dd) = (path.points[k], path.first_derivatives[k], path.second_derivatives[k]);
        out.serialize((path.times[k], p.x, p.y, d.x, d.y, dd.x, dd.y))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the `t,x,y,...` format back; only `t`, `x` and `y` are used, derivatives are recomputed.
pub fn read_path_csv<R: Read>(r: R) -> Result<SampledPath> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("path CSV lacks a `{name}` column")))
    };
    let (ti, xi, yi) = (col("t")?, col("x")?, col("y")?);
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("path CSV row {}: bad number", line + 2)))
        };
        times.push(num(ti)?);
        points.push(Point::new(num(xi)?, num(yi)?));
    }
    if points.len() < 2 {
        return Err(Error::Parse("path CSV needs at least two rows".into()));
    }
    let duration = times[times.len() - 1] - times[0];
    let h = duration / (times.len() - 1) as f64;
    let uniform = duration > 0.0
        && times.iter().enumerate().all(|(k, t)| (t - times[0] - k as f64 * h).abs() <= 1e-6 * duration.max(1.0));
    if !uniform {
        return Err(Error::Parse("path CSV times must be increasing and uniformly spaced".into()));
    }
    Ok(SampledPath::from_points(points, duration))
}

pub fn write_history_csv<W: Write>(best: &[f64], mean: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HISTORY_COLUMNS)?;
    for (k, (b, m)) in best.iter().zip(mean).enumerate() {
        out.serialize((k + 1, b, m))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(sim: &SimResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_COLUMNS)?;
    for k in 0..sim.len() {
        let (r, p, d, (ul, ur)) = (sim.reference[k], sim.actual[k], sim.dynamics[k], sim.voltages[k]);
        out.serialize((
            sim.time[k], r.x, r.y, r.theta, r.v_ref, p.x, p.y, p.theta, d.omega_left, d.omega_right, ul, ur,
            sim.tracking_error[k], d.v,
        ))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_duty_csv<W: Write>(sim: &SimResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DUTY_COLUMNS)?;
    for (t, d) in sim.time.iter().zip(&sim.duty) {
        out.serialize((t, d.left, d.left_direction, d.right, d.right_direction))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_runs_csv<W: Write>(report: &McReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &report.records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[BetaRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_COLUMNS)?;
    for row in rows {
        let r = &row.report;
        out.write_record([
            row.beta.to_string(),
            r.runs.to_string(),
            r.success_rate.to_string(),
            opt(r.avg_length),
            opt(r.shortest_length),
            opt(r.length_sd),
            r.avg_cpu_time.to_string(),
            r.avg_convergence_iteration.to_string(),
            r.avg_convergence_time.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Writes via a temporary sibling and a rename so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
