//! Subcommand bodies. Each returns its artifacts as strings; `main` owns file writes.

use std::path::Path;

use cohtrack::bloch::BlochChannel;
use cohtrack::dynamics::propagate_bloch;
use cohtrack::equivalence::{
    is_dephasing_class, su2_to_so3, transform_bloch_channel, transform_channel, transform_state,
    transform_tracking_fields, Unitary2,
};
use cohtrack::sweep::{sweep_breakdown, sweep_csv, Execution};
use cohtrack::tracking::{breakdown_time, classify_singularity, simulate_tracked, Omega0};
use cohtrack::{ControlWaveform, Trajectory};
use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::config::{ControlSpec, Scenario, SweepSpec};
use crate::error::CliError;
use crate::plot::{self, Cell, Series};

pub const NO_CONTROL: &str = "no control possible: v_z(0) = 0 (singularity=trivial at t=0)";

/// Zero-field propagation; any control section is ignored.
pub fn run_free(s: &Scenario) -> Result<Trajectory, CliError> {
    Ok(propagate_bloch(
        &s.channel,
        &ControlWaveform::zero(),
        &s.v0,
        &s.grid,
        &s.integrator,
    )?)
}

/// Tracked run with the singularity report appended as an annotation.
pub fn run_track(s: &Scenario) -> Result<Trajectory, CliError> {
    let ControlSpec::Track { omega0, omega_max } = s.config.control else {
        return Err(CliError::Config(
            "control: track mode needs a `track` control section".into(),
        ));
    };
    let mut traj = simulate_tracked(
        &s.channel,
        &s.v0,
        &Omega0::Constant(omega0),
        &s.grid,
        omega_max,
        &s.integrator,
    )
    .map_err(|e| match e {
        cohtrack::Error::NoControlPossible => CliError::Infeasible(NO_CONTROL.into()),
        other => other.into(),
    })?;
    let report = classify_singularity(&traj, &s.channel)?;
    traj.annotations.push(report.annotation());
    Ok(traj)
}

/// Dispatches on the control section.
pub fn run_scenario(s: &Scenario) -> Result<Trajectory, CliError> {
    match &s.config.control {
        ControlSpec::Free => run_free(s),
        ControlSpec::Track { .. } => run_track(s),
        ControlSpec::Fixed { .. } => {
            let w = s.fixed_waveform()?.expect("fixed control");
            Ok(propagate_bloch(
                &s.channel,
                &w,
                &s.v0,
                &s.grid,
                &s.integrator,
            )?)
        }
    }
}

pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<String, CliError> {
    let (c, p) = spec.axes()?;
    Ok(sweep_csv(&sweep_breakdown(spec.gamma, &c, &p, exec)?))
}

/// Parses `[[[re, im], [re, im]], [[re, im], [re, im]]]`.
pub fn parse_unitary(text: &str) -> Result<Unitary2, CliError> {
    let rows: [[[f64; 2]; 2]; 2] = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!(
            "--unitary: expected [[[re,im],[re,im]],[[re,im],[re,im]]]: {e}"
        ))
    })?;
    let m = Matrix2::from_fn(|i, j| C64::new(rows[i][j][0], rows[i][j][1]));
    Unitary2::new(m).map_err(|e| CliError::Config(format!("--unitary: {e}")))
}

fn real_matrix(m: &nalgebra::Matrix3<f64>) -> Value {
    json!((0..3)
        .map(|i| (0..3).map(|j| m[(i, j)]).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// JSON report of a unitary change of frame applied to a scenario.
pub fn equiv_report(s: &Scenario, u: &Unitary2) -> Result<Value, CliError> {
    let r = su2_to_so3(u)?;
    let a2 = transform_channel(&s.gks, u)?;
    let ch2 = transform_bloch_channel(&s.channel, &r)?;
    let v2 = transform_state(&s.v0, &r);
    let gks: Vec<Vec<[f64; 2]>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| [a2.matrix()[(i, j)].re, a2.matrix()[(i, j)].im])
                .collect()
        })
        .collect();
    let class = |ch: &BlochChannel| {
        is_dephasing_class(ch)
            .map(|c| json!({ "gamma": c.gamma, "rotation": real_matrix(c.rotation.matrix()) }))
    };
    let mut report = json!({
        "rotation": real_matrix(r.matrix()),
        "stabilizes_dephasing": r.stabilizes_dephasing(),
        "gks": gks,
        "m0": real_matrix(ch2.m0()),
        "k": [ch2.k().x, ch2.k().y, ch2.k().z],
        "initial_state": [v2.x(), v2.y(), v2.z()],
        "dephasing_class": class(&ch2),
    });
    if let Some(gamma) = s.channel.dephasing_rate() {
        let before = breakdown_time(&s.v0, gamma);
        let after = breakdown_time(&v2, gamma);
        report["breakdown_time"] = json!({
            "before": before.map(finite_or_null).unwrap_or(Value::Null),
            "after": after.map(finite_or_null).unwrap_or(Value::Null),
        });
        if let ControlSpec::Track { omega0, .. } = s.config.control {
            if r.stabilizes_dephasing() && s.v0.z() != 0.0 {
                let (w1, w2) = transform_tracking_fields(&s.v0, gamma, omega0, &r, 0.0)?;
                report["fields_t0"] = json!([omega0, w1, w2]);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Trajectory,
    Fields,
    Surface,
}

fn csv_error(path: &Path, line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: row {line}: {msg}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

/// Numeric rows after a required header; comment lines are skipped.
/// `empty` marks cells allowed to be blank (parsed as `None`).
fn parse_rows(
    path: &Path,
    text: &str,
    header: &str,
    empty: &[usize],
) -> Result<Vec<(usize, Vec<Option<f64>>)>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        Some((_, h)) => {
            return Err(csv_error(
                path,
                1,
                format!("expected header {header:?}, got {h:?}"),
            ))
        }
        None => return Err(csv_error(path, 1, "empty file")),
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != width {
            return Err(csv_error(
                path,
                i + 1,
                format!("expected {width} columns, found {}", cols.len()),
            ));
        }
        let mut vals = Vec::with_capacity(width);
        for (k, c) in cols.iter().enumerate() {
            if c.is_empty() && empty.contains(&k) {
                vals.push(None);
            } else {
                vals.push(Some(c.parse::<f64>().map_err(|e| {
                    csv_error(path, i + 1, format!("column {}: {e}", k + 1))
                })?));
            }
        }
        rows.push((i + 1, vals));
    }
    Ok(rows)
}

/// Renders one or more CSV files into an SVG document.
pub fn render_plot(kind: PlotKind, inputs: &[(&Path, &str)]) -> Result<String, CliError> {
    use cohtrack::trajectory::{CSV_HEADER, FIELDS_HEADER};
    match kind {
        PlotKind::Trajectory => {
            let mut series = Vec::new();
            for (n, (path, text)) in inputs.iter().enumerate() {
                let rows = parse_rows(path, text, CSV_HEADER, &[])?;
                let name = stem(path);
                for (label, col) in [("v_z", 3), ("v_x", 1)] {
                    series.push(Series {
                        label: format!("{name} {label}"),
                        points: rows
                            .iter()
                            .map(|(_, r)| (r[0].unwrap(), r[col].unwrap()))
                            .collect(),
                        dashed: n > 0,
                    });
                }
            }
            Ok(plot::line_chart(
                "Coherence vector",
                "t",
                "component",
                &series,
            ))
        }
        PlotKind::Fields => {
            let mut series = Vec::new();
            for (n, (path, text)) in inputs.iter().enumerate() {
                let first = text.lines().next().unwrap_or("").trim();
                let (header, c1) = if first == CSV_HEADER {
                    (CSV_HEADER, 7)
                } else {
                    (FIELDS_HEADER, 2)
                };
                let rows = parse_rows(path, text, header, &[])?;
                let name = stem(path);
                for (label, col) in [("omega1", c1), ("omega2", c1 + 1)] {
                    series.push(Series {
                        label: format!("{name} {label}"),
                        points: rows
                            .iter()
                            .map(|(_, r)| (r[0].unwrap(), r[col].unwrap()))
                            .collect(),
                        dashed: n > 0,
                    });
                }
            }
            Ok(plot::line_chart("Control fields", "t", "field", &series))
        }
        PlotKind::Surface => {
            let [(path, text)] = inputs else {
                return Err(CliError::Config(
                    "surface plots take exactly one sweep CSV".into(),
                ));
            };
            let rows = parse_rows(path, text, "c,p,t_b", &[2])?;
            let cells: Vec<Cell> = rows
                .iter()
                .map(|(_, r)| Cell {
                    x: r[0].unwrap(),
                    y: r[1].unwrap(),
                    value: r[2],
                })
                .collect();
            Ok(plot::heat_map(
                "Breakdown time t_b(c, p)",
                "coherence c",
                "purity p",
                &cells,
            ))
        }
    }
}
