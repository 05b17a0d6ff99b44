//! CSV and plot-spec writers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{CouplingSidecar, ExperimentOutput, ScalingRow, SummaryRow};
use super::spec::ExperimentKind;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot.json";
pub const SCALING_FILE: &str = "scaling.csv";

pub const TRIALS_HEADER: &str =
    "experiment,n,spacing_wl,architecture,awareness,trial,gain_linear,gain_db,bound_linear,residual,runtime_ms,error";

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Declarative plot description: one line series per group, points sorted
/// in the declared x order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub source: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub field: String,
    pub label: String,
    /// `ascending` or `descending`.
    pub order: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub architecture: String,
    pub awareness: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing_wl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `[x, y, y_stderr]`.
    pub points: Vec<[f64; 3]>,
}

pub fn plot_spec(out: &ExperimentOutput) -> Option<PlotSpec> {
    let by_spacing = match out.spec.kind {
        ExperimentKind::SweepN => false,
        ExperimentKind::SweepSpacing => true,
        _ => return None,
    };
    let mut series: Vec<Series> = Vec::new();
    for row in &out.summary {
        let (x, n, spacing) = if by_spacing {
            (row.spacing_wl, Some(row.n), None)
        } else {
            (row.n as f64, None, Some(row.spacing_wl))
        };
        let same = |s: &Series| s.architecture == row.architecture && s.awareness == row.awareness && s.n == n && s.spacing_wl == spacing;
        let idx = match series.iter().position(same) {
            Some(i) => i,
            None => {
                let mut label = format!("{} {}", row.architecture, row.awareness);
                if let Some(d) = spacing {
                    label.push_str(&format!(" d={d}"));
                }
                if let Some(n) = n {
                    label.push_str(&format!(" N={n}"));
                }
                series.push(Series {
                    label,
                    architecture: row.architecture.clone(),
                    awareness: row.awareness.clone(),
                    spacing_wl: spacing,
                    n,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        series[idx].points.push([x, row.mean_gain_db, row.stderr_db]);
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if by_spacing {
            s.points.reverse();
        }
    }
    let (x, title) = if by_spacing {
        (
            Axis {
                field: "spacing_wl".into(),
                label: "inter-element spacing [wavelengths]".into(),
                order: "descending".into(),
            },
            "channel gain versus spacing",
        )
    } else {
        (
            Axis {
                field: "n".into(),
                label: "number of elements".into(),
                order: "ascending".into(),
            },
            "channel gain versus array size",
        )
    };
    Some(PlotSpec {
        title: title.into(),
        source: SUMMARY_FILE.into(),
        x,
        y: Axis {
            field: "mean_gain_db".into(),
            label: "mean channel gain [dB]".into(),
            order: "ascending".into(),
        },
        series,
    })
}

/// Writes the trial CSV, the summary CSV and, for figure-style sweeps, the
/// plot spec. Returns the written paths.
pub fn emit_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    if out.records.is_empty() {
        return Err(Error::InvalidInput("no trial records to write".into()));
    }
    create_dir(dir)?;
    let trials = dir.join(TRIALS_FILE);
    write_rows(&trials, &out.records)?;
    let summary = dir.join(SUMMARY_FILE);
    write_rows::<SummaryRow>(&summary, &out.summary)?;
    let mut paths = vec![trials, summary];
    if let Some(plot) = plot_spec(out) {
        let path = dir.join(PLOT_FILE);
        write_json(&path, &plot)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Shortest round-trip representation, switching to exponent form for very
/// small or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Scaling-validation CSV: fixed columns followed by
/// `<term>_closed,<term>_estimate,<term>_stderr` for every term.
pub fn write_scaling_csv(rows: &[ScalingRow], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let terms: Vec<String> = rows.first().map(|r| r.report.per_term.keys().cloned().collect()).unwrap_or_default();
    let mut header: Vec<String> = ["n", "spacing", "law_mc", "law_nomc", "mc_estimate", "stderr", "relative_error", "cross_norm_correlation"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for t in &terms {
        header.extend([format!("{t}_closed"), format!("{t}_estimate"), format!("{t}_stderr")]);
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        let rep = &r.report;
        let mut rec = vec![r.n.to_string()];
        rec.extend(
            [
                r.spacing_wl,
                rep.closed_form,
                r.law_nomc,
                rep.monte_carlo_mean,
                rep.monte_carlo_stderr,
                rep.relative_error(),
                rep.cross_norm_correlation,
            ]
            .map(num),
        );
        for t in &terms {
            let e = &rep.per_term[t];
            rec.extend([e.closed_form, e.estimate, e.stderr].map(num));
        }
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `Z_II` as `row,col,re_ohm,im_ohm` plus a JSON sidecar.
pub fn write_coupling(z_ii: &CouplingMatrix, sidecar: &CouplingSidecar, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    create_dir(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(&csv_path, e);
    writeln!(w, "row,col,re_ohm,im_ohm").map_err(io)?;
    let v = z_ii.values();
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            writeln!(w, "{i},{j},{},{}", v[(i, j)].re, v[(i, j)].im).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    let json_path = dir.join(format!("{stem}.json"));
    write_json(&json_path, sidecar)?;
    Ok((csv_path, json_path))
}

pub fn write_value<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            create_dir(parent)?;
        }
    }
    write_json(path, value)
}
