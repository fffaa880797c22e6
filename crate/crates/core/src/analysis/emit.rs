use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{cell_means, AnalysisError, Axis, Metric, SweepRow};

/// Writes one CSV row per run, with a header taken from [`SweepRow`]'s
/// field names.
pub fn emit_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    if rows.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Which slice of a sweep to plot: `y` against `x`, one line per value of
/// `series`, keeping only rows that match every `(axis, value)` in `filter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub x: Axis,
    pub series: Axis,
    pub y: Metric,
    #[serde(default)]
    pub filter: Vec<(Axis, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub x: f64,
    pub series: f64,
    pub y: f64,
    pub stderr: f64,
}

/// Averages repeats into one point per `(series, x)`, sorted by series then x.
pub fn plot_points(rows: &[SweepRow], spec: &PlotSpec) -> Result<Vec<PlotPoint>, AnalysisError> {
    let kept: Vec<SweepRow> = rows
        .iter()
        .filter(|r| spec.filter.iter().all(|&(a, v)| a.value(r) == v))
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    let mut pts: Vec<PlotPoint> = cell_means(&kept, &[spec.series, spec.x], spec.y)
        .into_iter()
        .map(|c| PlotPoint {
            series: c.key[0],
            x: c.key[1],
            y: c.mean,
            stderr: c.stderr,
        })
        .collect();
    pts.sort_by(|a, b| a.series.total_cmp(&b.series).then(a.x.total_cmp(&b.x)));
    Ok(pts)
}

/// One JSON object per line.
pub fn write_plot_data(points: &[PlotPoint], path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in points {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plot_data(
    rows: &[SweepRow],
    spec: &PlotSpec,
    path: impl AsRef<Path>,
) -> Result<Vec<PlotPoint>, AnalysisError> {
    let pts = plot_points(rows, spec)?;
    write_plot_data(&pts, path)?;
    Ok(pts)
}
