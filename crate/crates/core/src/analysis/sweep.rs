use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::clock::ClockConfig;
use crate::sim::{run_metrics, SimConfig, DEFAULT_STALL_PROB};

/// Values to sweep per parameter. An empty list falls back to [`Fixed`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub epsilon_us: Vec<u64>,
    #[serde(default)]
    pub interval_us: Vec<u64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub delta_us: Vec<u64>,
}

/// Values held constant across the sweep.
///
/// Run length is either `duration_us`, or derived from `target_events`
/// (expected sends plus receives) and capped by `max_duration_us`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    pub n: Option<usize>,
    pub epsilon_us: Option<u64>,
    pub interval_us: Option<u64>,
    pub alpha: Option<f64>,
    pub delta_us: Option<u64>,
    pub duration_us: Option<u64>,
    pub target_events: Option<u64>,
    pub max_duration_us: Option<u64>,
    pub stall_prob: Option<f64>,
    #[serde(default)]
    pub jitter_us: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub fixed: Fixed,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default)]
    pub seed_base: u64,
}

fn one() -> usize {
    1
}

/// One simulation run of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub epsilon_us: u64,
    pub interval_us: u64,
    pub alpha: f64,
    pub delta_us: u64,
    pub repeat: usize,
    pub seed: u64,
    pub duration_us: u64,
    pub events: usize,
    pub tau_mean: f64,
    pub sigma_mean: f64,
    pub counter_event_fraction: f64,
    pub max_observed_skew: u64,
    pub mean_clock_words: f64,
}

/// A cell that could not run, typically because `I` does not divide `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub n: usize,
    pub epsilon_us: u64,
    pub interval_us: u64,
    pub alpha: f64,
    pub delta_us: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub errors: Vec<CellError>,
}

/// A sweep parameter, usable as a plot axis or series key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    Epsilon,
    Interval,
    Alpha,
    Delta,
}

impl Axis {
    pub fn value(self, r: &SweepRow) -> f64 {
        match self {
            Axis::N => r.n as f64,
            Axis::Epsilon => r.epsilon_us as f64,
            Axis::Interval => r.interval_us as f64,
            Axis::Alpha => r.alpha,
            Axis::Delta => r.delta_us as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::Epsilon => "epsilon",
            Axis::Interval => "interval",
            Axis::Alpha => "alpha",
            Axis::Delta => "delta",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "n" => Axis::N,
            "epsilon" => Axis::Epsilon,
            "interval" => Axis::Interval,
            "alpha" => Axis::Alpha,
            "delta" => Axis::Delta,
            _ => return Err(format!("unknown axis {s:?} (n|epsilon|interval|alpha|delta)")),
        })
    }
}

/// A per-run measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TauMean,
    SigmaMean,
    CounterEventFraction,
    MeanClockWords,
    MaxObservedSkew,
}

impl Metric {
    pub fn value(self, r: &SweepRow) -> f64 {
        match self {
            Metric::TauMean => r.tau_mean,
            Metric::SigmaMean => r.sigma_mean,
            Metric::CounterEventFraction => r.counter_event_fraction,
            Metric::MeanClockWords => r.mean_clock_words,
            Metric::MaxObservedSkew => r.max_observed_skew as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::TauMean => "tau_mean",
            Metric::SigmaMean => "sigma_mean",
            Metric::CounterEventFraction => "counter_event_fraction",
            Metric::MeanClockWords => "mean_clock_words",
            Metric::MaxObservedSkew => "max_observed_skew",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "tau_mean" => Metric::TauMean,
            "sigma_mean" => Metric::SigmaMean,
            "counter_event_fraction" => Metric::CounterEventFraction,
            "mean_clock_words" => Metric::MeanClockWords,
            "max_observed_skew" => Metric::MaxObservedSkew,
            _ => return Err(format!("unknown metric {s:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n: usize,
    epsilon_us: u64,
    interval_us: u64,
    alpha: f64,
    delta_us: u64,
}

impl Cell {
    fn error(&self, message: String) -> CellError {
        CellError {
            n: self.n,
            epsilon_us: self.epsilon_us,
            interval_us: self.interval_us,
            alpha: self.alpha,
            delta_us: self.delta_us,
            message,
        }
    }
}

fn axis<T: Copy>(name: &str, grid: &[T], fixed: Option<T>) -> Result<Vec<T>, AnalysisError> {
    if !grid.is_empty() {
        return Ok(grid.to_vec());
    }
    fixed
        .map(|v| vec![v])
        .ok_or_else(|| AnalysisError::Spec(format!("{name} is neither swept nor fixed")))
}

impl SweepSpec {
    /// Grid cells in row-major order: n, E, I, alpha, delta.
    fn cells(&self) -> Result<Vec<Cell>, AnalysisError> {
        let (g, f) = (&self.grid, &self.fixed);
        let ns = axis("n", &g.n, f.n)?;
        let eps = axis("epsilon_us", &g.epsilon_us, f.epsilon_us)?;
        let ivs = axis("interval_us", &g.interval_us, f.interval_us)?;
        let alphas = axis("alpha", &g.alpha, f.alpha)?;
        let deltas = axis("delta_us", &g.delta_us, f.delta_us)?;
        let mut out = Vec::new();
        for &n in &ns {
            for &epsilon_us in &eps {
                for &interval_us in &ivs {
                    for &alpha in &alphas {
                        for &delta_us in &deltas {
                            out.push(Cell {
                                n,
                                epsilon_us,
                                interval_us,
                                alpha,
                                delta_us,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn duration(&self, cell: &Cell) -> Result<u64, String> {
        if let Some(d) = self.fixed.duration_us {
            return Ok(d);
        }
        let target = self
            .fixed
            .target_events
            .ok_or("set fixed.duration_us or fixed.target_events")?;
        let rate = 2.0 * cell.n as f64 * cell.alpha;
        if cell.n < 2 || rate <= 0.0 {
            return Err("target_events needs n >= 2 and alpha > 0".into());
        }
        let d = (target as f64 * 1e6 / rate).ceil().max(1.0) as u64;
        Ok(self.fixed.max_duration_us.map_or(d, |m| d.min(m)))
    }

    fn sim_config(&self, cell: &Cell, repeat: usize) -> Result<SimConfig, String> {
        let clock = ClockConfig::new(cell.n, cell.epsilon_us, cell.interval_us)
            .map_err(|e| e.to_string())?;
        let mut cfg = SimConfig::new(
            clock,
            cell.alpha,
            cell.delta_us,
            self.duration(cell)?,
            self.seed_base.wrapping_add(repeat as u64),
        );
        cfg.jitter = self.fixed.jitter_us;
        cfg.stall_prob = self.fixed.stall_prob.unwrap_or(DEFAULT_STALL_PROB);
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

/// Runs every cell `repeats` times in parallel.
///
/// Repeat `r` of every cell uses seed `seed_base + r`, so cells are compared
/// on common random streams. Rows come back in cell order then repeat order
/// regardless of scheduling. Cells with invalid parameters are listed in
/// `errors` and do not stop the sweep.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable, AnalysisError> {
    if spec.repeats == 0 {
        return Err(AnalysisError::Spec("repeats must be >= 1".into()));
    }
    let cells = spec.cells()?;
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..spec.repeats).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<SweepRow, CellError>> = jobs
        .par_iter()
        .map(|&(cell, repeat)| {
            let cfg = spec.sim_config(&cell, repeat).map_err(|m| cell.error(m))?;
            let m = run_metrics(&cfg).map_err(|e| cell.error(e.to_string()))?;
            Ok(SweepRow {
                n: cell.n,
                epsilon_us: cell.epsilon_us,
                interval_us: cell.interval_us,
                alpha: cell.alpha,
                delta_us: cell.delta_us,
                repeat,
                seed: cfg.seed,
                duration_us: cfg.duration,
                events: m.events,
                tau_mean: m.tau_mean,
                sigma_mean: m.sigma_mean,
                counter_event_fraction: m.counter_event_fraction,
                max_observed_skew: m.max_observed_skew,
                mean_clock_words: m.mean_clock_words,
            })
        })
        .collect();

    let mut table = SweepTable::default();
    for r in results {
        match r {
            Ok(row) => table.rows.push(row),
            // One entry per failing cell, not per repeat.
            Err(e) if table.errors.last() != Some(&e) => table.errors.push(e),
            Err(_) => {}
        }
    }
    Ok(table)
}
