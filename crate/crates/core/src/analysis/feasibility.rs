use serde::{Deserialize, Serialize};

use super::{cell_means, sweep, AnalysisError, Axis, Metric, SweepRow, SweepSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCell {
    pub alpha: f64,
    pub delta_us: u64,
    /// Mean over repeats.
    pub tau_mean: f64,
    pub feasible: bool,
    pub feasible_repeats: usize,
    pub repeats: usize,
    /// Whether the per-repeat majority agrees with the mean's verdict.
    pub stable: bool,
}

/// Which `(alpha, delta)` cells keep the mean offset count within budget, for
/// one `(n, E, I)` combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRegion {
    pub tau_budget: f64,
    pub n: usize,
    pub epsilon_us: u64,
    pub interval_us: u64,
    pub alphas: Vec<f64>,
    pub deltas: Vec<u64>,
    /// Row-major: alpha outer, delta inner.
    pub cells: Vec<FeasibilityCell>,
    /// Feasible cells with an infeasible neighbour along either grid axis.
    pub frontier: Vec<(f64, u64)>,
}

impl FeasibilityRegion {
    pub fn cell(&self, alpha: f64, delta_us: u64) -> Option<&FeasibilityCell> {
        self.cells
            .iter()
            .find(|c| c.alpha == alpha && c.delta_us == delta_us)
    }

    pub fn feasible_cells(&self) -> Vec<(f64, u64)> {
        self.cells
            .iter()
            .filter(|c| c.feasible)
            .map(|c| (c.alpha, c.delta_us))
            .collect()
    }
}

/// Runs the sweep and classifies each `(alpha, delta)` cell, producing one
/// region per `(n, E, I)` combination in the spec.
pub fn feasibility(spec: &SweepSpec, tau_budget: f64) -> Result<Vec<FeasibilityRegion>, AnalysisError> {
    let table = sweep(spec)?;
    Ok(regions(&table.rows, tau_budget))
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn regions(rows: &[SweepRow], tau_budget: f64) -> Vec<FeasibilityRegion> {
    let groups = cell_means(rows, &[Axis::N, Axis::Epsilon, Axis::Interval], Metric::TauMean);
    groups
        .iter()
        .map(|g| {
            let (n, e, i) = (g.key[0] as usize, g.key[1] as u64, g.key[2] as u64);
            let sub: Vec<SweepRow> = rows
                .iter()
                .filter(|r| r.n == n && r.epsilon_us == e && r.interval_us == i)
                .cloned()
                .collect();
            region(&sub, tau_budget, n, e, i)
        })
        .collect()
}

fn region(rows: &[SweepRow], tau_budget: f64, n: usize, e: u64, i: u64) -> FeasibilityRegion {
    let alphas = sorted_unique(rows.iter().map(|r| r.alpha).collect());
    let deltas: Vec<u64> = sorted_unique(rows.iter().map(|r| r.delta_us as f64).collect())
        .into_iter()
        .map(|d| d as u64)
        .collect();
    let means = cell_means(rows, &[Axis::Alpha, Axis::Delta], Metric::TauMean);

    let mut cells = Vec::new();
    for &a in &alphas {
        for &d in &deltas {
            let Some(m) = means.iter().find(|m| m.key == [a, d as f64]) else {
                continue;
            };
            let feasible = m.mean <= tau_budget;
            let feasible_repeats = rows
                .iter()
                .filter(|r| r.alpha == a && r.delta_us == d && r.tau_mean <= tau_budget)
                .count();
            let majority = 2 * feasible_repeats > m.count;
            cells.push(FeasibilityCell {
                alpha: a,
                delta_us: d,
                tau_mean: m.mean,
                feasible,
                feasible_repeats,
                repeats: m.count,
                stable: majority == feasible,
            });
        }
    }

    let at = |ai: usize, di: usize| {
        cells
            .iter()
            .find(|c| c.alpha == alphas[ai] && c.delta_us == deltas[di])
    };
    let mut frontier = Vec::new();
    for (ai, _) in alphas.iter().enumerate() {
        for (di, _) in deltas.iter().enumerate() {
            let Some(c) = at(ai, di).filter(|c| c.feasible) else {
                continue;
            };
            let neighbours = [
                ai.checked_sub(1).map(|x| (x, di)),
                (ai + 1 < alphas.len()).then_some((ai + 1, di)),
                di.checked_sub(1).map(|y| (ai, y)),
                (di + 1 < deltas.len()).then_some((ai, di + 1)),
            ];
            if neighbours
                .into_iter()
                .flatten()
                .any(|(x, y)| at(x, y).is_some_and(|o| !o.feasible))
            {
                frontier.push((c.alpha, c.delta_us));
            }
        }
    }

    FeasibilityRegion {
        tau_budget,
        n,
        epsilon_us: e,
        interval_us: i,
        alphas,
        deltas,
        cells,
        frontier,
    }
}
