use super::{Axis, Metric, SweepRow};

/// 1-based ranks; tied values share the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            out[k] = r;
        }
        i = j;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with average ranks for ties. `None` when fewer
/// than two points or either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

/// Mean and standard error of the mean (0 for a single value).
pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// A metric averaged over the repeats of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMean {
    /// Values of the grouping axes, in the order requested.
    pub key: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

/// Groups rows by the given axes (first-appearance order) and averages
/// `metric` within each group.
pub fn cell_means(rows: &[SweepRow], axes: &[Axis], metric: Metric) -> Vec<CellMean> {
    let mut groups: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for r in rows {
        let key: Vec<f64> = axes.iter().map(|a| a.value(r)).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, vals)) => vals.push(metric.value(r)),
            None => groups.push((key, vec![metric.value(r)])),
        }
    }
    groups
        .into_iter()
        .map(|(key, vals)| {
            let (mean, stderr) = mean_and_stderr(&vals);
            CellMean {
                key,
                mean,
                stderr,
                count: vals.len(),
            }
        })
        .collect()
}
