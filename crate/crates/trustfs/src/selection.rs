//! Feature ranking and clustering-based evaluation: pooled row-norm
//! ranking, k-means with k-means++ restarts, clustering accuracy via
//! optimal assignment, and normalized mutual information.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// One feature in the global ranking: which view it came from, its row
/// index within that view, and its score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedFeature {
    pub view: usize,
    pub feature: usize,
    pub score: f64,
}

/// Mean/std of ACC and NMI at one feature-selection ratio.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioMetrics {
    pub ratio: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
}

/// A complete ranking plus evaluation metrics per feature ratio.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub ranking: Vec<RankedFeature>,
    pub metrics: Vec<RatioMetrics>,
}

#[derive(Serialize)]
struct SelectionResultDto<'a> {
    ratios: Vec<f64>,
    acc_mean: Vec<f64>,
    acc_std: Vec<f64>,
    nmi_mean: Vec<f64>,
    nmi_std: Vec<f64>,
    ranking: &'a [RankedFeature],
}

impl SelectionResult {
    pub fn to_json(&self) -> Result<String> {
        let dto = SelectionResultDto {
            ratios: self.metrics.iter().map(|m| m.ratio).collect(),
            acc_mean: self.metrics.iter().map(|m| m.acc_mean).collect(),
            acc_std: self.metrics.iter().map(|m| m.acc_std).collect(),
            nmi_mean: self.metrics.iter().map(|m| m.nmi_mean).collect(),
            nmi_std: self.metrics.iter().map(|m| m.nmi_std).collect(),
            ranking: &self.ranking,
        };
        Ok(serde_json::to_string_pretty(&dto)?)
    }
}

/// Pool all rows of all selection matrices and sort by row norm,
/// descending; ties break by (view, feature) ascending.
pub fn rank_features(ws: &[Array2<f64>]) -> Vec<RankedFeature> {
    let mut out: Vec<RankedFeature> = ws
        .iter()
        .enumerate()
        .flat_map(|(v, w)| {
            w.rows().into_iter().enumerate().map(move |(i, row)| RankedFeature {
                view: v,
                feature: i,
                score: row.dot(&row).sqrt(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.view.cmp(&b.view))
            .then(a.feature.cmp(&b.feature))
    });
    out
}

/// Variance ranking over feature rows, the scoring half of the two-step
/// baseline (mean imputation followed by per-row variance).
pub fn rank_features_by_variance(views: &[Array2<f64>]) -> Vec<RankedFeature> {
    let mut out: Vec<RankedFeature> = views
        .iter()
        .enumerate()
        .flat_map(|(v, x)| {
            x.rows().into_iter().enumerate().map(move |(i, row)| {
                let n = row.len() as f64;
                let mean = row.sum() / n;
                let var = row.iter().map(|&val| (val - mean).powi(2)).sum::<f64>() / n;
                RankedFeature {
                    view: v,
                    feature: i,
                    score: var,
                }
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.view.cmp(&b.view))
            .then(a.feature.cmp(&b.feature))
    });
    out
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

fn squared_distance(a: &ndarray::ArrayView1<f64>, b: &ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Lloyd's algorithm with k-means++ seeding, repeated `restarts` times;
/// returns the labels of the restart with the lowest within-cluster sum
/// of squares. Samples are the columns of `x`. An emptied cluster is
/// re-seeded to the point farthest from its current center. Deterministic
/// per seed.
pub fn kmeans(x: &Array2<f64>, k: usize, seed: u64, restarts: usize) -> Result<Vec<usize>> {
    let n = x.ncols();
    let d = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "kmeans k must be in 1..={n}, got {k}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_labels = vec![0usize; n];
    let mut best_wcss = f64::INFINITY;

    for _ in 0..restarts {
        // k-means++ seeding.
        let mut centers = Array2::zeros((d, k));
        let first = rng.random_range(0..n);
        centers.column_mut(0).assign(&x.column(first));
        let mut min_d2: Vec<f64> = (0..n)
            .map(|j| squared_distance(&x.column(j), &centers.column(0)))
            .collect();
        for c in 1..k {
            let total: f64 = min_d2.iter().sum();
            let pick = if total > 0.0 {
                let mut target = rng.random_range(0.0..total);
                let mut chosen = n - 1;
                for (j, &w) in min_d2.iter().enumerate() {
                    if target < w {
                        chosen = j;
                        break;
                    }
                    target -= w;
                }
                chosen
            } else {
                rng.random_range(0..n)
            };
            centers.column_mut(c).assign(&x.column(pick));
            for j in 0..n {
                min_d2[j] = min_d2[j].min(squared_distance(&x.column(j), &centers.column(c)));
            }
        }

        // Lloyd iterations.
        let mut labels = vec![0usize; n];
        for _iter in 0..300 {
            let mut changed = false;
            for j in 0..n {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let dist = squared_distance(&x.column(j), &centers.column(c));
                    if dist < best_d {
                        best_d = dist;
                        best = c;
                    }
                }
                if labels[j] != best {
                    labels[j] = best;
                    changed = true;
                }
            }

            let mut counts = vec![0usize; k];
            let mut sums = Array2::<f64>::zeros((d, k));
            for j in 0..n {
                counts[labels[j]] += 1;
                let mut col = sums.column_mut(labels[j]);
                col += &x.column(j);
            }
            for c in 0..k {
                if counts[c] > 0 {
                    let col = sums.column(c).mapv(|v| v / counts[c] as f64);
                    centers.column_mut(c).assign(&col);
                } else {
                    // Re-seed an emptied cluster to the farthest point.
                    let far = (0..n)
                        .max_by(|&a, &b| {
                            squared_distance(&x.column(a), &centers.column(labels[a]))
                                .total_cmp(&squared_distance(
                                    &x.column(b),
                                    &centers.column(labels[b]),
                                ))
                        })
                        .expect("n >= 1");
                    centers.column_mut(c).assign(&x.column(far));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let wcss: f64 = (0..n)
            .map(|j| squared_distance(&x.column(j), &centers.column(labels[j])))
            .sum();
        if wcss < best_wcss {
            best_wcss = wcss;
            best_labels = labels;
        }
    }
    Ok(best_labels)
}

// ---------------------------------------------------------------------------
// Clustering metrics
// ---------------------------------------------------------------------------

fn contingency(a: &[usize], b: &[usize]) -> (Array2<f64>, Vec<usize>, Vec<usize>) {
    let mut a_vals: Vec<usize> = a.to_vec();
    a_vals.sort_unstable();
    a_vals.dedup();
    let mut b_vals: Vec<usize> = b.to_vec();
    b_vals.sort_unstable();
    b_vals.dedup();
    let mut table = Array2::zeros((a_vals.len(), b_vals.len()));
    for (&x, &y) in a.iter().zip(b.iter()) {
        let i = a_vals.binary_search(&x).expect("value present");
        let j = b_vals.binary_search(&y).expect("value present");
        table[[i, j]] += 1.0;
    }
    (table, a_vals, b_vals)
}

/// Minimum-cost assignment on a square matrix via shortest augmenting
/// paths with potentials; returns `assign[row] = col`.
fn hungarian_min(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[col] = row (1-based)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if matched[j] >= 1 {
            assign[matched[j] - 1] = j - 1;
        }
    }
    assign
}

/// Clustering accuracy: the largest fraction of agreeing samples over all
/// one-to-one mappings of predicted clusters to true classes, computed by
/// optimal assignment on the contingency table.
pub fn acc(true_labels: &[usize], pred_labels: &[usize]) -> Result<f64> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "label length mismatch: {} vs {}",
            true_labels.len(),
            pred_labels.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::InvalidInput("empty label vectors".into()));
    }
    let (table, a_vals, b_vals) = contingency(pred_labels, true_labels);
    let side = a_vals.len().max(b_vals.len());
    let peak = table.iter().cloned().fold(0.0f64, f64::max);
    // Pad to square and convert maximization to minimization.
    let mut cost = Array2::from_elem((side, side), peak);
    for i in 0..a_vals.len() {
        for j in 0..b_vals.len() {
            cost[[i, j]] = peak - table[[i, j]];
        }
    }
    let assign = hungarian_min(&cost);
    let mut agree = 0.0;
    for (i, &j) in assign.iter().enumerate() {
        if i < a_vals.len() && j < b_vals.len() {
            agree += table[[i, j]];
        }
    }
    Ok(agree / true_labels.len() as f64)
}

/// Normalized mutual information `I(U;V) / sqrt(H(U) H(V))` with
/// natural-log entropies. Two single-cluster partitions are identical and
/// score 1; if exactly one side has zero entropy the partitions differ
/// and the score is 0.
pub fn nmi(true_labels: &[usize], pred_labels: &[usize]) -> Result<f64> {
    if true_labels.len() != pred_labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "label length mismatch: {} vs {}",
            true_labels.len(),
            pred_labels.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::InvalidInput("empty label vectors".into()));
    }
    let (table, a_vals, b_vals) = contingency(true_labels, pred_labels);
    let n = true_labels.len() as f64;

    let row_sums: Vec<f64> = (0..a_vals.len()).map(|i| table.row(i).sum()).collect();
    let col_sums: Vec<f64> = (0..b_vals.len()).map(|j| table.column(j).sum()).collect();
    let entropy = |sums: &[f64]| -> f64 {
        -sums
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| (s / n) * (s / n).ln())
            .sum::<f64>()
    };
    let h_true = entropy(&row_sums);
    let h_pred = entropy(&col_sums);

    if h_true == 0.0 && h_pred == 0.0 {
        return Ok(1.0);
    }
    if h_true == 0.0 || h_pred == 0.0 {
        return Ok(0.0);
    }

    let mut mi = 0.0;
    for i in 0..a_vals.len() {
        for j in 0..b_vals.len() {
            let nij = table[[i, j]];
            if nij > 0.0 {
                mi += (nij / n) * ((nij * n) / (row_sums[i] * col_sums[j])).ln();
            }
        }
    }
    Ok((mi / (h_true * h_pred).sqrt()).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// End-to-end selection evaluation
// ---------------------------------------------------------------------------

/// Clustering-evaluation controls: k-means restarts per run and the
/// number of independently seeded runs averaged per ratio.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub restarts: usize,
    pub repeats: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            repeats: 20,
        }
    }
}

/// Stack the top `m` ranked feature rows from `source` into an
/// `m x n` matrix.
pub fn select_features(
    source: &[Array2<f64>],
    ranking: &[RankedFeature],
    m: usize,
) -> Array2<f64> {
    let n = source[0].ncols();
    let m = m.min(ranking.len());
    let mut out = Array2::zeros((m, n));
    for (row, rf) in ranking[..m].iter().enumerate() {
        out.row_mut(row).assign(&source[rf.view].row(rf.feature));
    }
    out
}

/// Evaluate a ranking on labeled data: for each ratio, cluster the top
/// `ceil(ratio * total)` features with k-means (`opts.restarts` restarts)
/// over `opts.repeats` seeds and record mean/std of ACC and NMI.
pub fn evaluate_ranking(
    source: &[Array2<f64>],
    labels: &[usize],
    ranking: &[RankedFeature],
    ratios: &[f64],
    k: usize,
    seed: u64,
    opts: &EvalOptions,
) -> Result<SelectionResult> {
    let total: usize = source.iter().map(|x| x.nrows()).sum();
    if ranking.len() != total {
        return Err(Error::DimensionMismatch(format!(
            "ranking covers {} features but data has {total}",
            ranking.len()
        )));
    }
    let mut metrics = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        if !(0.0..=1.0).contains(&ratio) || ratio == 0.0 {
            return Err(Error::InvalidInput(format!(
                "feature ratio must be in (0, 1], got {ratio}"
            )));
        }
        let m = (ratio * total as f64).ceil() as usize;
        let x = select_features(source, ranking, m);
        let mut accs = Vec::with_capacity(opts.repeats);
        let mut nmis = Vec::with_capacity(opts.repeats);
        for rep in 0..opts.repeats {
            let pred = kmeans(&x, k, seed.wrapping_add(rep as u64), opts.restarts)?;
            accs.push(acc(labels, &pred)?);
            nmis.push(nmi(labels, &pred)?);
        }
        metrics.push(RatioMetrics {
            ratio,
            acc_mean: mean(&accs),
            acc_std: std_dev(&accs),
            nmi_mean: mean(&nmis),
            nmi_std: std_dev(&nmis),
        });
    }
    Ok(SelectionResult {
        ranking: ranking.to_vec(),
        metrics,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation over the repeat runs.
fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}
