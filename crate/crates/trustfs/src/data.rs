//! Multi-view datasets with variable-level missing masks: loading, saving,
//! normalization, missing-value injection, mean imputation, and synthetic
//! generation.
//!
//! A dataset holds `V >= 2` feature matrices of shape `d_v x n` (rows are
//! features, columns are samples) together with binary indicator masks of
//! the same shape: `mask[i, j] = 0` marks entry `(i, j)` as missing,
//! `1` as observed. Missing entries carry a `0.0` placeholder in the value
//! matrix and must never be read except through the mask.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Per-view feature matrices with missing-entry masks and optional
/// ground-truth class labels (used by evaluation only).
///
/// Values are immutable after construction; every mutation-style operation
/// returns a new dataset.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<Array2<f64>>,
    masks: Vec<Array2<f64>>,
    labels: Option<Vec<usize>>,
    names: Vec<String>,
}

impl MultiViewDataset {
    /// Build a dataset and validate its invariants: at least two views, a
    /// shared sample count, binary masks of matching shapes, label length,
    /// and no fully missing sample.
    pub fn new(
        views: Vec<Array2<f64>>,
        masks: Vec<Array2<f64>>,
        labels: Option<Vec<usize>>,
        names: Vec<String>,
    ) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 views, got {}",
                views.len()
            )));
        }
        if masks.len() != views.len() || names.len() != views.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} views, {} masks, {} names",
                views.len(),
                masks.len(),
                names.len()
            )));
        }
        let n = views[0].ncols();
        for (v, x) in views.iter().enumerate() {
            if x.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "sample count mismatch: view {} has {} columns, view 1 has {n}",
                    v + 1,
                    x.ncols()
                )));
            }
            if masks[v].dim() != x.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "mask {} shape {:?} does not match view shape {:?}",
                    v + 1,
                    masks[v].dim(),
                    x.dim()
                )));
            }
            if masks[v].iter().any(|&m| m != 0.0 && m != 1.0) {
                return Err(Error::InvalidInput(format!(
                    "mask {} contains a value outside {{0,1}}",
                    v + 1
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "labels length {} does not match sample count {n}",
                    l.len()
                )));
            }
        }
        for j in 0..n {
            let observed: f64 = masks.iter().map(|m| m.column(j).sum()).sum();
            if observed == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "sample {j} has no observed entry in any view"
                )));
            }
        }
        Ok(Self {
            views,
            masks,
            labels,
            names,
        })
    }

    /// Convenience constructor for complete data: all-ones masks and
    /// autogenerated view names.
    pub fn complete(views: Vec<Array2<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let masks = views.iter().map(|x| Array2::ones(x.dim())).collect();
        let names = (1..=views.len()).map(|i| format!("view_{i}")).collect();
        Self::new(views, masks, labels, names)
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].ncols()
    }

    /// Feature count of view `v`.
    pub fn dim(&self, v: usize) -> usize {
        self.views[v].nrows()
    }

    /// Total feature count over all views.
    pub fn total_features(&self) -> usize {
        self.views.iter().map(|x| x.nrows()).sum()
    }

    pub fn views(&self) -> &[Array2<f64>] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &Array2<f64> {
        &self.views[v]
    }

    pub fn masks(&self) -> &[Array2<f64>] {
        &self.masks
    }

    pub fn mask(&self, v: usize) -> &Array2<f64> {
        &self.masks[v]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Number of distinct label values, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut seen: Vec<usize> = l.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
    }

    /// True if every mask entry is 1.
    pub fn is_complete(&self) -> bool {
        self.masks.iter().all(|m| m.iter().all(|&v| v == 1.0))
    }

    fn check_no_fully_missing_rows(&self) -> Result<()> {
        for (v, m) in self.masks.iter().enumerate() {
            for i in 0..m.nrows() {
                if m.row(i).sum() == 0.0 {
                    return Err(Error::FullyMissingRow { view: v + 1, row: i });
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// csv-dir persistence
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct Meta {
    views: usize,
    names: Vec<String>,
    n: usize,
}

fn parse_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: display.clone(),
                    message: format!("non-numeric cell `{}` at line {}", cell.trim(), lineno + 1),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: display,
                    message: format!(
                        "line {} has {} cells, expected {}",
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: display,
            message: "empty matrix".into(),
        });
    }
    let (d, n) = (rows.len(), rows[0].len());
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((d, n), flat)
        .map_err(|e| Error::DimensionMismatch(format!("{display}: {e}")))
}

fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[[i, j]]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load a dataset from a `csv-dir` directory: `meta.json` declaring
/// `{views, names, n}`, `view_<i>.csv` numeric matrices (rows are features),
/// optional `mask_<i>.csv` of the same shape, and optional `labels.csv`
/// (one integer per line). Absent mask files default to all ones.
pub fn load_dataset(dir: &Path) -> Result<MultiViewDataset> {
    let meta_path = dir.join("meta.json");
    let meta_text = std::fs::read_to_string(&meta_path)?;
    let meta: Meta = serde_json::from_str(&meta_text)?;
    if meta.names.len() != meta.views {
        return Err(Error::Parse {
            path: meta_path.display().to_string(),
            message: format!("{} names for {} views", meta.names.len(), meta.views),
        });
    }

    let mut views = Vec::with_capacity(meta.views);
    let mut masks = Vec::with_capacity(meta.views);
    for i in 1..=meta.views {
        let x = parse_matrix(&dir.join(format!("view_{i}.csv")))?;
        if x.ncols() != meta.n {
            return Err(Error::DimensionMismatch(format!(
                "sample count mismatch: view {i} has {} columns, meta declares {}",
                x.ncols(),
                meta.n
            )));
        }
        let mask_path = dir.join(format!("mask_{i}.csv"));
        let mask = if mask_path.exists() {
            let m = parse_matrix(&mask_path)?;
            if m.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(Error::Parse {
                    path: mask_path.display().to_string(),
                    message: "mask value outside {0,1}".into(),
                });
            }
            m
        } else {
            Array2::ones(x.dim())
        };
        views.push(x);
        masks.push(mask);
    }

    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.exists() {
        let text = std::fs::read_to_string(&labels_path)?;
        let raw: Vec<i64> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<i64>().map_err(|_| Error::Parse {
                    path: labels_path.display().to_string(),
                    message: format!("non-numeric cell `{l}`"),
                })
            })
            .collect::<Result<_>>()?;
        // Dense re-encoding in first-occurrence order; ACC/NMI are
        // relabeling-invariant so the original values carry no information.
        let mut codes: HashMap<i64, usize> = HashMap::new();
        let mut dense = Vec::with_capacity(raw.len());
        for r in raw {
            let next = codes.len();
            dense.push(*codes.entry(r).or_insert(next));
        }
        Some(dense)
    } else {
        None
    };

    let dataset = MultiViewDataset::new(views, masks, labels, meta.names)?;
    dataset.check_no_fully_missing_rows()?;
    Ok(dataset)
}

/// Write a dataset as a `csv-dir` directory. Masks are always written so
/// that save followed by [`load_dataset`] is bit-exact.
pub fn save_dataset(d: &MultiViewDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let names_json: Vec<String> = d
        .names()
        .iter()
        .map(serde_json::to_string)
        .collect::<std::result::Result<_, _>>()?;
    let meta = format!(
        "{{\"views\": {}, \"names\": [{}], \"n\": {}}}\n",
        d.n_views(),
        names_json.join(", "),
        d.n_samples()
    );
    std::fs::write(dir.join("meta.json"), meta)?;
    for v in 0..d.n_views() {
        write_matrix(&dir.join(format!("view_{}.csv", v + 1)), d.view(v))?;
        write_matrix(&dir.join(format!("mask_{}.csv", v + 1)), d.mask(v))?;
    }
    if let Some(labels) = d.labels() {
        let mut out = String::new();
        for l in labels {
            let _ = writeln!(out, "{l}");
        }
        std::fs::write(dir.join("labels.csv"), out)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Normalization / imputation / injection
// ---------------------------------------------------------------------------

/// Min-max scale each feature row to `[0, 1]` using observed entries only.
/// Missing entries are left at the `0.0` placeholder; masks and labels are
/// unchanged. A constant observed row maps to all `0.5`. A feature row with
/// no observed entries is an error.
pub fn normalize_views(d: &MultiViewDataset) -> Result<MultiViewDataset> {
    let mut views = Vec::with_capacity(d.n_views());
    for v in 0..d.n_views() {
        let x = d.view(v);
        let m = d.mask(v);
        let mut out = Array2::zeros(x.dim());
        for i in 0..x.nrows() {
            let observed: Vec<f64> = (0..x.ncols())
                .filter(|&j| m[[i, j]] == 1.0)
                .map(|j| x[[i, j]])
                .collect();
            if observed.is_empty() {
                return Err(Error::FullyMissingRow { view: v + 1, row: i });
            }
            let lo = observed.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for j in 0..x.ncols() {
                if m[[i, j]] == 1.0 {
                    out[[i, j]] = if hi > lo {
                        (x[[i, j]] - lo) / (hi - lo)
                    } else {
                        0.5
                    };
                }
            }
        }
        views.push(out);
    }
    MultiViewDataset::new(
        views,
        d.masks().to_vec(),
        d.labels().map(|l| l.to_vec()),
        d.names().to_vec(),
    )
}

/// Replace each missing entry by the mean of the observed entries of the
/// same feature row in the same view. Masks are preserved unchanged so the
/// solver can keep enforcing the observed-entry constraint downstream.
pub fn mean_impute(d: &MultiViewDataset) -> Result<MultiViewDataset> {
    let mut views = Vec::with_capacity(d.n_views());
    for v in 0..d.n_views() {
        let x = d.view(v);
        let m = d.mask(v);
        let mut out = x.clone();
        for i in 0..x.nrows() {
            let count = m.row(i).sum();
            if count == 0.0 {
                return Err(Error::FullyMissingRow { view: v + 1, row: i });
            }
            let mean = x.row(i).dot(&m.row(i)) / count;
            for j in 0..x.ncols() {
                if m[[i, j]] == 0.0 {
                    out[[i, j]] = mean;
                }
            }
        }
        views.push(out);
    }
    MultiViewDataset::new(
        views,
        d.masks().to_vec(),
        d.labels().map(|l| l.to_vec()),
        d.names().to_vec(),
    )
}

/// How missing cells are allocated across views by [`inject_missing`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPattern {
    /// One uniform draw over all `(view, feature, sample)` cells pooled
    /// across views; removes exactly `floor(ratio * total_cells)` entries.
    #[default]
    Pooled,
    /// Per-view stratified draw; removes `floor(ratio * d_v * n)` entries
    /// from each view independently.
    PerView,
}

/// Mark a fraction `ratio` of all cells missing, selected uniformly without
/// replacement by a seeded RNG. Removed entries are zeroed in the value
/// matrices. The input must be complete (all-ones masks), and the draw is
/// re-attempted up to 100 times if it would leave some sample with no
/// observed entry in any view.
pub fn inject_missing(
    d: &MultiViewDataset,
    ratio: f64,
    seed: u64,
    pattern: MissingPattern,
) -> Result<MultiViewDataset> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidInput(format!(
            "missing ratio must be in [0, 1), got {ratio}"
        )));
    }
    if !d.is_complete() {
        return Err(Error::Injection(
            "input dataset already has missing entries".into(),
        ));
    }

    let n = d.n_samples();
    let cells_of = |v: usize| d.dim(v) * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _attempt in 0..100 {
        let mut masks: Vec<Array2<f64>> = d.views().iter().map(|x| Array2::ones(x.dim())).collect();
        match pattern {
            MissingPattern::Pooled => {
                let total: usize = (0..d.n_views()).map(cells_of).sum();
                let m = exact_count(ratio, total);
                let picks = sample_without_replacement(&mut rng, total, m);
                for pick in picks {
                    let (v, flat) = split_pooled(d, pick);
                    let (i, j) = (flat / n, flat % n);
                    masks[v][[i, j]] = 0.0;
                }
            }
            MissingPattern::PerView => {
                for v in 0..d.n_views() {
                    let total = cells_of(v);
                    let m = exact_count(ratio, total);
                    let picks = sample_without_replacement(&mut rng, total, m);
                    for flat in picks {
                        let (i, j) = (flat / n, flat % n);
                        masks[v][[i, j]] = 0.0;
                    }
                }
            }
        }

        let every_sample_covered = (0..n).all(|j| {
            masks
                .iter()
                .any(|m| (0..m.nrows()).any(|i| m[[i, j]] == 1.0))
        });
        if !every_sample_covered {
            continue;
        }

        let views: Vec<Array2<f64>> = d
            .views()
            .iter()
            .zip(&masks)
            .map(|(x, m)| x * m)
            .collect();
        return MultiViewDataset::new(
            views,
            masks,
            d.labels().map(|l| l.to_vec()),
            d.names().to_vec(),
        );
    }

    Err(Error::Injection(format!(
        "ratio {ratio} left a sample fully missing after 100 resampling attempts"
    )))
}

/// floor(ratio * total) with an epsilon that absorbs the binary
/// representation error of decimal ratios (e.g. 0.29 * 100 landing just
/// below 29).
fn exact_count(ratio: f64, total: usize) -> usize {
    ((ratio * total as f64) + 1e-9).floor() as usize
}

fn split_pooled(d: &MultiViewDataset, mut pick: usize) -> (usize, usize) {
    let n = d.n_samples();
    for v in 0..d.n_views() {
        let cells = d.dim(v) * n;
        if pick < cells {
            return (v, pick);
        }
        pick -= cells;
    }
    unreachable!("pooled cell index out of range")
}

/// Partial Fisher-Yates: the first `m` entries of a shuffled `0..total`.
fn sample_without_replacement(rng: &mut ChaCha8Rng, total: usize, m: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..total).collect();
    for i in 0..m.min(total) {
        let j = rng.random_range(i..total);
        indices.swap(i, j);
    }
    indices.truncate(m.min(total));
    indices
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

/// Recipe for a desk-scale synthetic multi-view dataset with planted
/// cluster structure on a known subset of feature rows.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub views: usize,
    pub n: usize,
    /// Feature count per view; length must equal `views`.
    pub dims: Vec<usize>,
    pub classes: usize,
    /// Informative (cluster-structured) feature rows per view.
    pub informative: usize,
    /// Standard deviation of the Gaussian noise on informative rows.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.views < 2 {
            return Err(Error::InvalidInput("need at least 2 views".into()));
        }
        if self.dims.len() != self.views {
            return Err(Error::DimensionMismatch(format!(
                "{} dims for {} views",
                self.dims.len(),
                self.views
            )));
        }
        if self.classes == 0 || self.classes > self.n {
            return Err(Error::InvalidInput(format!(
                "classes must be in 1..=n, got {} with n = {}",
                self.classes, self.n
            )));
        }
        if self.dims.iter().any(|&d| self.informative > d) {
            return Err(Error::InvalidInput(
                "informative feature count exceeds a view dimension".into(),
            ));
        }
        if self.noise < 0.0 {
            return Err(Error::InvalidInput("noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// A generated dataset plus the planted informative feature positions as
/// `(view index, feature row)` pairs, for recovery tests.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: MultiViewDataset,
    pub informative: Vec<(usize, usize)>,
}

/// Generate cluster-structured nonnegative data. Informative rows take a
/// high value (0.9) on the samples of one class and a low value (0.1)
/// elsewhere, plus Gaussian noise clamped at zero; the remaining rows are
/// i.i.d. uniform noise. Labels are `j mod classes`. Deterministic per seed.
pub fn synth_generate(spec: &SyntheticSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<usize> = (0..spec.n).map(|j| j % spec.classes).collect();

    let mut views = Vec::with_capacity(spec.views);
    let mut informative = Vec::new();
    let mut planted_so_far = 0usize;
    for v in 0..spec.views {
        let d_v = spec.dims[v];
        // Scatter the informative rows across the view.
        let rows = sample_without_replacement(&mut rng, d_v, spec.informative);
        let noise = if spec.noise > 0.0 {
            Some(Normal::new(0.0, spec.noise).expect("valid sigma"))
        } else {
            None
        };
        let mut x = Array2::zeros((d_v, spec.n));
        for i in 0..d_v {
            if let Some(pos) = rows.iter().position(|&r| r == i) {
                let row_class = (planted_so_far + pos) % spec.classes;
                for j in 0..spec.n {
                    let base = if labels[j] == row_class { 0.9 } else { 0.1 };
                    let eps = noise.as_ref().map_or(0.0, |nd| nd.sample(&mut rng));
                    x[[i, j]] = (base + eps).max(0.0);
                }
            } else {
                for j in 0..spec.n {
                    x[[i, j]] = rng.random_range(0.0..1.0);
                }
            }
        }
        planted_so_far += spec.informative;
        let mut sorted_rows = rows.clone();
        sorted_rows.sort_unstable();
        informative.extend(sorted_rows.into_iter().map(|r| (v, r)));
        views.push(x);
    }

    let dataset = MultiViewDataset::complete(views, Some(labels))?;
    Ok(SynthOutput {
        dataset,
        informative,
    })
}
