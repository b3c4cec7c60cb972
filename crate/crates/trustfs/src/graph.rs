//! Per-view similarity graphs: probabilistic kNN initialization, graph
//! Laplacians, pairwise-distance penalties, and the column-wise
//! simplex-constrained similarity update guided by belief masses.
//!
//! A similarity graph is an `n x n` nonnegative matrix with zero diagonal
//! whose columns lie on the probability simplex. Graph updates solve, per
//! column, an exact Euclidean projection onto that constraint set, so the
//! invariants hold by construction.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Column-stochastic sample-affinity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    s: Array2<f64>,
}

impl SimilarityGraph {
    /// Validate and wrap a matrix: square, nonnegative, zero diagonal,
    /// column sums within 1e-9 of 1.
    pub fn new(s: Array2<f64>) -> Result<Self> {
        let (rows, cols) = s.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch(format!(
                "similarity graph must be square, got {rows}x{cols}"
            )));
        }
        for i in 0..rows {
            if s[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "similarity graph diagonal entry ({i},{i}) is {}, expected 0",
                    s[[i, i]]
                )));
            }
        }
        if s.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(
                "similarity graph has a negative entry".into(),
            ));
        }
        for j in 0..cols {
            let sum = s.column(j).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "similarity graph column {j} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { s })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

/// Laplacian `L = D - (S + S^T)/2` together with the diagonal degree
/// matrix `D`, `D[i,i] = sum_j S[i,j]` (row sums of the input).
///
/// `L` is positive semidefinite when the input is symmetric. For a
/// column-stochastic input with uneven row sums the row-sum degrees and
/// the symmetrized adjacency can disagree, which is why the objective
/// evaluates graph smoothness through the pairwise form instead (see
/// [`graph_objective_terms`]).
#[derive(Debug, Clone)]
pub struct LaplacianPair {
    pub l: Array2<f64>,
    pub d: Array2<f64>,
}

/// Build the Laplacian pair of a similarity matrix.
pub fn laplacian(s: &Array2<f64>) -> LaplacianPair {
    let n = s.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        d[[i, i]] = s.row(i).sum();
    }
    let sym = (s + &s.t()) * 0.5;
    let l = &d - &sym;
    LaplacianPair { l, d }
}

/// Same construction applied to the symmetrized matrix `(S + S^T)/2`,
/// whose Laplacian is positive semidefinite for any nonnegative input.
pub fn laplacian_symmetrized(s: &Array2<f64>) -> LaplacianPair {
    let sym = (s + &s.t()) * 0.5;
    laplacian(&sym)
}

/// Probabilistic k-nearest-neighbor graph: column `i` puts weight
/// proportional to `(d_{i,k+1} - d_{ij})_+` on its `k` nearest neighbors
/// by Euclidean distance and zero elsewhere. Samples are the columns of
/// `x`. Distance ties break toward the lower sample index; when all
/// candidate weights vanish the column falls back to uniform weight over
/// the `k` nearest.
pub fn knn_graph(x: &Array2<f64>, k: usize) -> Result<SimilarityGraph> {
    let n = x.ncols();
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::InvalidInput(format!(
            "knn k must be in 1..={}, got {k}",
            n.saturating_sub(1)
        )));
    }
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.column(i);
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let diff = &xi - &x.column(j);
                (diff.dot(&diff).sqrt(), j)
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        // Reference distance: the (k+1)-th neighbor when it exists, else
        // the farthest of the k kept (which then gets zero weight and the
        // uniform fallback applies if every weight vanishes).
        let reference = if k < dists.len() {
            dists[k].0
        } else {
            dists[k - 1].0
        };
        let weights: Vec<f64> = dists[..k]
            .iter()
            .map(|&(d, _)| (reference - d).max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        for (m, &(_, j)) in dists[..k].iter().enumerate() {
            s[[j, i]] = if total > 1e-12 {
                weights[m] / total
            } else {
                1.0 / k as f64
            };
        }
    }
    SimilarityGraph::new(s)
}

/// Pairwise penalty `F[i,j] = ||xhat_col_i - xhat_col_j||^2 +
/// ||h_row_i - h_row_j||^2`: symmetric, nonnegative, zero diagonal.
pub fn pairwise_penalty(xhat: &Array2<f64>, h: &Array2<f64>) -> Result<Array2<f64>> {
    let n = xhat.ncols();
    if h.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "xhat has {n} samples but h has {} rows",
            h.nrows()
        )));
    }
    let mut f = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = &xhat.column(i) - &xhat.column(j);
            let dh = &h.row(i) - &h.row(j);
            let val = dx.dot(&dx) + dh.dot(&dh);
            f[[i, j]] = val;
            f[[j, i]] = val;
        }
    }
    Ok(f)
}

/// Euclidean projection of `q` onto `{s >= 0, sum(s) = 1, s[zero_idx] = 0}`
/// by sort-and-threshold on the remaining coordinates. Returns the exact
/// KKT point.
pub fn project_simplex_zero(q: &Array1<f64>, zero_idx: usize) -> Array1<f64> {
    let n = q.len();
    assert!(n >= 2, "projection needs at least 2 coordinates");
    assert!(zero_idx < n, "zero_idx {zero_idx} out of range for {n}");

    let free: Vec<f64> = (0..n).filter(|&j| j != zero_idx).map(|j| q[j]).collect();
    let mut sorted = free.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }

    let mut out = Array1::zeros(n);
    let mut it = free.iter();
    for j in 0..n {
        if j != zero_idx {
            out[j] = (it.next().unwrap() - theta).max(0.0);
        }
    }
    out
}

/// Refresh view `v`'s graph by projecting each column of the target
///
/// `Q = (C + sum_{k!=v} bhat[k,v] R_k - F/2) / (1 + sum_{k!=v} bhat[k,v]^2)`
///
/// onto the column simplex with a zero diagonal, where
/// `C = sum_{k!=v} bhat[v,k] S_k` and
/// `R_k = S_k - sum_{t!=k, t!=v} bhat[k,t] S_t`.
///
/// The `_tau` weight shared by all graph terms of the objective cancels
/// inside this subproblem; the parameter is kept for interface symmetry.
pub fn update_similarity(
    v: usize,
    graphs: &[SimilarityGraph],
    bhat: &Array2<f64>,
    f_v: &Array2<f64>,
    _tau: f64,
) -> Result<SimilarityGraph> {
    let n_views = graphs.len();
    let n = graphs[v].n();

    let mut c: Array2<f64> = Array2::zeros((n, n));
    for k in 0..n_views {
        if k != v {
            c = c + bhat[[v, k]] * graphs[k].matrix();
        }
    }

    let mut r_sum: Array2<f64> = Array2::zeros((n, n));
    let mut beta = 1.0;
    for k in 0..n_views {
        if k == v {
            continue;
        }
        let mut r_k = graphs[k].matrix().clone();
        for t in 0..n_views {
            if t != k && t != v {
                r_k = r_k - bhat[[k, t]] * graphs[t].matrix();
            }
        }
        r_sum = r_sum + bhat[[k, v]] * &r_k;
        beta += bhat[[k, v]] * bhat[[k, v]];
    }

    let q = (c + r_sum - f_v * 0.5) / beta;
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        let col = project_simplex_zero(&q.column(i).to_owned(), i);
        s.column_mut(i).assign(&col);
    }
    SimilarityGraph::new(s)
}

/// The two graph-dependent objective blocks, both unweighted:
///
/// - smoothness: `sum_v (1/2) sum_{ij} (||xhat_i - xhat_j||^2 +
///   ||h_i - h_j||^2) S_v[i,j]`, the pairwise form of the Laplacian trace
///   terms (always nonnegative);
/// - consensus: `sum_v ||S_v - sum_{k!=v} bhat[v,k] S_k||_F^2`.
pub fn graph_objective_terms(
    graphs: &[SimilarityGraph],
    xhats: &[Array2<f64>],
    h: &Array2<f64>,
    bhat: &Array2<f64>,
) -> Result<(f64, f64)> {
    let n_views = graphs.len();
    if xhats.len() != n_views {
        return Err(Error::DimensionMismatch(format!(
            "{n_views} graphs but {} data matrices",
            xhats.len()
        )));
    }

    let mut smoothness = 0.0;
    for v in 0..n_views {
        let f = pairwise_penalty(&xhats[v], h)?;
        smoothness += 0.5 * (&f * graphs[v].matrix()).sum();
    }

    let mut consensus = 0.0;
    for v in 0..n_views {
        let mut diff = graphs[v].matrix().clone();
        for k in 0..n_views {
            if k != v {
                diff = diff - bhat[[v, k]] * graphs[k].matrix();
            }
        }
        consensus += diff.iter().map(|x| x * x).sum::<f64>();
    }
    Ok((smoothness, consensus))
}
