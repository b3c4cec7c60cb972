//! Subjective-logic layer: cross-view similarity evidence from the
//! view-specific factor, Dirichlet concentration, belief masses, and
//! per-view uncertainty.
//!
//! For each view `v` the off-diagonal evidence row `e[v, .]` induces a
//! Dirichlet concentration `alpha = e + 1` with strength
//! `T_v = sum_{k != v} alpha[v, k]`; belief masses are `e[v, k] / T_v`
//! and the uncertainty mass is `(V - 1) / T_v`, so each row satisfies
//! `sum_k bhat[v, k] + u[v] = 1` by construction.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Belief masses, uncertainty, and the raw quantities they derive from.
///
/// The uncertainty `u` is reported for diagnostics (graph dumps, fit
/// reports) but is not consumed by any objective term; only `bhat` feeds
/// back into graph learning.
#[derive(Debug, Clone)]
pub struct BeliefState {
    /// `V x V` belief masses with zero diagonal.
    pub bhat: Array2<f64>,
    /// Per-view uncertainty mass, in `(0, 1]`.
    pub u: Array1<f64>,
    /// Raw nonnegative evidence, zero diagonal.
    pub evidence: Array2<f64>,
    /// Dirichlet concentration `evidence + 1` off the diagonal.
    pub alpha: Array2<f64>,
}

/// Evidence of pairwise view similarity from the view factor `p`
/// (`V x r`, nonnegative): `e[v, k] = dot(p_row_v, p_row_k) / sqrt(r)`
/// for `k != v`, zero diagonal. The `sqrt(r)` keeps the scale independent
/// of the factor dimensionality.
pub fn view_similarity(p: &Array2<f64>) -> Result<Array2<f64>> {
    let (n_views, r) = p.dim();
    if r == 0 {
        return Err(Error::InvalidInput("view factor needs rank >= 1".into()));
    }
    let scale = (r as f64).sqrt();
    let mut e = Array2::zeros((n_views, n_views));
    for v in 0..n_views {
        for k in (v + 1)..n_views {
            let val = p.row(v).dot(&p.row(k)) / scale;
            e[[v, k]] = val;
            e[[k, v]] = val;
        }
    }
    Ok(e)
}

/// Turn an evidence matrix into belief masses and uncertainties.
///
/// Evidence is clamped at zero before forming the concentration so the
/// construction stays well-defined under numerical noise; with a
/// nonnegative view factor the clamp never fires.
pub fn belief_update(evidence: &Array2<f64>) -> Result<BeliefState> {
    let (rows, cols) = evidence.dim();
    if rows != cols || rows < 2 {
        return Err(Error::DimensionMismatch(format!(
            "evidence must be square with V >= 2, got {rows}x{cols}"
        )));
    }
    let n_views = rows;
    let clamped = evidence.mapv(|v| v.max(0.0));

    let mut alpha = Array2::zeros((n_views, n_views));
    let mut bhat = Array2::zeros((n_views, n_views));
    let mut u = Array1::zeros(n_views);
    for v in 0..n_views {
        let mut strength = 0.0;
        for k in 0..n_views {
            if k != v {
                alpha[[v, k]] = clamped[[v, k]] + 1.0;
                strength += alpha[[v, k]];
            }
        }
        for k in 0..n_views {
            if k != v {
                bhat[[v, k]] = clamped[[v, k]] / strength;
            }
        }
        u[v] = (n_views as f64 - 1.0) / strength;
    }
    Ok(BeliefState {
        bhat,
        u,
        evidence: clamped,
        alpha,
    })
}
