//! Alternating optimization: multiplicative updates for the imputed data,
//! feature-selection matrices, and CP factors, exact simplex-projected
//! graph refreshes, closed-form view weights, and convergence tracking.
//!
//! One outer iteration updates, in order: each view's imputed matrix, each
//! view's selection matrix, the shared embedding factor, the view factor
//! (with an immediate belief refresh), each view's similarity graph, the
//! sample factor, and the view weights. Updates use the freshest values of
//! everything updated earlier in the same iteration.

use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{mean_impute, MultiViewDataset};
use crate::error::{Error, Result};
use crate::evidence::{belief_update, view_similarity, BeliefState};
use crate::graph::{
    graph_objective_terms, knn_graph, pairwise_penalty, update_similarity, SimilarityGraph,
};
use crate::tensor::{khatri_rao, unfold, Tensor3};

/// Floor applied to every multiplicative-update denominator entry.
const DENOM_FLOOR: f64 = 1e-12;

/// Solver hyperparameters.
#[derive(Debug, Clone)]
pub struct Hyperparams {
    /// View-weight exponent; must exceed 1 (the closed form uses the
    /// power `1/(1-gamma)`).
    pub gamma: f64,
    /// Row-sparsity trade-off.
    pub lambda: f64,
    /// Graph trade-off shared by the smoothness and consensus blocks.
    pub tau: f64,
    /// Embedding dimension (rows of the projected views).
    pub c: usize,
    /// CP rank.
    pub r: usize,
    /// Smoothing constant in the row-norm reweighting.
    pub epsilon: f64,
    /// Neighbor count for graph initialization.
    pub knn_k: usize,
    pub max_iter: usize,
    /// Relative objective-change threshold; convergence is declared after
    /// three consecutive iterations below it.
    pub tol: f64,
    pub seed: u64,
    /// Use the symmetrized graph (and its degrees) inside the imputation
    /// update. The asymmetric form pairs the graph's column mass in the
    /// numerator with its row sums in the denominator; a zero-in-degree
    /// sample then floors the denominator and missing entries amplify one
    /// another without bound. The symmetrized degrees are at least 1/2 for
    /// a column-stochastic graph, which anchors the update, so this
    /// defaults to true; set false to experiment with the raw form.
    pub symmetrize_xhat_graph: bool,
}

impl Hyperparams {
    /// Defaults for a given embedding dimension; the CP rank follows it.
    pub fn new(c: usize) -> Self {
        Self {
            gamma: 4.0,
            lambda: 0.1,
            tau: 0.1,
            c,
            r: c,
            epsilon: 1e-8,
            knn_k: 5,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
            symmetrize_xhat_graph: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if self.lambda < 0.0 || self.tau < 0.0 {
            return Err(Error::InvalidInput(
                "lambda and tau must be nonnegative".into(),
            ));
        }
        if self.c == 0 || self.r == 0 {
            return Err(Error::InvalidInput("c and r must be >= 1".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        if self.knn_k == 0 || self.max_iter == 0 {
            return Err(Error::InvalidInput(
                "knn_k and max_iter must be >= 1".into(),
            ));
        }
        if self.tol <= 0.0 {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Ablation variants of the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Full,
    /// Keep the mean-imputed values fixed (imputation update skipped).
    FrozenImputation,
    /// Standard CP in place of the adaptive-weighted form: no view-weight
    /// powers anywhere, view-weight update skipped.
    StandardCp,
    /// Keep the initial kNN graphs fixed: belief refresh and graph update
    /// skipped, consensus term dropped from the objective.
    FixedKnnGraph,
}

impl Variant {
    fn slice_weights(&self, omega: &Array1<f64>, gamma: f64) -> Vec<f64> {
        match self {
            Variant::StandardCp => vec![1.0; omega.len()],
            _ => omega.iter().map(|&w| w.powf(gamma / 2.0)).collect(),
        }
    }

    fn uses_consensus(&self) -> bool {
        !matches!(self, Variant::FixedKnnGraph)
    }
}

/// All optimization variables.
#[derive(Debug, Clone)]
pub struct ModelState {
    /// Per-view feature-selection matrices, `d_v x c`.
    pub w: Vec<Array2<f64>>,
    /// Per-view imputed data, `d_v x n`; observed entries always equal
    /// the input data.
    pub xhat: Vec<Array2<f64>>,
    /// Per-view similarity graphs.
    pub graphs: Vec<SimilarityGraph>,
    /// Embedding factor, `c x r`.
    pub a: Array2<f64>,
    /// Sample factor, `n x r`.
    pub h: Array2<f64>,
    /// View factor, `V x r`.
    pub p: Array2<f64>,
    /// View weights on the simplex.
    pub omega: Array1<f64>,
    pub belief: BeliefState,
}

/// The four objective blocks, each already scaled by its trade-off weight
/// so that they sum to the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub fit: f64,
    pub sparsity: f64,
    pub smoothness: f64,
    pub consensus: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.fit + self.sparsity + self.smoothness + self.consensus
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub total: f64,
    pub terms: ObjectiveTerms,
}

/// Worst constraint violations observed over a fit.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstraintViolations {
    /// Max absolute difference between observed entries and their pinned
    /// input values.
    pub pinning: f64,
    /// Most negative factor entry (0 when all nonnegative).
    pub factor_negativity: f64,
    /// Deviation of the view-weight sum from 1.
    pub omega_simplex: f64,
    /// Worst graph column-sum deviation from 1.
    pub graph_column_sum: f64,
    /// Largest graph diagonal entry.
    pub graph_diagonal: f64,
}

/// Objective trace and convergence diagnostics of one fit. Record 0 is the
/// objective at initialization; record `t` follows outer iteration `t`.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub iterations: Vec<IterationRecord>,
    pub iterations_run: usize,
    pub converged: bool,
    pub violations: ConstraintViolations,
    pub elapsed_seconds: f64,
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(0.1..1.0))
        .collect();
    Array2::from_shape_vec((rows, cols), values).expect("shape matches length")
}

/// Initialize all variables: imputed data from feature-wise means, factors
/// from seeded strictly positive uniforms (so no multiplicative entry
/// starts dead), uniform view weights, kNN graphs on the imputed data, and
/// beliefs from the fresh view factor. Deterministic per seed; the RNG
/// fills the selection matrices view by view, then the embedding, sample,
/// and view factors.
pub fn initialize(data: &MultiViewDataset, hp: &Hyperparams) -> Result<ModelState> {
    hp.validate()?;
    let n = data.n_samples();
    if hp.knn_k > n - 1 {
        return Err(Error::InvalidInput(format!(
            "knn_k {} too large for {} samples",
            hp.knn_k, n
        )));
    }
    for (v, (x, m)) in data.views().iter().zip(data.masks()).enumerate() {
        for ((i, j), &mask) in m.indexed_iter() {
            if mask == 1.0 && x[[i, j]] < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "view {} has a negative observed entry at ({i},{j}); normalize first",
                    v + 1
                )));
            }
        }
    }

    let imputed = mean_impute(data)?;
    let xhat: Vec<Array2<f64>> = imputed.views().to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let w: Vec<Array2<f64>> = (0..data.n_views())
        .map(|v| uniform_matrix(&mut rng, data.dim(v), hp.c))
        .collect();
    let a = uniform_matrix(&mut rng, hp.c, hp.r);
    let h = uniform_matrix(&mut rng, n, hp.r);
    let p = uniform_matrix(&mut rng, data.n_views(), hp.r);

    let omega = Array1::from_elem(data.n_views(), 1.0 / data.n_views() as f64);
    let graphs: Vec<SimilarityGraph> = xhat
        .iter()
        .map(|x| knn_graph(x, hp.knn_k))
        .collect::<Result<_>>()?;
    let belief = belief_update(&view_similarity(&p)?)?;

    Ok(ModelState {
        w,
        xhat,
        graphs,
        a,
        h,
        p,
        omega,
        belief,
    })
}

// ---------------------------------------------------------------------------
// Per-variable updates
// ---------------------------------------------------------------------------

/// `Gamma_v = A diag(P_row_v) H^T`, the CP slice the view is fit against.
fn cp_slice_target(a: &Array2<f64>, h: &Array2<f64>, p: &Array2<f64>, v: usize) -> Array2<f64> {
    let scaled = a * &p.row(v).insert_axis(Axis(0));
    scaled.dot(&h.t())
}

fn row_sums(s: &Array2<f64>) -> Array1<f64> {
    s.sum_axis(Axis(1))
}

fn floored(den: Array2<f64>) -> Array2<f64> {
    den.mapv(|x| x.max(DENOM_FLOOR))
}

/// Sum of row-wise Euclidean norms.
pub fn l21_norm(m: &Array2<f64>) -> f64 {
    m.rows().into_iter().map(|r| r.dot(&r).sqrt()).sum()
}

fn update_xhat_core(
    v: usize,
    state: &ModelState,
    hp: &Hyperparams,
    data: &MultiViewDataset,
    fit_weight: f64,
) -> Array2<f64> {
    let xhat = &state.xhat[v];
    let w = &state.w[v];
    let gamma_v = cp_slice_target(&state.a, &state.h, &state.p, v);

    let s_raw = state.graphs[v].matrix();
    let (s_used, degrees) = if hp.symmetrize_xhat_graph {
        let sym = (s_raw + &s_raw.t()) * 0.5;
        let deg = row_sums(&sym);
        (sym, deg)
    } else {
        (s_raw.clone(), row_sums(s_raw))
    };

    let num = fit_weight * w.dot(&gamma_v) + hp.tau * xhat.dot(&s_used);
    let den = floored(fit_weight * w.dot(&w.t()).dot(xhat) + hp.tau * (xhat * &degrees));
    let ratio = num / den;

    let x = data.view(v);
    let m = data.mask(v);
    let mut out = xhat.clone();
    for ((i, j), val) in out.indexed_iter_mut() {
        *val = if m[[i, j]] == 1.0 {
            x[[i, j]]
        } else {
            *val * ratio[[i, j]]
        };
    }
    out
}

/// Multiplicative refresh of view `v`'s imputed matrix: missing entries
/// move toward the CP target and the graph-smoothed neighborhood average,
/// observed entries are reset to the input data.
pub fn update_xhat(
    v: usize,
    state: &ModelState,
    hp: &Hyperparams,
    data: &MultiViewDataset,
) -> Array2<f64> {
    let fit_weight = state.omega[v].powf(hp.gamma);
    update_xhat_core(v, state, hp, data, fit_weight)
}

/// Multiplicative refresh of view `v`'s selection matrix with the
/// row-norm reweighting recomputed from the current matrix. The view
/// weight cancels inside this subproblem.
pub fn update_w(v: usize, state: &ModelState, hp: &Hyperparams) -> Array2<f64> {
    let w = &state.w[v];
    let xhat = &state.xhat[v];
    let gamma_v = cp_slice_target(&state.a, &state.h, &state.p, v);

    let reweight: Array1<f64> = w
        .rows()
        .into_iter()
        .map(|r| 1.0 / (2.0 * r.dot(&r).sqrt() + hp.epsilon))
        .collect();

    let num = xhat.dot(&gamma_v.t());
    let den = floored(
        xhat.dot(&xhat.t()).dot(w) + hp.lambda * (w * &reweight.insert_axis(Axis(1))),
    );
    w * &(num / den)
}

/// The projected views stacked as tensor slices, each scaled by its
/// slice weight.
fn weighted_slices(state: &ModelState, slice_w: &[f64]) -> Vec<Array2<f64>> {
    state
        .w
        .iter()
        .zip(&state.xhat)
        .zip(slice_w)
        .map(|((w, x), &sw)| sw * w.t().dot(x))
        .collect()
}

fn scale_rows(p: &Array2<f64>, slice_w: &[f64]) -> Array2<f64> {
    let sw = Array1::from_vec(slice_w.to_vec());
    p * &sw.insert_axis(Axis(1))
}

fn update_a_core(state: &ModelState, slice_w: &[f64]) -> Array2<f64> {
    let slices = weighted_slices(state, slice_w);
    let z1 = unfold(&Tensor3::from_slices(&slices).expect("equal slice shapes"), 1);
    let p_w = scale_rows(&state.p, slice_w);
    let k = khatri_rao(&p_w, &state.h).expect("equal ranks");
    let num = z1.dot(&k);
    let den = floored(state.a.dot(&k.t().dot(&k)));
    &state.a * &(num / den)
}

/// Multiplicative refresh of the embedding factor against the mode-1
/// unfolding of the weighted tensor.
pub fn update_a(state: &ModelState, hp: &Hyperparams) -> Array2<f64> {
    update_a_core(state, &Variant::Full.slice_weights(&state.omega, hp.gamma))
}

/// Multiplicative refresh of the view factor against the mode-3 unfolding
/// of the unweighted tensor, followed by the belief refresh from the new
/// factor.
pub fn update_p(state: &ModelState) -> Result<(Array2<f64>, BeliefState)> {
    let ones = vec![1.0; state.w.len()];
    let slices = weighted_slices(state, &ones);
    let z3 = unfold(&Tensor3::from_slices(&slices).expect("equal slice shapes"), 3);
    let k = khatri_rao(&state.h, &state.a).expect("equal ranks");
    let num = z3.dot(&k);
    let den = floored(state.p.dot(&k.t().dot(&k)));
    let p_new = &state.p * &(num / den);
    let belief = belief_update(&view_similarity(&p_new)?)?;
    Ok((p_new, belief))
}

fn update_h_core(state: &ModelState, hp: &Hyperparams, slice_w: &[f64]) -> Array2<f64> {
    let slices = weighted_slices(state, slice_w);
    let z2 = unfold(&Tensor3::from_slices(&slices).expect("equal slice shapes"), 2);
    let p_w = scale_rows(&state.p, slice_w);
    let k = khatri_rao(&p_w, &state.a).expect("equal ranks");

    let n = state.h.nrows();
    let mut s_h = Array2::zeros((n, state.h.ncols()));
    let mut degree_sum: Array1<f64> = Array1::zeros(n);
    for g in &state.graphs {
        s_h = s_h + g.matrix().dot(&state.h);
        degree_sum = degree_sum + row_sums(g.matrix());
    }

    let num = z2.dot(&k) + hp.tau * s_h;
    let den = floored(
        state.h.dot(&k.t().dot(&k)) + hp.tau * (&state.h * &degree_sum.insert_axis(Axis(1))),
    );
    &state.h * &(num / den)
}

/// Multiplicative refresh of the sample factor against the mode-2
/// unfolding of the weighted tensor plus the graph-smoothness pull.
pub fn update_h(state: &ModelState, hp: &Hyperparams) -> Array2<f64> {
    update_h_core(state, hp, &Variant::Full.slice_weights(&state.omega, hp.gamma))
}

/// Closed-form view weights: each view's residual-plus-sparsity score is
/// raised to `1/(1-gamma)` and normalized onto the simplex. Scores are
/// floored so an exactly fit view keeps the negative power finite.
pub fn update_omega(state: &ModelState, hp: &Hyperparams) -> Array1<f64> {
    let scores: Vec<f64> = (0..state.w.len())
        .map(|v| {
            let target = cp_slice_target(&state.a, &state.h, &state.p, v);
            let resid = state.w[v].t().dot(&state.xhat[v]) - target;
            let fit: f64 = resid.iter().map(|x| x * x).sum();
            (fit + hp.lambda * l21_norm(&state.w[v])).max(DENOM_FLOOR)
        })
        .collect();
    let exponent = 1.0 / (1.0 - hp.gamma);
    let powered: Vec<f64> = scores.iter().map(|&b| b.powf(exponent)).collect();
    let total: f64 = powered.iter().sum();
    Array1::from_vec(powered.iter().map(|&x| x / total).collect())
}

fn objective_core(
    state: &ModelState,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<ObjectiveTerms> {
    let slice_w = variant.slice_weights(&state.omega, hp.gamma);

    let mut fit = 0.0;
    for v in 0..state.w.len() {
        let target = cp_slice_target(&state.a, &state.h, &state.p, v);
        let resid = slice_w[v] * (state.w[v].t().dot(&state.xhat[v]) - target);
        fit += resid.iter().map(|x| x * x).sum::<f64>();
    }

    let sparsity: f64 = hp.lambda
        * state
            .w
            .iter()
            .zip(&slice_w)
            .map(|(w, &sw)| sw * sw * l21_norm(w))
            .sum::<f64>();

    let (smooth_raw, cons_raw) =
        graph_objective_terms(&state.graphs, &state.xhat, &state.h, &state.belief.bhat)?;
    let consensus = if variant.uses_consensus() {
        hp.tau * cons_raw
    } else {
        0.0
    };

    Ok(ObjectiveTerms {
        fit,
        sparsity,
        smoothness: hp.tau * smooth_raw,
        consensus,
    })
}

/// Evaluate the full objective. The returned terms carry their trade-off
/// weights, so they sum to the total.
pub fn objective(state: &ModelState, hp: &Hyperparams) -> Result<(f64, ObjectiveTerms)> {
    let terms = objective_core(state, hp, Variant::Full)?;
    Ok((terms.total(), terms))
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

fn check_finite(terms: &ObjectiveTerms, iteration: usize) -> Result<()> {
    for (name, value) in [
        ("fit", terms.fit),
        ("sparsity", terms.sparsity),
        ("smoothness", terms.smoothness),
        ("consensus", terms.consensus),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                term: name,
                iteration,
            });
        }
    }
    Ok(())
}

fn measure_violations(state: &ModelState, data: &MultiViewDataset) -> ConstraintViolations {
    let mut v = ConstraintViolations::default();
    for (idx, xhat) in state.xhat.iter().enumerate() {
        let x = data.view(idx);
        let m = data.mask(idx);
        for ((i, j), &mask) in m.indexed_iter() {
            if mask == 1.0 {
                v.pinning = v.pinning.max((xhat[[i, j]] - x[[i, j]]).abs());
            }
        }
        let min = xhat.iter().cloned().fold(f64::INFINITY, f64::min);
        v.factor_negativity = v.factor_negativity.min(min.min(0.0));
    }
    for w in &state.w {
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        v.factor_negativity = v.factor_negativity.min(min.min(0.0));
    }
    for m in [&state.a, &state.h, &state.p] {
        let min = m.iter().cloned().fold(f64::INFINITY, f64::min);
        v.factor_negativity = v.factor_negativity.min(min.min(0.0));
    }
    v.omega_simplex = (state.omega.sum() - 1.0).abs();
    for g in &state.graphs {
        let s = g.matrix();
        for j in 0..s.ncols() {
            v.graph_column_sum = v.graph_column_sum.max((s.column(j).sum() - 1.0).abs());
            v.graph_diagonal = v.graph_diagonal.max(s[[j, j]].abs());
        }
    }
    v
}

/// Run the full model to convergence. See [`fit_variant`].
pub fn fit(data: &MultiViewDataset, hp: &Hyperparams) -> Result<(ModelState, FitReport)> {
    fit_variant(data, hp, Variant::Full)
}

/// Alternating optimization until the relative objective change stays
/// below `tol` for three consecutive iterations or `max_iter` is reached.
/// Observed entries are re-pinned by every imputation update; a non-finite
/// objective aborts with the first offending term named.
pub fn fit_variant(
    data: &MultiViewDataset,
    hp: &Hyperparams,
    variant: Variant,
) -> Result<(ModelState, FitReport)> {
    let start = Instant::now();
    let mut state = initialize(data, hp)?;
    let n_views = data.n_views();

    let mut notes = vec![
        "input convention: per-feature min-max normalized values in [0,1]".to_string(),
        "graph subproblem: the shared graph trade-off weight cancels and is not re-applied"
            .to_string(),
    ];
    if hp.symmetrize_xhat_graph {
        notes.push("imputation update uses the symmetrized graph and degrees".to_string());
    } else {
        notes.push("imputation update uses the raw asymmetric graph form".to_string());
    }
    if variant != Variant::Full {
        notes.push(format!("variant: {variant:?}"));
    }

    let init_terms = objective_core(&state, hp, variant)?;
    check_finite(&init_terms, 0)?;
    let mut records = vec![IterationRecord {
        total: init_terms.total(),
        terms: init_terms,
    }];
    let mut violations = measure_violations(&state, data);

    let mut converged = false;
    let mut consecutive_small = 0;
    let mut iterations_run = 0;

    for iteration in 1..=hp.max_iter {
        let slice_w = variant.slice_weights(&state.omega, hp.gamma);

        if variant != Variant::FrozenImputation {
            for v in 0..n_views {
                let fit_weight = slice_w[v] * slice_w[v];
                state.xhat[v] = update_xhat_core(v, &state, hp, data, fit_weight);
            }
        }
        for v in 0..n_views {
            state.w[v] = update_w(v, &state, hp);
        }
        state.a = update_a_core(&state, &slice_w);
        let (p_new, belief_new) = update_p(&state)?;
        state.p = p_new;
        if variant != Variant::FixedKnnGraph {
            state.belief = belief_new;
            for v in 0..n_views {
                let f_v = pairwise_penalty(&state.xhat[v], &state.h)?;
                state.graphs[v] =
                    update_similarity(v, &state.graphs, &state.belief.bhat, &f_v, hp.tau)?;
            }
        }
        state.h = update_h_core(&state, hp, &slice_w);
        if variant != Variant::StandardCp {
            state.omega = update_omega(&state, hp);
        }

        let terms = objective_core(&state, hp, variant)?;
        check_finite(&terms, iteration)?;
        let total = terms.total();
        let prev = records.last().expect("non-empty").total;
        records.push(IterationRecord { total, terms });

        let current = measure_violations(&state, data);
        violations.pinning = violations.pinning.max(current.pinning);
        violations.factor_negativity = violations.factor_negativity.min(current.factor_negativity);
        violations.omega_simplex = violations.omega_simplex.max(current.omega_simplex);
        violations.graph_column_sum = violations.graph_column_sum.max(current.graph_column_sum);
        violations.graph_diagonal = violations.graph_diagonal.max(current.graph_diagonal);

        iterations_run = iteration;
        let rel_change = (total - prev).abs() / prev.abs().max(1e-12);
        if rel_change < hp.tol {
            consecutive_small += 1;
            if consecutive_small >= 3 {
                converged = true;
                break;
            }
        } else {
            consecutive_small = 0;
        }
    }

    let report = FitReport {
        iterations: records,
        iterations_run,
        converged,
        violations,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        notes,
    };
    Ok((state, report))
}
