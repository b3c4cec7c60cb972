//! Acceptance suite: every release-gating property, one test per
//! criterion, each printing a single PASS/FAIL line. Oracles here are
//! independent of the library code paths they check (index-enumeration
//! loops, dense grids, brute-force enumeration, finite differences).

#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trustfs::data::{
    inject_missing, mean_impute, normalize_views, synth_generate, MissingPattern,
    MultiViewDataset, SyntheticSpec,
};
use trustfs::evidence::belief_update;
use trustfs::graph::{project_simplex_zero, SimilarityGraph};
use trustfs::selection::{
    acc, evaluate_ranking, nmi, rank_features, rank_features_by_variance, EvalOptions,
};
use trustfs::solver::{
    fit, fit_variant, objective, update_a, update_h, update_p, update_w, Hyperparams,
    ModelState, Variant,
};
use trustfs::tensor::{cp_reconstruct, khatri_rao, unfold, Tensor3};

fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
}

// ---------------------------------------------------------------------------
// Shared builders
// ---------------------------------------------------------------------------

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(lo..hi))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> SimilarityGraph {
    let mut s = Array2::zeros((n, n));
    for j in 0..n {
        let mut total = 0.0;
        for i in 0..n {
            if i != j {
                let v = rng.random_range(0.01..1.0);
                s[[i, j]] = v;
                total += v;
            }
        }
        for i in 0..n {
            if i != j {
                s[[i, j]] /= total;
            }
        }
    }
    SimilarityGraph::new(s).expect("valid random graph")
}

/// A random valid model state over a random small dataset geometry.
fn random_state(
    rng: &mut ChaCha8Rng,
    n_views: usize,
    dims: &[usize],
    n: usize,
    c: usize,
    r: usize,
) -> ModelState {
    let w = dims.iter().map(|&d| random_matrix(rng, d, c, 0.1, 1.0)).collect();
    let xhat = dims.iter().map(|&d| random_matrix(rng, d, n, 0.0, 1.0)).collect();
    let graphs = (0..n_views).map(|_| random_graph(rng, n)).collect();
    let a = random_matrix(rng, c, r, 0.1, 1.0);
    let h = random_matrix(rng, n, r, 0.1, 1.0);
    let p = random_matrix(rng, n_views, r, 0.1, 1.0);
    let mut omega_raw: Vec<f64> = (0..n_views).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = omega_raw.iter().sum();
    for o in &mut omega_raw {
        *o /= total;
    }
    let evidence = {
        let mut e = Array2::zeros((n_views, n_views));
        for v in 0..n_views {
            for k in (v + 1)..n_views {
                let val = rng.random_range(0.0..1.0);
                e[[v, k]] = val;
                e[[k, v]] = val;
            }
        }
        e
    };
    ModelState {
        w,
        xhat,
        graphs,
        a,
        h,
        p,
        omega: Array1::from_vec(omega_raw),
        belief: belief_update(&evidence).expect("valid evidence"),
    }
}

fn desk_dataset(seed: u64, missing: f64) -> MultiViewDataset {
    let spec = SyntheticSpec {
        views: 3,
        n: 60,
        dims: vec![20, 20, 20],
        classes: 3,
        informative: 5,
        seed,
        noise: 0.05,
    };
    let d = normalize_views(&synth_generate(&spec).unwrap().dataset).unwrap();
    if missing > 0.0 {
        inject_missing(&d, missing, seed + 1000, MissingPattern::Pooled).unwrap()
    } else {
        d
    }
}

fn desk_hp(seed: u64) -> Hyperparams {
    let mut hp = Hyperparams::new(4);
    hp.gamma = 2.0;
    hp.lambda = 0.01;
    hp.tau = 0.1;
    hp.knn_k = 5;
    hp.seed = seed;
    hp
}

fn criterion8_dataset(seed: u64) -> (MultiViewDataset, Vec<(usize, usize)>) {
    let spec = SyntheticSpec {
        views: 3,
        n: 90,
        dims: vec![20, 20, 20],
        classes: 3,
        informative: 5,
        noise: 0.05,
        seed,
    };
    let out = synth_generate(&spec).unwrap();
    let complete = normalize_views(&out.dataset).unwrap();
    let injected = inject_missing(&complete, 0.3, seed + 55, MissingPattern::Pooled).unwrap();
    (injected, out.informative)
}

fn criterion8_hp(seed: u64) -> Hyperparams {
    let mut hp = Hyperparams::new(8);
    hp.gamma = 2.0;
    hp.lambda = 0.01;
    hp.tau = 0.2;
    hp.knn_k = 10;
    hp.seed = seed;
    hp.max_iter = 400;
    hp.tol = 1e-6;
    hp
}

// ---------------------------------------------------------------------------
// Criterion 1: tensor oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_tensor_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut max_err = 0.0f64;

    for _ in 0..50 {
        let n1 = rng.random_range(1..=4);
        let n2 = rng.random_range(1..=5);
        let n3 = rng.random_range(1..=3);
        let r = rng.random_range(1..=4);

        // Khatri-Rao against a Kronecker-of-columns oracle.
        let a = random_matrix(&mut rng, n1, r, -1.0, 1.0);
        let b = random_matrix(&mut rng, n2, r, -1.0, 1.0);
        let kr = khatri_rao(&a, &b).unwrap();
        for t in 0..r {
            for i in 0..n1 {
                for l in 0..n2 {
                    let expect = a[[i, t]] * b[[l, t]];
                    max_err = max_err.max((kr[[i * n2 + l, t]] - expect).abs());
                }
            }
        }

        // Unfoldings against index enumeration.
        let values: Vec<f64> = (0..n1 * n2 * n3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = Tensor3::from_values((n1, n2, n3), values).unwrap();
        for mode in 1..=3 {
            let m = unfold(&z, mode);
            for i in 0..n1 {
                for j in 0..n2 {
                    for k in 0..n3 {
                        let got = match mode {
                            1 => m[[i, j + n2 * k]],
                            2 => m[[j, i + n1 * k]],
                            _ => m[[k, i + n1 * j]],
                        };
                        max_err = max_err.max((got - z.get(i, j, k)).abs());
                    }
                }
            }
        }

        // CP reconstruction against the triple loop.
        let fa = random_matrix(&mut rng, n1, r, -1.0, 1.0);
        let fh = random_matrix(&mut rng, n2, r, -1.0, 1.0);
        let fp = random_matrix(&mut rng, n3, r, -1.0, 1.0);
        let rec = cp_reconstruct(&fa, &fh, &fp).unwrap();
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let mut expect = 0.0;
                    for t in 0..r {
                        expect += fa[[i, t]] * fh[[j, t]] * fp[[k, t]];
                    }
                    max_err = max_err.max((rec.get(i, j, k) - expect).abs());
                }
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let ok = max_err <= 1e-12 && elapsed < 5.0;
    verdict(
        "criterion 01 tensor-oracle-equivalence",
        ok,
        &format!("max abs err {max_err:.2e}, {elapsed:.2}s"),
    );
    assert!(ok, "max err {max_err}, elapsed {elapsed}");
}

// ---------------------------------------------------------------------------
// Criterion 2: simplex projection optimality
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_simplex_projection() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);

    // Dense-grid comparison on 3-vectors.
    let mut worst_gap = 0.0f64;
    for _ in 0..100 {
        let q = Array1::from_shape_fn(3, |_| rng.random_range(-2.0..2.0));
        let zero_idx = rng.random_range(0..3);
        let p = project_simplex_zero(&q, zero_idx);
        let free: Vec<usize> = (0..3).filter(|&j| j != zero_idx).collect();
        let mut grid_best = f64::INFINITY;
        for step in 0..=1000 {
            let a = step as f64 / 1000.0;
            let mut s = Array1::zeros(3);
            s[free[0]] = a;
            s[free[1]] = 1.0 - a;
            let obj: f64 = (&s - &q).iter().map(|d| d * d).sum();
            grid_best = grid_best.min(obj);
        }
        let ours: f64 = (&p - &q).iter().map(|d| d * d).sum();
        assert!(ours <= grid_best + 1e-12, "projection worse than grid point");
        worst_gap = worst_gap.max(grid_best - ours);
    }

    // Exact KKT form on 10-vectors.
    let mut kkt_ok = true;
    for _ in 0..1000 {
        let q = Array1::from_shape_fn(10, |_| rng.random_range(-3.0..3.0));
        let zero_idx = rng.random_range(0..10);
        let p = project_simplex_zero(&q, zero_idx);
        kkt_ok &= p[zero_idx] == 0.0;
        kkt_ok &= (p.sum() - 1.0).abs() <= 1e-12;
        kkt_ok &= p.iter().all(|&v| v >= 0.0);
        let active: Vec<usize> = (0..10).filter(|&j| j != zero_idx && p[j] > 0.0).collect();
        let theta = q[active[0]] - p[active[0]];
        for j in 0..10 {
            if j == zero_idx {
                continue;
            }
            if p[j] > 0.0 {
                kkt_ok &= (q[j] - p[j] - theta).abs() <= 1e-9;
            } else {
                kkt_ok &= q[j] - theta <= 1e-9;
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_gap <= 1e-5 && kkt_ok && elapsed < 10.0;
    verdict(
        "criterion 02 simplex-projection-optimality",
        ok,
        &format!("grid gap {worst_gap:.2e}, KKT {kkt_ok}, {elapsed:.2}s"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 3: belief identity and monotonicity
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_belief_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_gap = 0.0f64;
    let mut monotone_ok = true;

    for _ in 0..1000 {
        let n_views = rng.random_range(2..=6);
        let mut e = Array2::zeros((n_views, n_views));
        for v in 0..n_views {
            for k in 0..n_views {
                if v != k {
                    e[[v, k]] = rng.random_range(0.0..5.0);
                }
            }
        }
        let b = belief_update(&e).unwrap();
        for v in 0..n_views {
            let total: f64 = (0..n_views).filter(|&k| k != v).map(|k| b.bhat[[v, k]]).sum();
            worst_gap = worst_gap.max((total + b.u[v] - 1.0).abs());
        }

        // Monotonicity spot check: bump one entry.
        let v = 0;
        let k = 1;
        let mut bumped = e.clone();
        bumped[[v, k]] += 0.7;
        let b2 = belief_update(&bumped).unwrap();
        monotone_ok &= b2.bhat[[v, k]] > b.bhat[[v, k]];
        monotone_ok &= b2.u[v] < b.u[v];
    }

    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_gap <= 1e-12 && monotone_ok && elapsed < 1.0;
    verdict(
        "criterion 03 belief-identity",
        ok,
        &format!("worst identity gap {worst_gap:.2e}, monotone {monotone_ok}, {elapsed:.2}s"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 4: constraint suite after fit
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_constraints_after_fit() {
    let start = Instant::now();
    let mut worst_pin = 0.0f64;
    let mut worst_neg = 0.0f64;
    let mut worst_omega = 0.0f64;
    let mut worst_colsum = 0.0f64;
    let mut worst_diag = 0.0f64;

    for seed in 0..5u64 {
        let d = desk_dataset(seed, 0.5);
        let mut hp = desk_hp(seed);
        hp.max_iter = 60;
        hp.tol = 1e-7;
        let (state, report) = fit(&d, &hp).unwrap();

        worst_pin = worst_pin.max(report.violations.pinning);
        for (v, xhat) in state.xhat.iter().enumerate() {
            for ((i, j), &m) in d.mask(v).indexed_iter() {
                if m == 1.0 {
                    worst_pin = worst_pin.max((xhat[[i, j]] - d.view(v)[[i, j]]).abs());
                }
            }
        }
        let mut min_entry = f64::INFINITY;
        for m in state
            .w
            .iter()
            .chain(state.xhat.iter())
            .chain([&state.a, &state.h, &state.p])
        {
            min_entry = min_entry.min(m.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        worst_neg = worst_neg.min(min_entry.min(0.0));
        worst_omega = worst_omega.max((state.omega.sum() - 1.0).abs());
        for g in &state.graphs {
            let s = g.matrix();
            for j in 0..s.ncols() {
                worst_colsum = worst_colsum.max((s.column(j).sum() - 1.0).abs());
                worst_diag = worst_diag.max(s[[j, j]].abs());
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst_pin == 0.0
        && worst_neg == 0.0
        && worst_omega <= 1e-12
        && worst_colsum <= 1e-9
        && worst_diag == 0.0
        && elapsed < 30.0;
    verdict(
        "criterion 04 constraint-suite-after-fit",
        ok,
        &format!(
            "pinning {worst_pin:.1e}, min factor {worst_neg:.1e}, omega {worst_omega:.1e}, colsum {worst_colsum:.1e}, diag {worst_diag:.1e}, {elapsed:.1}s"
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 5: descent behavior
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_descent() {
    let mut trajectory_ok = true;
    let mut settled_ok = true;
    for seed in 0..20u64 {
        let d = desk_dataset(seed, 0.5);
        let mut hp = desk_hp(seed);
        hp.max_iter = 100;
        hp.tol = 1e-13; // no early stop: observe the full trajectory
        let (_, report) = fit(&d, &hp).unwrap();
        let objs: Vec<f64> = report.iterations.iter().map(|r| r.total).collect();
        trajectory_ok &= objs[50] <= objs[1];
        let reached = objs
            .windows(2)
            .take(100)
            .any(|w| (w[1] - w[0]).abs() / w[0].abs().max(1e-12) < 1e-4);
        settled_ok &= reached;
    }

    // Per-subproblem non-increase on random micro-instances.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_rel = 0.0f64;
    for _ in 0..50 {
        let n_views = 3;
        let dims = [6usize, 5, 7];
        let n = 8;
        let (c, r) = (3, 3);
        let state = random_state(&mut rng, n_views, &dims, n, c, r);
        let mut hp = Hyperparams::new(c);
        hp.r = r;
        hp.gamma = rng.random_range(2.0..5.0);
        hp.lambda = rng.random_range(0.001..0.3);
        hp.tau = rng.random_range(0.001..0.3);

        let slice_w: Vec<f64> = state.omega.iter().map(|&o| o.powf(hp.gamma / 2.0)).collect();
        let weighted: Vec<Array2<f64>> = state
            .w
            .iter()
            .zip(&state.xhat)
            .zip(&slice_w)
            .map(|((w, x), &sw)| sw * w.t().dot(x))
            .collect();
        let p_w = {
            let sw = Array1::from_vec(slice_w.clone());
            &state.p * &sw.clone().insert_axis(ndarray::Axis(1))
        };
        let z = Tensor3::from_slices(&weighted).unwrap();

        // Embedding-factor subproblem.
        let sub_a = |a: &Array2<f64>| {
            let k = khatri_rao(&p_w, &state.h).unwrap();
            let resid = unfold(&z, 1) - a.dot(&k.t());
            resid.iter().map(|x| x * x).sum::<f64>()
        };
        let before = sub_a(&state.a);
        let after = sub_a(&update_a(&state, &hp));
        worst_rel = worst_rel.max((after - before) / before.abs().max(1e-300));

        // View-factor subproblem (unweighted tensor).
        let unweighted: Vec<Array2<f64>> = state
            .w
            .iter()
            .zip(&state.xhat)
            .map(|(w, x)| w.t().dot(x))
            .collect();
        let zu = Tensor3::from_slices(&unweighted).unwrap();
        let sub_p = |p: &Array2<f64>| {
            let k = khatri_rao(&state.h, &state.a).unwrap();
            let resid = unfold(&zu, 3) - p.dot(&k.t());
            resid.iter().map(|x| x * x).sum::<f64>()
        };
        let before = sub_p(&state.p);
        let after = sub_p(&update_p(&state).unwrap().0);
        worst_rel = worst_rel.max((after - before) / before.abs().max(1e-300));

        // Selection-matrix subproblem for view 0.
        let gamma0 = {
            let scaled = &state.a * &state.p.row(0).insert_axis(ndarray::Axis(0));
            scaled.dot(&state.h.t())
        };
        let sub_w = |w: &Array2<f64>| {
            let resid = w.t().dot(&state.xhat[0]) - &gamma0;
            let l21: f64 = w.rows().into_iter().map(|row| row.dot(&row).sqrt()).sum();
            resid.iter().map(|x| x * x).sum::<f64>() + hp.lambda * l21
        };
        let before = sub_w(&state.w[0]);
        let after = sub_w(&update_w(0, &state, &hp));
        worst_rel = worst_rel.max((after - before) / before.abs().max(1e-300));

        // Sample-factor subproblem with the graph trace terms.
        let sub_h = |h: &Array2<f64>| {
            let k = khatri_rao(&p_w, &state.a).unwrap();
            let resid = unfold(&z, 2) - h.dot(&k.t());
            let mut fit_part = resid.iter().map(|x| x * x).sum::<f64>();
            for g in &state.graphs {
                let s = g.matrix();
                for i in 0..n {
                    for j in 0..n {
                        let dh = &h.row(i) - &h.row(j);
                        fit_part += hp.tau * 0.5 * dh.dot(&dh) * s[[i, j]];
                    }
                }
            }
            fit_part
        };
        let before = sub_h(&state.h);
        let after = sub_h(&update_h(&state, &hp));
        worst_rel = worst_rel.max((after - before) / before.abs().max(1e-300));
    }

    let micro_ok = worst_rel <= 1e-10;
    let ok = trajectory_ok && settled_ok && micro_ok;
    verdict(
        "criterion 05 descent-behavior",
        ok,
        &format!(
            "obj50<=obj1 {trajectory_ok}, settled<1e-4 before iter 100 {settled_ok}, worst micro increase {worst_rel:.2e}"
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 6: objective correctness and gradient check
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_objective_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst_obj_gap = 0.0f64;

    for _ in 0..20 {
        let n_views = rng.random_range(2..=4);
        let dims: Vec<usize> = (0..n_views).map(|_| rng.random_range(3..=6)).collect();
        let n = rng.random_range(4..=8);
        let c = rng.random_range(2..=3);
        let r = rng.random_range(2..=3);
        let state = random_state(&mut rng, n_views, &dims, n, c, r);
        let mut hp = Hyperparams::new(c);
        hp.r = r;
        hp.gamma = rng.random_range(2.0..5.0);
        hp.lambda = rng.random_range(0.0..0.5);
        hp.tau = rng.random_range(0.0..0.5);

        let (total, _) = objective(&state, &hp).unwrap();

        // Independent triple-loop reference.
        let mut fit_ref = 0.0;
        for v in 0..n_views {
            let sw = state.omega[v].powf(hp.gamma / 2.0);
            for i in 0..c {
                for j in 0..n {
                    let mut proj = 0.0;
                    for a in 0..dims[v] {
                        proj += state.w[v][[a, i]] * state.xhat[v][[a, j]];
                    }
                    let mut target = 0.0;
                    for t in 0..r {
                        target += state.a[[i, t]] * state.h[[j, t]] * (sw * state.p[[v, t]]);
                    }
                    let e = sw * proj - target;
                    fit_ref += e * e;
                }
            }
        }
        let mut sparsity_ref = 0.0;
        for v in 0..n_views {
            let mut l21 = 0.0;
            for i in 0..dims[v] {
                let mut sq = 0.0;
                for j in 0..c {
                    sq += state.w[v][[i, j]] * state.w[v][[i, j]];
                }
                l21 += sq.sqrt();
            }
            sparsity_ref += hp.lambda * state.omega[v].powf(hp.gamma) * l21;
        }
        let mut graph_ref = 0.0;
        for v in 0..n_views {
            let s = state.graphs[v].matrix();
            for i in 0..n {
                for j in 0..n {
                    let mut dx = 0.0;
                    for a in 0..dims[v] {
                        let e = state.xhat[v][[a, i]] - state.xhat[v][[a, j]];
                        dx += e * e;
                    }
                    let mut dh = 0.0;
                    for t in 0..r {
                        let e = state.h[[i, t]] - state.h[[j, t]];
                        dh += e * e;
                    }
                    graph_ref += 0.5 * (dx + dh) * s[[i, j]];
                    let mut cons = s[[i, j]];
                    for k in 0..n_views {
                        if k != v {
                            cons -= state.belief.bhat[[v, k]] * state.graphs[k].matrix()[[i, j]];
                        }
                    }
                    graph_ref += cons * cons;
                }
            }
        }
        let total_ref = fit_ref + sparsity_ref + hp.tau * graph_ref;
        worst_obj_gap = worst_obj_gap.max((total - total_ref).abs() / total_ref.max(1.0));
    }

    // Central-difference gradient with respect to the sample factor.
    let mut worst_grad_rel = 0.0f64;
    for trial in 0..5 {
        let state = random_state(&mut rng, 3, &[5, 6, 4], 7, 3, 3);
        let mut hp = Hyperparams::new(3);
        hp.r = 3;
        hp.gamma = 3.0;
        hp.lambda = 0.1;
        hp.tau = 0.2;
        hp.seed = trial;

        // Analytic gradient: fit part via the mode-2 route, graph part via
        // the symmetrized Laplacians.
        let slice_w: Vec<f64> = state.omega.iter().map(|&o| o.powf(hp.gamma / 2.0)).collect();
        let weighted: Vec<Array2<f64>> = state
            .w
            .iter()
            .zip(&state.xhat)
            .zip(&slice_w)
            .map(|((w, x), &sw)| sw * w.t().dot(x))
            .collect();
        let z2 = unfold(&Tensor3::from_slices(&weighted).unwrap(), 2);
        let p_w = {
            let sw = Array1::from_vec(slice_w.clone());
            &state.p * &sw.insert_axis(ndarray::Axis(1))
        };
        let k = khatri_rao(&p_w, &state.a).unwrap();
        let mut grad = -2.0 * (z2.dot(&k) - state.h.dot(&k.t().dot(&k)));
        for g in &state.graphs {
            let pair = trustfs::graph::laplacian_symmetrized(g.matrix());
            grad = grad + 2.0 * hp.tau * pair.l.dot(&state.h);
        }

        let (rows, cols) = state.h.dim();
        for _ in 0..4 {
            let i = rng.random_range(0..rows);
            let j = rng.random_range(0..cols);
            let step = 1e-5;
            let mut plus = state.clone();
            plus.h[[i, j]] += step;
            let mut minus = state.clone();
            minus.h[[i, j]] -= step;
            let (f_plus, _) = objective(&plus, &hp).unwrap();
            let (f_minus, _) = objective(&minus, &hp).unwrap();
            let fd = (f_plus - f_minus) / (2.0 * step);
            let rel = (grad[[i, j]] - fd).abs() / fd.abs().max(1e-8);
            worst_grad_rel = worst_grad_rel.max(rel);
        }
    }

    let ok = worst_obj_gap <= 1e-10 && worst_grad_rel <= 1e-4;
    verdict(
        "criterion 06 objective-correctness",
        ok,
        &format!("reference gap {worst_obj_gap:.2e}, gradient rel err {worst_grad_rel:.2e}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 7: clustering-metric oracles
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_clustering_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);

    fn brute_force_acc(t: &[usize], p: &[usize]) -> f64 {
        let k_t = *t.iter().max().unwrap() + 1;
        let k_p = *p.iter().max().unwrap() + 1;
        let side = k_t.max(k_p);
        let mut table = vec![vec![0usize; side]; side];
        for (&a, &b) in p.iter().zip(t.iter()) {
            table[a][b] += 1;
        }
        let mut perm: Vec<usize> = (0..side).collect();
        let mut best = 0usize;
        permute(&mut perm, side, &mut |perm| {
            let total: usize = perm.iter().enumerate().map(|(i, &j)| table[i][j]).sum();
            best = best.max(total);
        });
        best as f64 / t.len() as f64
    }

    fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == 1 {
            visit(perm);
            return;
        }
        for i in 0..k {
            permute(perm, k - 1, visit);
            if k.is_multiple_of(2) {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
    }

    let mut acc_exact = true;
    for _ in 0..200 {
        let n = rng.random_range(3..25);
        let k_t = rng.random_range(1..=5);
        let k_p = rng.random_range(1..=5);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..k_t)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..k_p)).collect();
        let fast = acc(&t, &p).unwrap();
        let slow = brute_force_acc(&t, &p);
        acc_exact &= (fast - slow).abs() < 1e-12;
    }

    let mut nmi_sym = true;
    for _ in 0..100 {
        let n = rng.random_range(4..30);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        nmi_sym &= (nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() <= 1e-12;
    }

    let anchors_ok = (nmi(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap() - 1.0).abs() < 1e-12
        && nmi(&[0, 0, 1, 1], &[2, 2, 2, 2]).unwrap() == 0.0
        && nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-12
        && acc(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap() == 1.0
        && acc(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() == 0.5;

    let ok = acc_exact && nmi_sym && anchors_ok;
    verdict(
        "criterion 07 clustering-metric-oracles",
        ok,
        &format!("acc exact {acc_exact}, nmi symmetric {nmi_sym}, anchors {anchors_ok}"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 8: planted-feature recovery
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_planted_feature_recovery() {
    let start = Instant::now();
    let mut recoveries = Vec::new();
    let mut full_accs = Vec::new();
    let mut base_accs = Vec::new();

    for seed in 0..10u64 {
        let (d, informative) = criterion8_dataset(seed);
        let (state, _) = fit(&d, &criterion8_hp(seed)).unwrap();
        let ranking = rank_features(&state.w);
        let top = (0.3f64 * 60.0).ceil() as usize;
        let hits = ranking[..top]
            .iter()
            .filter(|f| informative.contains(&(f.view, f.feature)))
            .count();
        recoveries.push(hits as f64 / informative.len() as f64);

        // Ranking quality comparison on the common mean-imputed source
        // (the two-step comparison convention); imputation quality has its
        // own criterion.
        let labels = d.labels().unwrap();
        let imputed = mean_impute(&d).unwrap();
        let opts = EvalOptions {
            restarts: 20,
            repeats: 20,
        };
        full_accs.push(
            evaluate_ranking(imputed.views(), labels, &ranking, &[0.3], 3, seed, &opts)
                .unwrap()
                .metrics[0]
                .acc_mean,
        );
        let baseline = rank_features_by_variance(imputed.views());
        base_accs.push(
            evaluate_ranking(imputed.views(), labels, &baseline, &[0.3], 3, seed, &opts)
                .unwrap()
                .metrics[0]
                .acc_mean,
        );
    }

    let mean_recovery = recoveries.iter().sum::<f64>() / recoveries.len() as f64;
    let full_mean = full_accs.iter().sum::<f64>() / full_accs.len() as f64;
    let base_mean = base_accs.iter().sum::<f64>() / base_accs.len() as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = mean_recovery >= 0.8 && full_mean >= base_mean && elapsed < 180.0;
    verdict(
        "criterion 08 planted-feature-recovery",
        ok,
        &format!(
            "recovery {mean_recovery:.3} (need >= 0.8), full ACC {full_mean:.4} vs baseline {base_mean:.4}, {elapsed:.0}s"
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 9: imputation quality
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_imputation_quality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut ratios = Vec::new();

    for seed in 0..10u64 {
        // Low-rank nonnegative ground truth.
        let n = 60;
        let inner = 3;
        let views: Vec<Array2<f64>> = (0..3)
            .map(|_| {
                let u = random_matrix(&mut rng, 20, inner, 0.1, 1.0);
                let g = random_matrix(&mut rng, inner, n, 0.1, 1.0);
                u.dot(&g)
            })
            .collect();
        let complete =
            normalize_views(&MultiViewDataset::complete(views, None).unwrap()).unwrap();
        let missing = inject_missing(&complete, 0.5, seed, MissingPattern::Pooled).unwrap();

        let mut hp = Hyperparams::new(4);
        hp.seed = seed;
        hp.max_iter = 100;
        hp.tol = 1e-5;
        let (state, _) = fit(&missing, &hp).unwrap();
        let mean_imp = mean_impute(&missing).unwrap();

        let mut se_model = 0.0;
        let mut se_mean = 0.0;
        let mut count = 0.0;
        for v in 0..3 {
            for ((i, j), &m) in missing.mask(v).indexed_iter() {
                if m == 0.0 {
                    let truth = complete.view(v)[[i, j]];
                    se_model += (state.xhat[v][[i, j]] - truth).powi(2);
                    se_mean += (mean_imp.view(v)[[i, j]] - truth).powi(2);
                    count += 1.0;
                }
            }
        }
        ratios.push((se_model / count).sqrt() / (se_mean / count).sqrt());
    }

    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = mean_ratio <= 0.7 && elapsed < 120.0;
    verdict(
        "criterion 09 imputation-quality",
        ok,
        &format!("RMSE ratio vs mean imputation {mean_ratio:.3} (need <= 0.7), {elapsed:.0}s"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 10: ablation ordering
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_ablation_ordering() {
    let start = Instant::now();
    let variants = [
        Variant::Full,
        Variant::FrozenImputation,
        Variant::StandardCp,
        Variant::FixedKnnGraph,
    ];
    let mut means = [0.0f64; 4];
    let mut fail_counts = [0usize; 3];

    for seed in 0..10u64 {
        let (d, _) = criterion8_dataset(seed);
        let labels = d.labels().unwrap();
        let imputed = mean_impute(&d).unwrap();
        let opts = EvalOptions {
            restarts: 20,
            repeats: 10,
        };
        let mut accs = [0.0f64; 4];
        for (i, &variant) in variants.iter().enumerate() {
            let (state, _) = fit_variant(&d, &criterion8_hp(seed), variant).unwrap();
            let ranking = rank_features(&state.w);
            accs[i] = evaluate_ranking(imputed.views(), labels, &ranking, &[0.3], 3, seed, &opts)
                .unwrap()
                .metrics[0]
                .acc_mean;
            means[i] += accs[i] / 10.0;
        }
        for v in 1..4 {
            if accs[0] < accs[v] {
                fail_counts[v - 1] += 1;
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let means_ok = means[0] >= means[1] && means[0] >= means[2] && means[0] >= means[3];
    let per_seed_ok = fail_counts.iter().all(|&f| f <= 2);
    let ok = means_ok && per_seed_ok;
    // The report is emitted regardless of the ordering outcome.
    println!(
        "[acceptance] ablation report: full={:.4} frozen-imputation={:.4} standard-cp={:.4} fixed-knn={:.4}; per-seed reversals {:?}{}",
        means[0],
        means[1],
        means[2],
        means[3],
        fail_counts,
        if ok { "" } else { " [FLAGGED]" }
    );
    verdict(
        "criterion 10 ablation-ordering",
        ok,
        &format!(
            "means ordered {means_ok}, reversals {fail_counts:?} (each <= 2), {elapsed:.0}s"
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 11: duplicate-view belief structure
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_duplicate_view_belief() {
    let mut wins = 0;
    for seed in 0..5u64 {
        let spec = SyntheticSpec {
            views: 2,
            n: 60,
            dims: vec![15, 12],
            classes: 3,
            informative: 4,
            noise: 0.05,
            seed,
        };
        let base = synth_generate(&spec).unwrap().dataset;
        let views = vec![
            base.view(0).clone(),
            base.view(1).clone(),
            base.view(0).clone(),
        ];
        let d = MultiViewDataset::complete(views, base.labels().map(|l| l.to_vec())).unwrap();
        let d = normalize_views(&d).unwrap();

        let mut hp = Hyperparams::new(3);
        hp.gamma = 2.0;
        hp.lambda = 1e-3;
        hp.tau = 0.01;
        hp.knn_k = 8;
        hp.seed = seed;
        hp.max_iter = 200;
        hp.tol = 1e-7;
        let (state, _) = fit(&d, &hp).unwrap();
        let b = &state.belief.bhat;
        if b[[0, 2]] > b[[0, 1]] && b[[2, 0]] > b[[2, 1]] {
            wins += 1;
        }
    }
    let ok = wins == 5;
    verdict(
        "criterion 11 duplicate-view-belief",
        ok,
        &format!("strict row maxima on {wins}/5 seeds"),
    );
    assert!(ok);
}

// ---------------------------------------------------------------------------
// Criterion 12: scaling sanity
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_scaling_sanity() {
    fn per_iter_seconds(n: usize) -> f64 {
        let spec = SyntheticSpec {
            views: 3,
            n,
            dims: vec![20, 20, 20],
            classes: 3,
            informative: 5,
            noise: 0.05,
            seed: 7,
        };
        let d = normalize_views(&synth_generate(&spec).unwrap().dataset).unwrap();
        let d = inject_missing(&d, 0.3, 7, MissingPattern::Pooled).unwrap();
        let mut hp = Hyperparams::new(4);
        hp.knn_k = 5;
        hp.max_iter = 10;
        hp.tol = 1e-30;
        // Median of three timed runs to damp scheduler noise.
        let mut times: Vec<f64> = (0..3)
            .map(|_| {
                let t0 = Instant::now();
                let (_, report) = fit(&d, &hp).unwrap();
                assert_eq!(report.iterations_run, 10);
                t0.elapsed().as_secs_f64() / 10.0
            })
            .collect();
        times.sort_by(f64::total_cmp);
        times[1]
    }

    let t200 = per_iter_seconds(200);
    let t400 = per_iter_seconds(400);
    let factor = t400 / t200;
    let ok = factor <= 5.5;
    verdict(
        "criterion 12 scaling-sanity",
        ok,
        &format!("per-iteration time {:.1}ms -> {:.1}ms, factor {factor:.2} (need <= 5.5)", t200 * 1e3, t400 * 1e3),
    );
    assert!(ok);
}
