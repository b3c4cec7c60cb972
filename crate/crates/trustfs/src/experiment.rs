//! Experiment harness: configuration, missing-ratio sweeps with grid
//! search, ablation variants, baselines, and plot-ready result files.
//!
//! A sweep runs every (missing ratio, grid point, seed) cell: inject
//! missing values, fit the configured variant, rank features, and score
//! the ranking by clustering quality. Each cell writes its own objective
//! trace and selection metrics; summaries re-aggregate those files with
//! no hidden state, so every output is reproducible byte-for-byte from
//! the configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{
    inject_missing, load_dataset, mean_impute, normalize_views, synth_generate, MissingPattern,
    MultiViewDataset, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::selection::{
    evaluate_ranking, rank_features, rank_features_by_variance, EvalOptions, RankedFeature,
    RatioMetrics, SelectionResult,
};
use crate::solver::{fit_variant, FitReport, Hyperparams, ModelState, Variant};

/// Where the complete dataset comes from.
#[derive(Debug, Clone)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    CsvDir(PathBuf),
}

/// What is fitted (or substituted) in each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunVariant {
    Full,
    /// Imputation frozen at feature-wise means.
    VariantI,
    /// Standard CP in place of the adaptive-weighted decomposition.
    VariantII,
    /// Fixed kNN graphs, no belief-guided refinement.
    VariantIII,
    /// No fit: mean imputation followed by variance ranking.
    BaselineTwoStep,
    /// No fit, no selection: all features at ratio 1.
    AllFea,
}

impl RunVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "variant-1" | "variant-i" => Ok(Self::VariantI),
            "variant-2" | "variant-ii" => Ok(Self::VariantII),
            "variant-3" | "variant-iii" => Ok(Self::VariantIII),
            "baseline-two-step" => Ok(Self::BaselineTwoStep),
            "allfea" => Ok(Self::AllFea),
            other => Err(Error::InvalidInput(format!("unknown variant `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::VariantI => "variant-1",
            Self::VariantII => "variant-2",
            Self::VariantIII => "variant-3",
            Self::BaselineTwoStep => "baseline-two-step",
            Self::AllFea => "allfea",
        }
    }

    fn solver_variant(&self) -> Option<Variant> {
        match self {
            Self::Full => Some(Variant::Full),
            Self::VariantI => Some(Variant::FrozenImputation),
            Self::VariantII => Some(Variant::StandardCp),
            Self::VariantIII => Some(Variant::FixedKnnGraph),
            _ => None,
        }
    }
}

/// Full description of a sweep or ablation run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub variant: RunVariant,
    pub missing_ratios: Vec<f64>,
    pub feature_ratios: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker threads for grid cells; 0 uses the rayon default.
    pub threads: usize,
    /// Per-view stratified missing injection instead of pooled.
    pub stratified_missing: bool,
    /// Evaluate rankings on mean-imputed raw values instead of the
    /// learned imputation (two-step comparisons).
    pub eval_on_raw: bool,
    /// Select one grid point over all missing ratios instead of per ratio.
    pub global_grid: bool,
    /// Embedding dimension; 0 derives it from the label count.
    pub c: usize,
    /// CP rank; 0 follows `c`.
    pub r: usize,
    pub knn_k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub kmeans_restarts: usize,
    pub eval_repeats: usize,
}

impl ExperimentConfig {
    pub fn new(source: DataSource, out_dir: PathBuf) -> Self {
        Self {
            source,
            variant: RunVariant::Full,
            missing_ratios: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            feature_ratios: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            gamma_grid: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            tau_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            seeds: vec![0, 1, 2],
            out_dir,
            threads: 0,
            stratified_missing: false,
            eval_on_raw: false,
            global_grid: false,
            c: 0,
            r: 0,
            knn_k: 5,
            max_iter: 200,
            tol: 1e-6,
            kmeans_restarts: 20,
            eval_repeats: 20,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.missing_ratios.iter().any(|&m| !(0.0..1.0).contains(&m)) {
            return Err(Error::InvalidInput("missing ratios must be in [0,1)".into()));
        }
        if self
            .feature_ratios
            .iter()
            .any(|&f| !(0.0..=1.0).contains(&f) || f == 0.0)
        {
            return Err(Error::InvalidInput("feature ratios must be in (0,1]".into()));
        }
        if self.gamma_grid.is_empty() || self.lambda_grid.is_empty() || self.tau_grid.is_empty() {
            return Err(Error::InvalidInput("hyperparameter grids must be non-empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("need at least one seed".into()));
        }
        Ok(())
    }

    fn hyperparams(&self, gamma: f64, lambda: f64, tau: f64, seed: u64, classes: usize) -> Hyperparams {
        let c = if self.c == 0 { classes } else { self.c };
        let r = if self.r == 0 { c } else { self.r };
        let mut hp = Hyperparams::new(c);
        hp.r = r;
        hp.gamma = gamma;
        hp.lambda = lambda;
        hp.tau = tau;
        hp.knn_k = self.knn_k;
        hp.max_iter = self.max_iter;
        hp.tol = self.tol;
        hp.seed = seed;
        hp
    }
}

/// One completed (missing ratio, grid point, seed) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub id: String,
    pub missing_ratio: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub tau: f64,
    pub seed: u64,
    pub selection: SelectionResult,
}

#[derive(Debug, Clone)]
struct CellFailure {
    id: String,
    message: String,
}

/// Aggregated sweep output kept in memory for tests; everything here is
/// also persisted under the output directory.
#[derive(Debug)]
pub struct SweepSummary {
    pub cells: Vec<CellResult>,
    pub failures: Vec<(String, String)>,
    /// Per missing ratio: the selected grid point and its aggregated
    /// metrics per feature ratio.
    pub best: Vec<BestGridPoint>,
}

#[derive(Debug, Clone)]
pub struct BestGridPoint {
    pub missing_ratio: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub tau: f64,
    /// Per feature ratio, aggregated over seeds.
    pub metrics: Vec<RatioMetrics>,
}

fn load_complete(source: &DataSource) -> Result<(MultiViewDataset, usize)> {
    let dataset = match source {
        DataSource::Synthetic(spec) => synth_generate(spec)?.dataset,
        DataSource::CsvDir(dir) => load_dataset(dir)?,
    };
    let normalized = normalize_views(&dataset)?;
    let classes = normalized.n_classes().ok_or(Error::MissingLabels)?;
    Ok((normalized, classes))
}

/// One (missing ratio, grid point, seed) coordinate of a sweep.
#[derive(Debug, Clone, Copy)]
struct CellSpec {
    missing_ratio: f64,
    gamma: f64,
    lambda: f64,
    tau: f64,
    seed: u64,
}

impl CellSpec {
    fn id(&self) -> String {
        format!(
            "m{}_g{}_l{}_t{}_s{}",
            self.missing_ratio, self.gamma, self.lambda, self.tau, self.seed
        )
    }
}

struct CellOutcome {
    result: std::result::Result<(Option<FitReport>, SelectionResult), Error>,
    spec: CellSpec,
}

fn run_cell(
    cfg: &ExperimentConfig,
    complete: &MultiViewDataset,
    classes: usize,
    spec: CellSpec,
) -> std::result::Result<(Option<FitReport>, SelectionResult), Error> {
    let CellSpec {
        missing_ratio,
        gamma,
        lambda,
        tau,
        seed,
    } = spec;
    let pattern = if cfg.stratified_missing {
        MissingPattern::PerView
    } else {
        MissingPattern::Pooled
    };
    let injected = if missing_ratio > 0.0 {
        inject_missing(complete, missing_ratio, seed, pattern)?
    } else {
        complete.clone()
    };
    let labels = injected.labels().ok_or(Error::MissingLabels)?.to_vec();
    let opts = EvalOptions {
        restarts: cfg.kmeans_restarts,
        repeats: cfg.eval_repeats,
    };

    match cfg.variant.solver_variant() {
        Some(solver_variant) => {
            let hp = cfg.hyperparams(gamma, lambda, tau, seed, classes);
            let (state, report) = fit_variant(&injected, &hp, solver_variant)?;
            let ranking = rank_features(&state.w);
            let imputed;
            let source: &[ndarray::Array2<f64>] = if cfg.eval_on_raw {
                imputed = mean_impute(&injected)?;
                imputed.views()
            } else {
                &state.xhat
            };
            let selection = evaluate_ranking(
                source,
                &labels,
                &ranking,
                &cfg.feature_ratios,
                classes,
                seed,
                &opts,
            )?;
            Ok((Some(report), selection))
        }
        None => {
            let imputed = mean_impute(&injected)?;
            let (ranking, ratios): (Vec<RankedFeature>, Vec<f64>) = match cfg.variant {
                RunVariant::BaselineTwoStep => (
                    rank_features_by_variance(imputed.views()),
                    cfg.feature_ratios.clone(),
                ),
                RunVariant::AllFea => {
                    let identity: Vec<RankedFeature> = (0..injected.n_views())
                        .flat_map(|v| {
                            (0..injected.dim(v)).map(move |f| RankedFeature {
                                view: v,
                                feature: f,
                                score: 0.0,
                            })
                        })
                        .collect();
                    (identity, vec![1.0])
                }
                _ => unreachable!("fitted variants handled above"),
            };
            let selection = evaluate_ranking(
                imputed.views(),
                &labels,
                &ranking,
                &ratios,
                classes,
                seed,
                &opts,
            )?;
            Ok((None, selection))
        }
    }
}

fn format_float(v: f64) -> String {
    format!("{v}")
}

fn write_fit_report_csv(path: &Path, report: &FitReport) -> Result<()> {
    let mut out = String::from("iteration,total,fit,sparsity,smoothness,consensus\n");
    for (i, rec) in report.iterations.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            format_float(rec.total),
            format_float(rec.terms.fit),
            format_float(rec.terms.sparsity),
            format_float(rec.terms.smoothness),
            format_float(rec.terms.consensus)
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Run the configured sweep: every (missing ratio, grid point, seed) cell,
/// isolated failures, per-cell artifacts, summary and plot CSV files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let (complete, classes) = load_complete(&cfg.source)?;
    std::fs::create_dir_all(cfg.out_dir.join("runs"))?;

    // No-fit variants ignore the solver hyperparameters, so their grid
    // collapses to a single point.
    let fits = cfg.variant.solver_variant().is_some();
    let take = |grid: &[f64]| -> Vec<f64> {
        if fits {
            grid.to_vec()
        } else {
            grid[..1].to_vec()
        }
    };
    let (gamma_grid, lambda_grid, tau_grid) = (
        take(&cfg.gamma_grid),
        take(&cfg.lambda_grid),
        take(&cfg.tau_grid),
    );

    let mut cells_spec = Vec::new();
    for &missing_ratio in &cfg.missing_ratios {
        for &gamma in &gamma_grid {
            for &lambda in &lambda_grid {
                for &tau in &tau_grid {
                    for &seed in &cfg.seeds {
                        cells_spec.push(CellSpec {
                            missing_ratio,
                            gamma,
                            lambda,
                            tau,
                            seed,
                        });
                    }
                }
            }
        }
    }

    let run_all = |specs: &[CellSpec]| -> Vec<CellOutcome> {
        specs
            .par_iter()
            .map(|&spec| CellOutcome {
                result: run_cell(cfg, &complete, classes, spec),
                spec,
            })
            .collect()
    };

    let outcomes: Vec<CellOutcome> = if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        pool.install(|| run_all(&cells_spec))
    } else {
        run_all(&cells_spec)
    };

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        let id = outcome.spec.id();
        let cell_dir = cfg.out_dir.join("runs").join(&id);
        std::fs::create_dir_all(&cell_dir)?;
        match outcome.result {
            Ok((report, selection)) => {
                if let Some(report) = &report {
                    write_fit_report_csv(&cell_dir.join("report.csv"), report)?;
                }
                std::fs::write(cell_dir.join("selection.json"), selection.to_json()?)?;
                cells.push(CellResult {
                    id,
                    missing_ratio: outcome.spec.missing_ratio,
                    gamma: outcome.spec.gamma,
                    lambda: outcome.spec.lambda,
                    tau: outcome.spec.tau,
                    seed: outcome.spec.seed,
                    selection,
                });
            }
            Err(e) => {
                #[derive(Serialize)]
                struct CellError<'a> {
                    cell: &'a str,
                    error: String,
                }
                let payload = serde_json::to_string_pretty(&CellError {
                    cell: &id,
                    error: e.to_string(),
                })?;
                std::fs::write(cell_dir.join("error.json"), payload)?;
                failures.push(CellFailure {
                    id,
                    message: e.to_string(),
                });
            }
        }
    }

    let best = select_best(cfg, &cells);
    write_summary_files(cfg, &cells, &failures, &best)?;

    Ok(SweepSummary {
        cells,
        failures: failures.into_iter().map(|f| (f.id, f.message)).collect(),
        best,
    })
}

/// Mean ACC over seeds and feature ratios for one grid point's cells.
fn grid_point_score(cells: &[&CellResult]) -> f64 {
    let mut total = 0.0;
    let mut count = 0.0;
    for cell in cells {
        for m in &cell.selection.metrics {
            total += m.acc_mean;
            count += 1.0;
        }
    }
    if count > 0.0 {
        total / count
    } else {
        f64::NEG_INFINITY
    }
}

fn aggregate_metrics(cells: &[&CellResult], feature_ratios: &[f64]) -> Vec<RatioMetrics> {
    feature_ratios
        .iter()
        .map(|&fr| {
            let mut accs = Vec::new();
            let mut nmis = Vec::new();
            for cell in cells {
                for m in &cell.selection.metrics {
                    if m.ratio == fr {
                        accs.push(m.acc_mean);
                        nmis.push(m.nmi_mean);
                    }
                }
            }
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
            let std = |xs: &[f64], m: f64| {
                (xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len().max(1) as f64).sqrt()
            };
            let am = mean(&accs);
            let nm = mean(&nmis);
            RatioMetrics {
                ratio: fr,
                acc_mean: am,
                acc_std: std(&accs, am),
                nmi_mean: nm,
                nmi_std: std(&nmis, nm),
            }
        })
        .collect()
}

fn select_best(cfg: &ExperimentConfig, cells: &[CellResult]) -> Vec<BestGridPoint> {
    let grid_points: Vec<(f64, f64, f64)> = {
        let mut pts = Vec::new();
        for &g in &cfg.gamma_grid {
            for &l in &cfg.lambda_grid {
                for &t in &cfg.tau_grid {
                    pts.push((g, l, t));
                }
            }
        }
        pts
    };

    // Globally best grid point, if requested.
    let global_best: Option<(f64, f64, f64)> = if cfg.global_grid {
        grid_points
            .iter()
            .map(|&(g, l, t)| {
                let mine: Vec<&CellResult> = cells
                    .iter()
                    .filter(|c| c.gamma == g && c.lambda == l && c.tau == t)
                    .collect();
                ((g, l, t), grid_point_score(&mine))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(pt, _)| pt)
    } else {
        None
    };

    cfg.missing_ratios
        .iter()
        .map(|&m| {
            let (g, l, t) = global_best.unwrap_or_else(|| {
                grid_points
                    .iter()
                    .map(|&(g, l, t)| {
                        let mine: Vec<&CellResult> = cells
                            .iter()
                            .filter(|c| {
                                c.missing_ratio == m
                                    && c.gamma == g
                                    && c.lambda == l
                                    && c.tau == t
                            })
                            .collect();
                        ((g, l, t), grid_point_score(&mine))
                    })
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(pt, _)| pt)
                    .unwrap_or((cfg.gamma_grid[0], cfg.lambda_grid[0], cfg.tau_grid[0]))
            });
            let mine: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.missing_ratio == m && c.gamma == g && c.lambda == l && c.tau == t)
                .collect();
            BestGridPoint {
                missing_ratio: m,
                gamma: g,
                lambda: l,
                tau: t,
                metrics: aggregate_metrics(&mine, &cfg.feature_ratios),
            }
        })
        .collect()
}

fn write_summary_files(
    cfg: &ExperimentConfig,
    cells: &[CellResult],
    failures: &[CellFailure],
    best: &[BestGridPoint],
) -> Result<()> {
    let mut summary = String::from(
        "missing_ratio,gamma,lambda,tau,feature_ratio,acc_mean,acc_std,nmi_mean,nmi_std\n",
    );
    for bp in best {
        for m in &bp.metrics {
            let _ = writeln!(
                summary,
                "{},{},{},{},{},{},{},{},{}",
                format_float(bp.missing_ratio),
                format_float(bp.gamma),
                format_float(bp.lambda),
                format_float(bp.tau),
                format_float(m.ratio),
                format_float(m.acc_mean),
                format_float(m.acc_std),
                format_float(m.nmi_mean),
                format_float(m.nmi_std)
            );
        }
    }
    std::fs::write(cfg.out_dir.join("summary.csv"), summary)?;

    // Metric vs feature ratio at the missing ratio nearest 0.5.
    if let Some(bp) = nearest_best(best, 0.5) {
        let mut out = String::from("feature_ratio,acc_mean,acc_std,nmi_mean,nmi_std\n");
        for m in &bp.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_float(m.ratio),
                format_float(m.acc_mean),
                format_float(m.acc_std),
                format_float(m.nmi_mean),
                format_float(m.nmi_std)
            );
        }
        std::fs::write(cfg.out_dir.join("metric_vs_feature_ratio.csv"), out)?;
    }

    // Metric vs missing ratio at the feature ratio nearest 0.3.
    {
        let target = cfg
            .feature_ratios
            .iter()
            .copied()
            .min_by(|a, b| (a - 0.3).abs().total_cmp(&(b - 0.3).abs()));
        if let Some(fr_target) = target {
            let mut out = String::from("missing_ratio,acc_mean,acc_std,nmi_mean,nmi_std\n");
            for bp in best {
                if let Some(m) = bp.metrics.iter().find(|m| m.ratio == fr_target) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        format_float(bp.missing_ratio),
                        format_float(m.acc_mean),
                        format_float(m.acc_std),
                        format_float(m.nmi_mean),
                        format_float(m.nmi_std)
                    );
                }
            }
            std::fs::write(cfg.out_dir.join("metric_vs_missing_ratio.csv"), out)?;
        }
    }

    if !failures.is_empty() {
        let mut out = String::from("cell,error\n");
        for f in failures {
            let _ = writeln!(out, "{},{}", f.id, f.message.replace(',', ";"));
        }
        std::fs::write(cfg.out_dir.join("failures.csv"), out)?;
    }
    let _ = cells;
    Ok(())
}

fn nearest_best(best: &[BestGridPoint], target: f64) -> Option<&BestGridPoint> {
    best.iter().min_by(|a, b| {
        (a.missing_ratio - target)
            .abs()
            .total_cmp(&(b.missing_ratio - target).abs())
    })
}

/// Per-variant aggregated metrics from an ablation run.
pub type AblationRow = (RunVariant, Vec<RatioMetrics>);

/// Side-by-side ablation: the full model and its three variants under
/// identical seeds and grid. Emits `ablation.csv` with per-variant
/// metrics and ordering flags against the full model.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    let variants = [
        RunVariant::Full,
        RunVariant::VariantI,
        RunVariant::VariantII,
        RunVariant::VariantIII,
    ];
    let mut rows = Vec::new();
    for &variant in &variants {
        let mut sub = cfg.clone();
        sub.variant = variant;
        sub.out_dir = cfg.out_dir.join(variant.name());
        let summary = run_experiment(&sub)?;
        let bp = nearest_best(&summary.best, 0.5)
            .ok_or_else(|| Error::InvalidInput("ablation produced no results".into()))?;
        rows.push((variant, bp.metrics.clone()));
    }

    let mut out = String::from(
        "variant,feature_ratio,acc_mean,acc_std,nmi_mean,nmi_std,full_at_least_as_good\n",
    );
    let full_metrics = rows[0].1.clone();
    for (variant, metrics) in &rows {
        for (i, m) in metrics.iter().enumerate() {
            let ok = full_metrics
                .get(i)
                .map(|f| f.acc_mean >= m.acc_mean)
                .unwrap_or(false);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                variant.name(),
                format_float(m.ratio),
                format_float(m.acc_mean),
                format_float(m.acc_std),
                format_float(m.nmi_mean),
                format_float(m.nmi_std),
                ok
            );
        }
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("ablation.csv"), out)?;
    Ok(rows)
}

/// Dump a fitted state's per-view similarity graphs plus the belief and
/// uncertainty tables: `graph_view_<i>.csv`, `belief.csv`,
/// `uncertainty.csv`.
pub fn dump_graphs(state: &ModelState, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (v, g) in state.graphs.iter().enumerate() {
        let path = out_dir.join(format!("graph_view_{}.csv", v + 1));
        write_matrix_csv(&path, g.matrix())?;
        written.push(path);
    }
    let belief_path = out_dir.join("belief.csv");
    write_matrix_csv(&belief_path, &state.belief.bhat)?;
    written.push(belief_path);

    let u_path = out_dir.join("uncertainty.csv");
    let mut out = String::new();
    for v in state.belief.u.iter() {
        let _ = writeln!(out, "{}", format_float(*v));
    }
    std::fs::write(&u_path, out)?;
    written.push(u_path);
    Ok(written)
}

fn write_matrix_csv(path: &Path, m: &ndarray::Array2<f64>) -> Result<()> {
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

// ---------------------------------------------------------------------------
// Flat key-value configuration files
// ---------------------------------------------------------------------------

/// Parse the flat `key = value` configuration format. Lists are
/// comma-separated; `#` starts a comment. Unknown keys are errors.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let mut source: Option<DataSource> = None;
    let mut synth = SyntheticSpec {
        views: 3,
        n: 60,
        dims: vec![20, 20, 20],
        classes: 3,
        informative: 5,
        noise: 0.05,
        seed: 0,
    };
    let mut dims_set = false;
    let mut cfg = ExperimentConfig::new(
        DataSource::Synthetic(synth.clone()),
        base_dir.join("out"),
    );

    let parse_f64 = |key: &str, v: &str| -> Result<f64> {
        v.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("config key `{key}`: bad number `{v}`")))
    };
    let parse_usize = |key: &str, v: &str| -> Result<usize> {
        v.parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("config key `{key}`: bad integer `{v}`")))
    };
    let parse_list_f64 = |key: &str, v: &str| -> Result<Vec<f64>> {
        v.split(',')
            .map(|x| parse_f64(key, x.trim()))
            .collect::<Result<Vec<_>>>()
    };
    let parse_bool = |key: &str, v: &str| -> Result<bool> {
        match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::InvalidInput(format!(
                "config key `{key}`: bad bool `{v}`"
            ))),
        }
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::InvalidInput(format!(
            "config line {}: expected `key = value`, got `{line}`",
            lineno + 1
        )))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "source" => {
                source = Some(if value == "synthetic" {
                    DataSource::Synthetic(synth.clone())
                } else {
                    DataSource::CsvDir(base_dir.join(value))
                });
            }
            "views" => synth.views = parse_usize(key, value)?,
            "n" => synth.n = parse_usize(key, value)?,
            "dims" => {
                synth.dims = value
                    .split(',')
                    .map(|x| parse_usize(key, x.trim()))
                    .collect::<Result<Vec<_>>>()?;
                dims_set = true;
            }
            "classes" => synth.classes = parse_usize(key, value)?,
            "informative" => synth.informative = parse_usize(key, value)?,
            "noise" => synth.noise = parse_f64(key, value)?,
            "data_seed" => synth.seed = value.parse::<u64>().map_err(|_| {
                Error::InvalidInput(format!("config key `data_seed`: bad integer `{value}`"))
            })?,
            "variant" => cfg.variant = RunVariant::parse(value)?,
            "missing_ratios" => cfg.missing_ratios = parse_list_f64(key, value)?,
            "feature_ratios" => cfg.feature_ratios = parse_list_f64(key, value)?,
            "gamma_grid" => cfg.gamma_grid = parse_list_f64(key, value)?,
            "lambda_grid" => cfg.lambda_grid = parse_list_f64(key, value)?,
            "tau_grid" => cfg.tau_grid = parse_list_f64(key, value)?,
            "seeds" => {
                cfg.seeds = value
                    .split(',')
                    .map(|x| {
                        x.trim().parse::<u64>().map_err(|_| {
                            Error::InvalidInput(format!("config key `seeds`: bad integer `{x}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            "out_dir" => cfg.out_dir = base_dir.join(value),
            "threads" => cfg.threads = parse_usize(key, value)?,
            "stratified_missing" => cfg.stratified_missing = parse_bool(key, value)?,
            "eval_on_raw" => cfg.eval_on_raw = parse_bool(key, value)?,
            "global_grid" => cfg.global_grid = parse_bool(key, value)?,
            "c" => cfg.c = parse_usize(key, value)?,
            "r" => cfg.r = parse_usize(key, value)?,
            "knn_k" => cfg.knn_k = parse_usize(key, value)?,
            "max_iter" => cfg.max_iter = parse_usize(key, value)?,
            "tol" => cfg.tol = parse_f64(key, value)?,
            "kmeans_restarts" => cfg.kmeans_restarts = parse_usize(key, value)?,
            "eval_repeats" => cfg.eval_repeats = parse_usize(key, value)?,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown config key `{other}` at line {}",
                    lineno + 1
                )))
            }
        }
    }

    if !dims_set {
        synth.dims = vec![20; synth.views];
    } else if synth.dims.len() == 1 && synth.views > 1 {
        synth.dims = vec![synth.dims[0]; synth.views];
    }
    cfg.source = match source {
        Some(DataSource::CsvDir(p)) => DataSource::CsvDir(p),
        _ => DataSource::Synthetic(synth),
    };
    Ok(cfg)
}
