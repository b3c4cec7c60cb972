//! Command-line front end: synthetic data generation, single fits, grid
//! sweeps over missing ratios, ablation comparisons, baseline evaluation,
//! and similarity-graph dumps.
//!
//! Configuration comes from an optional flat `key = value` file
//! (`--config`) with every field overridable by a flag. On failure the
//! process exits nonzero and prints a machine-readable `{"error": ...}`
//! object to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trustfs::data::{save_dataset, synth_generate, SyntheticSpec};
use trustfs::experiment::{
    dump_graphs, parse_config, run_ablation, run_experiment, DataSource, ExperimentConfig,
    RunVariant,
};
use trustfs::Result;

#[derive(Parser)]
#[command(name = "trustfs", version, about = "Tensorized multi-view feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-view dataset as a csv-dir.
    Synth(SynthArgs),
    /// Fit one configuration and write its objective trace and ranking.
    Fit(RunArgs),
    /// Sweep missing ratios x hyperparameter grid x seeds.
    Sweep(RunArgs),
    /// Compare the full model against its three ablation variants.
    Ablate(RunArgs),
    /// Fit once, then dump per-view similarity graphs, belief masses,
    /// and uncertainties.
    DumpGraphs(RunArgs),
    /// Evaluate a selection baseline (or the full model) by clustering.
    Eval(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the csv-dir dataset.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    views: usize,
    #[arg(long, default_value_t = 60)]
    n: usize,
    /// Per-view feature counts; a single value repeats for all views.
    #[arg(long, value_delimiter = ',', default_values_t = vec![20])]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 5)]
    informative: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// csv-dir dataset directory (otherwise a synthetic source is used).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// full | variant-1 | variant-2 | variant-3 | baseline-two-step | allfea
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, value_delimiter = ',')]
    missing_ratios: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    feature_ratios: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads for grid cells (0 = automatic).
    #[arg(long)]
    threads: Option<usize>,
    /// Stratify missing injection per view instead of pooling all cells.
    #[arg(long)]
    stratified_missing: bool,
    /// Evaluate rankings on mean-imputed raw values instead of the
    /// learned imputation.
    #[arg(long)]
    eval_on_raw: bool,
    /// Pick one grid point across all missing ratios.
    #[arg(long)]
    global_grid: bool,
    /// Embedding dimension (0 = number of classes).
    #[arg(long)]
    c: Option<usize>,
    /// CP rank (0 = same as c).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    kmeans_restarts: Option<usize>,
    #[arg(long)]
    eval_repeats: Option<usize>,
    // Synthetic-source fields, used when no --data directory is given.
    #[arg(long)]
    views: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    informative: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    data_seed: Option<u64>,
}

impl RunArgs {
    fn build_config(&self) -> Result<ExperimentConfig> {
        let cwd = std::env::current_dir()?;
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let base = path.parent().unwrap_or(&cwd).to_path_buf();
                parse_config(&text, &base)?
            }
            None => {
                let spec = SyntheticSpec {
                    views: 3,
                    n: 60,
                    dims: vec![20, 20, 20],
                    classes: 3,
                    informative: 5,
                    noise: 0.05,
                    seed: 0,
                };
                ExperimentConfig::new(DataSource::Synthetic(spec), cwd.join("out"))
            }
        };

        if let Some(dir) = &self.data {
            cfg.source = DataSource::CsvDir(dir.clone());
        } else if self.views.is_some()
            || self.n.is_some()
            || self.dims.is_some()
            || self.classes.is_some()
            || self.informative.is_some()
            || self.noise.is_some()
            || self.data_seed.is_some()
        {
            let mut spec = match &cfg.source {
                DataSource::Synthetic(s) => s.clone(),
                DataSource::CsvDir(_) => SyntheticSpec {
                    views: 3,
                    n: 60,
                    dims: vec![20, 20, 20],
                    classes: 3,
                    informative: 5,
                    noise: 0.05,
                    seed: 0,
                },
            };
            if let Some(v) = self.views {
                spec.views = v;
                spec.dims = vec![spec.dims.first().copied().unwrap_or(20); v];
            }
            if let Some(n) = self.n {
                spec.n = n;
            }
            if let Some(dims) = &self.dims {
                spec.dims = if dims.len() == 1 {
                    vec![dims[0]; spec.views]
                } else {
                    dims.clone()
                };
            }
            if let Some(c) = self.classes {
                spec.classes = c;
            }
            if let Some(i) = self.informative {
                spec.informative = i;
            }
            if let Some(s) = self.noise {
                spec.noise = s;
            }
            if let Some(s) = self.data_seed {
                spec.seed = s;
            }
            cfg.source = DataSource::Synthetic(spec);
        }

        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        if let Some(v) = &self.variant {
            cfg.variant = RunVariant::parse(v)?;
        }
        macro_rules! override_opt {
            ($($field:ident),*) => {
                $(if let Some(value) = &self.$field {
                    cfg.$field = value.clone();
                })*
            };
        }
        override_opt!(missing_ratios, feature_ratios, gamma_grid, lambda_grid, tau_grid, seeds);
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if self.stratified_missing {
            cfg.stratified_missing = true;
        }
        if self.eval_on_raw {
            cfg.eval_on_raw = true;
        }
        if self.global_grid {
            cfg.global_grid = true;
        }
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(r) = self.r {
            cfg.r = r;
        }
        if let Some(k) = self.knn_k {
            cfg.knn_k = k;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(k) = self.kmeans_restarts {
            cfg.kmeans_restarts = k;
        }
        if let Some(e) = self.eval_repeats {
            cfg.eval_repeats = e;
        }
        Ok(cfg)
    }
}

fn truncate_to_single_cell(cfg: &mut ExperimentConfig) {
    cfg.missing_ratios.truncate(1);
    cfg.gamma_grid.truncate(1);
    cfg.lambda_grid.truncate(1);
    cfg.tau_grid.truncate(1);
    cfg.seeds.truncate(1);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let dims = if args.dims.len() == 1 {
                vec![args.dims[0]; args.views]
            } else {
                args.dims.clone()
            };
            let spec = SyntheticSpec {
                views: args.views,
                n: args.n,
                dims,
                classes: args.classes,
                informative: args.informative,
                noise: args.noise,
                seed: args.seed,
            };
            let out = synth_generate(&spec)?;
            save_dataset(&out.dataset, &args.out)?;
            let planted = serde_json::to_string_pretty(&out.informative)?;
            std::fs::write(args.out.join("informative.json"), planted)?;
            println!("wrote dataset to {}", args.out.display());
        }
        Command::Fit(args) => {
            let mut cfg = args.build_config()?;
            truncate_to_single_cell(&mut cfg);
            let summary = run_experiment(&cfg)?;
            report_outcome(&cfg, summary.failures.len(), summary.cells.len())?;
        }
        Command::Sweep(args) => {
            let cfg = args.build_config()?;
            let summary = run_experiment(&cfg)?;
            report_outcome(&cfg, summary.failures.len(), summary.cells.len())?;
        }
        Command::Ablate(args) => {
            let cfg = args.build_config()?;
            run_ablation(&cfg)?;
            println!("wrote {}", cfg.out_dir.join("ablation.csv").display());
        }
        Command::DumpGraphs(args) => {
            let mut cfg = args.build_config()?;
            truncate_to_single_cell(&mut cfg);
            let state = fit_single(&cfg)?;
            let files = dump_graphs(&state, &cfg.out_dir)?;
            println!("wrote {} files to {}", files.len(), cfg.out_dir.display());
        }
        Command::Eval(args) => {
            let mut cfg = args.build_config()?;
            if args.variant.is_none() {
                cfg.variant = RunVariant::BaselineTwoStep;
            }
            let summary = run_experiment(&cfg)?;
            report_outcome(&cfg, summary.failures.len(), summary.cells.len())?;
        }
    }
    Ok(())
}

/// Fit the first configured cell and return its state (for graph dumps).
fn fit_single(cfg: &ExperimentConfig) -> Result<trustfs::solver::ModelState> {
    use trustfs::data::{inject_missing, load_dataset, normalize_views, MissingPattern};
    use trustfs::solver::{fit_variant, Hyperparams, Variant};

    let dataset = match &cfg.source {
        DataSource::Synthetic(spec) => synth_generate(spec)?.dataset,
        DataSource::CsvDir(dir) => load_dataset(dir)?,
    };
    let normalized = normalize_views(&dataset)?;
    let missing = cfg.missing_ratios.first().copied().unwrap_or(0.0);
    let seed = cfg.seeds.first().copied().unwrap_or(0);
    let injected = if missing > 0.0 {
        let pattern = if cfg.stratified_missing {
            MissingPattern::PerView
        } else {
            MissingPattern::Pooled
        };
        inject_missing(&normalized, missing, seed, pattern)?
    } else {
        normalized
    };
    let classes = injected.n_classes().unwrap_or(cfg.c.max(2));
    let c = if cfg.c == 0 { classes } else { cfg.c };
    let mut hp = Hyperparams::new(c);
    hp.r = if cfg.r == 0 { c } else { cfg.r };
    hp.gamma = cfg.gamma_grid[0];
    hp.lambda = cfg.lambda_grid[0];
    hp.tau = cfg.tau_grid[0];
    hp.knn_k = cfg.knn_k;
    hp.max_iter = cfg.max_iter;
    hp.tol = cfg.tol;
    hp.seed = seed;
    let (state, _) = fit_variant(&injected, &hp, Variant::Full)?;
    Ok(state)
}

fn report_outcome(cfg: &ExperimentConfig, failures: usize, cells: usize) -> Result<()> {
    println!(
        "completed {cells} cells ({failures} failed); outputs in {}",
        cfg.out_dir.display()
    );
    if cells == 0 {
        return Err(trustfs::Error::InvalidInput(
            "every cell failed; see failures.csv".into(),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({ "error": e.to_string() });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}
