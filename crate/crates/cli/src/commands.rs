//! Subcommand implementations. Each command validates its inputs fully,
//! computes in memory, then writes its artifacts.

use std::path::PathBuf;

use cfrlab_core::data::Dataset;
use cfrlab_core::sem::{
    self, aggregate_trials, confounded_benchmark, confounded_four, parse_sem, render_sem,
    synth_dataset, theorem_trial, LinearSem, RandomSemConfig, TheoremTrialConfig,
};
use cfrlab_core::subseed;
use rayon::prelude::*;

use crate::csvio::{dataset_to_csv, load_csv};
use crate::error::{io_err, CliError, Result};
use crate::experiment::run_experiment;
use crate::outputs::{
    grid_csv, metrics_csv, theorem_csv, training_log_csv, write_atomic, GridCell,
};
use crate::settings::{model_label, resolve, HyperArgs};

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))
}

// ---------------------------------------------------------------------------
// train

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Dataset CSV (see the schema in the README)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Anchor covariate name (a known direct parent of the treatment)
    #[arg(long)]
    pub anchor: String,
    /// Output directory for artifacts
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let settings = resolve(&args.hyper)?;
    let dataset = load_csv(&args.dataset, &args.anchor)?;
    let label = model_label(&settings.train);

    let result = run_experiment(&dataset, &settings)?;
    if result.outcome.single_domain_warning {
        eprintln!("warning: only one nonempty domain; gradient matching degenerated to SGD");
    }
    if let Some(report) = &result.outcome.general_position {
        if !report.full_row_rank {
            eprintln!(
                "warning: domain means have rank {} (not full row rank); \
                 domains may carry redundant information",
                report.rank
            );
        }
    }

    let model_json = serde_json::to_string_pretty(&result.outcome.model)
        .map_err(|e| CliError::Data(format!("cannot serialize model: {e}")))?;
    write_atomic(&args.out.join("model.json"), &model_json)?;
    write_atomic(
        &args.out.join("training_log.csv"),
        &training_log_csv(&result.outcome.log),
    )?;
    write_atomic(
        &args.out.join("metrics.csv"),
        &metrics_csv(&label, &[result.within.clone(), result.out_of_sample.clone()]),
    )?;
    write_atomic(
        &args.out.join("train_domains.csv"),
        &dataset_to_csv(&result.train_split, Some(&result.outcome.partition)),
    )?;

    println!("model: {label}");
    println!("within:        {}", result.within.to_csv_row());
    println!("out-of-sample: {}", result.out_of_sample.to_csv_row());
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate

#[derive(clap::Args, Debug)]
pub struct AblateArgs {
    /// Dataset CSV with mu0/mu1 ground truth
    #[arg(long, conflicts_with_all = ["preset", "sem_file"])]
    pub dataset: Option<PathBuf>,
    /// Anchor covariate name (required with --dataset)
    #[arg(long)]
    pub anchor: Option<String>,
    /// Built-in generating model: confounded4 or benchmark
    #[arg(long)]
    pub preset: Option<String>,
    /// Generating model from a SEM file
    #[arg(long = "sem-file")]
    pub sem_file: Option<PathBuf>,
    /// Rows per synthetic draw (with --preset/--sem-file)
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Comma-separated IPM weights
    #[arg(long, value_delimiter = ',', default_value = "0,10,100")]
    pub alphas: Vec<f64>,
    /// Comma-separated outer-step values
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9")]
    pub epsilons: Vec<f64>,
    /// Number of seeds per cell (seed, seed+1, ...)
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Worker threads for grid cells
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

enum DataSource {
    File(Dataset),
    Model(Box<LinearSem>),
}

impl DataSource {
    fn dataset_for_seed(&self, n: usize, seed: u64) -> Result<Dataset> {
        match self {
            DataSource::File(ds) => Ok(ds.clone()),
            DataSource::Model(sem) => {
                Ok(synth_dataset(sem, n, subseed(seed, 0xda7a))?.dataset)
            }
        }
    }
}

fn resolve_source(
    dataset: &Option<PathBuf>,
    anchor: &Option<String>,
    preset: &Option<String>,
    sem_file: &Option<PathBuf>,
) -> Result<DataSource> {
    match (dataset, preset, sem_file) {
        (Some(path), None, None) => {
            let anchor = anchor.as_ref().ok_or_else(|| {
                CliError::Config("--anchor is required with --dataset".into())
            })?;
            let ds = load_csv(path, anchor)?;
            if ds.mu0().is_none() {
                return Err(CliError::Data(
                    "ablation needs ground-truth mu0/mu1 columns to score cells".into(),
                ));
            }
            Ok(DataSource::File(ds))
        }
        (None, Some(name), None) => Ok(DataSource::Model(Box::new(preset_sem(name)?))),
        (None, None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            Ok(DataSource::Model(Box::new(parse_sem(&text)?)))
        }
        (None, None, None) => Err(CliError::Config(
            "provide a data source: --dataset, --preset, or --sem-file".into(),
        )),
        _ => Err(CliError::Config(
            "choose exactly one of --dataset, --preset, --sem-file".into(),
        )),
    }
}

fn preset_sem(name: &str) -> Result<LinearSem> {
    match name {
        "confounded4" => Ok(confounded_four()),
        "benchmark" => Ok(confounded_benchmark()),
        other => Err(CliError::Config(format!(
            "unknown preset {other:?} (confounded4|benchmark)"
        ))),
    }
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    if args.alphas.is_empty() || args.epsilons.is_empty() || args.seeds == 0 {
        return Err(CliError::Config("alpha, eps and seed grids must be nonempty".into()));
    }
    let base = resolve(&args.hyper)?;
    let source = resolve_source(&args.dataset, &args.anchor, &args.preset, &args.sem_file)?;
    let base_seed = base.train.seed;

    let mut cells = Vec::new();
    for &alpha in &args.alphas {
        for &eps in &args.epsilons {
            for s in 0..args.seeds {
                cells.push((alpha, eps, base_seed + s));
            }
        }
    }

    let pool = thread_pool(args.jobs)?;
    let rows: Vec<GridCell> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(alpha, eps, seed)| {
                let run = || -> Result<(f64, f64)> {
                    let settings = base.with_cell(alpha, eps, seed);
                    let dataset = source.dataset_for_seed(args.n, seed)?;
                    let result = run_experiment(&dataset, &settings)?;
                    let report = &result.out_of_sample;
                    match (report.ate_error, report.sqrt_pehe) {
                        (Some(a), Some(p)) => Ok((a, p)),
                        _ => Err(CliError::Data(
                            "cell produced no ground-truth metrics".into(),
                        )),
                    }
                };
                match run() {
                    Ok((ate, pehe)) => GridCell { alpha, eps, seed, result: Some((ate, pehe)) },
                    Err(err) => {
                        eprintln!("cell (alpha={alpha}, eps={eps}, seed={seed}) failed: {err}");
                        GridCell { alpha, eps, seed, result: None }
                    }
                }
            })
            .collect()
    });

    let failed = rows.iter().filter(|r| r.result.is_none()).count();
    write_atomic(&args.out.join("ablation.csv"), &grid_csv(rows))?;
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; they are flagged in the grid", cells.len());
    }
    println!("grid written to {}", args.out.join("ablation.csv").display());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    /// Built-in generating model: confounded4 or benchmark
    #[arg(long, conflicts_with_all = ["sem_file", "nodes"])]
    pub preset: Option<String>,
    /// Generating model from a SEM file
    #[arg(long = "sem-file", conflicts_with = "nodes")]
    pub sem_file: Option<PathBuf>,
    /// Draw a random model with this many nodes instead
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Anchor edge strength lower bound for random models
    #[arg(long = "alpha-min", default_value_t = 0.95)]
    pub alpha_min: f64,
    /// Cap on other treatment-parent weights for random models
    #[arg(long = "beta-max", default_value_t = 0.05)]
    pub beta_max: f64,
    /// Rows to draw
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let sem = match (&args.preset, &args.sem_file, args.nodes) {
        (Some(name), None, None) => preset_sem(name)?,
        (None, Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            parse_sem(&text)?
        }
        (None, None, Some(p)) => {
            let config = RandomSemConfig {
                p_min: p,
                p_max: p,
                alpha_min: args.alpha_min,
                beta_max: args.beta_max,
                extra_hidden: true,
            };
            sem::random_sem_seeded(&config, subseed(args.seed, 0x5e11))?
        }
        (None, None, None) => Err(CliError::Config(
            "provide a model: --preset, --sem-file, or --nodes".into(),
        ))?,
        _ => Err(CliError::Config(
            "choose exactly one of --preset, --sem-file, --nodes".into(),
        ))?,
    };

    let output = synth_dataset(&sem, args.n, args.seed)?;
    let dataset = &output.dataset;
    let ite = dataset.true_ite().expect("synthetic data carries ground truth");
    let sample_ite_mean = ite.iter().sum::<f64>() / ite.len() as f64;

    write_atomic(&args.out.join("dataset.csv"), &dataset_to_csv(dataset, None))?;
    write_atomic(&args.out.join("sem.txt"), &render_sem(&sem))?;
    let truth = format!(
        "true_ate,sample_ite_mean,n,treated,anchor\n{},{},{},{},{}\n",
        output.true_ate,
        sample_ite_mean,
        dataset.len(),
        dataset.treated_count(),
        dataset.anchor_name(),
    );
    write_atomic(&args.out.join("truth.csv"), &truth)?;

    println!(
        "wrote {} rows (true ate {:.6}) to {}",
        dataset.len(),
        output.true_ate,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// validate-theorem

#[derive(clap::Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long = "p-min", default_value_t = 4)]
    pub p_min: usize,
    #[arg(long = "p-max", default_value_t = 8)]
    pub p_max: usize,
    /// Invariance threshold
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long = "alpha-min", default_value_t = 0.95)]
    pub alpha_min: f64,
    #[arg(long = "beta-max", default_value_t = 0.05)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for trials
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn cmd_validate_theorem(args: &ValidateArgs) -> Result<()> {
    let config = TheoremTrialConfig {
        trials: args.trials,
        p_min: args.p_min,
        p_max: args.p_max,
        epsilon: args.epsilon,
        alpha_min: args.alpha_min,
        beta_max: args.beta_max,
        seed: args.seed,
    };
    let pool = thread_pool(args.jobs)?;
    let rows = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|index| theorem_trial(&config, index))
            .collect::<cfrlab_core::Result<Vec<_>>>()
    })?;
    let report = aggregate_trials(rows);
    write_atomic(&args.out.join("theorem_report.csv"), &theorem_csv(&report))?;
    println!(
        "{} trials, {} subset pairs, {} premise-holding, {} violations \
         (fraction {:.6}), {} side-condition failures",
        report.rows.len(),
        report.total_pairs,
        report.premise_pairs,
        report.violations,
        report.violation_fraction,
        report.side_condition_failures,
    );
    println!("report written to {}", args.out.join("theorem_report.csv").display());
    Ok(())
}
