use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bldl_core::bias::{batch_degrade, inject_bias, BiasConfig, DegradeConfig};
use bldl_core::metrics::score_report;
use bldl_core::solver::{fit, write_trace_csv, SolverConfig, SolverVariant};
use bldl_core::types::predict;
use bldl_harness::dataset::{
    self, load_dataset_dir, load_distributions, save_dataset, write_matrix,
};
use bldl_harness::error::{HarnessError, Result};
use bldl_harness::experiment::{run_experiment, run_sensitivity, ExperimentSpec, SensitivityParam};
use bldl_harness::stats_io::{emit_stats, load_reports, write_stats};
use bldl_harness::synth::synth_generate;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bldl",
    about = "Label distribution learning under biased annotations: simulation, ADMM recovery solver, metrics, and statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (features.csv + distributions.csv).
    Synth {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Inject annotation bias into a dataset's distributions. The input
    /// distributions are kept as truth.csv in the output directory.
    Bias {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Degrade distributions to multi-hot labels (labels.csv).
    Degrade {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a solver variant on a dataset directory (distributions.csv is the
    /// biased observation; labels.csv must exist, truth.csv feeds the
    /// recovery trace when present).
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        variant: Option<SolverVariantArg>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against true distributions (both row-per-instance CSV).
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment from a JSON spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Re-run an experiment for each value of one solver parameter.
    Sensitivity {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Friedman / Bonferroni-Dunn / Wilcoxon statistics over report files.
    Stats {
        #[arg(long)]
        reports: String,
        #[arg(long)]
        control: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone)]
struct SolverVariantArg(SolverVariant);

impl std::str::FromStr for SolverVariantArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse::<SolverVariant>()
            .map(SolverVariantArg)
            .map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            d,
            m,
            n,
            rank,
            seed,
            out,
        } => {
            let ds = synth_generate(d, m, n, rank, seed)?;
            save_dataset(&out, &ds)?;
            println!("wrote {} instances to {}", ds.len(), out.display());
            Ok(())
        }
        Command::Bias {
            input,
            c,
            seed,
            out,
        } => {
            let dir = load_dataset_dir(&input)?;
            let cfg = BiasConfig::new(c, seed)?;
            let biased = inject_bias(&dir.dataset.d, &cfg)?;
            dataset::ensure_dir(&out)?;
            write_matrix(&out.join(dataset::FEATURES_FILE), dir.dataset.x.matrix())?;
            write_matrix(&out.join(dataset::DISTRIBUTIONS_FILE), biased.matrix())?;
            // keep the clean distributions for recovery-error reporting
            write_matrix(&out.join(dataset::TRUTH_FILE), dir.dataset.d.matrix())?;
            println!("wrote biased dataset to {}", out.display());
            Ok(())
        }
        Command::Degrade { input, t, out } => {
            let dir = load_dataset_dir(&input)?;
            let cfg = DegradeConfig::new(t)?;
            let labels = batch_degrade(&dir.dataset.d, &cfg)?;
            dataset::ensure_dir(&out)?;
            write_matrix(&out.join(dataset::FEATURES_FILE), dir.dataset.x.matrix())?;
            write_matrix(&out.join(dataset::DISTRIBUTIONS_FILE), dir.dataset.d.matrix())?;
            if let Some(truth) = &dir.truth {
                write_matrix(&out.join(dataset::TRUTH_FILE), truth.matrix())?;
            }
            write_matrix(&out.join(dataset::LABELS_FILE), labels.matrix())?;
            dataset::write_degrade_config(&out, &cfg)?;
            println!("wrote labels to {}", out.display());
            Ok(())
        }
        Command::Fit {
            input,
            config,
            variant,
            trace,
            out,
        } => {
            let dir = load_dataset_dir(&input)?;
            let labels = dir.labels.ok_or_else(|| {
                HarnessError::Spec(format!(
                    "{} has no labels.csv; run the degrade command first",
                    input.display()
                ))
            })?;
            let mut cfg = match config {
                Some(path) => {
                    let text =
                        fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                    serde_json::from_str::<SolverConfig>(&text).map_err(|e| {
                        HarnessError::Json {
                            path,
                            message: e.to_string(),
                        }
                    })?
                }
                None => SolverConfig::default(),
            };
            if let Some(v) = variant {
                cfg.variant = v.0;
            }
            let degrade = dir.degrade.unwrap_or_default();
            let result = fit(
                &dir.dataset.x,
                &dir.dataset.d,
                &labels,
                &cfg,
                &degrade,
                dir.truth.as_ref(),
            )?;
            dataset::ensure_dir(&out)?;
            write_matrix(&out.join("weights.csv"), &result.w.transpose())?;
            write_matrix(&out.join("degradation_map.csv"), &result.o.transpose())?;
            write_matrix(&out.join("recovered.csv"), result.d_recovered.matrix())?;
            let predictions = predict(&result.w, &dir.dataset.x)?;
            write_matrix(&out.join("predictions.csv"), predictions.matrix())?;
            if let Some(trace_path) = trace {
                let file = fs::File::create(&trace_path)
                    .map_err(|e| HarnessError::io(&trace_path, e))?;
                write_trace_csv(&result.trace, file)
                    .map_err(|e| HarnessError::io(&trace_path, e))?;
            }
            println!(
                "fit {}: converged={} iterations={}",
                cfg.variant.name(),
                result.converged,
                result.iters_run
            );
            Ok(())
        }
        Command::Eval { pred, truth, out } => {
            let predictions = load_distributions(&pred)?;
            let d_true = load_distributions(&truth)?;
            let report = score_report(&d_true, &predictions)?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Json {
                path: out.clone(),
                message: e.to_string(),
            })?;
            fs::write(&out, text + "\n").map_err(|e| HarnessError::io(&out, e))?;
            println!("wrote scores to {}", out.display());
            Ok(())
        }
        Command::Experiment { spec } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            let output = run_experiment(&spec)?;
            for report in &output.reports {
                let cheb = &report.per_metric[&bldl_core::metrics::MetricName::Chebyshev];
                println!(
                    "{}: chebyshev {:.4} +- {:.4} ({}/{} folds converged)",
                    report.method, cheb.mean, cheb.std, report.converged_folds, report.folds
                );
            }
            println!("reports in {}", spec.output_dir.display());
            Ok(())
        }
        Command::Sensitivity { spec, param, grid } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            let param: SensitivityParam = param.parse()?;
            let reports = run_sensitivity(&spec, param, &grid)?;
            println!(
                "ran {} grid points ({} reports); table in {}",
                grid.len(),
                reports.len(),
                spec.output_dir.join("sensitivity.csv").display()
            );
            Ok(())
        }
        Command::Stats {
            reports,
            control,
            alpha,
            out,
        } => {
            let paths = expand_glob(&reports)?;
            if paths.is_empty() {
                return Err(HarnessError::Spec(format!(
                    "no report files match '{reports}'"
                )));
            }
            let reports = load_reports(&paths)?;
            let stats = emit_stats(&reports, &control, alpha)?;
            write_stats(&stats, &out)?;
            println!(
                "stats over {} datasets x {} methods written to {}",
                stats.n_datasets,
                stats.n_methods,
                out.display()
            );
            Ok(())
        }
    }
}

fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let entries = glob::glob(pattern)
        .map_err(|e| HarnessError::Spec(format!("bad glob '{pattern}': {e}")))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    Ok(paths)
}
