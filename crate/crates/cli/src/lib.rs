//! Command-line front end, usable in-process through [`dispatch`] or [`run_args`].

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use labelaug::aggregate::{majority_vote, training_set, AggregatedLabels};
use labelaug::lf::{lf_stats, LabelMatrix};
use labelaug::models::{evaluate, predict, train, Model};
use labelaug::pipeline::{self, write_atomic, Arm, Parts, PipelineConfig};
use labelaug::reinforce::reinforce;

#[derive(Parser)]
#[command(name = "labelaug", version, about = "Weak supervision with distance-based label augmentation")]
pub struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    /// Single-threaded augmentation and sweeps.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Apply the LFs to the unlabeled part; writes matrix.csv and lf_stats.json.
    ApplyLfs,
    /// Augment a labeling matrix; writes matrix_reinforced.csv and diagnostics.json.
    Reinforce {
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Majority vote over a matrix; writes labels.csv.
    Aggregate {
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Train the end model on aggregated labels; writes model.json.
    Train {
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Score a trained model on the gold part; writes metrics.json.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Full pipeline; writes report.json and metrics.csv.
    Run,
    /// Vary one parameter; writes sweep.json and sweep.csv.
    Sweep,
    /// Coverage, overlaps and conflicts of a matrix.
    Stats {
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

struct Ctx {
    cfg: PipelineConfig,
    out: PathBuf,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Self> {
        let path = cli.config.as_ref().context("--config is required")?;
        let mut cfg = PipelineConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
        if let Some(seed) = cli.seed {
            cfg.run.seed = seed;
        }
        if let Some(r) = cli.repeats {
            cfg.run.repeats = r;
        }
        if cli.sequential {
            cfg.run.sequential = true;
        }
        let out = match &cli.out {
            Some(p) => p.clone(),
            None => cfg.out_dir().unwrap_or_else(|| PathBuf::from("out")),
        };
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self { cfg, out })
    }

    /// Gold and unlabeled parts for the configured seed, as the weak arms see them.
    fn parts(&self) -> Result<Parts> {
        let d = pipeline::load_dataset(&self.cfg)?;
        Ok(pipeline::split_for(&self.cfg, &d, self.cfg.run.seed, Arm::Baseline)?)
    }

    fn path_or(&self, given: &Option<PathBuf>, default: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(default))
    }

    fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, serde_json::to_string_pretty(value)?.as_bytes())?;
        Ok(path)
    }
}

fn read_matrix(path: &Path) -> Result<LabelMatrix> {
    LabelMatrix::read_csv(path).with_context(|| format!("reading matrix {}", path.display()))
}

/// Runs one parsed command line.
pub fn dispatch(cli: &Cli) -> Result<()> {
    let ctx = Ctx::load(cli)?;
    match &cli.command {
        Command::ApplyLfs => {
            let parts = ctx.parts()?;
            let mat = pipeline::apply_lfs(&ctx.cfg, &parts.unlabeled)?;
            let path = ctx.out.join("matrix.csv");
            mat.write_csv(&path)?;
            let stats = lf_stats(&mat);
            ctx.write_json("lf_stats.json", &serde_json::json!({ "per_lf": stats, "summary": stats.summary() }))?;
            println!(
                "{} points x {} LFs, mean coverage {:.4} -> {}",
                mat.rows(),
                mat.cols(),
                stats.mean_coverage(),
                path.display()
            );
        }
        Command::Reinforce { matrix } => {
            let mat = read_matrix(&ctx.path_or(matrix, "matrix.csv"))?;
            let parts = ctx.parts()?;
            let params = ctx.cfg.reinforce.to_params(ctx.cfg.run.sequential)?;
            let out = reinforce(&mat, &parts.unlabeled, &params)?;
            let path = ctx.out.join("matrix_reinforced.csv");
            out.matrix.write_csv(&path)?;
            ctx.write_json("diagnostics.json", &out.diagnostics)?;
            println!(
                "labeled points {} -> {}, cells {} -> {} -> {}",
                out.diagnostics.labeled_pre,
                out.diagnostics.labeled_post,
                out.diagnostics.labeled_cells_pre,
                out.diagnostics.labeled_cells_post,
                path.display()
            );
        }
        Command::Aggregate { matrix } => {
            let mat = read_matrix(&ctx.path_or(matrix, "matrix.csv"))?;
            let agg = majority_vote(&mat);
            let path = ctx.out.join("labels.csv");
            agg.write_csv(&path)?;
            println!("{} of {} points labeled -> {}", agg.labeled_count(), agg.len(), path.display());
        }
        Command::Train { labels } => {
            let lpath = ctx.path_or(labels, "labels.csv");
            let agg = AggregatedLabels::read_csv(&lpath).with_context(|| format!("reading {}", lpath.display()))?;
            let parts = ctx.parts()?;
            let ts = training_set(&agg, &parts.unlabeled)?;
            let model = train(&ctx.cfg.model, &ts.features, &ts.labels)?;
            let path = ctx.write_json("model.json", &model)?;
            println!("{} trained on {} points -> {}", model.name(), ts.len(), path.display());
        }
        Command::Evaluate { model } => {
            let mpath = ctx.path_or(model, "model.json");
            let text = fs::read_to_string(&mpath).with_context(|| format!("reading {}", mpath.display()))?;
            let model: Model = serde_json::from_str(&text)?;
            let parts = ctx.parts()?;
            let Some(truth) = parts.gold.truth() else {
                bail!("dataset has no truth column to evaluate against");
            };
            let pred = predict(&model, &parts.gold.model_features())?;
            let m = evaluate(&pred, truth)?;
            ctx.write_json("metrics.json", &m)?;
            println!(
                "accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
                m.accuracy, m.precision, m.recall, m.f1
            );
        }
        Command::Run => {
            let report = pipeline::run(&ctx.cfg)?;
            pipeline::write_run_outputs(&ctx.out, &report)?;
            match report.mean {
                Some(m) => println!(
                    "{} {} {}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} ({} of {} runs ok)",
                    report.dataset,
                    report.arm,
                    report.model,
                    m.accuracy,
                    m.precision,
                    m.recall,
                    m.f1,
                    report.ok_runs,
                    report.runs.len()
                ),
                None => println!(
                    "{} {} {}: every run failed: {}",
                    report.dataset,
                    report.arm,
                    report.model,
                    report.runs.iter().find_map(|r| r.error.clone()).unwrap_or_default()
                ),
            }
        }
        Command::Sweep => {
            let rep = pipeline::sweep(&ctx.cfg)?;
            ctx.write_json("sweep.json", &rep)?;
            rep.write_plot_csv(ctx.out.join("sweep.csv"))?;
            for p in rep.points() {
                println!(
                    "{:>10} {:<10} f1 {} labeled {}",
                    p.value,
                    p.arm.to_string(),
                    p.f1.map(|v| format!("{v:.4}")).unwrap_or_else(|| "failed".into()),
                    p.labeled_post.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
                );
            }
        }
        Command::Stats { matrix } => {
            let mat = match matrix {
                Some(p) => read_matrix(p)?,
                None => pipeline::apply_lfs(&ctx.cfg, &ctx.parts()?.unlabeled)?,
            };
            let stats = lf_stats(&mat);
            let value = serde_json::json!({ "per_lf": stats, "summary": stats.summary() });
            ctx.write_json("lf_stats.json", &value)?;
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    dispatch(&Cli::try_parse_from(args)?)
}
