use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ovo_rank::harness::{self, ExperimentConfig};
use ovo_rank::learn::LearnerSpec;
use ovo_rank::ovo::{self, LabelRanker, RateBoundParams};
use ovo_rank::perm::TieBreakPolicy;
use ovo_rank::synth::{self, LabeledDataset, PosteriorOracle};
use ovo_rank::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ovo-rank",
    version,
    about = "Label ranking with One-Versus-One classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Learner {
    Stump,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitLayout {
    /// Van der Corput points 1/2, 1/4, 3/4, ...
    Spread,
    /// Every level split at 1/2.
    Half,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a labelled dataset from a synthetic posterior.
    Synth {
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitLayout::Spread)]
        splits: SplitLayout,
        /// Also write the oracle parameters as JSON.
        #[arg(long)]
        oracle_out: Option<PathBuf>,
    },
    /// Fit one classifier per label pair.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Learner::Stump)]
        learner: Learner,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 1.0)]
        step_size: f64,
        /// Seed for random tie-breaking; lowest-label-first when absent.
        #[arg(long)]
        tie_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print scores, permutation and cycle flag at one point.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        x: f64,
    },
    /// Estimate ranking risks against a synthetic oracle.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n_test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Empirical top-k error on a labelled test set.
    Topk {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Run a learning-curve experiment.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write per-(alpha, n) quartiles.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Evaluate the duel excess-risk rate and the sample size it needs.
    RateBound {
        #[arg(long)]
        alpha: f64,
        #[arg(long = "B")]
        b: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "V")]
        v: f64,
        #[arg(long = "C")]
        c: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<LabelRanker> {
    Ok(serde_json::from_reader(open(path)?)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            depth,
            alpha,
            n,
            seed,
            out,
            splits,
            oracle_out,
        } => {
            let oracle = match splits {
                SplitLayout::Spread => PosteriorOracle::spread(depth, alpha)?,
                SplitLayout::Half => PosteriorOracle::new(depth, alpha)?,
            };
            let data = synth::sample_dataset(&oracle, n, seed);
            data.write_csv(create(&out)?)?;
            if let Some(path) = oracle_out {
                let mut w = create(&path)?;
                serde_json::to_writer(&mut w, &oracle)?;
                writeln!(w)?;
            }
        }
        Command::Fit {
            data,
            k,
            learner,
            steps,
            step_size,
            tie_seed,
            out,
        } => {
            let data = LabeledDataset::read_csv(open(&data)?, Some(k))?;
            let learner = match learner {
                Learner::Stump => LearnerSpec::Stump,
                Learner::Linear => LearnerSpec::Linear { steps, step_size },
            };
            let tie_break = tie_seed.map_or(
                TieBreakPolicy::LowestLabelFirst,
                TieBreakPolicy::SeededRandom,
            );
            let ranker = ovo::fit_ovo(&data, learner, tie_break)?;
            let mut w = create(&out)?;
            serde_json::to_writer(&mut w, &ranker)?;
            writeln!(w)?;
        }
        Command::Predict { model, x } => {
            let ranker = load_model(&model)?;
            let p = ranker.predict_permutation(x);
            print_json(&json!({
                "scores": p.scores,
                "permutation": p.permutation,
                "was_cyclic": p.was_cyclic,
            }))?;
        }
        Command::Eval {
            model,
            oracle,
            n_test,
            seed,
        } => {
            let ranker = load_model(&model)?;
            let oracle: PosteriorOracle = serde_json::from_reader(open(&oracle)?)?;
            let report = ovo::estimate_ranking_risk(&ranker, &oracle, n_test, seed)?;
            print_json(&serde_json::to_value(report)?)?;
        }
        Command::Topk { model, data, k } => {
            let ranker = load_model(&model)?;
            let test = LabeledDataset::read_csv(open(&data)?, Some(ranker.k_count()))?;
            let w = ovo::topk_error(&ranker, &test, k)?;
            print_json(&json!({ "k": k, "n_test": test.len(), "topk_error": w }))?;
        }
        Command::Curve {
            config,
            out,
            workers,
            summary,
        } => {
            let cfg: ExperimentConfig = serde_json::from_reader(open(&config)?).map_err(|e| {
                if e.is_io() {
                    Error::Json(e)
                } else {
                    Error::Config {
                        field: "config".into(),
                        reason: e.to_string(),
                    }
                }
            })?;
            let rows = harness::run_experiment(&cfg, workers)?;
            harness::write_rows_csv(&rows, create(&out)?)?;
            if let Some(path) = summary {
                harness::write_summary_csv(&harness::summarize(&rows)?, create(&path)?)?;
            }
        }
        Command::RateBound {
            alpha,
            b,
            eps,
            v,
            c,
            n,
            delta,
        } => {
            let params = RateBoundParams::new(alpha, b, eps, v, c)?;
            let r_n = ovo::rate_bound(&params, n, delta)?;
            let n0 = ovo::n0_upper_bound(&params, delta)?;
            print_json(&json!({
                "r_n": r_n,
                "n0_bound": n0,
                "h": params.h(),
                "beta": params.beta(),
            }))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
