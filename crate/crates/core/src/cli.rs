//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! error. Diagnostics go to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::corpus::{load_any, load_corpus};
use crate::error::{Error, Result};
use crate::harness::{generate_synthetic, sweep_dim, sweep_seqlen, SyntheticParams};
use crate::model::{forecast, Checkpoint};
use crate::pipeline::{evaluate_checkpoint, run as run_pipeline};

#[derive(Debug, Parser)]
#[command(name = "tempora", version, about = "Temporal topic-evolution engine", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a JSON-lines corpus and save it in binary form.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tokenizer settings are read from this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a model and write a checkpoint.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides both the training and embedding seeds.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a corpus with a checkpoint and write a JSON report.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-topic CSV; defaults to the report path with a `.topics.csv` suffix.
        #[arg(long)]
        topics_csv: Option<PathBuf>,
    },
    /// Roll the learned dynamics forward from the last slice state.
    Forecast {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus and its ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coherence and diversity across embedding dimensions.
    SweepDim(SweepArgs),
    /// Perplexity, diversity, coherence and stability across slice counts.
    SweepSeqlen(SweepArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Synthetic corpus spec; built-in defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the generator, training and embedding seeds.
    #[arg(long)]
    seed: Option<u64>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{}", e.render());
                    0
                }
                _ => {
                    eprint!("{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest { input, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let (corpus, report) = load_corpus(&input, &cfg.tokenizer_config()?)?;
            corpus.write_binary(&out)?;
            eprintln!(
                "ingested {} of {} records ({} empty after tokenization), {} terms",
                corpus.len(),
                report.records,
                report.dropped_empty,
                corpus.vocabulary().len()
            );
        }
        Command::Train {
            corpus,
            config,
            out,
            seed,
        } => {
            let mut cfg = Config::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
                cfg.embed_seed = s;
            }
            let (corpus, _) = load_any(&corpus, &cfg.tokenizer_config()?)?;
            let result = run_pipeline(&corpus, &cfg)?;
            result.checkpoint(&cfg).write(&out)?;
            let (first, last) = (result.outcome.initial_loss(), result.outcome.final_loss());
            eprintln!("loss {:.6} -> {:.6} over {} epochs", first.total, last.total, cfg.epochs);
        }
        Command::Evaluate {
            corpus,
            ckpt,
            out,
            topics_csv,
        } => {
            let ck = Checkpoint::read(&ckpt)?;
            let cfg = Config::parse(&ck.config_echo)?;
            let (corpus, _) = load_any(&corpus, &cfg.tokenizer_config()?)?;
            let (report, _) = evaluate_checkpoint(&corpus, &ck)?;
            write(&out, report.to_json())?;
            let csv_path = topics_csv.unwrap_or_else(|| {
                let mut name = out.file_stem().unwrap_or_default().to_os_string();
                name.push(".topics.csv");
                out.with_file_name(name)
            });
            write(&csv_path, report.topics_csv())?;
        }
        Command::Forecast { ckpt, steps, out } => {
            let ck = Checkpoint::read(&ckpt)?;
            let path = forecast(ck.last_state.view(), &ck.params.a, steps)?;
            let mut csv = String::from("step");
            for k in 0..ck.params.k() {
                write!(csv, ",topic{k}").unwrap();
            }
            csv.push('\n');
            for (i, theta) in path.iter().enumerate() {
                write!(csv, "{}", i + 1).unwrap();
                for x in theta {
                    write!(csv, ",{x:.6}").unwrap();
                }
                csv.push('\n');
            }
            write(&out, csv)?;
        }
        Command::Synth { spec, out, truth, seed } => {
            let mut params = SyntheticParams::load(&spec)?;
            if let Some(s) = seed {
                params.seed = s;
            }
            let syn = generate_synthetic(&params.build()?)?;
            write(&out, syn.to_jsonl())?;
            write(&truth, syn.truth_json())?;
        }
        Command::SweepDim(args) => {
            let (params, cfg) = sweep_inputs(&args)?;
            write(&args.out, sweep_dim(&params, &cfg, &args.values)?)?;
        }
        Command::SweepSeqlen(args) => {
            let (params, cfg) = sweep_inputs(&args)?;
            write(&args.out, sweep_seqlen(&params, &cfg, &args.values)?)?;
        }
    }
    Ok(())
}

fn sweep_inputs(args: &SweepArgs) -> Result<(SyntheticParams, Config)> {
    let mut params = match &args.spec {
        Some(p) => SyntheticParams::load(p)?,
        None => SyntheticParams::default(),
    };
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        params.seed = s;
        cfg.seed = s;
        cfg.embed_seed = s;
    }
    Ok((params, cfg))
}
