//! `kge`: train, evaluate and query knowledge-graph embedding models with
//! typing-aware inference.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "kge", version, about = "Knowledge-graph embeddings with low-rank tables and typing-aware inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for evaluation (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for checkpoints, logs and metrics.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Config overrides as `--key value` or `--key=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an embedding model; writes model.ckpt and train_kge.jsonl.
    TrainKge(Common),
    /// Train the typing network; writes typing.ckpt and train_typing.jsonl.
    TrainTyping(Common),
    /// Link-prediction evaluation (mode = full | ftai); writes metrics.json.
    EvalLp(Common),
    /// Typing evaluation; writes typing_metrics.json.
    EvalTyping(Common),
    /// Answer queries from a file of `entity<TAB>relation<TAB>head|tail` rows.
    Infer {
        #[arg(long)]
        queries: PathBuf,
        /// Answers returned per query.
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Graph summary with a degree histogram.
    Stats(Common),
    /// Write a typed synthetic dataset to the output directory.
    Synth {
        #[arg(long, default_value_t = 2000)]
        entities: usize,
        #[arg(long, default_value_t = 24)]
        relations: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Turns `--key value` / `--key=value` words into pairs.
fn parse_overrides(words: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = words.iter();
    while let Some(w) = it.next() {
        let Some(key) = w.strip_prefix("--") else {
            bail!("unexpected argument {w:?}; overrides look like --key value");
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => match it.next() {
                Some(v) => out.push((key.to_string(), v.clone())),
                None => bail!("override --{key} needs a value"),
            },
        }
    }
    Ok(out)
}

impl Common {
    fn load(&self) -> Result<kge_core::config::ExperimentConfig> {
        let mut overrides = parse_overrides(&self.overrides)?;
        if let Some(s) = self.seed {
            overrides.push(("seed".into(), s.to_string()));
        }
        if let Some(t) = self.threads {
            overrides.push(("threads".into(), t.to_string()));
        }
        if let Some(o) = &self.output {
            overrides.push(("output".into(), o.display().to_string()));
        }
        let cfg = kge_core::config::load_config(self.config.as_deref(), &overrides)?;
        cfg.validate()?;
        if cfg.threads > 0 {
            // fails only if a pool already exists, which keeps the first setting
            let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainKge(c) => commands::train_kge(&c.load()?),
        Command::TrainTyping(c) => commands::train_typing(&c.load()?),
        Command::EvalLp(c) => commands::eval_lp(&c.load()?),
        Command::EvalTyping(c) => commands::eval_typing(&c.load()?),
        Command::Infer { queries, top, common } => commands::infer(&common.load()?, &queries, top),
        Command::Stats(c) => commands::stats(&c.load()?),
        Command::Synth { entities, relations, common } => commands::synth(&common.load()?, entities, relations),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
