//! Command-line front end: reads one TOML experiment document and writes its CSV outputs.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use qogp::cli::{self, ExperimentConfig, RunOptions};

/// Environment variable that overrides the output directory.
const OUT_ENV: &str = "QOGP_OUT";

/// Runs one configured experiment.
#[derive(Debug, Parser)]
#[command(name = "qogp", version, about)]
struct Args {
    /// Experiment document in TOML.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the master seed of the document.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory; `QOGP_OUT` takes precedence when set.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Largest qubit count for dense matrices and statevectors.
    #[arg(long, default_value_t = qogp::pauli::DENSE_CAP)]
    dense_cap: usize,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = ExperimentConfig::parse(&text).context("parsing config")?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed)?;
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("building thread pool")?;
    }
    let out_dir = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or(args.out);
    let output = cli::run(
        &config,
        &RunOptions {
            dense_cap: args.dense_cap,
        },
    )
    .with_context(|| format!("running {}", config.command))?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (name, contents) in output.render(&config) {
        let path = out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}
