use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use protgeom::commands::{baseline_table, parse_pdb_to_npy, run_analysis, Analysis};
use protgeom::config::RunConfig;
use protgeom::npy::Precision;
use protgeom::pipeline::{baseline_check, with_threads};

/// Shape-space and graph-filtration geometry of protein structures and their embeddings.
#[derive(Parser)]
#[command(name = "protgeom", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the Cα trace of one chain as an L x 3 NPY array.
    ParsePdb {
        pdb: PathBuf,
        #[arg(long)]
        chain: Option<char>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "f64")]
        precision: Precision,
    },
    /// Karcher mean, Fréchet radius and effective dimensions per layer and class.
    ShapeStats(RunConfig),
    /// Normalized kNN filtration moments per layer and class.
    Filtration(RunConfig),
    /// Compare sampled random-pair adjacency distances with their closed form.
    BaselineCheck {
        /// Points per cloud.
        #[arg(long)]
        length: usize,
        /// Largest level (default L - 1).
        #[arg(long)]
        k_max: Option<usize>,
        /// Number of random cloud pairs.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ambient dimension of the random clouds.
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::ParsePdb {
            pdb,
            chain,
            out,
            precision,
        } => {
            let (len, chain) = parse_pdb_to_npy(&pdb, chain, &out, precision)?;
            println!("L={len} chain={chain}");
        }
        Command::ShapeStats(flags) => return analysis(Analysis::ShapeStats, flags),
        Command::Filtration(flags) => return analysis(Analysis::Filtration, flags),
        Command::BaselineCheck {
            length,
            k_max,
            samples,
            seed,
            dim,
            threads,
        } => {
            anyhow::ensure!(length >= 2, "--length must be at least 2");
            anyhow::ensure!(dim >= 1, "--dim must be at least 1");
            let k_max = k_max.unwrap_or(length - 1);
            let rows = with_threads(threads, || {
                baseline_check(length, dim, k_max, samples, seed)
            })??;
            print!("{}", baseline_table(&rows));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn analysis(kind: Analysis, flags: RunConfig) -> anyhow::Result<ExitCode> {
    let config = flags.resolve()?;
    let done = run_analysis(kind, &config)?;
    for path in &done.written {
        log::info!("wrote {}", path.display());
    }
    if done.outcome.issues.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{}", done.outcome.error_summary());
        Ok(ExitCode::from(1))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
