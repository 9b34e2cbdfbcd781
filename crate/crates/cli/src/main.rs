use std::path::PathBuf;
use std::process::ExitCode;

use cascade_cli::{run, Command, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cascade", version, about = "Complex multiplicative cascades: simulation, convergence and spectra")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "CASCADE_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write path CSVs for the requested generations.
    Simulate,
    /// Closed-form and empirical φ, verdict, Hölder bound and critical exponent.
    Phi,
    /// Large-deviation spectrum, structure exponents and exponent histograms.
    Spectrum,
    /// Martingale, decorrelation, self-similarity, ratio and trend checks.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Phi => Command::Phi,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Verify => Command::Verify,
    };
    let result = RunConfig::load(&config_path).and_then(|config| {
        let seed = cli.seed.unwrap_or(config.seed);
        let out = cli.out.or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        run(command, &config, seed, &out)
    });
    match result {
        Ok(outcome) => {
            println!("{}", outcome.manifest.display());
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed; see {}", outcome.dir.join("verify.json").display());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
