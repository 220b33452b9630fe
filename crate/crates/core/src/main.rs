use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hcsketch::bench::{
    parse_ratios, plot_rows, run_contract_experiment, run_kron_experiment, run_spike_experiment,
    write_csv, ExperimentConfig, ExperimentRow,
};
use hcsketch::verify;

#[derive(Parser)]
#[command(name = "hcsketch", version, about = "Count Sketch and Higher-order Count Sketch benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the algebraic and FFT property checks.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// 50 x 50 matrix with one large column: CS, HCS, HCS after reshuffle.
    Spike(ExperimentArgs),
    /// Kronecker product of two 30 x 30 matrices.
    Kron(ExperimentArgs),
    /// Contraction of 30 x 30 x 40 with 40 x 30 x 30.
    Contract(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Independent sketches per method; estimates take their median.
    #[arg(long, default_value_t = 20)]
    replicas: usize,
    /// Comma-separated compression ratios.
    #[arg(long, default_value = "2,4,8")]
    ratios: String,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot of error, time and memory against compression ratio.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Record wall-clock times. Off by default so output is reproducible.
    #[arg(long)]
    timings: bool,
}

fn run_experiment(
    args: &ExperimentArgs,
    driver: fn(&ExperimentConfig) -> hcsketch::Result<Vec<ExperimentRow>>,
) -> ExitCode {
    let ratios = match parse_ratios(&args.ratios) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: --ratios: {e}");
            return ExitCode::from(2);
        }
    };
    if args.replicas == 0 {
        eprintln!("error: --replicas must be at least 1");
        return ExitCode::from(2);
    }
    let cfg = ExperimentConfig::new(args.seed, args.replicas, ratios).with_timings(args.timings);
    let result = driver(&cfg).and_then(|rows| {
        match &args.out {
            Some(path) => {
                let file = File::create(path).map_err(|e| hcsketch::Error::Parse(format!("{}: {e}", path.display())))?;
                write_csv(&rows, BufWriter::new(file))?;
            }
            None => write_csv(&rows, io::stdout().lock())?,
        }
        if let Some(path) = &args.plot {
            plot_rows(&rows, path)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_verify(seed: u64) -> ExitCode {
    let checks = match verify::run_all(seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut out = io::stdout().lock();
    let mut ok = true;
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        ok &= c.passed();
        let _ = writeln!(out, "{status} {} (worst {:.3e}, tolerance {:.0e})", c.name, c.worst, c.tolerance);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Verify { seed } => run_verify(*seed),
        Command::Spike(args) => run_experiment(args, run_spike_experiment),
        Command::Kron(args) => run_experiment(args, run_kron_experiment),
        Command::Contract(args) => run_experiment(args, run_contract_experiment),
    }
}
