use clap::{Parser, Subcommand};
use covest::harness::{
    self, config::ExperimentConfig, emit_plot, read_rows, summarize, write_summary, PlotSpec,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "covest",
    version,
    about = "Structured covariance estimation toolkit and Monte-Carlo experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file
    Run {
        config: PathBuf,
    },
    /// Aggregate a results CSV into per-cell means and standard errors
    Summarize {
        csv: PathBuf,
        /// Write the summary CSV here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render an SVG line chart from a results CSV and a plot spec
    Plot {
        csv: PathBuf,
        spec: PathBuf,
    },
    /// List the estimator identifiers understood by configs
    ListEstimators,
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<(), harness::HarnessError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let rows = harness::run(&cfg)?;
            match &cfg.output {
                Some(path) => println!("wrote {} rows to {path}", rows.len()),
                None => {
                    harness::write_rows(std::io::stdout().lock(), &rows)?;
                }
            }
            Ok(())
        }
        Command::Summarize { csv, output } => {
            let rows = read_rows(&csv)?;
            let summary = summarize(&rows)?;
            match output {
                Some(path) => {
                    let file = std::fs::File::create(&path)?;
                    write_summary(file, &summary)?;
                    println!("wrote {} summary rows to {}", summary.len(), path.display());
                }
                None => write_summary(std::io::stdout().lock(), &summary)?,
            }
            Ok(())
        }
        Command::Plot { csv, spec } => {
            let rows = read_rows(&csv)?;
            let summary = summarize(&rows)?;
            let spec = PlotSpec::load(&spec)?;
            let path = emit_plot(&summary, &spec)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::ListEstimators => {
            println!("classical experiments:");
            println!("  sample              sample covariance (1/n) sum x x^T");
            println!("  masked              mask (ones|diag|band:width) applied entrywise");
            println!("  threshold           hard threshold; tau fixed or M'*sqrt(log(p)/n)");
            println!("  toeplitz            diagonal-averaged sample covariance");
            println!("  toeplitz-threshold  banded + thresholded Toeplitz estimate (C, K, c, alpha)");
            println!("  lasso               nuclear-norm shrinkage; lambda fixed or rule-based");
            println!("  sign                one-bit sign estimator (optional psd projection)");
            println!("  dithered            two-bit dithered estimator; lambda from grid, fixed, or rule");
            println!("mimo experiments:");
            println!("  nnls                MUSIC + dictionary + weighted NNLS pipeline estimate");
            println!("  sample              denoised sample covariance baseline");
            Ok(())
        }
    }
}
