//! Batch experiment runner for the two-leg OTOC measurement protocol.
//!
//! Exit codes: 0 success, 2 validation error, 3 compute error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use otoc_ladder::config::ExperimentSpec;
use otoc_ladder::runner::{
    self, fidelity_scan, reproduce, run_to_files, Figure, OutputFormat,
};
use otoc_ladder::Error;

#[derive(Parser)]
#[command(name = "otoc-ladder", version, about = "Finite-temperature OTOC protocol simulator")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the spec seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps and presets.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,

    /// Output format: csv, svg, or both.
    #[arg(long, global = true, default_value = "csv")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment described by a key=value config file.
    Run {
        /// Config file (flat key = value lines).
        #[arg(long)]
        config: PathBuf,
        /// Extra key=value overrides applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Fan a base config out over one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Spec field to vary (e.g. lambda, n, seed).
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis.
        #[arg(long)]
        values: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Rebuild the data behind one of the reference figures
    /// (fig2..fig6, figA).
    Reproduce { figure: String },
    /// Report the fidelity-optimal inverse temperature for one (n, λ).
    Fidelity {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
    },
    /// Run the built-in invariant checks.
    Verify,
}

fn load_spec(path: &PathBuf, overrides: &[String], seed: Option<u64>) -> otoc_ladder::Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::from_file(path)?;
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            Error::InvalidSpec(format!("--set expects KEY=VALUE, got '{item}'"))
        })?;
        spec.set(key.trim(), value.trim())?;
    }
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn main_inner(cli: Cli) -> otoc_ladder::Result<()> {
    let format: OutputFormat = cli.format.parse()?;
    match cli.command {
        Command::Run { config, overrides } => {
            let spec = load_spec(&config, &overrides, cli.seed)?;
            let stem = config
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("run")
                .to_string();
            let record = run_to_files(&spec, &cli.out, &stem, format)?;
            println!(
                "wrote {}/{stem}.* (spec hash {:016x}, version {}, {:.2}s, {} rows)",
                cli.out.display(),
                record.spec_hash,
                record.version,
                record.wall_time,
                record.series.times.len()
            );
            if let Some(kappa) = record.series.kappa {
                println!("kappa = {kappa:.6}");
            }
        }
        Command::Sweep { config, axis, values, overrides } => {
            let spec = load_spec(&config, &overrides, cli.seed)?;
            let values: Vec<String> = values
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if values.is_empty() {
                return Err(Error::InvalidSpec("sweep needs at least one value".into()));
            }
            let outcome = runner::sweep(&spec, &axis, &values, cli.parallel)?;
            std::fs::create_dir_all(&cli.out)?;
            let path = cli.out.join(format!("sweep_{axis}.csv"));
            std::fs::write(&path, &outcome.merged_csv)?;
            let failures: Vec<&str> = outcome
                .records
                .iter()
                .filter(|(_, r)| r.is_err())
                .map(|(v, _)| v.as_str())
                .collect();
            println!(
                "wrote {} ({} values, {} failed{}{})",
                path.display(),
                outcome.records.len(),
                failures.len(),
                if failures.is_empty() { "" } else { ": " },
                failures.join(", ")
            );
        }
        Command::Reproduce { figure } => {
            let figure: Figure = figure.parse()?;
            reproduce(figure, &cli.out, format, cli.parallel)?;
            println!("wrote figure data to {}", cli.out.display());
        }
        Command::Fidelity { n, lambda } => {
            let result = fidelity_scan(n, lambda)?;
            println!(
                "n = {n}, lambda = {lambda}: beta0 = {:.10}, T0 = {:.10}, F = {:.12}",
                result.beta0, result.t0, result.f
            );
            std::fs::create_dir_all(&cli.out)?;
            let mut csv = String::from("beta,f\n");
            for (beta, f) in &result.scan {
                csv.push_str(&format!("{beta:.17e},{f:.17e}\n"));
            }
            let path = cli.out.join(format!("fidelity_n{n}_lambda{lambda}.csv"));
            std::fs::write(&path, csv)?;
            println!("wrote {}", path.display());
        }
        Command::Verify => {
            let results = otoc_ladder::verify::run_all();
            let mut failed = 0;
            for r in &results {
                println!(
                    "[{}] {} — {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
                if !r.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Error::InvalidSpec(format!("{failed} checks failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let validation = matches!(
                e,
                Error::InvalidSpec(_) | Error::InvalidSector { .. } | Error::BasisMismatch(_)
            );
            if validation {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
