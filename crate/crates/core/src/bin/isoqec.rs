use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use isoqec::exec::with_workers;
use isoqec::experiments::{
    csv_string, emit_figure2, figure2_rows, run_sweep, verify_appendix, verify_theorems, write_csv,
    write_json_report, CheckStatus, SweepConfig,
};
use isoqec::sampler::{sample_states, sampling_table, write_sample_dump, McConfig};
use isoqec::{Error, IsotropicDensity};

#[derive(Parser)]
#[command(
    name = "isoqec",
    version,
    about = "Fidelity of isotropic errors under block codes"
)]
struct Cli {
    /// Master seed for Monte Carlo runs (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo samples per estimate (overrides the config file).
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads; 1 runs sequentially, 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and Monte Carlo fidelities over a (code, sigma) grid.
    Sweep {
        /// JSON sweep configuration; the built-in default grid if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check closed forms and inequalities.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Write the two-panel fidelity figure as SVG.
    Figure2 {
        #[arg(long)]
        out: PathBuf,
        /// Evenly spaced abscissae in [0, 1), before the final one near 1.
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Draw normal-family samples and write them as a raw binary dump.
    Dump {
        #[arg(long)]
        sigma: f64,
        /// Half-dimension of the state space.
        #[arg(long)]
        d: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum VerifyTarget {
    /// Closed-form integrals against adaptive quadrature.
    Appendix {
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fidelity inequalities and bounds.
    Theorems {
        /// Sweep configuration supplying the code list.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

enum Failure {
    Verification(String),
    Setup(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidParameter(_)
            | Error::Io { .. }
            | Error::Csv { .. }
            | Error::Json { .. }
            | Error::ThreadPool(_) => Failure::Setup(e),
            other => Failure::Verification(other.to_string()),
        }
    }
}

fn load_config(cli: &Cli, path: Option<&Path>) -> Result<SweepConfig, Error> {
    let mut config = match path {
        Some(p) => SweepConfig::from_json_path(p)?,
        None => SweepConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(samples) = cli.samples {
        config.n_samples = samples;
    }
    config.validate()?;
    Ok(config)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })?;
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn sweep(cli: &Cli, path: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(cli, path)?;
    let report = with_workers(cli.workers, |exec| run_sweep(&config, exec))??;
    match &config.output.csv {
        Some(p) => write_csv(&report.rows, p)?,
        None => print!("{}", csv_string(&report.rows)?),
    }
    if let Some(p) = &config.output.json {
        write_json_report(&report, p)?;
    }
    if let Some(p) = &config.output.svg {
        emit_figure2(&report.rows, p)?;
    }
    for v in &report.violations {
        eprintln!(
            "({}, {}) sigma_c={}: {:?}: {}",
            v.n, v.m, v.sigma_c, v.kind, v.detail
        );
    }
    eprintln!(
        "{} cells in {:.2} s, {} ordering violations, {} Monte Carlo mismatches",
        report.rows.len(),
        report.timing.total_seconds,
        report.ordering_violations(),
        report.violations.len() - report.ordering_violations()
    );
    if report.ordering_violations() > 0 {
        return Err(Failure::Verification("fidelity ordering violated".into()));
    }
    Ok(())
}

fn appendix(cli: &Cli, rel_tol: f64, json: Option<&Path>) -> Result<(), Failure> {
    let report = with_workers(cli.workers, |exec| verify_appendix(rel_tol, exec))??;
    for f in &report.families {
        println!(
            "{:<4} {:<32} cases={:<4} max_rel_err={:.3e} (tol {:.0e}) worst: {}",
            if f.passed { "PASS" } else { "FAIL" },
            f.name,
            f.cases,
            f.max_rel_err,
            f.tolerance,
            f.worst_case
        );
    }
    println!("{:.2} s", report.seconds);
    if let Some(p) = json {
        write_json(&report, p)?;
    }
    if !report.passed {
        return Err(Failure::Verification(format!(
            "failed families: {}",
            report.failed_families().join(", ")
        )));
    }
    Ok(())
}

fn theorems(cli: &Cli, config: Option<&Path>, json: Option<&Path>) -> Result<(), Failure> {
    let config = load_config(cli, config)?;
    let report = with_workers(cli.workers, |exec| verify_theorems(&config, exec))??;
    for c in &report.checks {
        let status = match c.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::ErratumConfirmed => "erratum-confirmed",
            CheckStatus::Info => "INFO",
        };
        println!(
            "{status:<17} {:<30} cases={:<6} worst_margin={:.6e} at {}",
            c.name, c.cases, c.worst_margin, c.worst_case
        );
    }
    if let Some(p) = json {
        write_json(&report, p)?;
    }
    if !report.passed {
        return Err(Failure::Verification("inequality check failed".into()));
    }
    Ok(())
}

fn figure(out: &Path, points: usize) -> Result<(), Failure> {
    emit_figure2(&figure2_rows(points)?, out)?;
    Ok(())
}

fn dump(cli: &Cli, sigma: f64, d: u32, out: &Path) -> Result<(), Failure> {
    let density = IsotropicDensity::normal(sigma, d)?;
    let marginal = sampling_table(&density)?;
    let config = McConfig::new(cli.samples.unwrap_or(10_000), cli.seed.unwrap_or(0));
    let samples = with_workers(cli.workers, |exec| sample_states(&marginal, &config, exec))??;
    let meta = write_sample_dump(out, &samples, config.seed, &density)?;
    eprintln!(
        "wrote {} samples of dimension {}",
        meta.n_samples,
        2 * meta.d
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sweep { config } => sweep(&cli, config.as_deref()),
        Command::Verify { target } => match target {
            VerifyTarget::Appendix { rel_tol, json } => appendix(&cli, *rel_tol, json.as_deref()),
            VerifyTarget::Theorems { config, json } => {
                theorems(&cli, config.as_deref(), json.as_deref())
            }
        },
        Command::Figure2 { out, points } => figure(out, *points),
        Command::Dump { sigma, d, out } => dump(&cli, *sigma, *d, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Setup(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
