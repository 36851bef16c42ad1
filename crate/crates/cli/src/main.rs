//! `wpir`: tradeoff curves, Monte-Carlo simulation, self-checks and query
//! tables for the weakly private retrieval code.
//!
//! Exit status is 0 on success, 1 when a check or I/O operation fails and 2
//! for invalid arguments, including parameters too large to enumerate.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use wpir_core::optimizer::{
    maxl_baseline_curve, maxl_curve, mi_tradeoff, solve_maxl, solve_mi, write_curve_csv,
};
use wpir_core::sim::{run_simulation, SimConfig, DEFAULT_MESSAGE_SEED, DEFAULT_SEED};
use wpir_core::table::query_table;
use wpir_core::verify::run_checks;
use wpir_core::{Error, Metric, SystemParams, TradeoffPoint, WpirScheme};

#[derive(Parser)]
#[command(name = "wpir", version, about)]
struct Cli {
    /// Master seed for every randomized step. Defaults to 0x5750495253454544.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Maxl,
    Mi,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Maxl => Metric::MaxL,
            MetricArg::Mi => Metric::Mi,
        }
    }
}

#[derive(clap::Args)]
struct Size {
    /// Number of servers N (>= 2).
    #[arg(long, short = 'n')]
    servers: usize,
    /// Number of messages K (>= 2).
    #[arg(long, short = 'k')]
    messages: usize,
}

impl Size {
    fn params(&self) -> Result<SystemParams> {
        Ok(SystemParams::new(self.servers, self.messages)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimal (leakage, download cost) curve.
    Curve {
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[command(flatten)]
        size: Size,
        /// Grid size, at least 2.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the curve without the single-server direct pattern here.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: CurveFormat,
    },
    /// Monte-Carlo retrievals of one scheme; prints a JSON report.
    Simulate {
        /// Scheme JSON `{"N":.., "K":.., "dist":{"p_direct":.., "p_weights":[..]}}`.
        #[arg(long, conflicts_with_all = ["metric", "rho"])]
        scheme_file: Option<PathBuf>,
        /// Build the optimal scheme for this metric and `--rho`.
        #[arg(long, value_enum, requires = "rho")]
        metric: Option<MetricArg>,
        /// Leakage budget in bits.
        #[arg(long, requires = "metric")]
        rho: Option<f64>,
        #[arg(long, short = 'n')]
        servers: Option<usize>,
        #[arg(long, short = 'k')]
        messages: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Seed for the message contents.
        #[arg(long, default_value_t = DEFAULT_MESSAGE_SEED)]
        message_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed forms against exhaustive enumeration.
    Verify {
        #[command(flatten)]
        size: Size,
    },
    /// Queries and symbolic answers of every key.
    DumpTable {
        #[command(flatten)]
        size: Size,
        /// Requested message, 1-based.
        #[arg(long, default_value_t = 1)]
        message: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: TableFormat,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_points(path: Option<&Path>, points: &[TradeoffPoint], format: CurveFormat) -> Result<()> {
    let mut out = output(path)?;
    match format {
        CurveFormat::Csv => write_curve_csv(&mut out, points)?,
        CurveFormat::Json => {
            serde_json::to_writer_pretty(&mut out, points)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn curve(
    metric: Metric,
    params: &SystemParams,
    points: usize,
    out: Option<&Path>,
    baseline: Option<&Path>,
    format: CurveFormat,
) -> Result<()> {
    let (main, base) = match metric {
        Metric::MaxL => (
            maxl_curve(params, points)?,
            baseline
                .map(|_| maxl_baseline_curve(params, points))
                .transpose()?,
        ),
        Metric::Mi => {
            let tradeoff = mi_tradeoff(params, points)?;
            (tradeoff.envelope, Some(tradeoff.swept))
        }
    };
    write_points(out, &main, format)?;
    if let (Some(path), Some(base)) = (baseline, base) {
        write_points(Some(path), &base, format)?;
    }
    Ok(())
}

fn simulation_scheme(
    scheme_file: Option<&Path>,
    metric: Option<MetricArg>,
    rho: Option<f64>,
    servers: Option<usize>,
    messages: Option<usize>,
) -> Result<WpirScheme> {
    if let Some(path) = scheme_file {
        let json = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        return Ok(WpirScheme::from_json(&json)?);
    }
    let (Some(metric), Some(rho), Some(n), Some(k)) = (metric, rho, servers, messages) else {
        return Err(Error::InvalidArgument(
            "give --scheme-file, or --metric, --rho, --servers and --messages".into(),
        )
        .into());
    };
    let params = SystemParams::new(n, k)?;
    let dist = match metric {
        MetricArg::Maxl => solve_maxl(&params, rho)?,
        MetricArg::Mi => solve_mi(&params, rho, 200)?.distribution(&params)?,
    };
    Ok(WpirScheme::new(params, dist)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Curve {
            metric,
            size,
            points,
            out,
            baseline,
            format,
        } => {
            curve(
                metric.into(),
                &size.params()?,
                points,
                out.as_deref(),
                baseline.as_deref(),
                format,
            )?;
        }
        Command::Simulate {
            scheme_file,
            metric,
            rho,
            servers,
            messages,
            trials,
            message_seed,
            out,
        } => {
            let scheme = simulation_scheme(scheme_file.as_deref(), metric, rho, servers, messages)?;
            let mut config = SimConfig::new(scheme, trials).with_seed(cli.seed);
            config.message_seed = message_seed;
            let report = run_simulation(&config)?;
            let mut sink = output(out.as_deref())?;
            serde_json::to_writer_pretty(&mut sink, &report)?;
            writeln!(sink)?;
            sink.flush()?;
        }
        Command::Verify { size } => {
            let report = run_checks(&size.params()?, cli.seed)?;
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {:<32} {}", c.name, c.detail);
            }
            if let Some(bad) = report.first_failure() {
                eprintln!("error: check {} failed", bad.name);
                return Ok(ExitCode::from(1));
            }
        }
        Command::DumpTable {
            size,
            message,
            format,
        } => {
            let table = query_table(&size.params()?, message)?;
            let text = match format {
                TableFormat::Text => table.to_text(),
                TableFormat::Json => table.to_json() + "\n",
            };
            io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::InvalidParams(_)
            | Error::InvalidArgument(_)
            | Error::InvalidDistribution(_)
            | Error::OutOfRange(_)
            | Error::TooLarge { .. },
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
