//! The `prony` command line.
//!
//! Exit status is 0 on success, 1 for usage and input errors and 2 for
//! numerical failures (singular systems, failed clustering, non-convergence,
//! failed self-checks). Messages go to standard error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::check::run_all;
use crate::error::{PronyError, Result};
use crate::experiment::{default_base_model, log_grid, run_sweep, SweepKind, SweepSpec};
use crate::forward::{perturb, prony_map, read_measurements, write_measurements, NoiseDistribution, NoiseSpec};
use crate::model::ConfluentModel;
use crate::solvers::{solve, Method, SolverOptions};
use crate::stability::local_accuracy;

#[derive(Debug, Parser)]
#[command(name = "prony", version, about = "Confluent Prony systems: forward map, solvers, accuracy bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moments of a model file as `k,re,im` CSV.
    Forward {
        model: PathBuf,
        #[arg(long)]
        num_measurements: usize,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `uniform-box` or `uniform-phase`.
        #[arg(long, default_value = "uniform-box")]
        distribution: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a model from a measurement CSV (`-` reads standard input).
    Solve {
        measurements: PathBuf,
        /// Comma-separated multiplicities, e.g. `2,1`.
        #[arg(long, value_delimiter = ',', required = true)]
        multiplicities: Vec<usize>,
        #[arg(long, default_value = "prony")]
        method: String,
        /// Starting model for `lsq`.
        #[arg(long)]
        initial: Option<PathBuf>,
        #[arg(long)]
        hankel_rows: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local accuracy bounds of a model file as CSV.
    Bounds {
        model: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep.
    Sweep {
        /// highest-coeff, prev-coeff, epsilon, order or separation.
        #[arg(long)]
        kind: String,
        /// `lo:hi:points`, log-spaced (linear integers for `order`).
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "prony,esprit,lsq")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 1e-10)]
        epsilon: f64,
        /// Uniform multiplicity of the default base model.
        #[arg(long, default_value_t = 2)]
        degree: usize,
        /// Base model file replacing the default.
        #[arg(long)]
        base_model: Option<PathBuf>,
        /// Moment count overrides, e.g. `lsq=8,prony=10`.
        #[arg(long, value_delimiter = ',')]
        measurements: Vec<String>,
        /// Table CSV path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON path; standard output when absent and `--out` is given.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the property self-checks.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_model(path: &Path) -> Result<ConfluentModel> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    ConfluentModel::from_json(&text)
}

fn parse_grid(kind: SweepKind, text: &str) -> Result<Vec<f64>> {
    let bad = || PronyError::InvalidInput(format!("grid must be lo:hi:points, got {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, points] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let points: usize = points.trim().parse().map_err(|_| bad())?;
    if kind != SweepKind::Order {
        return log_grid(lo, hi, points);
    }
    if points == 0 || lo.fract() != 0.0 || hi.fract() != 0.0 || lo < 1.0 || hi < lo {
        return Err(bad());
    }
    let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    let mut grid: Vec<f64> = (0..points).map(|i| (lo + step * i as f64).round()).collect();
    grid.dedup();
    Ok(grid)
}

fn parse_overrides(items: &[String]) -> Result<BTreeMap<Method, usize>> {
    items
        .iter()
        .map(|item| {
            let (method, count) = item.split_once('=').ok_or_else(|| {
                PronyError::InvalidInput(format!("measurement override must be method=count, got {item:?}"))
            })?;
            let count = count
                .parse()
                .map_err(|_| PronyError::InvalidInput(format!("bad count in {item:?}")))?;
            Ok((method.parse()?, count))
        })
        .collect()
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Forward {
            model,
            num_measurements,
            epsilon,
            seed,
            distribution,
            out,
        } => {
            if num_measurements == 0 {
                return Err(PronyError::InvalidInput("need at least one measurement".into()));
            }
            let distribution = match distribution.as_str() {
                "uniform-box" => NoiseDistribution::UniformBox,
                "uniform-phase" => NoiseDistribution::UniformPhase,
                other => {
                    return Err(PronyError::InvalidInput(format!("unknown distribution {other:?}")))
                }
            };
            let model = read_model(&model)?;
            let noise = NoiseSpec {
                epsilon,
                seed,
                distribution,
            };
            let m = perturb(&prony_map(&model, num_measurements), &noise)?;
            write_measurements(&m, output(out.as_deref())?)?;
        }
        Command::Solve {
            measurements,
            multiplicities,
            method,
            initial,
            hankel_rows,
            out,
        } => {
            let method: Method = method.parse()?;
            let m = if measurements.as_os_str() == "-" {
                read_measurements(io::stdin().lock())?
            } else {
                read_measurements(BufReader::new(File::open(&measurements)?))?
            };
            let initial = initial.as_deref().map(read_model).transpose()?;
            let opts = SolverOptions {
                hankel_rows,
                ..SolverOptions::default()
            };
            let report = solve(method, &m, &multiplicities, initial.as_ref(), &opts)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "{}", report.to_json())?;
            w.flush()?;
        }
        Command::Bounds { model, epsilon, out } => {
            let model = read_model(&model)?;
            local_accuracy(&model, epsilon)?.write_csv(output(out.as_deref())?)?;
        }
        Command::Sweep {
            kind,
            grid,
            trials,
            seed,
            methods,
            epsilon,
            degree,
            base_model,
            measurements,
            out,
            summary,
        } => {
            let kind: SweepKind = kind.parse()?;
            let base_model = match base_model {
                Some(path) => read_model(&path)?,
                None => default_base_model(seed, degree),
            };
            let spec = SweepSpec {
                kind,
                grid: parse_grid(kind, &grid)?,
                base_model,
                epsilon,
                trials,
                seed,
                methods: methods
                    .iter()
                    .map(|m| m.parse())
                    .collect::<Result<Vec<Method>>>()?,
                measurements: parse_overrides(&measurements)?,
            };
            let table = run_sweep(&spec)?;
            let summary_json = serde_json::to_string_pretty(&table.summary())?;
            let mut w = output(out.as_deref())?;
            table.write_csv(&mut w)?;
            w.flush()?;
            if summary.is_some() || out.is_some() {
                let mut s = output(summary.as_deref())?;
                writeln!(s, "{summary_json}")?;
                s.flush()?;
            }
        }
        Command::Check { seed } => {
            let outcomes = run_all(seed);
            let mut all = true;
            for o in &outcomes {
                let status = if o.passed { "ok" } else { "FAILED" };
                println!(
                    "{:<14} {status:<6} cases={} worst={:.3e} tolerance={:.0e}",
                    o.name, o.cases, o.worst, o.tolerance
                );
                all &= o.passed;
            }
            return Ok(if all { 0 } else { 2 });
        }
    }
    Ok(0)
}
