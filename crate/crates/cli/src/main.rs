//! `pealab` command-line driver.
//!
//! Exit status is 0 on success, 2 on usage errors (bad flags, bad flag
//! combinations) and 1 on anything that fails while running.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pealab::backend::NoiseModel;
use pealab::circuits::{Circuit, Eigenstate, HeisenbergParams, PowerMode};
use pealab::estimators::{build_base_pea_circuit, build_iterative_circuit, Method};
use pealab::experiments::{
    compare, default_tau_grid, estimate_energy, r_squared_with, run_sweep, CompareRow, EnergyReport, RowFlag,
    SweepConfig, SweepRow, MIN_RESOLVED_STEPS,
};
use pealab::RngSeed;

const CSV_HEADER: [&str; 4] = ["tau", "phi_hat", "method", "flag"];

#[derive(Parser)]
#[command(name = "pealab", version, about = "Phase estimation sweeps on the two-spin Heisenberg model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate φ(τ) over a grid and write `tau,phi_hat,method,flag` CSV.
    Sweep {
        #[arg(long)]
        algorithm: Option<Method>,
        #[command(flatten)]
        common: SweepArgs,
        /// Write per-point Bayesian round logs as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Recover ε̂, percent error and R² from a sweep CSV.
    Energy {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all four algorithms on one configuration.
    Compare {
        #[command(flatten)]
        common: SweepArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Print one circuit as JSON.
    CircuitDump {
        #[arg(long, default_value = "base")]
        algorithm: Method,
        #[arg(long, default_value_t = 4.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 3)]
        n_counting: usize,
        /// Base circuit only: expand `U^{2^k}` into repeated blocks.
        #[arg(long)]
        repeated: bool,
        /// Iterative only: circuit index and feedback angle.
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega: f64,
        /// Bayesian only: guess angle and power.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        /// Print gate counts instead of the circuit.
        #[arg(long)]
        counts: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// JSON file with `SweepConfig` fields; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    tau_steps: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    shots: Option<u64>,
    #[arg(long, value_parser = probability)]
    noise_p: Option<f64>,
    #[arg(long, value_parser = probability)]
    readout_p: Option<f64>,
    /// Falls back to the config file, then `PEALAB_SEED`, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Bayesian rounds N.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    bayes_n: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not in [0, 1]"))
    }
}

impl SweepArgs {
    fn resolve(&self) -> anyhow::Result<SweepConfig> {
        let (mut cfg, file_seed) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let value: serde_json::Value =
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                let has_seed = value.get("seed").is_some();
                let cfg: SweepConfig =
                    serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
                let seed = has_seed.then_some(cfg.seed);
                (cfg, seed)
            }
            None => (SweepConfig::default(), None),
        };
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(n) = self.tau_steps {
            cfg.tau_grid = default_tau_grid(n as usize);
        }
        if let Some(s) = self.shots {
            cfg.shots = s;
        }
        cfg.noise = NoiseModel {
            depolarizing_p: self.noise_p.unwrap_or(cfg.noise.depolarizing_p),
            readout_flip_p: self.readout_p.unwrap_or(cfg.noise.readout_flip_p),
        };
        if let Some(n) = self.bayes_n {
            cfg.bayes.n_updates = n as usize;
        }
        cfg.seed = match (self.seed, file_seed) {
            (Some(s), _) => RngSeed(s),
            (None, Some(s)) => s,
            (None, None) => env_seed()?,
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

fn env_seed() -> anyhow::Result<RngSeed> {
    match std::env::var("PEALAB_SEED") {
        Ok(s) => s.trim().parse().map(RngSeed).map_err(|_| usage(format!("PEALAB_SEED={s:?} is not a u64"))),
        Err(_) => Ok(RngSeed(0)),
    }
}

fn warn_low_resolution(cfg: &SweepConfig) {
    if cfg.is_low_resolution() {
        eprintln!(
            "warning: {} tau steps is below {MIN_RESOLVED_STEPS}; the phase staircase is not resolved",
            cfg.tau_grid.len()
        );
    }
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_rows(rows: &[SweepRow], w: impl Write) -> anyhow::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(CSV_HEADER)?;
    for r in rows {
        csv.write_record([r.tau.to_string(), opt(r.phi_hat), r.method.to_string(), r.flag.as_str().to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

fn read_rows(r: impl Read) -> anyhow::Result<Vec<SweepRow>> {
    let mut csv = csv::Reader::from_reader(r);
    let header = csv.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        bail!("expected header {:?}, found {:?}", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","));
    }
    let mut rows = Vec::new();
    for (i, rec) in csv.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let tau = rec[0].parse().with_context(|| format!("line {line}: bad tau {:?}", &rec[0]))?;
        let phi_hat = match &rec[1] {
            "" => None,
            s => Some(s.parse().with_context(|| format!("line {line}: bad phi_hat {s:?}"))?),
        };
        let method = rec[2].parse().with_context(|| format!("line {line}: bad method"))?;
        let flag: RowFlag = rec[3].parse().with_context(|| format!("line {line}: bad flag"))?;
        rows.push(SweepRow { tau, phi_hat, method, flag });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct EnergyOutput<C: Serialize> {
    #[serde(flatten)]
    report: EnergyReport,
    config: C,
}

#[derive(Serialize)]
struct EnergyInput<'a> {
    input: &'a Path,
    lambda: f64,
    eigenstate: Eigenstate,
    rows: usize,
}

fn cmd_sweep(algorithm: Option<Method>, common: &SweepArgs, trace: Option<&Path>) -> anyhow::Result<()> {
    let mut cfg = common.resolve()?;
    if let Some(a) = algorithm {
        cfg.algorithm = a;
    }
    if trace.is_some() && cfg.algorithm != Method::Bayesian {
        return Err(usage("--trace is only available for --algorithm bayesian"));
    }
    warn_low_resolution(&cfg);
    let result = run_sweep(&cfg)?;
    write_rows(&result.rows, sink(common.out.as_deref())?)?;
    if let Some(path) = trace {
        let w = sink(Some(path))?;
        serde_json::to_writer_pretty(w, &result.traces)?;
    }
    Ok(())
}

fn cmd_energy(input: &Path, lambda: f64, out: Option<&Path>) -> anyhow::Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let rows = read_rows(file).with_context(|| format!("reading {}", input.display()))?;
    let params = HeisenbergParams::new(lambda)?;
    let eigenstate = Eigenstate::TripletZero;
    let mut report = estimate_energy(&rows, Some(eigenstate.energy(params)))?;
    report.r_squared = r_squared_with(&rows, |t| eigenstate.phase(params, t));
    let config = EnergyInput { input, lambda, eigenstate, rows: rows.len() };
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &EnergyOutput { report, config })?;
    writeln!(w)?;
    Ok(())
}

fn cmd_compare(common: &SweepArgs, format: Format) -> anyhow::Result<()> {
    let cfg = common.resolve()?;
    warn_low_resolution(&cfg);
    let rows = compare(&cfg)?;
    let mut w = sink(common.out.as_deref())?;
    match format {
        Format::Csv => {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["algorithm", "epsilon_hat", "percent_error", "r_squared"])?;
            for r in &rows {
                csv.write_record([
                    r.algorithm.to_string(),
                    r.epsilon_hat.to_string(),
                    opt(r.percent_error),
                    opt(r.r_squared),
                ])?;
            }
            csv.flush()?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Table<'a> {
                config: &'a SweepConfig,
                rows: &'a [CompareRow],
            }
            serde_json::to_writer_pretty(&mut w, &Table { config: &cfg, rows: &rows })?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn dump_circuit(
    algorithm: Method,
    params: HeisenbergParams,
    tau: f64,
    n_counting: usize,
    repeated: bool,
    (k, omega): (usize, f64),
    (theta, m): (f64, u64),
) -> anyhow::Result<Circuit> {
    let state = Eigenstate::TripletZero;
    Ok(match algorithm {
        Method::Base | Method::Circular => {
            let powers = if repeated { PowerMode::Repeated } else { PowerMode::Merged };
            build_base_pea_circuit(n_counting, params, tau, state, powers)?
        }
        Method::Iterative => build_iterative_circuit(k, omega, params, tau, state)?,
        Method::Bayesian => pealab::bayes::build_bayes_circuit(theta, m, params, tau, state)?,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Sweep { algorithm, common, trace } => cmd_sweep(algorithm, &common, trace.as_deref()),
        Command::Energy { input, lambda, out } => cmd_energy(&input, lambda, out.as_deref()),
        Command::Compare { common, format } => cmd_compare(&common, format),
        Command::CircuitDump { algorithm, lambda, tau, n_counting, repeated, k, omega, theta, m, counts, out } => {
            let params = HeisenbergParams::new(lambda)?;
            let c = dump_circuit(algorithm, params, tau, n_counting, repeated, (k, omega), (theta, m))?;
            let mut w = sink(out.as_deref())?;
            if counts {
                serde_json::to_writer_pretty(&mut w, &c.gate_count())?;
                writeln!(w)?;
            } else {
                writeln!(w, "{}", c.to_json()?)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
