use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use ded2d::experiment::{self, emit_reports, fmt_sig, Manifest, RunStatus, SweepSpec, ThroughputUnit};
use ded2d::sca::{Algorithm, AlgorithmOptions};
use ded2d::scenario::ScenarioConfig;
use ded2d::{verify, Error};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "ded2d", version, about = "Max-min IU throughput for IRS-aided data/energy networks with D2D pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// Defaults with the energy threshold lowered to a reachable level.
    Calibrated,
    /// Defaults exactly, including e_min = 0 dBm.
    Strict,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML scenario file; missing keys take the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in parameter set used when no config file is given.
    #[arg(long, value_enum, default_value = "calibrated")]
    profile: Profile,
    /// Parameter overrides, e.g. `--set p_b_max_dbm=15`.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    /// Report throughput in nats/s/Hz instead of bps/Hz.
    #[arg(long)]
    nats: bool,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Report the relaxed point instead of projecting θ to unit modulus.
    #[arg(long)]
    no_projection: bool,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match (&self.config, self.profile) {
            (Some(path), _) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            (None, Profile::Calibrated) => ScenarioConfig::calibrated(),
            (None, Profile::Strict) => ScenarioConfig::default(),
        };
        for o in &self.overrides {
            let (name, value) = o.split_once('=').with_context(|| format!("override '{o}' is not NAME=VALUE"))?;
            let value: f64 = value.trim().parse().with_context(|| format!("override '{o}' has a non-numeric value"))?;
            cfg.set_param(name.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> AlgorithmOptions {
        AlgorithmOptions { max_outer_iters: self.max_iters, convergence_tol: self.tol, projection_enabled: !self.no_projection, ..Default::default() }
    }

    fn unit(&self) -> ThroughputUnit {
        if self.nats {
            ThroughputUnit::Nats
        } else {
            ThroughputUnit::BpsHz
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one channel seed.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "nota", value_parser = parse_algorithm)]
        algo: Algorithm,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory for the trace, raw record and manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter over several seeds and algorithms.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Parameter name, e.g. p_b_max_dbm, r_k_min_bps, K, N, M.
        #[arg(long, required_unless_present = "manifest")]
        param: Option<String>,
        /// Comma-separated ascending values.
        #[arg(long, value_delimiter = ',', required_unless_present = "manifest")]
        values: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// First channel seed.
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "nota,nota-random,ota,ota-random", value_parser = parse_algorithm)]
        algos: Vec<Algorithm>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
        /// Re-run the sweep recorded in a manifest; other sweep options are ignored.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run the conic, minorant, template and oracle self-checks.
    Verify,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    Algorithm::parse(s).map_err(|e| e.to_string())
}

fn workers(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1)
}

fn print_summary(result: &experiment::SweepResult, unit: ThroughputUnit) {
    println!("{:<12} {:>12} {:>9} {:>14} {:>14} {:>8}", "algorithm", "value", "feasible", format!("mean {}", unit.column()), "std", "iters");
    for p in result.summary(unit) {
        println!(
            "{:<12} {:>12} {:>5}/{:<3} {:>14} {:>14} {:>8}",
            p.algorithm.name(),
            fmt_sig(p.value),
            p.feasible,
            p.seeds,
            fmt_sig(p.mean),
            fmt_sig(p.std),
            fmt_sig(p.mean_iterations)
        );
    }
}

fn write_reports(result: &experiment::SweepResult, out: &Path, unit: ThroughputUnit) -> anyhow::Result<()> {
    let files = emit_reports(result, out, unit).with_context(|| format!("writing reports to {}", out.display()))?;
    eprintln!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn run_command(cfg_args: &ConfigArgs, algo: Algorithm, seed: u64, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let mut base = cfg_args.load()?;
    base.rng_seed = seed;
    let spec = SweepSpec {
        param: "rng_seed".into(),
        values: vec![seed as f64],
        base,
        seeds: 1,
        algorithms: vec![algo],
        options: cfg_args.options(),
    };
    let result = experiment::run_sweep(&spec)?;
    let unit = cfg_args.unit();
    let rec = &result.runs[0];
    let record = serde_json::json!({
        "algorithm": algo.name(),
        "seed": seed,
        "status": rec.status,
        "throughput_nats": rec.throughput_nats,
        "throughput_bps_hz": rec.throughput(ThroughputUnit::BpsHz),
        "iterations": rec.iterations,
        "feas_rounds": rec.feas_rounds,
        "termination": rec.termination,
        "projection_warning": rec.projection_warning,
        "relaxed_min_theta": rec.relaxed_min_theta,
        "max_violation": rec.max_violation,
        "wall_secs": rec.wall_secs,
        "message": rec.message,
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    if let Some(dir) = out {
        write_reports(&result, dir, unit)?;
    }
    Ok(match rec.status {
        RunStatus::Ok => ExitCode::SUCCESS,
        RunStatus::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
        RunStatus::SolverFailure => ExitCode::from(EXIT_SOLVER),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { cfg, algo, seed, out } => run_command(&cfg, algo, seed, out.as_deref()),
        Command::Sweep { cfg, param, values, seeds, first_seed, algos, out, workers: w, manifest } => (|| {
            let (spec, unit) = match manifest {
                Some(path) => {
                    let m = Manifest::load(&path)?;
                    (m.spec, m.unit)
                }
                None => {
                    let mut base = cfg.load()?;
                    base.rng_seed = first_seed;
                    let Some(param) = param else { bail!("--param is required") };
                    let spec = SweepSpec { param, values, base, seeds, algorithms: algos, options: cfg.options() };
                    (spec, cfg.unit())
                }
            };
            let result = experiment::run_sweep_with_workers(&spec, workers(w))?;
            print_summary(&result, unit);
            write_reports(&result, &out, unit)?;
            Ok(ExitCode::SUCCESS)
        })(),
        Command::Verify => {
            let outcomes = verify::run_all();
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            for o in &outcomes {
                println!("{} {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            println!("{} checks, {} failed", outcomes.len(), failed);
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Infeasible(_)) => ExitCode::from(EXIT_INFEASIBLE),
                Some(Error::Solver(_)) => ExitCode::from(EXIT_SOLVER),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
