//! `ckpd`: run, validate and generate peridynamic fracture scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ckpd_core::scenario::{self, Preset, Scale, ScenarioConfig};
use ckpd_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ckpd", version, about = "Peridynamic fracture and impact simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write snapshots plus report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the configured one, resolved
        /// against the config file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        steps: Option<u64>,
        /// Fixed time step in seconds, replacing the configured one.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        snapshot_every: Option<u64>,
    },
    /// Write a ready-to-run scenario file for a reference problem.
    Preset {
        /// One of mode1-2d, mode1-3d, curved-bar-2d, curved-bar-3d, impact.
        name: Preset,
        /// Directory receiving `<name>.toml`.
        #[arg(long)]
        out: PathBuf,
        /// `full` for the reference resolution, `coarse` for a desk run.
        #[arg(long, default_value = "full")]
        scale: Scale,
    },
    /// Check a scenario file and print its derived constants.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failure classes mapped to the exit status.
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn invalid(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }

    fn runtime(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            threads,
            steps,
            dt,
            snapshot_every,
        } => run(&config, out, threads, steps, dt, snapshot_every),
        Command::Preset { name, out, scale } => preset(name, &out, scale),
        Command::Validate { config } => validate(&config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Loads a config and resolves its relative paths against the file's directory.
fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path).map_err(Failure::invalid)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if cfg.output.directory.is_relative() {
        cfg.output.directory = base.join(&cfg.output.directory);
    }
    if let Some(cache) = cfg.output.table_cache.as_mut().filter(|c| c.is_relative()) {
        *cache = base.join(&*cache);
    }
    Ok(cfg)
}

fn run(
    config: &Path,
    out: Option<PathBuf>,
    threads: Option<usize>,
    steps: Option<u64>,
    dt: Option<f64>,
    snapshot_every: Option<u64>,
) -> Result<(), Failure> {
    let mut cfg = load(config)?;
    if let Some(n) = steps {
        cfg.simulation.steps = n;
    }
    if let Some(dt) = dt {
        cfg.simulation.dt = Some(dt);
    }
    if let Some(k) = snapshot_every {
        cfg.simulation.snapshot_every = k;
    }
    cfg.validate().map_err(Failure::invalid)?;
    eprint!("{}", cfg.describe().map_err(Failure::invalid)?);

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Invalid("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker threads: {e}")))?;

    pool.install(|| {
        let mut sim = scenario::build_simulation(&cfg).map_err(Failure::invalid)?;
        let report = scenario::run_built(&mut sim, &cfg, out.as_deref()).map_err(Failure::runtime)?;
        let dir = out.as_deref().unwrap_or(&cfg.output.directory);
        println!(
            "{} steps, t={:e} s, {} of {} links broken, max damage {}, output in {}",
            report.steps,
            report.final_time,
            report.total_broken,
            report.links,
            report.max_damage,
            dir.display()
        );
        Ok(())
    })
}

fn preset(name: Preset, out: &Path, scale: Scale) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    let cfg = name.config(scale);
    let path = out.join(format!("{name}.toml"));
    fs::write(&path, cfg.to_toml()).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    println!("{}", path.display());
    Ok(())
}

fn validate(config: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    print!("{}", cfg.describe().map_err(Failure::invalid)?);
    println!("ok");
    Ok(())
}
