//! `capflow`: run, sweep, validate and inspect junction-network simulations.
//!
//! Exit codes: 0 success, 1 invalid input (bad flags, invalid scenario or
//! parameters), 2 I/O failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capflow::control::ControllerKind;
use capflow::engine::{explain, run, sweep, write_sweep_csv, SweepSpec};
use capflow::pressure::{PressureFunction, PressureParams};
use capflow::scenario::{load_scenario, parse_scenario, CANONICAL_FIXTURE_TEXTS};
use capflow::{Error, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "CAPFLOW_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "capflow",
    version,
    about = "Signalized junction networks with finite capacities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Controller {
    Fc,
    Bp,
    Bpc,
}

impl From<Controller> for ControllerKind {
    fn from(c: Controller) -> Self {
        match c {
            Controller::Fc => ControllerKind::FixedCycle,
            Controller::Bp => ControllerKind::BackPressure,
            Controller::Bpc => ControllerKind::CapacityAware,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its per-slot trace as CSV.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        controller: Option<Controller>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Trace CSV path; defaults to `<name>_<controller>_s<seed>.csv` in
        /// $CAPFLOW_OUT_DIR (or the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every (multiplier, seed, controller) combination and write one CSV row per run.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,0.8,1.0")]
        multipliers: Vec<f64>,
        /// Seed list, e.g. `1,2,3` or a range `1..=10`.
        #[arg(long, default_value = "1..=10")]
        seeds: String,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "fc,bp,bpc")]
        controllers: Vec<Controller>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file; exits 0 when valid, 1 otherwise.
    Validate { scenario: PathBuf },
    /// Show pressures, weights and phase objectives behind one decision.
    Explain {
        scenario: PathBuf,
        #[arg(long)]
        junction: String,
        #[arg(long, default_value_t = 0)]
        slot: u64,
        #[arg(long, value_enum)]
        controller: Option<Controller>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample the normalized pressure curve for several capacities as CSV.
    PressureTable {
        #[arg(long, default_value_t = 4.0)]
        m: f64,
        #[arg(long = "c-infinity", default_value_t = 500.0)]
        c_infinity: f64,
        #[arg(long, value_delimiter = ',', default_value = "50,100")]
        capacities: Vec<f64>,
        /// Points per curve, spread uniformly over [0, 1.5 C].
        #[arg(long, default_value_t = 301)]
        samples: usize,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the canonical scenarios as TOML files.
    Fixtures {
        /// Target directory; defaults to $CAPFLOW_OUT_DIR/fixtures or ./fixtures.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes, mapped onto exit codes.
enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Invalid(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Io(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Accepts paths with or without the `.toml` extension.
fn resolve_scenario_path(path: &Path) -> PathBuf {
    if path.exists() || path.extension().is_some() {
        return path.to_path_buf();
    }
    let mut with_ext = path.as_os_str().to_owned();
    with_ext.push(".toml");
    PathBuf::from(with_ext)
}

fn read_scenario_text(path: &Path) -> Result<String, Failure> {
    let path = resolve_scenario_path(path);
    fs::read_to_string(&path).map_err(|e| io_failure(&path, e))
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = read_scenario_text(path)?;
    load_scenario(&text).map_err(|e| Failure::Invalid(format!("{}:\n{e}", path.display())))
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn create_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| io_failure(dir, e)),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    create_parent(path)?;
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Invalid(format!("invalid seed list `{spec}`"));
    if let Some((lo, hi)) = spec.split_once("..=") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn apply_overrides(
    mut s: Scenario,
    controller: Option<Controller>,
    seed: Option<u64>,
    horizon: Option<u64>,
) -> Scenario {
    if let Some(c) = controller {
        s = s.with_controller(c.into());
    }
    if let Some(seed) = seed {
        s = s.with_seed(seed);
    }
    if let Some(h) = horizon {
        s = s.with_horizon(h);
    }
    s
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            scenario,
            controller,
            seed,
            horizon,
            out,
        } => {
            let s = apply_overrides(load(&scenario)?, controller, seed, horizon);
            let trace = run(&s)?;
            let out = out.unwrap_or_else(|| {
                let stem = if s.name.is_empty() { "scenario" } else { &s.name };
                default_out_dir().join(format!(
                    "{stem}_{}_s{}.csv",
                    s.controllers.kind.short_name(),
                    s.run.seed
                ))
            });
            write_file(&out, trace.to_csv_string().as_bytes())?;
            let last = trace.last().expect("horizon >= 1");
            println!(
                "{} controller={} seed={} slots={} final_total_queue={} mean_avg_time_spent_s={:.3} wc_violations={} trace={}",
                if s.name.is_empty() { "scenario" } else { &s.name },
                s.controllers.kind.short_name(),
                s.run.seed,
                trace.rows.len(),
                last.total_queue,
                trace.mean_avg_time_spent_seconds(),
                trace.total_violations(),
                out.display()
            );
            Ok(())
        }
        Command::Sweep {
            scenario,
            multipliers,
            seeds,
            controllers,
            horizon,
            jobs,
            out,
        } => {
            let s = apply_overrides(load(&scenario)?, None, None, horizon);
            let kinds: Vec<ControllerKind> = controllers.iter().map(|&c| c.into()).collect();
            for (i, k) in kinds.iter().enumerate() {
                if kinds[..i].contains(k) {
                    return Err(Failure::Invalid(format!("controller `{}` given twice", k.short_name())));
                }
            }
            let spec = SweepSpec {
                multipliers,
                seeds: parse_seeds(&seeds)?,
                controllers: kinds,
                jobs,
            };
            let cells = sweep(&s, &spec)?;
            let mut buf = Vec::new();
            write_sweep_csv(&cells, &mut buf)?;
            let out = out.unwrap_or_else(|| {
                let stem = if s.name.is_empty() { "scenario" } else { &s.name };
                default_out_dir().join(format!("{stem}_sweep.csv"))
            });
            write_file(&out, &buf)?;
            println!("{} runs written to {}", cells.len(), out.display());
            Ok(())
        }
        Command::Validate { scenario } => {
            let text = read_scenario_text(&scenario).map_err(|f| Failure::Invalid(f.message().to_string()))?;
            match parse_scenario(&text).and_then(|d| d.resolve()) {
                Ok(s) => {
                    println!(
                        "{}: valid ({} junctions, {} slots)",
                        scenario.display(),
                        s.topology.junctions.len(),
                        s.run.horizon
                    );
                    Ok(())
                }
                Err(e) => Err(Failure::Invalid(format!("{}:\n{e}", scenario.display()))),
            }
        }
        Command::Explain {
            scenario,
            junction,
            slot,
            controller,
            seed,
        } => {
            let s = apply_overrides(load(&scenario)?, controller, seed, None);
            println!("{}", explain(&s, &junction, slot)?);
            Ok(())
        }
        Command::PressureTable {
            m,
            c_infinity,
            capacities,
            samples,
            out,
        } => {
            let params = PressureParams::new(m, c_infinity)?;
            let f = PressureFunction::Normalized(params);
            if samples < 2 {
                return Err(Failure::Invalid("--samples must be at least 2".into()));
            }
            let mut text = String::from("capacity,q,pressure\n");
            for &c in &capacities {
                let mut qs: Vec<f64> = (0..samples)
                    .map(|i| 1.5 * c * i as f64 / (samples - 1) as f64)
                    .collect();
                // the saturation point is always sampled exactly
                if !qs.contains(&c) {
                    qs.push(c);
                    qs.sort_by(f64::total_cmp);
                }
                for q in qs {
                    let p = f.evaluate(q, c)?;
                    text.push_str(&format!("{c},{q},{p}\n"));
                }
            }
            match out {
                Some(path) => write_file(&path, text.as_bytes()),
                None => io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| Failure::Io(e.to_string())),
            }
        }
        Command::Fixtures { out } => {
            let dir = out.unwrap_or_else(|| default_out_dir().join("fixtures"));
            fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
            for (name, text) in CANONICAL_FIXTURE_TEXTS {
                let path = dir.join(format!("{name}.toml"));
                write_file(&path, text.as_bytes())?;
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
