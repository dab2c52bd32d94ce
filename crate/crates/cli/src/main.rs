use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quadsim::adaptive::Mode;
use quadsim::scenario::{parse_scenario, ScenarioConfig};
use quadsim::sim::{compare_modes, run_scenario, write_csv, SimError};
use quadsim::stability::LyapunovData;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "quadsim", version, about = "Quadruped balance simulation with L1 adaptive force control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Baseline,
    Adaptive,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and log every control tick.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides `controller.mode`.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Overrides `scenario.duration`, seconds.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary destination as `key = value` lines.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run baseline and adaptive modes and write both logs plus paired metrics.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solve the Lyapunov equation for the gains in a config file.
    Lyapunov {
        #[arg(long)]
        gains: PathBuf,
    },
}

enum Failure {
    Config(String),
    Diverged(String),
    Other(String),
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Stability(_) => Failure::Config(e.to_string()),
            SimError::Diverged { .. } => Failure::Diverged(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))
}

fn simulate(scenario: &Path, mode: Option<ModeArg>, duration: Option<f64>, out: Option<&Path>, summary: Option<&Path>) -> Result<(), Failure> {
    let mut cfg = load(scenario)?;
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::Baseline => Mode::Baseline,
            ModeArg::Adaptive => Mode::Adaptive,
        };
    }
    if let Some(d) = duration {
        cfg.duration = d;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    match run_scenario(&cfg) {
        Ok((records, s)) => {
            if let Some(p) = out {
                write_csv(&records, p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))?;
            }
            let kv = s.to_kv();
            if let Some(p) = summary {
                write(p, &kv)?;
            }
            print!("{kv}");
            Ok(())
        }
        Err(SimError::Diverged { t, reason, last_valid, records }) => {
            // Keep the partial log for post-mortems.
            if let Some(p) = out {
                write_csv(&records, p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))?;
            }
            Err(Failure::Diverged(format!("simulation diverged at t = {t:.4} s ({reason}); last valid record {last_valid:?}")))
        }
        Err(e) => Err(e.into()),
    }
}

fn compare(scenario: &Path, out_dir: &Path) -> Result<(), Failure> {
    let cfg = load(scenario)?;
    let cmp = compare_modes(&cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Failure::Other(format!("{}: {e}", out_dir.display())))?;
    for run in [&cmp.baseline, &cmp.adaptive] {
        let name = match run.mode {
            Mode::Baseline => "baseline.csv",
            Mode::Adaptive => "adaptive.csv",
        };
        let p = out_dir.join(name);
        write_csv(&run.records, &p).map_err(|e| Failure::Other(format!("{}: {e}", p.display())))?;
    }
    let kv = cmp.to_kv();
    write(&out_dir.join("comparison.txt"), &kv)?;
    print!("{kv}");
    Ok(())
}

fn lyapunov(gains: &Path) -> Result<(), Failure> {
    let cfg = load(gains)?;
    let l = LyapunovData::new(&cfg.controller.gains, &cfg.q_matrix()).map_err(|e| Failure::Config(e.to_string()))?;
    println!("residual = {:e}", l.residual);
    println!("lambda = {}", l.lambda);
    println!("p_min = {}", l.p_min);
    println!("p_max = {}", l.p_max);
    for i in 0..12 {
        let row: Vec<String> = (0..12).map(|j| format!("{:.9e}", l.p[(i, j)])).collect();
        println!("P[{i}] = {}", row.join(" "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { scenario, mode, duration, out, summary } => simulate(scenario, *mode, *duration, out.as_deref(), summary.as_deref()),
        Command::Compare { scenario, out_dir } => compare(scenario, out_dir),
        Command::Lyapunov { gains } => lyapunov(gains),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Diverged(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
