use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use wsn_powergame::experiment::{compare, emit, load_topology, save_topology, run_scenario, Mode, OutputFormat};
use wsn_powergame::{random_topology, Area, ScenarioConfig, SimulationReport};

#[derive(Parser)]
#[command(name = "powergame", version, about = "Transmit power control game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 80 nodes, 100 m x 100 m, 30 retries
    Default,
    /// as default with 3 retries
    Testbed,
    /// 10 nodes, 30 m x 30 m
    Desk,
}

impl Preset {
    fn config(self) -> ScenarioConfig {
        match self {
            Preset::Default => ScenarioConfig::default(),
            Preset::Testbed => ScenarioConfig::testbed(),
            Preset::Desk => ScenarioConfig::desk(1),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random node layout as JSON.
    GenerateTopology {
        #[arg(long, default_value_t = 80)]
        nodes: usize,
        #[arg(long, default_value_t = 100.0)]
        width: f64,
        #[arg(long, default_value_t = 100.0)]
        height: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario and write its report.
    Run {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Output directory; falls back to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of continuous, discretized-posthoc,
        /// discretized-game, full-power.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<String>>,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long, value_enum, default_value = "all")]
        format: Format,
    },
    /// Deltas between two mode sections (first minus second).
    Compare {
        report: PathBuf,
        /// Second report; the first one is reused when absent.
        other: Option<PathBuf>,
        /// Exactly two modes: first,second.
        #[arg(long, value_delimiter = ',', required = true)]
        modes: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_report(path: &PathBuf) -> Result<SimulationReport> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SimulationReport::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_modes(names: &[String]) -> Result<Vec<Mode>> {
    Ok(names.iter().map(|s| s.trim().parse()).collect::<Result<_, _>>()?)
}

fn write_or_print(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateTopology {
            nodes,
            width,
            height,
            seed,
            out,
        } => {
            let topo = random_topology(nodes, Area::new(width, height)?, seed)?;
            match out {
                Some(path) => {
                    save_topology(&topo, &path)?;
                    // reading it back catches a layout the loader would refuse
                    load_topology(&path)?;
                }
                None => println!("{}", serde_json::to_string_pretty(&topo)?),
            }
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let topo = cfg.validate()?;
            let modes: Vec<&str> = cfg.modes.iter().map(|m| m.as_str()).collect();
            println!("ok: {} nodes, modes {}", topo.len(), modes.join(","));
        }
        Command::Run {
            config,
            preset,
            out,
            modes,
            seed_override,
            format,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => ScenarioConfig::load(&path).with_context(|| format!("loading {}", path.display()))?,
                (None, Some(p)) => p.config(),
                (None, None) => ScenarioConfig::default(),
            };
            if let Some(m) = modes {
                cfg.modes = parse_modes(&m)?;
            }
            if let Some(seed) = seed_override {
                cfg = cfg.with_seed(seed);
            }
            let Some(dir) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!("no output directory: pass --out or set output_dir");
            };
            let report = run_scenario(&cfg)?;
            let format = match format {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
                Format::All => OutputFormat::All,
            };
            let files = emit(&report, &dir, format).with_context(|| format!("writing to {}", dir.display()))?;
            if report.full_power_disconnected {
                eprintln!("warning: topology is disconnected even at full power");
            }
            for m in &report.modes {
                let conv = m
                    .convergence
                    .as_ref()
                    .map(|c| format!(" sweeps={} converged={}", c.sweeps_used, c.converged))
                    .unwrap_or_default();
                println!(
                    "{:<20} avg_prr={:.4} analytic_prr={:.4} sender_prr={:.4} relative_energy={:.4} connected={}{conv}",
                    m.mode.as_str(),
                    m.metrics.avg_prr,
                    m.avg_analytic_prr,
                    m.sender_analytic_prr,
                    m.metrics.relative_energy,
                    m.connectivity.connected()
                );
            }
            println!("wrote {} files to {}", files.len(), dir.display());
        }
        Command::Compare {
            report,
            other,
            modes,
            out,
        } => {
            let modes = parse_modes(&modes)?;
            let [first, second] = modes[..] else {
                bail!("--modes takes exactly two modes");
            };
            let a = read_report(&report)?;
            let b = match &other {
                Some(p) => read_report(p)?,
                None => a.clone(),
            };
            let delta = compare(&a, first, &b, second)?;
            write_or_print(&(serde_json::to_string_pretty(&delta)? + "\n"), out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
