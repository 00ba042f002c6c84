//! Scenario driver: one topology, several power-control modes, one report.

mod emit;

pub use emit::{emit, OutputFormat, CDF_HEADER, LINKS_HEADER, POWERS_HEADER, SUMMARY_HEADER, TRACE_HEADER};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::channel::{build_gain_matrix, NoiseFloor, PathLossModel, RadioEnv, STRATEGY_MAX};
use crate::error::{Error, Result};
use crate::game::{feasibility, potential, solve, verify_equilibrium, EquilibriumCheck, EquilibriumResult, GameParams};
use crate::packet_sim::{metrics, simulate, LinkClass, Metrics, TrafficConfig, TransmissionLog};
use crate::profile::StrategyProfile;
use crate::quantizer::{discretize_profile, quantize, solve_discrete, to_register, QuantizerSpec, RegisterMap};
use crate::topology::{
    adjacency_from_prr, is_connected_bfs, is_connected_spectral, random_topology, Area, SpectralConnectivity, Topology,
};

/// First seed whose 80-node default layout is connected at full power.
pub const DEFAULT_SEED: u64 = 6;

/// Deviation allowed by the equilibrium certificate in reports.
pub const CERTIFICATE_EPSILON: f64 = 1e-4;
pub const CERTIFICATE_GRID_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Continuous,
    DiscretizedPosthoc,
    DiscretizedGame,
    FullPower,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Continuous, Mode::DiscretizedPosthoc, Mode::DiscretizedGame, Mode::FullPower];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Continuous => "continuous",
            Mode::DiscretizedPosthoc => "discretized-posthoc",
            Mode::DiscretizedGame => "discretized-game",
            Mode::FullPower => "full-power",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratedTopology {
    pub nodes: usize,
    pub width: f64,
    pub height: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyPath {
    pub file: PathBuf,
}

/// Either a random layout or a topology file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Generated(GeneratedTopology),
    File(TopologyPath),
}

impl TopologySpec {
    pub fn resolve(&self) -> Result<Topology<f64>> {
        match self {
            TopologySpec::Generated(g) => random_topology(g.nodes, Area::new(g.width, g.height)?, g.seed),
            TopologySpec::File(p) => load_topology(&p.file),
        }
    }
}

pub fn load_topology(path: &Path) -> Result<Topology<f64>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn save_topology(topology: &Topology<f64>, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(topology)? + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub topology: TopologySpec,
    pub path_loss: PathLossModel<f64>,
    pub noise_floor_dbm: f64,
    /// Mean fraction of time another node is on air.
    pub interference_activity: f64,
    pub strategy_min: f64,
    pub strategy_max: f64,
    /// Strategy every node starts the dynamics from.
    pub initial_strategy: f64,
    pub game: GameParams<f64>,
    pub quantizer: QuantizerSpec<f64>,
    pub traffic: TrafficConfig,
    pub modes: Vec<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    /// 80 nodes on 100 m x 100 m, 30 retries.
    fn default() -> Self {
        Self {
            topology: TopologySpec::Generated(GeneratedTopology {
                nodes: 80,
                width: 100.0,
                height: 100.0,
                seed: DEFAULT_SEED,
            }),
            path_loss: PathLossModel::default(),
            noise_floor_dbm: -100.0,
            interference_activity: 5e-4,
            strategy_min: 0.5,
            strategy_max: STRATEGY_MAX,
            initial_strategy: STRATEGY_MAX,
            game: GameParams::default(),
            quantizer: QuantizerSpec::default(),
            traffic: TrafficConfig::simulation(),
            modes: Mode::ALL.to_vec(),
            output_dir: None,
        }
    }
}

impl ScenarioConfig {
    /// 3 retries and a 2 s message period.
    pub fn testbed() -> Self {
        Self {
            traffic: TrafficConfig::testbed(),
            ..Self::default()
        }
    }

    /// 10 nodes on 30 m x 30 m.
    pub fn desk(seed: u64) -> Self {
        Self {
            topology: TopologySpec::Generated(GeneratedTopology {
                nodes: 10,
                width: 30.0,
                height: 30.0,
                seed,
            }),
            ..Self::default()
        }
        .with_seed(seed)
    }

    /// Replaces every seed in the scenario.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let TopologySpec::Generated(g) = &mut self.topology {
            g.seed = seed;
        }
        self.path_loss.seed = seed;
        self.traffic.seed = seed;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks the whole config and returns the topology it describes.
    pub fn validate(&self) -> Result<Topology<f64>> {
        let bad = |e: Error| Error::InvalidConfig(e.to_string());
        if self.modes.is_empty() {
            return Err(Error::InvalidConfig("at least one mode must be selected".into()));
        }
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        if modes.len() != self.modes.len() {
            return Err(Error::InvalidConfig("modes must not repeat".into()));
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(Error::InvalidConfig("noise_floor_dbm must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.interference_activity) {
            return Err(Error::InvalidConfig("interference_activity must lie in [0, 1]".into()));
        }
        if self.strategy_max != STRATEGY_MAX {
            return Err(Error::InvalidConfig("strategy_max must be 25 (0 dBm)".into()));
        }
        StrategyProfile::uniform(1, self.initial_strategy, self.strategy_min, self.strategy_max).map_err(bad)?;
        self.path_loss.validate().map_err(bad)?;
        self.traffic.validate().map_err(bad)?;
        self.quantizer
            .levels_dbm
            .restricted_to(self.strategy_min, self.strategy_max)
            .map_err(bad)?;
        let registers = self.quantizer.register_map().map_err(bad)?;
        if self.quantizer.levels_dbm.levels().iter().any(|&l| to_register(l, &registers).is_err()) {
            return Err(Error::InvalidConfig("every level needs a register id".into()));
        }
        let topology = self.topology.resolve().map_err(bad)?;
        self.game.validate(topology.len()).map_err(bad)?;
        Ok(topology)
    }

    pub fn environment(&self, topology: &Topology<f64>) -> Result<RadioEnv<f64>> {
        let gains = build_gain_matrix(&topology.positions, &self.path_loss)?;
        RadioEnv::new(gains, NoiseFloor::from_dbm(self.noise_floor_dbm)?, self.interference_activity)
    }

    fn initial_profile(&self, n: usize) -> Result<StrategyProfile<f64>> {
        StrategyProfile::uniform(n, self.initial_strategy, self.strategy_min, self.strategy_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub bfs: bool,
    pub spectral: SpectralConnectivity,
}

impl Connectivity {
    pub fn connected(&self) -> bool {
        self.bfs && self.spectral.connected
    }

    pub fn agree(&self) -> bool {
        self.bfs == self.spectral.connected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub sweeps_used: usize,
    pub potential_trace: Vec<f64>,
    pub descending_updates: usize,
    pub min_update_delta: f64,
    pub non_unimodal_scans: usize,
}

impl Convergence {
    fn from_result(r: &EquilibriumResult<f64>) -> Self {
        Self {
            converged: r.converged,
            sweeps_used: r.sweeps_used,
            potential_trace: r.potential_trace.clone(),
            descending_updates: r.descending_updates,
            min_update_delta: r.min_update_delta,
            non_unimodal_scans: r.non_unimodal_scans,
        }
    }
}

/// A link that carried traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub i: usize,
    pub j: usize,
    pub analytic_prr: f64,
    pub empirical_prr: f64,
    pub class: LinkClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: Mode,
    pub strategies: Vec<f64>,
    pub dbm: Vec<f64>,
    pub mw: Vec<f64>,
    pub register_ids: Vec<Option<u32>>,
    pub potential: f64,
    /// Absent for the fixed full-power profile.
    pub convergence: Option<Convergence>,
    /// Strategies at the start and after every sweep.
    pub power_trace: Vec<Vec<f64>>,
    pub infeasible_nodes: Vec<usize>,
    pub equilibrium_check: Option<EquilibriumCheck<f64>>,
    pub connectivity: Connectivity,
    /// Unweighted mean analytic PRR over the links that carried traffic.
    pub avg_analytic_prr: f64,
    /// Mean over all nodes of the analytic PRR of their outgoing traffic;
    /// a node without any neighbour counts as 0.
    pub sender_analytic_prr: f64,
    pub links: Vec<LinkReport>,
    pub metrics: Metrics,
    pub transmissions: TransmissionLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDelta {
    pub first: Mode,
    pub second: Mode,
    /// `first - second`, percentage points of empirical PRR.
    pub delta_avg_prr_pp: f64,
    pub delta_analytic_prr_pp: f64,
    pub delta_sender_analytic_prr_pp: f64,
    pub delta_relative_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ScenarioConfig,
    pub topology: Topology<f64>,
    pub full_power_connectivity: Connectivity,
    /// The network cannot be connected even at full power.
    pub full_power_disconnected: bool,
    pub modes: Vec<ModeReport>,
    pub deltas: Vec<ModeDelta>,
}

impl SimulationReport {
    pub fn mode(&self, mode: Mode) -> Result<&ModeReport> {
        self.modes
            .iter()
            .find(|m| m.mode == mode)
            .ok_or_else(|| Error::MissingMode(mode.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `first` minus `second` for two mode sections, possibly of different
/// reports over the same topology.
pub fn compare(a: &SimulationReport, first: Mode, b: &SimulationReport, second: Mode) -> Result<ModeDelta> {
    if a.topology != b.topology {
        return Err(Error::TopologyMismatch);
    }
    Ok(mode_delta(a.mode(first)?, b.mode(second)?))
}

fn mode_delta(x: &ModeReport, y: &ModeReport) -> ModeDelta {
    ModeDelta {
        first: x.mode,
        second: y.mode,
        delta_avg_prr_pp: 100.0 * (x.metrics.avg_prr - y.metrics.avg_prr),
        delta_analytic_prr_pp: 100.0 * (x.avg_analytic_prr - y.avg_analytic_prr),
        delta_sender_analytic_prr_pp: 100.0 * (x.sender_analytic_prr - y.sender_analytic_prr),
        delta_relative_energy: x.metrics.relative_energy - y.metrics.relative_energy,
    }
}

fn connectivity(prr: &[Vec<f64>], epsilon_link: f64) -> Connectivity {
    let adj = adjacency_from_prr(prr, epsilon_link);
    Connectivity {
        bfs: is_connected_bfs(&adj),
        spectral: is_connected_spectral(&adj),
    }
}

struct ModeInput {
    mode: Mode,
    profile: StrategyProfile<f64>,
    solved: Option<EquilibriumResult<f64>>,
}

struct Shared<'a> {
    config: &'a ScenarioConfig,
    env: &'a RadioEnv<f64>,
    registers: &'a RegisterMap<f64>,
}

fn mode_report(input: ModeInput, sh: &Shared<'_>) -> Result<ModeReport> {
    let cfg = sh.config;
    let params = &cfg.game;
    let profile = &input.profile;
    let dbm = profile.dbm();
    let register_ids = dbm
        .iter()
        .map(|&d| to_register(quantize(d, &cfg.quantizer.levels_dbm), sh.registers).ok())
        .collect();

    let analytic = sh.env.prr_matrix(&profile.powers_mw(), cfg.traffic.payload_f_bytes);
    let log = simulate(profile, sh.env, &cfg.traffic, params.epsilon_link)?;
    let metrics = metrics(&log)?;
    let links: Vec<LinkReport> = metrics
        .per_link_prr
        .iter()
        .map(|l| LinkReport {
            i: l.sender,
            j: l.receiver,
            analytic_prr: analytic[l.sender][l.receiver],
            empirical_prr: l.prr,
            class: LinkClass::of(l.prr),
        })
        .collect();
    let avg_analytic_prr = if links.is_empty() {
        0.0
    } else {
        links.iter().map(|l| l.analytic_prr).sum::<f64>() / links.len() as f64
    };

    let n = profile.len();
    let mut per_sender = vec![(0.0, 0usize); n];
    for l in &links {
        per_sender[l.i].0 += l.analytic_prr;
        per_sender[l.i].1 += 1;
    }
    let sender_analytic_prr = per_sender
        .iter()
        .map(|&(sum, k)| if k == 0 { 0.0 } else { sum / k as f64 })
        .sum::<f64>()
        / n as f64;

    let (convergence, power_trace, infeasible_nodes) = match &input.solved {
        Some(r) => (
            Some(Convergence::from_result(r)),
            r.power_trace.clone(),
            (0..r.per_node_feasible.len()).filter(|&i| !r.per_node_feasible[i]).collect(),
        ),
        None => {
            let ok = feasibility(profile, sh.env, params);
            (None, vec![profile.strategies().to_vec()], (0..ok.len()).filter(|&i| !ok[i]).collect())
        }
    };
    let equilibrium_check = (input.mode == Mode::Continuous)
        .then(|| verify_equilibrium(profile, sh.env, params, CERTIFICATE_EPSILON, CERTIFICATE_GRID_STEP));

    Ok(ModeReport {
        mode: input.mode,
        strategies: profile.strategies().to_vec(),
        mw: profile.powers_mw(),
        dbm,
        register_ids,
        potential: potential(profile, sh.env, params),
        convergence,
        power_trace,
        infeasible_nodes,
        equilibrium_check,
        connectivity: connectivity(&analytic, params.epsilon_link),
        avg_analytic_prr,
        sender_analytic_prr,
        links,
        metrics,
        transmissions: log,
    })
}

/// Runs every selected mode on the scenario. Game solves run on separate
/// threads; the report lists modes in the configured order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimulationReport> {
    let topology = config.validate()?;
    let env = config.environment(&topology)?;
    let registers = config.quantizer.register_map()?;
    let n = topology.len();
    let params = &config.game;
    let start = config.initial_profile(n)?;
    let wants = |m: Mode| config.modes.contains(&m);

    let (continuous, discrete) = thread::scope(|s| {
        let c = (wants(Mode::Continuous) || wants(Mode::DiscretizedPosthoc)).then(|| s.spawn(|| solve(&start, &env, params)));
        let d = wants(Mode::DiscretizedGame)
            .then(|| s.spawn(|| solve_discrete(&start, &env, params, &config.quantizer.levels_dbm)));
        (
            c.map(|h| h.join().expect("continuous solve panicked")),
            d.map(|h| h.join().expect("discrete solve panicked")),
        )
    });
    let discrete = discrete.transpose()?;

    let full = StrategyProfile::uniform(n, STRATEGY_MAX, config.strategy_min, config.strategy_max)?;
    let full_power_connectivity = connectivity(
        &env.prr_matrix(&full.powers_mw(), config.traffic.payload_f_bytes),
        params.epsilon_link,
    );

    let mut inputs = Vec::with_capacity(config.modes.len());
    for &mode in &config.modes {
        let input = match mode {
            Mode::Continuous => {
                let r = continuous.clone().expect("solved above");
                ModeInput {
                    mode,
                    profile: r.profile.clone(),
                    solved: Some(r),
                }
            }
            Mode::DiscretizedPosthoc => {
                let r = continuous.as_ref().expect("solved above");
                ModeInput {
                    mode,
                    profile: discretize_profile(&r.profile, &config.quantizer.levels_dbm)?,
                    solved: None,
                }
            }
            Mode::DiscretizedGame => {
                let r = discrete.clone().expect("solved above");
                ModeInput {
                    mode,
                    profile: r.profile.clone(),
                    solved: Some(r),
                }
            }
            Mode::FullPower => ModeInput {
                mode,
                profile: full.clone(),
                solved: None,
            },
        };
        inputs.push(input);
    }

    let shared = Shared {
        config,
        env: &env,
        registers: &registers,
    };
    let modes: Vec<ModeReport> = thread::scope(|s| {
        let handles: Vec<_> = inputs
            .into_iter()
            .map(|input| {
                let shared = &shared;
                s.spawn(move || mode_report(input, shared))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mode report panicked"))
            .collect::<Result<_>>()
    })?;

    let mut deltas = Vec::new();
    for a in 0..modes.len() {
        for b in (a + 1)..modes.len() {
            deltas.push(mode_delta(&modes[a], &modes[b]));
        }
    }

    let mut echoed = config.clone();
    echoed.output_dir = None;
    Ok(SimulationReport {
        config: echoed,
        topology,
        full_power_disconnected: !full_power_connectivity.connected(),
        full_power_connectivity,
        modes,
        deltas,
    })
}
