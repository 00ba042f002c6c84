//! Non-cooperative transmit power control for wireless sensor networks.
//!
//! Each node picks a transmit power trading neighbourhood link quality
//! against energy. The crate models the radio channel, the resulting
//! topology, the game and its best-response dynamics, discretisation onto
//! real transceiver levels, and a packet-level check of the outcome.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod error;
pub mod experiment;
pub mod game;
pub mod packet_sim;
pub mod profile;
pub mod quantizer;
pub mod scalar;
pub mod topology;

pub use channel::{
    ber, build_gain_matrix, link_prr, prr, sinr, ChannelGainMatrix, NoiseFloor, PathLossModel, Position, RadioEnv,
    TxPower, STRATEGY_MAX,
};
pub use error::{Error, Result};
pub use experiment::{compare, emit, run_scenario, Mode, OutputFormat, ScenarioConfig, SimulationReport};
pub use game::{
    best_response, exact_potential_residual, gauss_seidel_sweep, ncr, potential, solve, utilities, utility,
    verify_equilibrium, BestResponse, EquilibriumResult, GameParams, NcrDenominator, UpdateOrder,
};
pub use packet_sim::{empirical_prr, link_cdf, relative_energy, simulate, Metrics, TrafficConfig, TransmissionLog};
pub use profile::StrategyProfile;
pub use quantizer::{
    discrete_best_response, discretize_profile, quantize, solve_discrete, to_register, DiscreteLevelSet, QuantizerSpec,
    RegisterMap,
};
pub use scalar::Scalar;
pub use topology::{
    adjacency, is_connected_bfs, is_connected_spectral, min_power_for_degree, neighbor_set, random_topology,
    rgg_degree_threshold, smallworld_threshold, AdjacencyMatrix, Area, DegreeFloor, DegreeRule, NeighborSet,
    SmallWorldParams, Topology,
};

pub type GainMatrix = ChannelGainMatrix<f64>;
pub type Profile = StrategyProfile<f64>;
pub type Env = RadioEnv<f64>;
pub type Params = GameParams<f64>;
pub type Levels = DiscreteLevelSet<f64>;
pub type Equilibrium = EquilibriumResult<f64>;
