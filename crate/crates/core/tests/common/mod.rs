#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsn_powergame::{Env, Params, Profile, ScenarioConfig, Topology};

/// Desk layouts (10 nodes, 30 m x 30 m) that are connected at full power.
pub const CONNECTED_DESK_SEEDS: [u64; 5] = [1, 2, 3, 4, 6];

pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: Topology<f64>,
    pub env: Env,
    pub params: Params,
    pub start: Profile,
}

pub fn scenario(config: ScenarioConfig) -> Scenario {
    let topology = config.validate().expect("valid scenario");
    let env = config.environment(&topology).expect("environment");
    let start = Profile::uniform(topology.len(), config.initial_strategy, config.strategy_min, config.strategy_max)
        .expect("start profile");
    Scenario {
        params: config.game.clone(),
        config,
        topology,
        env,
        start,
    }
}

pub fn desk(seed: u64) -> Scenario {
    scenario(ScenarioConfig::desk(seed))
}

pub fn random_profile(rng: &mut ChaCha8Rng, n: usize, s_min: f64, s_max: f64) -> Profile {
    let s = (0..n).map(|_| rng.random_range(s_min..=s_max)).collect();
    Profile::new(s, s_min, s_max).expect("profile inside bounds")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
