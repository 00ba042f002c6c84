mod common;

use wsn_powergame::packet_sim::{empirical_prr, metrics, simulate_with_prr};
use wsn_powergame::{relative_energy, simulate, Profile, TrafficConfig};

fn half_link() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.5], vec![0.5, 0.0]]
}

#[test]
fn half_link_first_attempt_rate() {
    let traffic = TrafficConfig {
        messages_per_node: 20_000,
        max_retries: 0,
        ..TrafficConfig::simulation()
    };
    let log = simulate_with_prr(&half_link(), &[0.0, 0.0], &traffic, 0.01).unwrap();
    let est = empirical_prr(&log).unwrap();
    // binomial sd for 40k draws at p = 0.5 is 0.0025
    assert!((est.avg_prr - 0.5).abs() < 0.01, "{}", est.avg_prr);
    assert!((est.delivery_ratio - 0.5).abs() < 0.01);
}

#[test]
fn retries_raise_delivery() {
    let traffic = TrafficConfig {
        messages_per_node: 2_000,
        max_retries: 3,
        ..TrafficConfig::simulation()
    };
    let log = simulate_with_prr(&half_link(), &[0.0, 0.0], &traffic, 0.01).unwrap();
    let m = metrics(&log).unwrap();
    // 1 - 0.5^4
    assert!((m.delivery_ratio - 0.9375).abs() < 0.02, "{}", m.delivery_ratio);
    assert!(log.records.iter().all(|r| (1..=4).contains(&r.attempts)));
}

#[test]
fn same_seed_same_log() {
    let s = common::desk(2);
    let profile = Profile::uniform(s.topology.len(), 14.0, s.config.strategy_min, s.config.strategy_max).unwrap();
    let eps = s.params.epsilon_link;
    let a = simulate(&profile, &s.env, &s.config.traffic, eps).unwrap();
    let b = simulate(&profile, &s.env, &s.config.traffic, eps).unwrap();
    assert_eq!(a, b);
    let other = TrafficConfig {
        seed: 99,
        ..s.config.traffic.clone()
    };
    let c = simulate(&profile, &s.env, &other, eps).unwrap();
    assert_eq!(a.len(), c.len());
    assert_ne!(a, c);
}

#[test]
fn full_power_energy_is_one() {
    let s = common::desk(1);
    let log = simulate(&s.start, &s.env, &s.config.traffic, s.params.epsilon_link).unwrap();
    assert_eq!(relative_energy(&log).unwrap(), 1.0);
}

#[test]
fn isolated_sender_burns_every_attempt() {
    let prr = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
    let traffic = TrafficConfig {
        messages_per_node: 5,
        ..TrafficConfig::testbed()
    };
    let log = simulate_with_prr(&prr, &[-25.0, 0.0], &traffic, 0.01).unwrap();
    assert_eq!(log.isolated_senders, vec![0, 1]);
    assert!(log.records.iter().all(|r| r.receiver.is_none() && r.attempts == 4 && !r.delivered));
}

#[test]
fn malformed_inputs_are_rejected() {
    let traffic = TrafficConfig::simulation();
    assert!(simulate_with_prr(&half_link(), &[0.0], &traffic, 0.01).is_err());
    assert!(simulate_with_prr(&[vec![0.0, 1.5], vec![0.5, 0.0]], &[0.0, 0.0], &traffic, 0.01).is_err());
    let zero = TrafficConfig {
        messages_per_node: 0,
        ..traffic
    };
    assert!(simulate_with_prr(&half_link(), &[0.0, 0.0], &zero, 0.01).is_err());
}
