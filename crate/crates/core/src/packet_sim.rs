//! Packet-level Monte Carlo over the analytic link PRRs.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::RadioEnv;
use crate::error::{invalid, Error, Result};
use crate::profile::StrategyProfile;

pub const GOOD_LINK_PRR: f64 = 0.8;
pub const BAD_LINK_PRR: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverPolicy {
    /// Always the neighbour with the highest analytic PRR.
    #[default]
    BestPrr,
    /// Cycle through the neighbours in index order.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub message_period_s: f64,
    pub messages_per_node: usize,
    pub payload_f_bytes: u32,
    pub max_retries: u32,
    pub seed: u64,
    pub receiver_policy: ReceiverPolicy,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self::simulation()
    }
}

impl TrafficConfig {
    /// 30 retries per message.
    pub fn simulation() -> Self {
        Self {
            message_period_s: 2.0,
            messages_per_node: 200,
            payload_f_bytes: 25,
            max_retries: 30,
            seed: 1,
            receiver_policy: ReceiverPolicy::BestPrr,
        }
    }

    /// 3 retries, one message every 2 s.
    pub fn testbed() -> Self {
        Self {
            max_retries: 3,
            ..Self::simulation()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.message_period_s.is_finite() && self.message_period_s > 0.0) {
            return Err(invalid("message_period_s", "must be positive"));
        }
        if self.messages_per_node == 0 {
            return Err(invalid("messages_per_node", "must be positive"));
        }
        if self.payload_f_bytes == 0 {
            return Err(invalid("payload_f_bytes", "must be positive"));
        }
        Ok(())
    }
}

/// One message and the attempts spent on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub sender: usize,
    /// `None` when the sender has no neighbour.
    pub receiver: Option<usize>,
    pub tx_dbm: f64,
    pub attempts: u32,
    pub delivered: bool,
    pub time_s: f64,
}

impl TransmissionRecord {
    pub fn first_attempt_ok(&self) -> bool {
        self.delivered && self.attempts == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionLog {
    pub records: Vec<TransmissionRecord>,
    /// Senders without any neighbour; their messages exhaust all attempts.
    pub isolated_senders: Vec<usize>,
}

impl TransmissionLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "sender,receiver,tx_dbm,attempts,delivered")?;
        for r in &self.records {
            let rx = r.receiver.map(|j| j.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", r.sender, rx, r.tx_dbm, r.attempts, r.delivered)?;
        }
        Ok(())
    }
}

/// Receivers each sender may use: neighbours with analytic PRR at least
/// `epsilon_link`, best first (ties by index).
pub fn receiver_candidates(prr: &[Vec<f64>], epsilon_link: f64) -> Vec<Vec<usize>> {
    prr.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut c: Vec<usize> = (0..row.len()).filter(|&j| j != i && row[j] >= epsilon_link).collect();
            c.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            c
        })
        .collect()
}

/// Simulates `messages_per_node` rounds in which every node sends once.
/// Attempts on a link are independent Bernoulli draws with the link's
/// analytic PRR.
pub fn simulate_with_prr(prr: &[Vec<f64>], tx_dbm: &[f64], traffic: &TrafficConfig, epsilon_link: f64) -> Result<TransmissionLog> {
    traffic.validate()?;
    let n = prr.len();
    if tx_dbm.len() != n || prr.iter().any(|row| row.len() != n) {
        return Err(invalid("prr", "matrix and power vector sizes differ"));
    }
    if prr.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid("prr", "entries must lie in [0, 1]"));
    }
    let candidates = receiver_candidates(prr, epsilon_link);
    let isolated_senders: Vec<usize> = (0..n).filter(|&i| candidates[i].is_empty()).collect();
    let max_attempts = traffic.max_retries + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(traffic.seed);
    let mut records = Vec::with_capacity(n * traffic.messages_per_node);

    for k in 0..traffic.messages_per_node {
        let time_s = k as f64 * traffic.message_period_s;
        for sender in 0..n {
            let c = &candidates[sender];
            let receiver = match traffic.receiver_policy {
                _ if c.is_empty() => None,
                ReceiverPolicy::BestPrr => Some(c[0]),
                ReceiverPolicy::RoundRobin => {
                    let mut sorted = c.clone();
                    sorted.sort_unstable();
                    Some(sorted[k % sorted.len()])
                }
            };
            let (attempts, delivered) = match receiver {
                None => (max_attempts, false),
                Some(j) => {
                    let p = prr[sender][j];
                    let mut used = 0;
                    let mut ok = false;
                    while used < max_attempts && !ok {
                        used += 1;
                        ok = rng.random_bool(p);
                    }
                    (used, ok)
                }
            };
            records.push(TransmissionRecord {
                sender,
                receiver,
                tx_dbm: tx_dbm[sender],
                attempts,
                delivered,
                time_s,
            });
        }
    }
    Ok(TransmissionLog {
        records,
        isolated_senders,
    })
}

/// Runs traffic over the links induced by `profile`.
pub fn simulate(
    profile: &StrategyProfile<f64>,
    env: &RadioEnv<f64>,
    traffic: &TrafficConfig,
    epsilon_link: f64,
) -> Result<TransmissionLog> {
    let prr = env.prr_matrix(&profile.powers_mw(), traffic.payload_f_bytes);
    simulate_with_prr(&prr, &profile.dbm(), traffic, epsilon_link)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPrr {
    pub sender: usize,
    pub receiver: usize,
    pub first_attempts: usize,
    pub first_successes: usize,
    pub prr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPrr {
    pub per_link: Vec<LinkPrr>,
    /// Unweighted mean of the per-link first-attempt PRRs.
    pub avg_prr: f64,
    /// Messages delivered within the retry budget over all messages.
    pub delivery_ratio: f64,
}

pub fn empirical_prr(log: &TransmissionLog) -> Result<EmpiricalPrr> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut links: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for r in &log.records {
        if let Some(j) = r.receiver {
            let e = links.entry((r.sender, j)).or_default();
            e.0 += 1;
            e.1 += usize::from(r.first_attempt_ok());
        }
    }
    let per_link: Vec<LinkPrr> = links
        .into_iter()
        .map(|((sender, receiver), (tries, ok))| LinkPrr {
            sender,
            receiver,
            first_attempts: tries,
            first_successes: ok,
            prr: ok as f64 / tries as f64,
        })
        .collect();
    let avg_prr = if per_link.is_empty() {
        0.0
    } else {
        per_link.iter().map(|l| l.prr).sum::<f64>() / per_link.len() as f64
    };
    let delivered = log.records.iter().filter(|r| r.delivered).count();
    Ok(EmpiricalPrr {
        per_link,
        avg_prr,
        delivery_ratio: delivered as f64 / log.len() as f64,
    })
}

/// Mean linear power per attempt, relative to every attempt at 0 dBm.
pub fn relative_energy(log: &TransmissionLog) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut energy = 0.0;
    let mut attempts = 0u64;
    for r in &log.records {
        energy += f64::from(r.attempts) * 10f64.powf(r.tx_dbm / 10.0);
        attempts += u64::from(r.attempts);
    }
    if attempts == 0 {
        return Err(Error::EmptyLog);
    }
    Ok(energy / attempts as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Good,
    Intermediate,
    Bad,
}

impl LinkClass {
    pub fn of(prr: f64) -> Self {
        if prr >= GOOD_LINK_PRR {
            Self::Good
        } else if prr < BAD_LINK_PRR {
            Self::Bad
        } else {
            Self::Intermediate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Good => "good",
            Self::Intermediate => "intermediate",
            Self::Bad => "bad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassFractions {
    pub good: f64,
    pub intermediate: f64,
    pub bad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkQuality {
    pub fractions: ClassFractions,
    /// `(prr, fraction of links with PRR <= prr)`, ascending.
    pub cdf_points: Vec<(f64, f64)>,
}

pub fn link_cdf(per_link_prr: &[f64]) -> Result<LinkQuality> {
    if per_link_prr.is_empty() {
        return Err(invalid("per_link_prr", "need at least one link"));
    }
    let n = per_link_prr.len();
    let mut sorted = per_link_prr.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf_points = sorted
        .iter()
        .enumerate()
        .map(|(k, &p)| (p, (k + 1) as f64 / n as f64))
        .collect();
    let count = |c: LinkClass| per_link_prr.iter().filter(|&&p| LinkClass::of(p) == c).count();
    let good = count(LinkClass::Good) as f64 / n as f64;
    let bad = count(LinkClass::Bad) as f64 / n as f64;
    Ok(LinkQuality {
        fractions: ClassFractions {
            good,
            intermediate: 1.0 - good - bad,
            bad,
        },
        cdf_points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg_prr: f64,
    pub delivery_ratio: f64,
    pub per_link_prr: Vec<LinkPrr>,
    pub relative_energy: f64,
    pub link_quality: LinkQuality,
    pub isolated_senders: Vec<usize>,
}

pub fn metrics(log: &TransmissionLog) -> Result<Metrics> {
    let emp = empirical_prr(log)?;
    let prrs: Vec<f64> = emp.per_link.iter().map(|l| l.prr).collect();
    let link_quality = if prrs.is_empty() { link_cdf(&[0.0])? } else { link_cdf(&prrs)? };
    Ok(Metrics {
        avg_prr: emp.avg_prr,
        delivery_ratio: emp.delivery_ratio,
        per_link_prr: emp.per_link,
        relative_energy: relative_energy(log)?,
        link_quality,
        isolated_senders: log.isolated_senders.clone(),
    })
}
