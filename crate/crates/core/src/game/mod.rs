//! The power-control game: neighbourhood reliability, utilities, the
//! potential, best responses and Gauss-Seidel dynamics.
//!
//! Node `i` earns `log_b(1 + 9 NCR_i) - (s_i / 25)^2` while it has enough
//! neighbours to satisfy the degree rule, and pays the bare cost
//! `-(s_i / 25)^2` otherwise. `NCR_i` is the mean PRR over the node's
//! current neighbour set.

mod best_response;
mod solver;

pub(crate) use solver::feasibility;

pub use best_response::{best_response, golden_section_max, BestResponse, PRESCAN_SAMPLES};
pub use solver::{
    exact_potential_residual, gauss_seidel_sweep, solve, solve_with, sweep_updates, verify_equilibrium,
    EquilibriumCheck, EquilibriumResult, UpdateRecord,
};

use serde::{Deserialize, Serialize};

use crate::channel::RadioEnv;
use crate::error::{invalid, Result};
use crate::profile::StrategyProfile;
use crate::scalar::Scalar;
use crate::topology::{DegreeRule, NodeLinks};

/// How the reliability sum is normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NcrDenominator {
    /// Mean over the node's own neighbours.
    #[default]
    NeighborCount,
    /// Divide by the size of the union of the neighbours' neighbour sets.
    NeighborhoodUnion,
}

/// Order in which a sweep visits the players.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    #[default]
    Ascending,
    Descending,
    Custom(Vec<usize>),
}

impl UpdateOrder {
    pub fn sequence(&self, n: usize) -> Vec<usize> {
        match self {
            UpdateOrder::Ascending => (0..n).collect(),
            UpdateOrder::Descending => (0..n).rev().collect(),
            UpdateOrder::Custom(order) => order.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameParams<T> {
    pub ncr_scale: T,
    pub cost_denominator: T,
    pub log_base: T,
    pub f_bytes: u32,
    pub epsilon_link: T,
    pub degree_rule: DegreeRule<T>,
    pub ncr_denominator: NcrDenominator,
    pub n_iter_max: usize,
    pub convergence_tol: T,
    pub br_tol: T,
    pub update_order: UpdateOrder,
}

impl<T: Scalar> Default for GameParams<T> {
    fn default() -> Self {
        Self {
            ncr_scale: T::lit(9.0),
            cost_denominator: T::lit(25.0),
            log_base: T::lit(10.0),
            f_bytes: 25,
            epsilon_link: T::lit(0.01),
            degree_rule: DegreeRule::default(),
            ncr_denominator: NcrDenominator::default(),
            n_iter_max: 100,
            convergence_tol: T::lit(1e-4),
            br_tol: T::lit(1e-6),
            update_order: UpdateOrder::default(),
        }
    }
}

impl<T: Scalar> GameParams<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.ncr_scale > T::zero()) {
            return Err(invalid("ncr_scale", "must be positive"));
        }
        if !(self.cost_denominator > T::zero()) {
            return Err(invalid("cost_denominator", "must be positive"));
        }
        if !(self.log_base > T::one()) {
            return Err(invalid("log_base", "must exceed 1"));
        }
        if self.f_bytes == 0 {
            return Err(invalid("f_bytes", "packets carry at least one byte"));
        }
        if !(self.epsilon_link > T::zero() && self.epsilon_link <= T::one()) {
            return Err(invalid("epsilon_link", "must lie in (0, 1]"));
        }
        if self.n_iter_max == 0 {
            return Err(invalid("n_iter_max", "must be at least 1"));
        }
        if !(self.convergence_tol > T::zero() && self.br_tol > T::zero()) {
            return Err(invalid("tolerances", "must be positive"));
        }
        if let DegreeRule::SmallWorld { delta } = self.degree_rule {
            if !(delta > T::zero()) {
                return Err(invalid("degree_rule.delta", "must be positive"));
            }
        }
        if let UpdateOrder::Custom(order) = &self.update_order {
            let mut seen = vec![false; n];
            for &i in order {
                if i >= n || seen[i] {
                    return Err(invalid("update_order", "custom order must be a permutation of the nodes"));
                }
                seen[i] = true;
            }
            if order.len() != n {
                return Err(invalid("update_order", "custom order must be a permutation of the nodes"));
            }
        }
        Ok(())
    }

    pub fn benefit(&self, ncr: T) -> T {
        (T::one() + self.ncr_scale * ncr).log(self.log_base)
    }

    pub fn cost(&self, s: T) -> T {
        let r = s / self.cost_denominator;
        r * r
    }

    /// Utility from its ingredients.
    pub fn payoff(&self, ncr: T, s: T, degree_ok: bool) -> T {
        if degree_ok {
            self.benefit(ncr) - self.cost(s)
        } else {
            -self.cost(s)
        }
    }
}

/// Mean PRR over the members of `prrs` that clear `epsilon_link`; 0 when
/// nobody does. Returns `(ncr, degree)`.
fn mean_member_prr<T: Scalar>(prrs: impl Iterator<Item = T>, epsilon_link: T) -> (T, usize) {
    let (sum, count) = prrs
        .filter(|&q| q >= epsilon_link)
        .fold((T::zero(), 0usize), |(s, c), q| (s + q, c + 1));
    if count == 0 {
        (T::zero(), 0)
    } else {
        (sum / T::from_usize_lossy(count), count)
    }
}

/// Neighbour communication reliability of node `i`: the mean PRR of its
/// outgoing links that reach `epsilon_link`, or 0 with no neighbours.
pub fn ncr<T: Scalar>(
    i: usize,
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    f_bytes: u32,
    epsilon_link: T,
) -> T {
    let links = NodeLinks::new(i, profile, env, f_bytes);
    mean_member_prr(links.prrs_at(profile.get(i)).map(|(_, q)| q), epsilon_link).0
}

/// Per-node evaluation state with everyone but the owner frozen.
pub(crate) struct NodeView<'a, T> {
    links: NodeLinks<T>,
    params: &'a GameParams<T>,
    profile: &'a StrategyProfile<T>,
    env: &'a RadioEnv<T>,
    required_degree: usize,
}

impl<'a, T: Scalar> NodeView<'a, T> {
    pub fn new(i: usize, profile: &'a StrategyProfile<T>, env: &'a RadioEnv<T>, params: &'a GameParams<T>) -> Self {
        Self {
            links: NodeLinks::new(i, profile, env, params.f_bytes),
            params,
            profile,
            env,
            required_degree: params.degree_rule.required_degree(env.len()),
        }
    }

    pub fn links(&self) -> &NodeLinks<T> {
        &self.links
    }

    pub fn required_degree(&self) -> usize {
        self.required_degree
    }

    /// Owner's utility if it played `s`; also reports the branch taken.
    pub fn utility_at(&self, s: T) -> (T, bool) {
        let (mean, degree) = mean_member_prr(self.links.prrs_at(s).map(|(_, q)| q), self.params.epsilon_link);
        let degree_ok = degree >= self.required_degree;
        let ncr = match self.params.ncr_denominator {
            NcrDenominator::NeighborCount => mean,
            NcrDenominator::NeighborhoodUnion => {
                union_ncr(self.links.owner, &self.profile.with(self.links.owner, s), self.env, self.params)
            }
        };
        (self.params.payoff(ncr, s, degree_ok), degree_ok)
    }
}

fn union_ncr<T: Scalar>(i: usize, profile: &StrategyProfile<T>, env: &RadioEnv<T>, params: &GameParams<T>) -> T {
    let prrs = env.prr_matrix(&profile.powers_mw(), params.f_bytes);
    union_ncr_from_matrix(i, &prrs, params.epsilon_link)
}

fn union_ncr_from_matrix<T: Scalar>(i: usize, prrs: &[Vec<T>], eps: T) -> T {
    let n = prrs.len();
    let members: Vec<usize> = (0..n).filter(|&j| j != i && prrs[i][j] >= eps).collect();
    if members.is_empty() {
        return T::zero();
    }
    let mut union = vec![false; n];
    for &j in &members {
        for (k, flag) in union.iter_mut().enumerate() {
            if k != j && prrs[j][k] >= eps {
                *flag = true;
            }
        }
    }
    let size = union.iter().filter(|&&b| b).count();
    if size == 0 {
        return T::zero();
    }
    let sum: T = members.iter().map(|&j| prrs[i][j]).sum();
    (sum / T::from_usize_lossy(size)).min(T::one())
}

/// Utility of node `i` under the profile.
pub fn utility<T: Scalar>(i: usize, profile: &StrategyProfile<T>, env: &RadioEnv<T>, params: &GameParams<T>) -> T {
    NodeView::new(i, profile, env, params).utility_at(profile.get(i)).0
}

/// Utility of every node, evaluated from one PRR matrix.
pub fn utilities<T: Scalar>(profile: &StrategyProfile<T>, env: &RadioEnv<T>, params: &GameParams<T>) -> Vec<T> {
    let prrs = env.prr_matrix(&profile.powers_mw(), params.f_bytes);
    let required = params.degree_rule.required_degree(env.len());
    (0..profile.len())
        .map(|i| {
            let row = prrs[i].iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &q)| q);
            let (mean, degree) = mean_member_prr(row, params.epsilon_link);
            let ncr = match params.ncr_denominator {
                NcrDenominator::NeighborCount => mean,
                NcrDenominator::NeighborhoodUnion => union_ncr_from_matrix(i, &prrs, params.epsilon_link),
            };
            params.payoff(ncr, profile.get(i), degree >= required)
        })
        .collect()
}

/// Sum of the per-node branch terms.
pub fn potential<T: Scalar>(profile: &StrategyProfile<T>, env: &RadioEnv<T>, params: &GameParams<T>) -> T {
    utilities(profile, env, params).into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelGainMatrix, NoiseFloor};

    fn params() -> GameParams<f64> {
        GameParams::default()
    }

    #[test]
    fn payoff_branches() {
        let p = params();
        assert!((p.payoff(1.0, 0.0, true) - 1.0).abs() < 1e-15);
        assert!((p.payoff(0.3, 25.0, false) + 1.0).abs() < 1e-15);
        assert!((p.payoff(0.5, 12.5, true) - (5.5f64.log10() - 0.25)).abs() < 1e-15);
        assert!((p.payoff(0.5, 12.5, true) - 0.490_362_689_494_243_9).abs() < 1e-12);
    }

    #[test]
    fn mean_member_prr_cases() {
        assert_eq!(mean_member_prr(std::iter::empty::<f64>(), 0.01), (0.0, 0));
        assert_eq!(mean_member_prr([1.0, 1.0, 1.0].into_iter(), 0.01), (1.0, 3));
        let (m, d) = mean_member_prr([0.8, 0.6, 0.001].into_iter(), 0.01);
        assert_eq!(d, 2);
        assert!(f64::abs(m - 0.7) < 1e-15);
    }

    #[test]
    fn single_node_utility_is_cost_only() {
        let h = ChannelGainMatrix::from_rows(vec![vec![0.0]]).unwrap();
        let env = RadioEnv::worst_case(h, NoiseFloor::new(1e-10).unwrap());
        let profile = StrategyProfile::uniform(1, 25.0, 0.5, 25.0).unwrap();
        let p = params();
        assert_eq!(utility(0, &profile, &env, &p), -1.0);
        assert_eq!(potential(&profile, &env, &p), -1.0);
        assert_eq!(ncr(0, &profile, &env, 25, 0.01), 0.0);
    }

    #[test]
    fn validate_rejects_bad_values() {
        let mut p = params();
        assert!(p.validate(3).is_ok());
        p.update_order = UpdateOrder::Custom(vec![0, 0, 1]);
        assert!(p.validate(3).is_err());
        p.update_order = UpdateOrder::Custom(vec![2, 0, 1]);
        assert!(p.validate(3).is_ok());
        p.log_base = 1.0;
        assert!(p.validate(3).is_err());
    }
}
