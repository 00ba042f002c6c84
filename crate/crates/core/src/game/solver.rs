use serde::{Deserialize, Serialize};

use crate::channel::RadioEnv;
use crate::profile::StrategyProfile;
use crate::scalar::Scalar;
use crate::topology::{degree_floor, NodeLinks};

use super::{best_response, potential, utilities, GameParams, NodeView};

/// One coordinate update inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord<T> {
    pub sweep: usize,
    pub node: usize,
    pub from: T,
    pub to: T,
    pub potential_delta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult<T> {
    pub profile: StrategyProfile<T>,
    pub sweeps_used: usize,
    /// Potential at the start and after every sweep.
    pub potential_trace: Vec<T>,
    pub converged: bool,
    /// Degree rule reachable by the node given the final profile.
    pub per_node_feasible: Vec<bool>,
    /// Strategies at the start and after every sweep.
    pub power_trace: Vec<Vec<T>>,
    /// Smallest potential change caused by a single coordinate update.
    pub min_update_delta: T,
    /// Updates that lowered the potential by more than `1e-12`.
    pub descending_updates: usize,
    /// Best-response scans that flagged a multi-peaked stretch.
    pub non_unimodal_scans: usize,
}

impl<T: Scalar> EquilibriumResult<T> {
    /// Potential trace non-decreasing up to `slack`.
    pub fn potential_monotone(&self, slack: T) -> bool {
        self.potential_trace.windows(2).all(|w| w[1] - w[0] >= -slack)
    }
}

pub(crate) const ASCENT_SLACK: f64 = 1e-12;

/// Runs one sweep in the configured order and returns the new profile
/// together with every coordinate update.
pub fn sweep_updates<T: Scalar>(
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
) -> (StrategyProfile<T>, Vec<UpdateRecord<T>>) {
    let mut next = profile.clone();
    let mut records = Vec::with_capacity(profile.len());
    let mut flagged = 0;
    let mut v = potential(&next, env, params);
    sweep_in_place(
        &mut next,
        env,
        params,
        0,
        &mut v,
        &mut records,
        &mut flagged,
        &mut |i, p| {
            let br = best_response(i, p, env, params);
            (br.s, br.non_unimodal)
        },
    );
    (next, records)
}

/// Each node in turn replaces its strategy by its best response to the
/// latest strategies of everyone else.
pub fn gauss_seidel_sweep<T: Scalar>(
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
) -> StrategyProfile<T> {
    sweep_updates(profile, env, params).0
}

#[allow(clippy::too_many_arguments)]
fn sweep_in_place<T: Scalar, R>(
    profile: &mut StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
    sweep: usize,
    v: &mut T,
    records: &mut Vec<UpdateRecord<T>>,
    flagged: &mut usize,
    respond: &mut R,
) where
    R: FnMut(usize, &StrategyProfile<T>) -> (T, bool),
{
    for i in params.update_order.sequence(profile.len()) {
        let from = profile.get(i);
        let (to, non_unimodal) = respond(i, profile);
        if non_unimodal {
            *flagged += 1;
        }
        profile.set(i, to);
        let v_new = potential(profile, env, params);
        records.push(UpdateRecord {
            sweep,
            node: i,
            from,
            to: profile.get(i),
            potential_delta: v_new - *v,
        });
        *v = v_new;
    }
}

/// Continuous best-response dynamics from `profile0`.
pub fn solve<T: Scalar>(
    profile0: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
) -> EquilibriumResult<T> {
    solve_with(profile0, env, params, |i, p| {
        let br = best_response(i, p, env, params);
        (br.s, br.non_unimodal)
    })
}

/// Gauss-Seidel dynamics with an arbitrary responder returning the new
/// strategy and whether its scan saw more than one peak. Stops when no
/// strategy moves by `convergence_tol` or after `n_iter_max` sweeps.
pub fn solve_with<T: Scalar, R>(
    profile0: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
    mut respond: R,
) -> EquilibriumResult<T>
where
    R: FnMut(usize, &StrategyProfile<T>) -> (T, bool),
{
    let mut profile = profile0.clone();
    let mut v = potential(&profile, env, params);
    let mut potential_trace = vec![v];
    let mut power_trace = vec![profile.strategies().to_vec()];
    let mut records = Vec::new();
    let mut flagged = 0;
    let mut converged = false;
    let mut sweeps_used = 0;

    for sweep in 0..params.n_iter_max {
        let before = profile.clone();
        sweep_in_place(&mut profile, env, params, sweep, &mut v, &mut records, &mut flagged, &mut respond);
        sweeps_used = sweep + 1;
        potential_trace.push(v);
        power_trace.push(profile.strategies().to_vec());
        if profile.max_abs_diff(&before) < params.convergence_tol {
            converged = true;
            break;
        }
    }

    let slack = T::lit(ASCENT_SLACK);
    let min_update_delta = records
        .iter()
        .map(|r| r.potential_delta)
        .fold(T::infinity(), T::min);
    let descending_updates = records.iter().filter(|r| r.potential_delta < -slack).count();
    let per_node_feasible = feasibility(&profile, env, params);

    EquilibriumResult {
        profile,
        sweeps_used,
        potential_trace,
        converged,
        per_node_feasible,
        power_trace,
        min_update_delta: if records.is_empty() { T::zero() } else { min_update_delta },
        descending_updates,
        non_unimodal_scans: flagged,
    }
}

pub(crate) fn feasibility<T: Scalar>(
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
) -> Vec<bool> {
    let required = params.degree_rule.required_degree(env.len());
    (0..profile.len())
        .map(|i| {
            let links = NodeLinks::new(i, profile, env, params.f_bytes);
            degree_floor(&links, profile.s_min(), profile.s_max(), params.epsilon_link, required)
                .value()
                .is_some()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCheck<T> {
    pub is_equilibrium: bool,
    /// Largest utility gain any node could obtain from a grid deviation.
    pub worst_gain: T,
    pub worst_node: Option<usize>,
    pub worst_deviation: Option<T>,
}

/// Grid-scan certificate: no node gains more than `epsilon` by moving to
/// any of `s_min, s_min + grid_step, ..., s_max`.
pub fn verify_equilibrium<T: Scalar>(
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
    epsilon: T,
    grid_step: T,
) -> EquilibriumCheck<T> {
    let (s_min, s_max) = profile.bounds();
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let s = s_min + grid_step * T::from_usize_lossy(k);
        if s > s_max {
            break;
        }
        grid.push(s);
        k += 1;
    }
    if grid.last().is_none_or(|&s| s < s_max) {
        grid.push(s_max);
    }

    let mut check = EquilibriumCheck {
        is_equilibrium: true,
        worst_gain: T::neg_infinity(),
        worst_node: None,
        worst_deviation: None,
    };
    for i in 0..profile.len() {
        let view = NodeView::new(i, profile, env, params);
        let current = view.utility_at(profile.get(i)).0;
        for &s in &grid {
            let gain = view.utility_at(s).0 - current;
            if gain > check.worst_gain {
                check.worst_gain = gain;
                check.worst_node = Some(i);
                check.worst_deviation = Some(s);
            }
        }
    }
    check.is_equilibrium = check.worst_gain <= epsilon;
    check
}

/// `|(u_i(s', p_-i) - u_i(p)) - (V(s', p_-i) - V(p))|`.
pub fn exact_potential_residual<T: Scalar>(
    profile: &StrategyProfile<T>,
    i: usize,
    s_prime: T,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
) -> T {
    let moved = profile.with(i, s_prime);
    let before = utilities(profile, env, params);
    let after = utilities(&moved, env, params);
    let du = after[i] - before[i];
    let dv: T = after.iter().copied().sum::<T>() - before.iter().copied().sum::<T>();
    (du - dv).abs()
}
