//! Look-up-table planners: backward induction over a known horizon, the
//! greedy rule, and discounted policy iteration.
//!
//! All planners share one action-selection rule. Among feasible actions the
//! value is maximized; values within a relative `1e-12` of the maximum count
//! as tied, and ties go to the action draining the fewest energy units, then
//! to the smallest action index.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{Action, RewardTable, TransitionKernel};

const TIE_REL_TOL: f64 = 1e-12;

/// Policy iteration gives up after this many improvement rounds.
pub const MAX_PI_ITERATIONS: usize = 1000;

/// Work done while planning.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlanStats {
    /// Number of (state, action) values computed.
    pub value_evaluations: u64,
    /// Number of successor terms accumulated in Bellman backups.
    pub backups: u64,
    /// Backward-induction stages, or policy-iteration rounds.
    pub iterations: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEntry {
    pub action: Action,
    /// Value of the state under the policy, bits/J.
    pub value: f64,
}

/// Stage-indexed decision table for a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct NonstationaryPolicy {
    num_states: usize,
    entries: Vec<Option<PolicyEntry>>,
}

impl NonstationaryPolicy {
    /// Empty table with `stages * num_states` slots.
    pub fn empty(stages: usize, num_states: usize) -> Self {
        NonstationaryPolicy {
            num_states,
            entries: vec![None; stages * num_states],
        }
    }

    pub fn stages(&self) -> usize {
        self.entries.len().checked_div(self.num_states).unwrap_or(0)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn entry(&self, stage: usize, s: usize) -> Option<PolicyEntry> {
        if stage >= self.stages() || s >= self.num_states {
            return None;
        }
        self.entries[stage * self.num_states + s]
    }

    pub fn set(&mut self, stage: usize, s: usize, entry: PolicyEntry) {
        self.entries[stage * self.num_states + s] = Some(entry);
    }

    pub fn action(&self, stage: usize, s: usize) -> Option<Action> {
        self.entry(stage, s).map(|e| e.action)
    }

    /// Optimal remaining value from stage `stage`.
    pub fn value(&self, stage: usize, s: usize) -> Option<f64> {
        self.entry(stage, s).map(|e| e.value)
    }
}

/// Stage-independent decision table.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    entries: Vec<Option<PolicyEntry>>,
}

impl StationaryPolicy {
    pub fn empty(num_states: usize) -> Self {
        StationaryPolicy {
            entries: vec![None; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, s: usize) -> Option<PolicyEntry> {
        self.entries.get(s).copied().flatten()
    }

    pub fn set(&mut self, s: usize, entry: PolicyEntry) {
        self.entries[s] = Some(entry);
    }

    pub fn action(&self, s: usize) -> Option<Action> {
        self.entry(s).map(|e| e.action)
    }

    pub fn value(&self, s: usize) -> Option<f64> {
        self.entry(s).map(|e| e.value)
    }
}

/// Either kind of look-up table.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Nonstationary(NonstationaryPolicy),
    Stationary(StationaryPolicy),
}

impl Policy {
    /// Action for `state` in slot `stage`.
    pub fn decide(&self, stage: usize, state: usize) -> Result<Action> {
        let a = match self {
            Policy::Nonstationary(p) => p.action(stage, state),
            Policy::Stationary(p) => p.action(state),
        };
        a.ok_or(Error::PolicyCoverage { stage, state })
    }

    pub fn num_states(&self) -> usize {
        match self {
            Policy::Nonstationary(p) => p.num_states(),
            Policy::Stationary(p) => p.num_states(),
        }
    }
}

impl From<NonstationaryPolicy> for Policy {
    fn from(p: NonstationaryPolicy) -> Self {
        Policy::Nonstationary(p)
    }
}

impl From<StationaryPolicy> for Policy {
    fn from(p: StationaryPolicy) -> Self {
        Policy::Stationary(p)
    }
}

/// Pick the best of `(action, value)` candidates under the shared tie rule.
fn select(candidates: &[(usize, f64)], rewards: &RewardTable) -> (usize, f64) {
    let best = candidates
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_REL_TOL * best.abs().max(1.0);
    candidates
        .iter()
        .copied()
        .filter(|&(_, v)| v >= best - tol)
        .min_by_key(|&(a, _)| (rewards.action_units(a), a))
        .expect("every state has the idle action")
}

fn check_shapes(kernel: &TransitionKernel, rewards: &RewardTable) -> Result<()> {
    if kernel.num_states() != rewards.num_states() || kernel.num_actions() != rewards.num_actions() {
        return Err(Error::Shape(format!(
            "kernel is {}x{} but reward table is {}x{}",
            kernel.num_states(),
            kernel.num_actions(),
            rewards.num_states(),
            rewards.num_actions()
        )));
    }
    Ok(())
}

#[derive(Default)]
struct Tally {
    evals: u64,
    backups: u64,
}

/// One Bellman backup of state `s` against `future` (scaled by `weight`).
fn backup(
    s: usize,
    kernel: &TransitionKernel,
    rewards: &RewardTable,
    future: Option<(&[f64], f64)>,
    buf: &mut Vec<(usize, f64)>,
    tally: &mut Tally,
) -> (usize, f64) {
    buf.clear();
    for a in rewards.feasible_in(s) {
        let r = rewards.get(s, a).unwrap_or(0.0);
        let q = match future {
            Some((values, weight)) => {
                let (targets, _) = kernel.row(s, a);
                tally.backups += targets.len() as u64;
                r + weight * kernel.expectation(s, a, values)
            }
            None => r,
        };
        tally.evals += 1;
        buf.push((a, q));
    }
    select(buf, rewards)
}

/// Sweep every state in parallel, returning (action, value) per state.
fn sweep(
    kernel: &TransitionKernel,
    rewards: &RewardTable,
    future: Option<(&[f64], f64)>,
    stats: &mut PlanStats,
) -> Vec<(usize, f64)> {
    let results: Vec<((usize, f64), Tally)> = (0..rewards.num_states())
        .into_par_iter()
        .map_init(Vec::new, |buf, s| {
            let mut tally = Tally::default();
            let best = backup(s, kernel, rewards, future, buf, &mut tally);
            (best, tally)
        })
        .collect();
    results
        .into_iter()
        .map(|(best, tally)| {
            stats.value_evaluations += tally.evals;
            stats.backups += tally.backups;
            best
        })
        .collect()
}

/// Backward induction over `horizon` slots.
///
/// Stage `horizon - 1` maximizes the immediate reward alone; each earlier
/// stage adds the expected optimal value of the following stage.
pub fn plan_backward_induction(
    kernel: &TransitionKernel,
    rewards: &RewardTable,
    horizon: usize,
) -> Result<(NonstationaryPolicy, PlanStats)> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    check_shapes(kernel, rewards)?;
    let start = Instant::now();
    let n = rewards.num_states();
    let mut policy = NonstationaryPolicy::empty(horizon, n);
    let mut stats = PlanStats::default();
    let mut next_values: Vec<f64> = Vec::new();
    for stage in (0..horizon).rev() {
        let future = (stage + 1 < horizon).then_some((next_values.as_slice(), 1.0));
        let best = sweep(kernel, rewards, future, &mut stats);
        for (s, &(a, v)) in best.iter().enumerate() {
            policy.set(
                stage,
                s,
                PolicyEntry {
                    action: rewards.action(a),
                    value: v,
                },
            );
        }
        next_values = best.into_iter().map(|(_, v)| v).collect();
        stats.iterations += 1;
    }
    stats.elapsed = start.elapsed();
    Ok((policy, stats))
}

/// Greedy action of state `s`: maximize the immediate reward.
pub fn greedy_action(s: usize, rewards: &RewardTable) -> Action {
    let candidates: Vec<(usize, f64)> = rewards
        .feasible_in(s)
        .map(|a| (a, rewards.get(s, a).unwrap_or(0.0)))
        .collect();
    rewards.action(select(&candidates, rewards).0)
}

/// Greedy rule tabulated over all states. There is no planning phase, so the
/// returned statistics are all zero. Stored values are the immediate rewards.
pub fn greedy_policy(rewards: &RewardTable) -> (StationaryPolicy, PlanStats) {
    let mut policy = StationaryPolicy::empty(rewards.num_states());
    for s in 0..rewards.num_states() {
        let action = greedy_action(s, rewards);
        let value = rewards.get(s, action.index(rewards.num_levels())).unwrap_or(0.0);
        policy.set(s, PolicyEntry { action, value });
    }
    (policy, PlanStats::default())
}

/// Discount factor whose geometric horizon has mean `horizon`.
pub fn horizon_to_discount(horizon: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::Argument(format!(
            "horizon {horizon} gives a discount outside (0, 1); need at least 2"
        )));
    }
    Ok(1.0 - 1.0 / horizon as f64)
}

/// Exact discounted value of the stationary decision rule `actions`
/// (action indices per state), from one dense linear solve.
pub fn evaluate_stationary(
    kernel: &TransitionKernel,
    rewards: &RewardTable,
    actions: &[usize],
    discount: f64,
) -> Result<Vec<f64>> {
    check_shapes(kernel, rewards)?;
    let n = rewards.num_states();
    if actions.len() != n {
        return Err(Error::Shape(format!("{} actions for {n} states", actions.len())));
    }
    let mut lhs = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (s, &a) in actions.iter().enumerate() {
        rhs[s] = rewards.get(s, a).ok_or_else(|| Error::InfeasibleAction {
            state: s.to_string(),
            ps_idx: rewards.action(a).ps_idx,
            pd_idx: rewards.action(a).pd_idx,
        })?;
        let (targets, probs) = kernel.row(s, a);
        for (&j, &p) in targets.iter().zip(probs) {
            lhs[(s, j)] -= discount * p;
        }
    }
    let solution = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("policy evaluation system is singular".into()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("policy evaluation produced a non-finite value".into()));
    }
    Ok(solution.iter().copied().collect())
}

/// Discounted policy iteration, starting from the greedy rule.
///
/// Alternates exact evaluation and greedy improvement until the improved
/// decision rule equals the current one.
pub fn plan_policy_iteration(
    kernel: &TransitionKernel,
    rewards: &RewardTable,
    discount: f64,
) -> Result<(StationaryPolicy, PlanStats)> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::Argument(format!("discount {discount} must lie in (0, 1)")));
    }
    check_shapes(kernel, rewards)?;
    let start = Instant::now();
    let n = rewards.num_states();
    let m = rewards.num_levels();
    let mut stats = PlanStats::default();
    let (greedy, _) = greedy_policy(rewards);
    let mut actions: Vec<usize> = (0..n)
        .map(|s| greedy.action(s).expect("greedy covers every state").index(m))
        .collect();
    loop {
        let values = evaluate_stationary(kernel, rewards, &actions, discount)?;
        stats.iterations += 1;
        let improved: Vec<usize> = sweep(kernel, rewards, Some((&values, discount)), &mut stats)
            .into_iter()
            .map(|(a, _)| a)
            .collect();
        if improved == actions {
            let mut policy = StationaryPolicy::empty(n);
            for (s, (&a, &v)) in actions.iter().zip(&values).enumerate() {
                policy.set(
                    s,
                    PolicyEntry {
                        action: rewards.action(a),
                        value: v,
                    },
                );
            }
            stats.elapsed = start.elapsed();
            return Ok((policy, stats));
        }
        if stats.iterations as usize >= MAX_PI_ITERATIONS {
            return Err(Error::Numerical(format!(
                "policy iteration did not settle within {MAX_PI_ITERATIONS} rounds"
            )));
        }
        actions = improved;
    }
}
