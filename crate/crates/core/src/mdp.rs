//! Finite state/action spaces, the factored transition kernel and the
//! per-(state, action) reward table.
//!
//! A state is the quantized gain level of each of the four links plus the two
//! battery levels. States are densely indexed with the gain levels outermost
//! (SD, SE, DD, DE) and the batteries innermost (source, then destination).
//! Actions are indexed `ps_idx * M + pd_idx`, i.e. source power major.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, Link, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    /// Level index per link, in the order SD, SE, DD, DE.
    pub gain_idx: [usize; 4],
    pub b_src: usize,
    pub b_dst: usize,
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.gain_idx;
        write!(f, "(g={a}{b}{c}{d}, bs={}, bd={})", self.b_src, self.b_dst)
    }
}

/// A pair of indices into the power level list: transmit at the source and
/// jam at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub ps_idx: usize,
    pub pd_idx: usize,
}

impl Action {
    pub const IDLE: Action = Action { ps_idx: 0, pd_idx: 0 };

    pub fn new(ps_idx: usize, pd_idx: usize) -> Self {
        Action { ps_idx, pd_idx }
    }

    pub fn index(self, num_levels: usize) -> usize {
        self.ps_idx * num_levels + self.pd_idx
    }

    pub fn from_index(index: usize, num_levels: usize) -> Self {
        Action {
            ps_idx: index / num_levels,
            pd_idx: index % num_levels,
        }
    }
}

/// Bijection between [`State`] values and `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    level_counts: [usize; 4],
    cap_src: usize,
    cap_dst: usize,
    len: usize,
}

impl StateSpace {
    pub fn new(level_counts: [usize; 4], cap_src: usize, cap_dst: usize) -> Result<Self> {
        let overflow = || {
            Error::StateSpaceOverflow(format!(
                "levels {level_counts:?} with caps ({cap_src}, {cap_dst}) exceed the index range"
            ))
        };
        let mut len: usize = 1;
        for n in level_counts
            .iter()
            .copied()
            .chain([cap_src.checked_add(1), cap_dst.checked_add(1)].into_iter().flatten())
        {
            len = len.checked_mul(n).ok_or_else(overflow)?;
        }
        if cap_src == usize::MAX || cap_dst == usize::MAX {
            return Err(overflow());
        }
        Ok(StateSpace {
            level_counts,
            cap_src,
            cap_dst,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn level_counts(&self) -> [usize; 4] {
        self.level_counts
    }

    pub fn caps(&self) -> (usize, usize) {
        (self.cap_src, self.cap_dst)
    }

    pub fn contains(&self, s: &State) -> bool {
        s.gain_idx.iter().zip(self.level_counts).all(|(&g, n)| g < n)
            && s.b_src <= self.cap_src
            && s.b_dst <= self.cap_dst
    }

    pub fn encode(&self, s: &State) -> usize {
        debug_assert!(self.contains(s), "state {s} outside the space");
        let mut idx = 0;
        for (g, n) in s.gain_idx.iter().zip(self.level_counts) {
            idx = idx * n + g;
        }
        idx = idx * (self.cap_src + 1) + s.b_src;
        idx * (self.cap_dst + 1) + s.b_dst
    }

    pub fn decode(&self, mut idx: usize) -> State {
        debug_assert!(idx < self.len);
        let b_dst = idx % (self.cap_dst + 1);
        idx /= self.cap_dst + 1;
        let b_src = idx % (self.cap_src + 1);
        idx /= self.cap_src + 1;
        let mut gain_idx = [0; 4];
        for l in (0..4).rev() {
            gain_idx[l] = idx % self.level_counts[l];
            idx /= self.level_counts[l];
        }
        State {
            gain_idx,
            b_src,
            b_dst,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len).map(|i| self.decode(i))
    }
}

/// Enumerate the state space implied by `params`.
pub fn enumerate_states(params: &SystemParams) -> Result<StateSpace> {
    StateSpace::new(
        params.channels.level_counts(),
        params.battery_cap_src,
        params.battery_cap_dst,
    )
}

fn feasible_with_units(s: &State, units: &[usize]) -> Vec<Action> {
    let m = units.len();
    (0..m)
        .filter(|&i| units[i] <= s.b_src)
        .flat_map(|i| {
            (0..m)
                .filter(move |&j| units[j] <= s.b_dst)
                .map(move |j| Action::new(i, j))
        })
        .collect()
}

/// Actions whose energy draw fits in both batteries, in action-index order.
pub fn feasible_actions(s: &State, params: &SystemParams) -> Result<Vec<Action>> {
    Ok(feasible_with_units(s, &params.power_units()?))
}

/// Distribution of one node's next battery level. Harvest branches landing
/// on the same level (clipping, or a zero harvest amount) are merged and
/// zero-probability branches are dropped.
pub fn battery_outcomes(
    b: usize,
    consumed: usize,
    harvest_units: usize,
    harvest_prob: f64,
    cap: usize,
) -> Result<Vec<(usize, f64)>> {
    let dry = model::battery_next(b, consumed, 0, cap)?;
    let wet = model::battery_next(b, consumed, harvest_units, cap)?;
    let mut out = Vec::with_capacity(2);
    if dry == wet {
        out.push((dry, 1.0));
    } else {
        if harvest_prob < 1.0 {
            out.push((dry, 1.0 - harvest_prob));
        }
        if harvest_prob > 0.0 {
            out.push((wet, harvest_prob));
        }
    }
    Ok(out)
}

fn check_feasible(s: &State, a: Action, units: &[usize]) -> Result<(usize, usize)> {
    let m = units.len();
    if a.ps_idx >= m || a.pd_idx >= m || units[a.ps_idx] > s.b_src || units[a.pd_idx] > s.b_dst {
        return Err(Error::InfeasibleAction {
            state: s.to_string(),
            ps_idx: a.ps_idx,
            pd_idx: a.pd_idx,
        });
    }
    Ok((units[a.ps_idx], units[a.pd_idx]))
}

fn node_factor(b: usize, consumed: usize, harvest: usize, prob: f64, cap: usize, next: usize) -> Result<f64> {
    let mut total = 0.0;
    for (h, p_h) in [(0, 1.0 - prob), (harvest, prob)] {
        if model::battery_next(b, consumed, h, cap)? == next {
            total += p_h;
        }
    }
    Ok(total)
}

/// Probability of moving from `s` to `s_next` under action `a`.
pub fn transition_prob(s: &State, a: Action, s_next: &State, params: &SystemParams) -> Result<f64> {
    let units = params.power_units()?;
    let (c_src, c_dst) = check_feasible(s, a, &units)?;
    let mut p = 1.0;
    for link in Link::ALL {
        let l = link.index();
        p *= params.channels.link(link).transition[s.gain_idx[l]][s_next.gain_idx[l]];
    }
    p *= node_factor(
        s.b_src,
        c_src,
        params.harvest_units_src,
        params.harvest_prob_src,
        params.battery_cap_src,
        s_next.b_src,
    )?;
    p *= node_factor(
        s.b_dst,
        c_dst,
        params.harvest_units_dst,
        params.harvest_prob_dst,
        params.battery_cap_dst,
        s_next.b_dst,
    )?;
    Ok(p)
}

/// Nonzero per-link next-level probabilities, indexed `[link][level]`.
fn channel_rows(params: &SystemParams) -> Vec<Vec<Vec<(usize, f64)>>> {
    Link::ALL
        .iter()
        .map(|&link| {
            params
                .channels
                .link(link)
                .transition
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0.0)
                        .map(|(j, &p)| (j, p))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn successors_with(
    s: &State,
    consumed: (usize, usize),
    params: &SystemParams,
    rows: &[Vec<Vec<(usize, f64)>>],
    mut emit: impl FnMut(State, f64),
) -> Result<()> {
    let src = battery_outcomes(
        s.b_src,
        consumed.0,
        params.harvest_units_src,
        params.harvest_prob_src,
        params.battery_cap_src,
    )?;
    let dst = battery_outcomes(
        s.b_dst,
        consumed.1,
        params.harvest_units_dst,
        params.harvest_prob_dst,
        params.battery_cap_dst,
    )?;
    let [r0, r1, r2, r3] = [0, 1, 2, 3].map(|l| &rows[l][s.gain_idx[l]]);
    for &(g0, p0) in r0 {
        for &(g1, p1) in r1 {
            for &(g2, p2) in r2 {
                for &(g3, p3) in r3 {
                    let pg = p0 * p1 * p2 * p3;
                    for &(bs, ps) in &src {
                        for &(bd, pd) in &dst {
                            let p = pg * ps * pd;
                            if p > 0.0 {
                                emit(
                                    State {
                                        gain_idx: [g0, g1, g2, g3],
                                        b_src: bs,
                                        b_dst: bd,
                                    },
                                    p,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Sparse row of the kernel: every reachable next state with its probability,
/// in increasing state-index order.
pub fn successor_distribution(s: &State, a: Action, params: &SystemParams) -> Result<Vec<(State, f64)>> {
    let units = params.power_units()?;
    let consumed = check_feasible(s, a, &units)?;
    let rows = channel_rows(params);
    let mut out = Vec::new();
    successors_with(s, consumed, params, &rows, |st, p| out.push((st, p)))?;
    Ok(out)
}

/// Sparse transition kernel in compressed-row form, one row per
/// (state, action) pair. Rows for infeasible pairs are empty.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    num_states: usize,
    num_levels: usize,
    num_actions: usize,
    feasible: Vec<bool>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl TransitionKernel {
    pub fn build(space: &StateSpace, params: &SystemParams) -> Result<Self> {
        let units = params.power_units()?;
        let m = units.len();
        let num_actions = m * m;
        let rows = channel_rows(params);
        let n = space.len();
        let pairs = n
            .checked_mul(num_actions)
            .ok_or_else(|| Error::StateSpaceOverflow("state-action table too large".into()))?;
        let mut feasible = vec![false; pairs];
        let mut offsets = Vec::with_capacity(pairs + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        offsets.push(0);
        for si in 0..n {
            let s = space.decode(si);
            for ai in 0..num_actions {
                let a = Action::from_index(ai, m);
                if let Ok(consumed) = check_feasible(&s, a, &units) {
                    feasible[si * num_actions + ai] = true;
                    successors_with(&s, consumed, params, &rows, |st, p| {
                        targets.push(space.encode(&st));
                        probs.push(p);
                    })?;
                }
                offsets.push(targets.len());
            }
        }
        Ok(TransitionKernel {
            num_states: n,
            num_levels: m,
            num_actions,
            feasible,
            offsets,
            targets,
            probs,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Number of power levels M.
    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn is_feasible(&self, s: usize, a: usize) -> bool {
        self.feasible[s * self.num_actions + a]
    }

    /// Successor indices and probabilities of `(s, a)`.
    pub fn row(&self, s: usize, a: usize) -> (&[usize], &[f64]) {
        let k = s * self.num_actions + a;
        let (lo, hi) = (self.offsets[k], self.offsets[k + 1]);
        (&self.targets[lo..hi], &self.probs[lo..hi])
    }

    /// Expected value of `values` at the next state.
    pub fn expectation(&self, s: usize, a: usize, values: &[f64]) -> f64 {
        let (t, p) = self.row(s, a);
        t.iter().zip(p).map(|(&j, &pj)| pj * values[j]).sum()
    }

    /// Stored nonzero entries across all rows.
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }
}

/// Reward (bits/J) and secrecy rate (bps) for every feasible (state, action).
#[derive(Debug, Clone)]
pub struct RewardTable {
    num_states: usize,
    num_levels: usize,
    num_actions: usize,
    feasible: Vec<bool>,
    rewards: Vec<f64>,
    rates: Vec<f64>,
    action_units: Vec<usize>,
    slot_seconds: f64,
}

impl RewardTable {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Number of power levels M.
    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn action(&self, a: usize) -> Action {
        Action::from_index(a, self.num_levels)
    }

    pub fn is_feasible(&self, s: usize, a: usize) -> bool {
        self.feasible[s * self.num_actions + a]
    }

    /// `None` for infeasible pairs.
    pub fn get(&self, s: usize, a: usize) -> Option<f64> {
        let k = s * self.num_actions + a;
        self.feasible[k].then(|| self.rewards[k])
    }

    /// Secrecy rate in bps, `None` for infeasible pairs.
    pub fn rate(&self, s: usize, a: usize) -> Option<f64> {
        let k = s * self.num_actions + a;
        self.feasible[k].then(|| self.rates[k])
    }

    /// Secure bits delivered in one slot, `None` for infeasible pairs.
    pub fn secure_bits(&self, s: usize, a: usize) -> Option<f64> {
        self.rate(s, a).map(|c| c * self.slot_seconds)
    }

    /// Total energy units (source + destination) drained by action `a`.
    pub fn action_units(&self, a: usize) -> usize {
        self.action_units[a]
    }

    /// Feasible action indices of state `s`, ascending.
    pub fn feasible_in(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_actions).filter(move |&a| self.is_feasible(s, a))
    }
}

pub fn build_reward_table(space: &StateSpace, params: &SystemParams) -> Result<RewardTable> {
    let units = params.power_units()?;
    let m = units.len();
    let num_actions = m * m;
    let n = space.len();
    let mut feasible = vec![false; n * num_actions];
    let mut rewards = vec![0.0; n * num_actions];
    let mut rates = vec![0.0; n * num_actions];
    for si in 0..n {
        let s = space.decode(si);
        let gains = params.gains(s.gain_idx);
        for a in feasible_with_units(&s, &units) {
            let k = si * num_actions + a.index(m);
            let (p_s, p_d) = (params.power_levels[a.ps_idx], params.power_levels[a.pd_idx]);
            let rate = model::secrecy_rate_at(&gains, p_s, p_d, params)?;
            feasible[k] = true;
            rates[k] = rate;
            rewards[k] = model::reward_from_rate(rate, p_s, p_d);
        }
    }
    let action_units = (0..num_actions)
        .map(|a| {
            let a = Action::from_index(a, m);
            units[a.ps_idx] + units[a.pd_idx]
        })
        .collect();
    Ok(RewardTable {
        num_states: n,
        num_levels: m,
        num_actions,
        feasible,
        rewards,
        rates,
        action_units,
        slot_seconds: params.slot_seconds,
    })
}

/// A fully tabulated scenario: parameters, spaces, kernel and rewards.
#[derive(Debug, Clone)]
pub struct Mdp {
    pub params: SystemParams,
    pub space: StateSpace,
    pub kernel: TransitionKernel,
    pub rewards: RewardTable,
}

impl Mdp {
    pub fn build(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let space = enumerate_states(params)?;
        let kernel = TransitionKernel::build(&space, params)?;
        let rewards = build_reward_table(&space, params)?;
        Ok(Mdp {
            params: params.clone(),
            space,
            kernel,
            rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.space.len()
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions()
    }

    pub fn initial_index(&self) -> usize {
        self.space.encode(&self.params.initial_state())
    }

    pub fn action(&self, a: usize) -> Action {
        Action::from_index(a, self.params.num_power_levels())
    }

    pub fn action_index(&self, a: Action) -> usize {
        a.index(self.params.num_power_levels())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChannelModel;

    fn defaults() -> SystemParams {
        SystemParams::default()
    }

    fn state(g: [usize; 4], b_src: usize, b_dst: usize) -> State {
        State {
            gain_idx: g,
            b_src,
            b_dst,
        }
    }

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(&defaults()).unwrap().len(), 576);

        let mut p = defaults();
        p.channels = crate::model::LinkChannels::uniform(ChannelModel::symmetric(vec![1e-13], 1.0));
        p.battery_cap_src = 0;
        p.battery_cap_dst = 0;
        assert_eq!(enumerate_states(&p).unwrap().len(), 1);

        let mut p = defaults();
        p.battery_cap_src = 1;
        p.battery_cap_dst = 0;
        assert_eq!(enumerate_states(&p).unwrap().len(), 32);
    }

    #[test]
    fn overflow_is_reported() {
        let r = StateSpace::new([usize::MAX, 2, 2, 2], 5, 5);
        assert!(matches!(r, Err(Error::StateSpaceOverflow(_))));
    }

    #[test]
    fn encode_decode_roundtrip_and_order() {
        let space = enumerate_states(&defaults()).unwrap();
        for i in 0..space.len() {
            assert_eq!(space.encode(&space.decode(i)), i);
        }
        // batteries innermost
        assert_eq!(space.decode(1), state([0, 0, 0, 0], 0, 1));
        assert_eq!(space.decode(6), state([0, 0, 0, 0], 1, 0));
        assert_eq!(space.decode(36), state([0, 0, 0, 1], 0, 0));
    }

    #[test]
    fn feasible_action_examples() {
        let p = defaults();
        assert_eq!(feasible_actions(&state([1; 4], 0, 0), &p).unwrap(), vec![Action::IDLE]);
        assert_eq!(feasible_actions(&state([1; 4], 5, 5), &p).unwrap().len(), 16);
        assert_eq!(
            feasible_actions(&state([1; 4], 1, 0), &p).unwrap(),
            vec![Action::new(0, 0), Action::new(1, 0)]
        );
    }

    #[test]
    fn transition_prob_examples() {
        let p = defaults();
        // consume 2 units from b=4 at each node: dry -> 2, wet -> 4
        let s = state([1; 4], 4, 4);
        let a = Action::new(2, 2);
        let wet = state([1; 4], 4, 4);
        let prob = transition_prob(&s, a, &wet, &p).unwrap();
        assert!((prob - 0.164025).abs() < 1e-15, "{prob}");

        let impossible = state([1; 4], 3, 4);
        assert_eq!(transition_prob(&s, a, &impossible, &p).unwrap(), 0.0);

        // full batteries, idle: both harvest branches clip to the cap
        let full = state([1; 4], 5, 5);
        let prob = transition_prob(&full, Action::IDLE, &full, &p).unwrap();
        assert!((prob - 0.9f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn transition_prob_rejects_infeasible_action() {
        let p = defaults();
        let s = state([0; 4], 1, 5);
        assert!(matches!(
            transition_prob(&s, Action::new(3, 0), &s, &p),
            Err(Error::InfeasibleAction { .. })
        ));
    }

    #[test]
    fn successor_examples() {
        let mut p = defaults();
        let out = successor_distribution(&state([1; 4], 3, 3), Action::new(1, 1), &p).unwrap();
        assert_eq!(out.len(), 64);
        assert!(out.iter().all(|&(_, q)| q > 0.0));

        let out = successor_distribution(&state([1; 4], 5, 5), Action::IDLE, &p).unwrap();
        assert_eq!(out.len(), 16);

        p.channels = crate::model::LinkChannels::uniform(ChannelModel::symmetric(vec![1e-13], 1.0));
        p.harvest_prob_src = 1.0;
        p.harvest_prob_dst = 1.0;
        let out = successor_distribution(&state([0; 4], 3, 3), Action::new(1, 1), &p).unwrap();
        assert_eq!(out, vec![(state([0; 4], 4, 4), 1.0)]);
    }

    #[test]
    fn successors_agree_with_pointwise_probabilities() {
        let p = defaults();
        let space = enumerate_states(&p).unwrap();
        let s = state([0, 1, 1, 0], 2, 5);
        for a in feasible_actions(&s, &p).unwrap() {
            let sparse = successor_distribution(&s, a, &p).unwrap();
            let mut dense = vec![0.0; space.len()];
            for (st, q) in &sparse {
                dense[space.encode(st)] += q;
            }
            for (i, st) in space.iter().enumerate() {
                let q = transition_prob(&s, a, &st, &p).unwrap();
                assert!((q - dense[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kernel_rows_are_stochastic_and_in_range() {
        let p = defaults();
        let mdp = Mdp::build(&p).unwrap();
        let (cap_s, cap_d) = mdp.space.caps();
        for s in 0..mdp.num_states() {
            assert!(mdp.kernel.is_feasible(s, 0));
            for a in 0..mdp.num_actions() {
                let (t, q) = mdp.kernel.row(s, a);
                if !mdp.kernel.is_feasible(s, a) {
                    assert!(t.is_empty());
                    continue;
                }
                let sum: f64 = q.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                for &j in t {
                    let st = mdp.space.decode(j);
                    assert!(st.b_src <= cap_s && st.b_dst <= cap_d);
                }
            }
        }
    }

    #[test]
    fn channel_marginals_do_not_depend_on_action() {
        let mut p = defaults();
        p.channels.se = ChannelModel {
            levels: vec![1e-13, 2e-13],
            transition: vec![vec![0.7, 0.3], vec![0.25, 0.75]],
        };
        let mdp = Mdp::build(&p).unwrap();
        let gain_part = |j: usize| mdp.space.decode(j).gain_idx;
        for s in (0..mdp.num_states()).step_by(7) {
            let from = mdp.space.decode(s).gain_idx;
            for a in mdp.rewards.feasible_in(s) {
                let (t, q) = mdp.kernel.row(s, a);
                let mut marg = std::collections::HashMap::new();
                for (&j, &pj) in t.iter().zip(q) {
                    *marg.entry(gain_part(j)).or_insert(0.0) += pj;
                }
                for (to, m) in marg {
                    let expect: f64 = Link::ALL
                        .iter()
                        .map(|&l| p.channels.link(l).transition[from[l.index()]][to[l.index()]])
                        .product();
                    assert!((m - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn reward_table_examples() {
        let p = defaults();
        let mdp = Mdp::build(&p).unwrap();
        for s in 0..mdp.num_states() {
            assert_eq!(mdp.rewards.get(s, 0), Some(0.0));
            if mdp.space.decode(s).b_src == 0 {
                assert!(mdp.rewards.feasible_in(s).all(|a| mdp.rewards.get(s, a) == Some(0.0)));
            }
        }
        // SD = DD = G2, SE = G1, DE = G2 with (2 mW, 1 mW)
        let s = mdp.space.encode(&state([1, 0, 1, 1], 5, 5));
        let a = Action::new(3, 2).index(4);
        let r = mdp.rewards.get(s, a).unwrap();
        let gains = p.gains([1, 0, 1, 1]);
        assert_eq!(r, model::immediate_reward(&gains, 2e-3, 1e-3, &p).unwrap());
        assert!((r - 3.92e7).abs() < 0.01e7);
        assert_eq!(mdp.rewards.action_units(a), 6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn feasible_set_grows_with_batteries(
                bs in 0usize..5, bd in 0usize..5, dbs in 0usize..2, dbd in 0usize..2,
            ) {
                let p = defaults();
                let lo = feasible_actions(&state([0; 4], bs, bd), &p).unwrap();
                let hi = feasible_actions(&state([0; 4], bs + dbs, bd + dbd), &p).unwrap();
                prop_assert!(lo.contains(&Action::IDLE));
                prop_assert!(lo.iter().all(|a| hi.contains(a)));
            }

            #[test]
            fn rows_sum_to_one_for_random_parameters(
                stay in 0.0f64..=1.0, hp in 0.0f64..=1.0, hq in 0.0f64..=1.0,
                es in 0usize..7, ed in 0usize..7, cap_s in 0usize..6, cap_d in 0usize..6,
            ) {
                let mut p = defaults();
                p.channels = crate::model::LinkChannels::uniform(
                    ChannelModel::symmetric(vec![1e-13, 2e-13], stay));
                p.harvest_prob_src = hp;
                p.harvest_prob_dst = hq;
                p.harvest_units_src = es;
                p.harvest_units_dst = ed;
                p.battery_cap_src = cap_s;
                p.battery_cap_dst = cap_d;
                let mdp = Mdp::build(&p).unwrap();
                for s in 0..mdp.num_states() {
                    for a in mdp.rewards.feasible_in(s) {
                        let (_, q) = mdp.kernel.row(s, a);
                        let sum: f64 = q.iter().sum();
                        prop_assert!((sum - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
