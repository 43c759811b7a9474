//! Policy evaluation: exact forward propagation of the state distribution,
//! and seeded Monte Carlo runs of the transmission phase.
//!
//! Within a slot the order is: look up the action, collect the reward, draw
//! the harvests and next channel levels, then update the batteries. Energy
//! harvested in slot k is usable from slot k + 1.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::{enumerate_states, Action, RewardTable, State, StateSpace, TransitionKernel};
use crate::model::{self, Link, SystemParams};
use crate::planners::{Policy, StationaryPolicy};

/// Average SEE and expected secure bits of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Average secrecy energy efficiency over the horizon, bits/J.
    pub avg_see: f64,
    /// Expected total secure bits over the horizon.
    pub total_secure_bits: f64,
    /// Standard errors; `None` for exact evaluation.
    pub avg_see_std_err: Option<f64>,
    pub total_secure_bits_std_err: Option<f64>,
    /// Number of Monte Carlo episodes; `None` for exact evaluation.
    pub episodes: Option<usize>,
}

/// One step of the state distribution under `policy` at `stage`.
pub fn propagate(
    policy: &Policy,
    kernel: &TransitionKernel,
    stage: usize,
    dist: &[f64],
) -> Result<Vec<f64>> {
    let m = kernel.num_levels();
    let mut next = vec![0.0; dist.len()];
    for (s, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let a = checked_action(policy, kernel, stage, s, m)?;
        let (targets, probs) = kernel.row(s, a);
        for (&j, &p) in targets.iter().zip(probs) {
            next[j] += mass * p;
        }
    }
    Ok(next)
}

fn checked_action(
    policy: &Policy,
    kernel: &TransitionKernel,
    stage: usize,
    s: usize,
    num_levels: usize,
) -> Result<usize> {
    let action = policy.decide(stage, s)?;
    if action.ps_idx >= num_levels || action.pd_idx >= num_levels {
        return Err(Error::InfeasibleAction {
            state: s.to_string(),
            ps_idx: action.ps_idx,
            pd_idx: action.pd_idx,
        });
    }
    let a = action.index(num_levels);
    if !kernel.is_feasible(s, a) {
        return Err(Error::InfeasibleAction {
            state: s.to_string(),
            ps_idx: action.ps_idx,
            pd_idx: action.pd_idx,
        });
    }
    Ok(a)
}

/// Exact metrics of `policy` over `horizon` slots starting from state index
/// `initial`, with no sampling error.
pub fn exact_evaluate(
    policy: &Policy,
    kernel: &TransitionKernel,
    rewards: &RewardTable,
    horizon: usize,
    initial: usize,
) -> Result<Metrics> {
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    let n = kernel.num_states();
    if rewards.num_states() != n || policy.num_states() != n {
        return Err(Error::Shape(format!(
            "kernel has {n} states, rewards {}, policy {}",
            rewards.num_states(),
            policy.num_states()
        )));
    }
    if initial >= n {
        return Err(Error::Argument(format!("initial state {initial} out of range")));
    }
    let m = rewards.num_levels();
    let mut dist = vec![0.0; n];
    dist[initial] = 1.0;
    let mut see = 0.0;
    let mut bits = 0.0;
    for stage in 0..horizon {
        let mut next = vec![0.0; n];
        for (s, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let a = checked_action(policy, kernel, stage, s, m)?;
            see += mass * rewards.get(s, a).unwrap_or(0.0);
            bits += mass * rewards.secure_bits(s, a).unwrap_or(0.0);
            let (targets, probs) = kernel.row(s, a);
            for (&j, &p) in targets.iter().zip(probs) {
                next[j] += mass * p;
            }
        }
        dist = next;
    }
    Ok(Metrics {
        avg_see: see / horizon as f64,
        total_secure_bits: bits,
        avg_see_std_err: None,
        total_secure_bits_std_err: None,
        episodes: None,
    })
}

/// What happened in one slot of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub stage: usize,
    pub state: State,
    pub action: Action,
    /// Secrecy rate, bps.
    pub secrecy_rate: f64,
    /// Reward, bits/J.
    pub reward: f64,
    /// Energy units harvested during the slot (usable from the next slot).
    pub harvest_src: usize,
    pub harvest_dst: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub records: Vec<SlotRecord>,
    /// Sum of `secrecy_rate * T_s` over the slots.
    pub total_secure_bits: f64,
    pub total_reward: f64,
}

impl EpisodeTrace {
    /// Reward averaged over the slots of this episode.
    pub fn avg_see(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.total_reward / self.records.len() as f64
        }
    }

    /// Comma-separated dump, one row per slot.
    pub fn write_delimited<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "stage,g_sd,g_se,g_dd,g_de,b_src,b_dst,ps_idx,pd_idx,secrecy_rate_bps,reward_bits_per_joule,harvest_src,harvest_dst"
        )?;
        for r in &self.records {
            let [a, b, c, d] = r.state.gain_idx;
            writeln!(
                out,
                "{},{a},{b},{c},{d},{},{},{},{},{},{},{},{}",
                r.stage,
                r.state.b_src,
                r.state.b_dst,
                r.action.ps_idx,
                r.action.pd_idx,
                r.secrecy_rate,
                r.reward,
                r.harvest_src,
                r.harvest_dst
            )?;
        }
        Ok(())
    }
}

/// Everything an episode needs that does not change between episodes.
struct EpisodeRunner<'a> {
    params: &'a SystemParams,
    space: StateSpace,
    units: Vec<usize>,
}

impl<'a> EpisodeRunner<'a> {
    fn new(params: &'a SystemParams) -> Result<Self> {
        params.validate()?;
        Ok(EpisodeRunner {
            params,
            space: enumerate_states(params)?,
            units: params.power_units()?,
        })
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states() != self.space.len() {
            return Err(Error::Shape(format!(
                "policy covers {} states, parameters imply {}",
                policy.num_states(),
                self.space.len()
            )));
        }
        Ok(())
    }

    fn next_level(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // rounding left u above the cumulative sum: take the last reachable level
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }

    fn run(&self, policy: &Policy, horizon: usize, rng: &mut ChaCha8Rng) -> Result<EpisodeTrace> {
        let p = self.params;
        let mut state = p.initial_state();
        let mut records = Vec::with_capacity(horizon);
        let mut total_bits = 0.0;
        let mut total_reward = 0.0;
        for stage in 0..horizon {
            let s = self.space.encode(&state);
            let action = policy.decide(stage, s)?;
            let m = self.units.len();
            let infeasible = || Error::InfeasibleAction {
                state: state.to_string(),
                ps_idx: action.ps_idx,
                pd_idx: action.pd_idx,
            };
            if action.ps_idx >= m || action.pd_idx >= m {
                return Err(infeasible());
            }
            let (c_src, c_dst) = (self.units[action.ps_idx], self.units[action.pd_idx]);
            if c_src > state.b_src || c_dst > state.b_dst {
                return Err(infeasible());
            }
            let (p_s, p_d) = (p.power_levels[action.ps_idx], p.power_levels[action.pd_idx]);
            let rate = model::secrecy_rate_at(&p.gains(state.gain_idx), p_s, p_d, p)?;
            let reward = model::reward_from_rate(rate, p_s, p_d);
            total_bits += rate * p.slot_seconds;
            total_reward += reward;

            let harvest_src = if rng.random_bool(p.harvest_prob_src) {
                p.harvest_units_src
            } else {
                0
            };
            let harvest_dst = if rng.random_bool(p.harvest_prob_dst) {
                p.harvest_units_dst
            } else {
                0
            };
            records.push(SlotRecord {
                stage,
                state,
                action,
                secrecy_rate: rate,
                reward,
                harvest_src,
                harvest_dst,
            });

            let mut gain_idx = state.gain_idx;
            for link in Link::ALL {
                let l = link.index();
                gain_idx[l] = Self::next_level(rng, &p.channels.link(link).transition[gain_idx[l]]);
            }
            state = State {
                gain_idx,
                b_src: model::battery_next(state.b_src, c_src, harvest_src, p.battery_cap_src)?,
                b_dst: model::battery_next(state.b_dst, c_dst, harvest_dst, p.battery_cap_dst)?,
            };
        }
        Ok(EpisodeTrace {
            records,
            total_secure_bits: total_bits,
            total_reward,
        })
    }
}

/// Seed of episode `index` under `master_seed`. Each episode gets its own
/// stream, so results do not depend on the order episodes are run in.
pub fn episode_seed(master_seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over a Weyl sequence
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run one transmission-phase episode of `params.horizon` slots.
pub fn run_episode(policy: &Policy, params: &SystemParams, seed: u64) -> Result<EpisodeTrace> {
    let runner = EpisodeRunner::new(params)?;
    runner.check_policy(policy)?;
    runner.run(policy, params.horizon, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Running mean and sum of squared deviations (Welford).
#[derive(Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn std_err(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0) / self.n).sqrt()
        }
    }
}

fn summarize(samples: &[(f64, f64)]) -> Metrics {
    let mut see = Moments::default();
    let mut bits = Moments::default();
    for &(e, b) in samples {
        see.push(e);
        bits.push(b);
    }
    Metrics {
        avg_see: see.mean,
        total_secure_bits: bits.mean,
        avg_see_std_err: Some(see.std_err()),
        total_secure_bits_std_err: Some(bits.std_err()),
        episodes: Some(samples.len()),
    }
}

fn mc_samples(
    policy: &Policy,
    params: &SystemParams,
    episodes: usize,
    master_seed: u64,
    horizon_of: impl Fn(&mut ChaCha8Rng) -> usize + Sync,
) -> Result<Vec<(f64, f64)>> {
    if episodes == 0 {
        return Err(Error::Argument("episodes must be at least 1".into()));
    }
    let runner = EpisodeRunner::new(params)?;
    runner.check_policy(policy)?;
    // Collected in episode order; the sums below never see the thread layout.
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(episode_seed(master_seed, i));
            let horizon = horizon_of(&mut rng);
            let trace = runner.run(policy, horizon, &mut rng)?;
            Ok((trace.avg_see(), trace.total_secure_bits))
        })
        .collect()
}

/// Monte Carlo metrics over `episodes` runs of `params.horizon` slots, on the
/// current rayon pool.
pub fn monte_carlo_evaluate(
    policy: &Policy,
    params: &SystemParams,
    episodes: usize,
    master_seed: u64,
) -> Result<Metrics> {
    let horizon = params.horizon;
    let samples = mc_samples(policy, params, episodes, master_seed, |_| horizon)?;
    Ok(summarize(&samples))
}

/// As [`monte_carlo_evaluate`], on a dedicated pool of `workers` threads.
pub fn monte_carlo_evaluate_with_workers(
    policy: &Policy,
    params: &SystemParams,
    episodes: usize,
    master_seed: u64,
    workers: usize,
) -> Result<Metrics> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot build worker pool: {e}")))?;
    pool.install(|| monte_carlo_evaluate(policy, params, episodes, master_seed))
}

/// Monte Carlo metrics when the number of slots is itself random: each
/// episode survives another slot with probability `discount`, so its length
/// is geometric with mean `1 / (1 - discount)`.
pub fn monte_carlo_evaluate_random_horizon(
    policy: &StationaryPolicy,
    params: &SystemParams,
    discount: f64,
    episodes: usize,
    master_seed: u64,
) -> Result<Metrics> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::Argument(format!("discount {discount} must lie in (0, 1)")));
    }
    let policy = Policy::Stationary(policy.clone());
    let samples = mc_samples(&policy, params, episodes, master_seed, |rng| {
        let mut k = 1;
        while rng.random::<f64>() < discount {
            k += 1;
        }
        k
    })?;
    Ok(summarize(&samples))
}
