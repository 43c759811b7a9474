//! Brute-force reference computations used to check the planners and the
//! evaluator. They work straight from the physical model (battery update,
//! reward, channel rows) and never touch the tabulated kernel.

#![allow(dead_code)]

use seejam::mdp::{Action, State};
use seejam::model::{self, Link, SystemParams};

/// Relative closeness used throughout the oracle checks.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

pub fn units(params: &SystemParams) -> Vec<usize> {
    params.power_units().unwrap()
}

pub fn feasible(params: &SystemParams, s: &State) -> Vec<Action> {
    let u = units(params);
    let m = u.len();
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if u[i] <= s.b_src && u[j] <= s.b_dst {
                out.push(Action::new(i, j));
            }
        }
    }
    out
}

pub fn reward(params: &SystemParams, s: &State, a: Action) -> f64 {
    let (ps, pd) = (params.power_levels[a.ps_idx], params.power_levels[a.pd_idx]);
    model::immediate_reward(&params.gains(s.gain_idx), ps, pd, params).unwrap()
}

pub fn secure_bits(params: &SystemParams, s: &State, a: Action) -> f64 {
    let (ps, pd) = (params.power_levels[a.ps_idx], params.power_levels[a.pd_idx]);
    model::secrecy_rate_at(&params.gains(s.gain_idx), ps, pd, params).unwrap() * params.slot_seconds
}

/// Every (next state, probability) branch of one slot, one entry per
/// channel/harvest realization. Branches reaching the same state are NOT
/// merged, and zero-probability branches are kept.
pub fn branches(params: &SystemParams, s: &State, a: Action) -> Vec<(State, f64)> {
    let u = units(params);
    let rows: Vec<&Vec<f64>> = Link::ALL
        .iter()
        .map(|&l| &params.channels.link(l).transition[s.gain_idx[l.index()]])
        .collect();
    let mut out = Vec::new();
    let harvests_src = [(0, 1.0 - params.harvest_prob_src), (params.harvest_units_src, params.harvest_prob_src)];
    let harvests_dst = [(0, 1.0 - params.harvest_prob_dst), (params.harvest_units_dst, params.harvest_prob_dst)];
    for (g0, p0) in rows[0].iter().enumerate() {
        for (g1, p1) in rows[1].iter().enumerate() {
            for (g2, p2) in rows[2].iter().enumerate() {
                for (g3, p3) in rows[3].iter().enumerate() {
                    for &(hs, ps) in &harvests_src {
                        for &(hd, pd) in &harvests_dst {
                            let next = State {
                                gain_idx: [g0, g1, g2, g3],
                                b_src: model::battery_next(s.b_src, u[a.ps_idx], hs, params.battery_cap_src)
                                    .unwrap(),
                                b_dst: model::battery_next(s.b_dst, u[a.pd_idx], hd, params.battery_cap_dst)
                                    .unwrap(),
                            };
                            out.push((next, p0 * p1 * p2 * p3 * ps * pd));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Every state of the space, in no particular order.
pub fn all_states(params: &SystemParams) -> Vec<State> {
    let counts = params.channels.level_counts();
    let mut out = Vec::new();
    for a in 0..counts[0] {
        for b in 0..counts[1] {
            for c in 0..counts[2] {
                for d in 0..counts[3] {
                    for bs in 0..=params.battery_cap_src {
                        for bd in 0..=params.battery_cap_dst {
                            out.push(State {
                                gain_idx: [a, b, c, d],
                                b_src: bs,
                                b_dst: bd,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Best expected total reward over `horizon` slots from `s`, found by
/// enumerating every deterministic Markov decision rule for every stage.
///
/// A decision rule assigns one feasible action to each state; all
/// combinations are tried, which is only practical on tiny instances.
pub fn brute_force_optimum(params: &SystemParams, s0: &State, horizon: usize) -> f64 {
    let states = all_states(params);
    let options: Vec<Vec<Action>> = states.iter().map(|s| feasible(params, s)).collect();
    let rules = all_rules(&options);
    let mut best = f64::NEG_INFINITY;
    let mut plan = vec![0usize; horizon];
    loop {
        let v = plan_value(params, &states, &rules, &plan, s0, 0);
        best = best.max(v);
        // odometer over rule choices per stage
        let mut k = 0;
        while k < horizon {
            plan[k] += 1;
            if plan[k] < rules.len() {
                break;
            }
            plan[k] = 0;
            k += 1;
        }
        if k == horizon {
            return best;
        }
    }
}

fn all_rules(options: &[Vec<Action>]) -> Vec<Vec<Action>> {
    let mut rules = vec![Vec::new()];
    for opts in options {
        let mut grown = Vec::with_capacity(rules.len() * opts.len());
        for r in &rules {
            for &a in opts {
                let mut r2 = r.clone();
                r2.push(a);
                grown.push(r2);
            }
        }
        rules = grown;
    }
    rules
}

fn plan_value(
    params: &SystemParams,
    states: &[State],
    rules: &[Vec<Action>],
    plan: &[usize],
    s: &State,
    stage: usize,
) -> f64 {
    if stage == plan.len() {
        return 0.0;
    }
    let pos = states.iter().position(|x| x == s).unwrap();
    let a = rules[plan[stage]][pos];
    let mut v = reward(params, s, a);
    for (next, p) in branches(params, s, a) {
        if p > 0.0 {
            v += p * plan_value(params, states, rules, plan, &next, stage + 1);
        }
    }
    v
}

/// Expected (total reward, total secure bits) of a decision function over
/// `horizon` slots, by walking every realization tree branch.
pub fn enumerate_policy_value(
    params: &SystemParams,
    decide: &dyn Fn(usize, &State) -> Action,
    s: &State,
    stage: usize,
    horizon: usize,
) -> (f64, f64) {
    if stage == horizon {
        return (0.0, 0.0);
    }
    let a = decide(stage, s);
    let mut r = reward(params, s, a);
    let mut bits = secure_bits(params, s, a);
    for (next, p) in branches(params, s, a) {
        if p > 0.0 {
            let (fr, fb) = enumerate_policy_value(params, decide, &next, stage + 1, horizon);
            r += p * fr;
            bits += p * fb;
        }
    }
    (r, bits)
}

/// Optimal discounted values by value iteration, run until successive
/// iterates differ by less than `tol` (relative sup norm).
pub fn value_iteration(params: &SystemParams, discount: f64, tol: f64) -> Vec<(State, f64)> {
    let states = all_states(params);
    let index = |s: &State| states.iter().position(|x| x == s).unwrap();
    let model: Vec<Vec<(f64, Vec<(usize, f64)>)>> = states
        .iter()
        .map(|s| {
            feasible(params, s)
                .into_iter()
                .map(|a| {
                    let succ = branches(params, s, a)
                        .into_iter()
                        .filter(|&(_, p)| p > 0.0)
                        .map(|(n, p)| (index(&n), p))
                        .collect();
                    (reward(params, s, a), succ)
                })
                .collect()
        })
        .collect();
    let mut v = vec![0.0; states.len()];
    for _ in 0..100_000 {
        let next: Vec<f64> = model
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|(r, succ)| r + discount * succ.iter().map(|&(j, p)| p * v[j]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let scale = next.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= tol * scale {
            break;
        }
    }
    states.into_iter().zip(v).collect()
}
