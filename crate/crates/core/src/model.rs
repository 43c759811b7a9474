//! Physical-layer and energy bookkeeping for the source / full-duplex
//! destination / eavesdropper link.
//!
//! Everything here is a pure function of [`SystemParams`]. Powers are carried
//! in Watts, but every admissible power level must drain a whole number of
//! battery quanta per slot, so battery arithmetic stays on integers.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::State;

/// Row sums of a channel transition matrix must match 1 this closely.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Relative slack allowed when checking that `P * T_s / unit` is an integer.
const UNIT_TOL: f64 = 1e-9;

/// The four quantized links of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Link {
    /// Source to destination.
    Sd,
    /// Source to eavesdropper.
    Se,
    /// Residual self-interference at the destination.
    Dd,
    /// Destination (jammer) to eavesdropper.
    De,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::Sd, Link::Se, Link::Dd, Link::De];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Link::Sd => "sd",
            Link::Se => "se",
            Link::Dd => "dd",
            Link::De => "de",
        }
    }
}

/// Finite-state Markov model of one link's channel power gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    /// Quantized channel power gains, dimensionless.
    pub levels: Vec<f64>,
    /// Row-stochastic matrix; `transition[i][j]` is P[next = j | current = i].
    pub transition: Vec<Vec<f64>>,
}

impl ChannelModel {
    /// Chain that keeps its level with probability `stay` and otherwise moves
    /// uniformly to one of the other levels.
    pub fn symmetric(levels: Vec<f64>, stay: f64) -> Self {
        let n = levels.len();
        let leave = if n > 1 { (1.0 - stay) / (n - 1) as f64 } else { 0.0 };
        let transition = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { if n > 1 { stay } else { 1.0 } } else { leave })
                    .collect()
            })
            .collect();
        ChannelModel { levels, transition }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    fn validate(&self, link: Link) -> Result<()> {
        let field = |f: &str| format!("channels.{}.{}", link.name(), f);
        let n = self.levels.len();
        if n == 0 {
            return Err(invalid(field("levels"), "at least one level is required"));
        }
        if let Some(g) = self.levels.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid(
                field("levels"),
                format!("gains must be finite and strictly positive, got {g}"),
            ));
        }
        if self.transition.len() != n {
            return Err(invalid(
                field("transition"),
                format!("expected {n} rows, got {}", self.transition.len()),
            ));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(
                    field("transition"),
                    format!("row {i} has {} entries, expected {n}", row.len()),
                ));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(
                    field("transition"),
                    format!("row {i} has an entry outside [0, 1]"),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(invalid(
                    field("transition"),
                    format!("row {i} sums to {sum}, not 1"),
                ));
            }
        }
        Ok(())
    }
}

fn default_gain_chain() -> ChannelModel {
    ChannelModel::symmetric(vec![1.655e-13, 3.311e-13], 0.9)
}

/// Independent channel models for the four links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkChannels {
    #[serde(default = "default_gain_chain")]
    pub sd: ChannelModel,
    #[serde(default = "default_gain_chain")]
    pub se: ChannelModel,
    #[serde(default = "default_gain_chain")]
    pub dd: ChannelModel,
    #[serde(default = "default_gain_chain")]
    pub de: ChannelModel,
}

impl LinkChannels {
    /// Same chain on every link.
    pub fn uniform(model: ChannelModel) -> Self {
        LinkChannels {
            sd: model.clone(),
            se: model.clone(),
            dd: model.clone(),
            de: model,
        }
    }

    pub fn link(&self, link: Link) -> &ChannelModel {
        match link {
            Link::Sd => &self.sd,
            Link::Se => &self.se,
            Link::Dd => &self.dd,
            Link::De => &self.de,
        }
    }

    pub fn level_counts(&self) -> [usize; 4] {
        Link::ALL.map(|l| self.link(l).num_levels())
    }
}

impl Default for LinkChannels {
    fn default() -> Self {
        LinkChannels::uniform(default_gain_chain())
    }
}

/// Physical and stochastic constants of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Channel bandwidth W, Hz.
    pub bandwidth_hz: f64,
    /// Noise power spectral density N_0, W/Hz.
    pub noise_psd: f64,
    /// Residual self-interference fraction after cancellation (0 = perfect).
    pub sic_factor: f64,
    /// Slot duration T_s, seconds.
    pub slot_seconds: f64,
    /// Size of one battery quantum, joules.
    pub energy_unit_joules: f64,
    pub harvest_units_src: usize,
    pub harvest_units_dst: usize,
    pub harvest_prob_src: f64,
    pub harvest_prob_dst: f64,
    pub battery_cap_src: usize,
    pub battery_cap_dst: usize,
    /// Admissible power levels in Watts, starting at 0 and strictly increasing.
    pub power_levels: Vec<f64>,
    pub channels: LinkChannels,
    /// Number of slots K.
    pub horizon: usize,
    /// Discount factor for the infinite-horizon planner. When absent it is
    /// derived from the horizon as `1 - 1/K`.
    pub discount: Option<f64>,
    /// Starting state. Defaults to the highest gain level on every link with
    /// both batteries full.
    pub initial_state: Option<State>,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            bandwidth_hz: 2e6,
            noise_psd: 10f64.powf(-20.4),
            sic_factor: 1e-5,
            slot_seconds: 5e-3,
            energy_unit_joules: 2.5e-6,
            harvest_units_src: 2,
            harvest_units_dst: 2,
            harvest_prob_src: 0.5,
            harvest_prob_dst: 0.5,
            battery_cap_src: 5,
            battery_cap_dst: 5,
            power_levels: vec![0.0, 0.5e-3, 1e-3, 2e-3],
            channels: LinkChannels::default(),
            horizon: 10,
            discount: None,
            initial_state: None,
        }
    }
}

impl SystemParams {
    /// Thermal noise power W * N_0 in Watts.
    pub fn noise_floor(&self) -> f64 {
        self.bandwidth_hz * self.noise_psd
    }

    pub fn num_power_levels(&self) -> usize {
        self.power_levels.len()
    }

    /// Resolved starting state.
    pub fn initial_state(&self) -> State {
        self.initial_state.unwrap_or_else(|| State {
            gain_idx: self.channels.level_counts().map(|n| n.saturating_sub(1)),
            b_src: self.battery_cap_src,
            b_dst: self.battery_cap_dst,
        })
    }

    /// Resolved discount factor for the infinite-horizon planner.
    pub fn discount(&self) -> Result<f64> {
        match self.discount {
            Some(g) => Ok(g),
            None => crate::planners::horizon_to_discount(self.horizon),
        }
    }

    /// Gains of the four links for the given level indices.
    pub fn gains(&self, gain_idx: [usize; 4]) -> LinkGains {
        let g = |l: Link| self.channels.link(l).levels[gain_idx[l.index()]];
        LinkGains {
            g_sd: g(Link::Sd),
            g_se: g(Link::Se),
            g_dd: g(Link::Dd),
            g_de: g(Link::De),
        }
    }

    /// Energy units drained per slot by each power level.
    pub fn power_units(&self) -> Result<Vec<usize>> {
        self.power_levels
            .iter()
            .map(|&p| power_to_units(p, self))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        let probability = |field: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(field, format!("must lie in [0, 1], got {v}")))
            }
        };
        positive("bandwidth_hz", self.bandwidth_hz)?;
        positive("noise_psd", self.noise_psd)?;
        positive("slot_seconds", self.slot_seconds)?;
        positive("energy_unit_joules", self.energy_unit_joules)?;
        probability("sic_factor", self.sic_factor)?;
        probability("harvest_prob_src", self.harvest_prob_src)?;
        probability("harvest_prob_dst", self.harvest_prob_dst)?;

        match self.power_levels.first() {
            None => return Err(invalid("power_levels", "at least one level is required")),
            Some(&p0) if p0 != 0.0 => {
                return Err(invalid("power_levels", "the first level must be 0 W"))
            }
            _ => {}
        }
        if self.power_levels.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(invalid("power_levels", "levels must be strictly increasing"));
        }
        if self.power_levels.iter().any(|p| !p.is_finite()) {
            return Err(invalid("power_levels", "levels must be finite"));
        }
        self.power_units()?;

        for link in Link::ALL {
            self.channels.link(link).validate(link)?;
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if let Some(g) = self.discount {
            if !(g > 0.0 && g < 1.0) {
                return Err(invalid("discount", format!("must lie in (0, 1), got {g}")));
            }
        }
        if let Some(s) = self.initial_state {
            let counts = self.channels.level_counts();
            if s.gain_idx.iter().zip(counts).any(|(&i, n)| i >= n)
                || s.b_src > self.battery_cap_src
                || s.b_dst > self.battery_cap_dst
            {
                return Err(invalid(
                    "initial_state",
                    "gain index or battery level out of range",
                ));
            }
        }
        Ok(())
    }
}

/// Channel power gains of the four links in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub g_sd: f64,
    pub g_se: f64,
    pub g_dd: f64,
    pub g_de: f64,
}

/// SINRs at the destination and at the eavesdropper.
///
/// The destination sees only the residual fraction `sic_factor` of its own
/// jamming, while the eavesdropper sees all of it.
pub fn sinr_pair(gains: &LinkGains, p_s: f64, p_d: f64, params: &SystemParams) -> Result<(f64, f64)> {
    let noise = params.noise_floor();
    if !(noise.is_finite() && noise > 0.0) {
        return Err(invalid("noise_psd", "noise floor W*N_0 must be positive"));
    }
    if p_s < 0.0 || p_d < 0.0 {
        return Err(Error::Argument(format!(
            "powers must be nonnegative, got p_s={p_s}, p_d={p_d}"
        )));
    }
    let gamma_d = gains.g_sd * p_s / (params.sic_factor * p_d * gains.g_dd + noise);
    let gamma_e = gains.g_se * p_s / (p_d * gains.g_de + noise);
    Ok((gamma_d, gamma_e))
}

/// Secrecy rate in bps, clamped at zero.
pub fn secrecy_rate(gamma_d: f64, gamma_e: f64, params: &SystemParams) -> f64 {
    let w = params.bandwidth_hz;
    let diff = w * (1.0 + gamma_d).log2() - w * (1.0 + gamma_e).log2();
    diff.max(0.0)
}

/// Secrecy rate (bps) achieved by transmitting at `p_s` while jamming at `p_d`.
pub fn secrecy_rate_at(gains: &LinkGains, p_s: f64, p_d: f64, params: &SystemParams) -> Result<f64> {
    let (gd, ge) = sinr_pair(gains, p_s, p_d, params)?;
    Ok(secrecy_rate(gd, ge, params))
}

/// Secure bits per joule for a slot with secrecy rate `rate` and total
/// radiated power `p_s + p_d`. An idle slot scores 0.
pub fn reward_from_rate(rate: f64, p_s: f64, p_d: f64) -> f64 {
    let total = p_s + p_d;
    if total > 0.0 {
        rate / total
    } else {
        0.0
    }
}

/// Per-slot reward in bits/J.
pub fn immediate_reward(gains: &LinkGains, p_s: f64, p_d: f64, params: &SystemParams) -> Result<f64> {
    let rate = secrecy_rate_at(gains, p_s, p_d, params)?;
    Ok(reward_from_rate(rate, p_s, p_d))
}

/// Battery level after one slot: spend `consumed`, add `harvested`, clip at `cap`.
pub fn battery_next(b: usize, consumed: usize, harvested: usize, cap: usize) -> Result<usize> {
    if consumed > b {
        return Err(Error::InfeasibleConsumption {
            consumed,
            available: b,
        });
    }
    Ok((b - consumed + harvested).min(cap))
}

/// Number of battery quanta a power level drains in one slot.
pub fn power_to_units(p: f64, params: &SystemParams) -> Result<usize> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(invalid("power_levels", format!("power must be finite and >= 0, got {p}")));
    }
    let units = p * params.slot_seconds / params.energy_unit_joules;
    let rounded = units.round();
    if (units - rounded).abs() > UNIT_TOL * rounded.max(1.0) {
        return Err(Error::NonIntegerPower { power_w: p, units });
    }
    Ok(rounded as usize)
}
