//! Planning and evaluation of joint source-transmit / destination-jamming
//! power allocation for an energy-harvesting link with a passive
//! eavesdropper.
//!
//! The objective is the average secrecy energy efficiency (secure bits per
//! joule) over a run of time slots. Three planners are provided:
//!
//! * backward induction over a known horizon ([`planners::plan_backward_induction`]),
//! * a myopic greedy rule ([`planners::greedy_policy`]),
//! * discounted policy iteration for an unknown horizon
//!   ([`planners::plan_policy_iteration`]).
//!
//! Policies are look-up tables that [`sim`] evaluates either exactly, by
//! propagating the state distribution, or by seeded Monte Carlo episodes.

pub mod error;
pub mod mdp;
pub mod model;
pub mod planners;
pub mod policy_file;
pub mod sim;

pub use error::{Error, Result};
pub use mdp::{Action, Mdp, State};
pub use model::SystemParams;
pub use planners::{NonstationaryPolicy, PlanStats, Policy, StationaryPolicy};
pub use sim::Metrics;
