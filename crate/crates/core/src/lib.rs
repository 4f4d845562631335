//! Analytic and Monte-Carlo evaluation of a two-tier macrocell/femtocell
//! network whose femtocells split their channels into closed (own users
//! only) and open (any user) groups.
//!
//! The analytic path couples a per-femtocell occupancy chain ([`markov`])
//! with handoff traffic algebra and Erlang-B macrocell blocking
//! ([`traffic`]) through a damped fixed point ([`solver`]). Capacity and
//! energy figures come from [`phy`] and [`energy`]. [`mcsim`] re-derives the
//! same quantities by simulation.

pub mod domain;
pub mod energy;
pub mod error;
pub mod markov;
pub mod mcsim;
pub mod phy;
pub mod solver;
pub mod stats;
pub mod traffic;

pub use domain::{validate, BlockingProbs, RadioParams, SystemParams};
pub use energy::{efficiency, mean_dynamic_power, EfficiencyReport};
pub use error::{Error, Result, Violation};
pub use markov::{ChainRates, ChannelSplit, ChannelState, StationaryDistribution};
pub use mcsim::{Horizon, SimConfig, SimEstimate};
pub use phy::{estimate_capacity, CapacityEstimate, FadingSample};
pub use solver::{solve, Solution, SolverConfig};
pub use traffic::{erlang_b, HandoffProbs, TrafficRates};
