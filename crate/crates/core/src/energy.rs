//! Femtocell BS power draw and energy-efficiency figures.

use serde::Serialize;

use crate::domain::{RadioParams, SystemParams};
use crate::error::Result;
use crate::markov::{self, StationaryDistribution};
use crate::phy::{self, CapacityEstimate};
use crate::solver::Solution;

/// Mean transmit power `Σ (i+j)·S(i,j)·PW_v` (W).
pub fn mean_dynamic_power(dist: &StationaryDistribution, radio: &RadioParams) -> f64 {
    dist.mean_occupied() * radio.channel_power
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub p_closed: f64,
    pub p_open: f64,
    pub capacity: CapacityEstimate,
    /// Mean dynamic power `E(PW_t)` (W).
    pub e_pw_t: f64,
    /// Mean BS power `E(PW_FBS) = PW_c + E(PW_t)` (W).
    pub e_pw_fbs: f64,
    /// Power per unit capacity (W per bit/s); `None` when the capacity is zero.
    pub eta_ee: Option<f64>,
    /// Capacity per unit power (bit/J); zero when the capacity is zero.
    pub bits_per_joule: f64,
    pub zero_capacity: bool,
}

impl EfficiencyReport {
    pub fn new(
        p_closed: f64,
        p_open: f64,
        capacity: CapacityEstimate,
        e_pw_t: f64,
        radio: &RadioParams,
    ) -> Self {
        let e_pw_fbs = radio.circuit_power + e_pw_t;
        let zero_capacity = capacity.c_total <= 0.0;
        let (eta_ee, bits_per_joule) = if zero_capacity {
            (None, 0.0)
        } else {
            (
                Some(e_pw_fbs / capacity.c_total),
                capacity.c_total / e_pw_fbs,
            )
        };
        Self {
            p_closed,
            p_open,
            capacity,
            e_pw_t,
            e_pw_fbs,
            eta_ee,
            bits_per_joule,
            zero_capacity,
        }
    }
}

/// Occupancy, capacity, power and efficiency at a converged operating point.
pub fn efficiency(
    params: &SystemParams,
    radio: &RadioParams,
    solution: &Solution,
    samples: usize,
    seed: u64,
) -> Result<EfficiencyReport> {
    let (p_closed, p_open) = markov::occupancy_probabilities(&solution.dist);
    let capacity = phy::estimate_capacity(params, radio, p_closed, p_open, samples, seed)?;
    let e_pw_t = mean_dynamic_power(&solution.dist, radio);
    Ok(EfficiencyReport::new(
        p_closed, p_open, capacity, e_pw_t, radio,
    ))
}
