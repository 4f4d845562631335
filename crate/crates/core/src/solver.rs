//! Damped fixed-point iteration over the three coupled blocking probabilities.

use serde::Serialize;

use crate::domain::{BlockingProbs, SystemParams};
use crate::error::{Error, Result};
use crate::markov::{self, ChainRates, StationaryDistribution};
use crate::traffic::{self, HandoffProbs, TrafficRates};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Convergence threshold on `max |F(p) − p|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor `d` in `p ← (1 − d)·p + d·F(p)`.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            damping: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// A converged operating point.
#[derive(Debug, Clone)]
pub struct Solution {
    pub params: SystemParams,
    pub blocking: BlockingProbs,
    pub handoff: HandoffProbs,
    /// Rates evaluated at `blocking`, including the macrocell traffic intensities.
    pub rates: TrafficRates,
    /// Femtocell occupancy distribution evaluated at `blocking`.
    pub dist: StationaryDistribution,
    pub iterations: usize,
    /// `max |F(blocking) − blocking|`.
    pub residual: f64,
}

impl Solution {
    pub fn occupancy(&self) -> (f64, f64) {
        markov::occupancy_probabilities(&self.dist)
    }
}

struct Evaluation {
    image: BlockingProbs,
    rates: TrafficRates,
    dist: StationaryDistribution,
}

fn evaluate(params: &SystemParams, hp: &HandoffProbs, p: &BlockingProbs) -> Result<Evaluation> {
    let mut rates = traffic::aggregate_rates(params, hp, p)?;
    let chain = ChainRates::new(rates.lambda_1, rates.lambda_2, rates.mu_1, rates.mu_2);
    let dist = markov::stationary_product_form(chain, params.femto_channels, params.open_channels)?;
    let holding = traffic::mean_channel_holding_macro(params, p);
    let (t_m, t_f) = traffic::traffic_intensities(&rates, holding);
    rates.t_m = t_m;
    rates.t_f = t_f;
    let image = BlockingProbs::new(
        markov::blocking_femto_user(&dist),
        markov::blocking_macro_user_in_femto(&dist),
        traffic::erlang_b(t_m + t_f, params.macro_channels)?,
    );
    Ok(Evaluation { image, rates, dist })
}

/// One application of the fixed-point map minus the identity, as a max-abs value.
pub fn residual(params: &SystemParams, blocking: &BlockingProbs) -> Result<f64> {
    params.validate()?;
    let hp = traffic::handoff_probs(params);
    Ok(evaluate(params, &hp, blocking)?
        .image
        .max_abs_diff(blocking))
}

/// Solves from the light-traffic start `(0, 0, 0)`.
pub fn solve(params: &SystemParams, cfg: &SolverConfig) -> Result<Solution> {
    solve_from(params, cfg, BlockingProbs::default())
}

pub fn solve_from(
    params: &SystemParams,
    cfg: &SolverConfig,
    start: BlockingProbs,
) -> Result<Solution> {
    params.validate()?;
    cfg.check()?;
    if !start.is_valid() {
        return Err(Error::InvalidConfig(format!(
            "start point {start:?} outside [0,1]^3"
        )));
    }
    let hp = traffic::handoff_probs(params);
    let d = cfg.damping;
    let mut p = start;
    let mut res = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let ev = evaluate(params, &hp, &p)?;
        res = ev.image.max_abs_diff(&p);
        if !res.is_finite() {
            break;
        }
        if res < cfg.tol {
            return Ok(Solution {
                params: *params,
                blocking: p,
                handoff: hp,
                rates: ev.rates,
                dist: ev.dist,
                iterations: it,
                residual: res,
            });
        }
        let [a, b, c] = p.as_array();
        let [x, y, z] = ev.image.as_array();
        p = BlockingProbs::new(
            ((1.0 - d) * a + d * x).clamp(0.0, 1.0),
            ((1.0 - d) * b + d * y).clamp(0.0, 1.0),
            ((1.0 - d) * c + d * z).clamp(0.0, 1.0),
        );
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual: res,
    })
}
