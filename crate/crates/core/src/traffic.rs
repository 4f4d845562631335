//! Handoff probabilities, arrival-rate algebra, holding times and Erlang-B.

use serde::Serialize;

use crate::domain::{BlockingProbs, SystemParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HandoffProbs {
    /// Femtocell to macrocell.
    pub p_fm: f64,
    /// Macrocell to femtocell.
    pub p_mf: f64,
    /// Macrocell to adjacent macrocell.
    pub p_mm: f64,
}

/// Every arrival rate, holding rate and traffic intensity of one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TrafficRates {
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub mu_1: f64,
    pub mu_2: f64,
    pub lambda_fu_f: f64,
    pub lambda_mu_f: f64,
    pub lambda_fu_h: f64,
    pub lambda_mu_h: f64,
    pub lambda_fu_m: f64,
    pub lambda_fu_fm: f64,
    pub lambda_fu_mm: f64,
    pub lambda_mu_m: f64,
    pub lambda_mu_fm: f64,
    pub lambda_mu_mm: f64,
    /// Femtocell-user traffic on the macrocell (Erlang).
    pub t_f: f64,
    /// Macrocell-user traffic on the macrocell (Erlang).
    pub t_m: f64,
}

impl TrafficRates {
    /// Total femtocell-user rate carried towards the macrocell.
    pub fn femto_user_macro_rate(&self) -> f64 {
        self.lambda_fu_m + self.lambda_fu_fm + self.lambda_fu_mm
    }

    /// Total macrocell-user rate carried towards the macrocell.
    pub fn macro_user_macro_rate(&self) -> f64 {
        self.lambda_mu_m + self.lambda_mu_fm + self.lambda_mu_mm
    }

    pub fn all_nonnegative(&self) -> bool {
        [
            self.lambda_1,
            self.lambda_2,
            self.mu_1,
            self.mu_2,
            self.lambda_fu_f,
            self.lambda_mu_f,
            self.lambda_fu_h,
            self.lambda_mu_h,
            self.lambda_fu_m,
            self.lambda_fu_fm,
            self.lambda_fu_mm,
            self.lambda_mu_m,
            self.lambda_mu_fm,
            self.lambda_mu_mm,
            self.t_f,
            self.t_m,
        ]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0)
    }
}

pub fn handoff_probs(params: &SystemParams) -> HandoffProbs {
    let mu = params.session_end_rate;
    let eta_f = params.femto_dwell_rate;
    let eta_m = params.macro_dwell_rate;
    HandoffProbs {
        p_fm: eta_f / (mu + eta_f),
        p_mf: params.area_ratio() * params.dwell_bracket(),
        p_mm: eta_m / (mu + eta_m),
    }
}

/// `(μ1, μ2) = (μ + η_RT_F, μ + η_RT_M)`.
pub fn holding_rates(params: &SystemParams) -> (f64, f64) {
    (
        params.session_end_rate + params.femto_dwell_rate,
        params.session_end_rate + params.macro_dwell_rate,
    )
}

/// `E(Z)`, the mean residual term of the macrocell holding time.
pub fn mean_residual_time(params: &SystemParams) -> f64 {
    let inv_mu = 1.0 / params.session_end_rate;
    inv_mu - inv_mu * params.dwell_bracket()
}

/// Loop gain `x = (1 − P_U_M)·p_mm` of the adjacent-macrocell handoff balance.
fn macro_loop_gain(hp: &HandoffProbs, blocking: &BlockingProbs) -> Result<f64> {
    let x = (1.0 - blocking.macro_cell) * hp.p_mm;
    if x.is_nan() || x >= 1.0 {
        return Err(Error::BalanceDivergence { gain: x });
    }
    Ok(x)
}

/// Solves `y = (base + y)·x` for the self-referential adjacent-macrocell rate.
fn adjacent_rate(base: f64, x: f64) -> f64 {
    base * x / (1.0 - x)
}

/// Macrocell-side rates for given femtocell arrival rates `λ1`, `λ2`.
///
/// Fills `lambda_fu_m`, `lambda_fu_fm`, `lambda_fu_mm` and their
/// macrocell-user counterparts; every other field is zero.
pub fn macrocell_side_rates(
    params: &SystemParams,
    hp: &HandoffProbs,
    blocking: &BlockingProbs,
    lambda_1: f64,
    lambda_2: f64,
) -> Result<TrafficRates> {
    let x = macro_loop_gain(hp, blocking)?;
    let n = f64::from(params.femtocells);

    let lambda_fu_m = params.femto_user_rate() * (1.0 - params.indoor_fraction);
    let lambda_fu_fm = n * lambda_1 * (1.0 - blocking.femto_user) * hp.p_fm;
    let lambda_fu_mm = adjacent_rate(lambda_fu_m + lambda_fu_fm, x);

    let lambda_mu_m = (1.0 - params.femto_coverage()) * params.macro_user_rate();
    let lambda_mu_fm = n * lambda_2 * (1.0 - blocking.macro_user) * hp.p_fm;
    let lambda_mu_mm = adjacent_rate(lambda_mu_m + lambda_mu_fm, x);

    Ok(TrafficRates {
        lambda_fu_m,
        lambda_fu_fm,
        lambda_fu_mm,
        lambda_mu_m,
        lambda_mu_fm,
        lambda_mu_mm,
        ..TrafficRates::default()
    })
}

/// Solves `λ = a + b·(m + N·λ·(1−P)·p_fm)/(1−x)` for `λ`.
fn femto_arrival(
    new_calls: f64,
    macro_new: f64,
    b: f64,
    n: f64,
    p_block: f64,
    hp: &HandoffProbs,
    x: f64,
) -> Result<f64> {
    let gain = b * n * (1.0 - p_block) * hp.p_fm / (1.0 - x);
    if gain.is_nan() || gain >= 1.0 {
        return Err(Error::BalanceDivergence { gain });
    }
    Ok((new_calls + b * macro_new / (1.0 - x)) / (1.0 - gain))
}

/// Arrival rates at one femtocell and on the macrocell for given blocking.
///
/// Holding rates are filled in; traffic intensities are left at zero (see
/// [`traffic_intensities`]).
pub fn aggregate_rates(
    params: &SystemParams,
    hp: &HandoffProbs,
    blocking: &BlockingProbs,
) -> Result<TrafficRates> {
    let x = macro_loop_gain(hp, blocking)?;
    let n = f64::from(params.femtocells);
    let b = (1.0 - blocking.macro_cell) * hp.p_mf / n;

    let lambda_fu_f = params.mean_femto_users * params.indoor_fraction * params.user_call_rate;
    let lambda_mu_f = params.area_ratio() * params.macro_user_rate();
    let fu_macro_new = params.femto_user_rate() * (1.0 - params.indoor_fraction);
    let mu_macro_new = (1.0 - params.femto_coverage()) * params.macro_user_rate();

    let lambda_1 = femto_arrival(lambda_fu_f, fu_macro_new, b, n, blocking.femto_user, hp, x)?;
    let lambda_2 = femto_arrival(lambda_mu_f, mu_macro_new, b, n, blocking.macro_user, hp, x)?;

    let side = macrocell_side_rates(params, hp, blocking, lambda_1, lambda_2)?;
    let lambda_fu_h = side.femto_user_macro_rate() * b;
    let lambda_mu_h = side.macro_user_macro_rate() * b;
    let (mu_1, mu_2) = holding_rates(params);
    Ok(TrafficRates {
        lambda_1: lambda_fu_f + lambda_fu_h,
        lambda_2: lambda_mu_f + lambda_mu_h,
        mu_1,
        mu_2,
        lambda_fu_f,
        lambda_mu_f,
        lambda_fu_h,
        lambda_mu_h,
        ..side
    })
}

/// `(E[T_cM_M], E[T_cF_M])` in seconds.
pub fn mean_channel_holding_macro(params: &SystemParams, blocking: &BlockingProbs) -> (f64, f64) {
    let cov = params.femto_coverage();
    let ez = mean_residual_time(params);
    let first = 1.0 / (params.session_end_rate + params.macro_dwell_rate);
    let hold = |p: f64| first * (cov * p + (1.0 - cov)) + cov * (1.0 - p) * ez;
    (hold(blocking.macro_user), hold(blocking.femto_user))
}

/// `(T_M, T_F)` in Erlang from the macrocell-side rates and mean holding times.
pub fn traffic_intensities(rates: &TrafficRates, holding: (f64, f64)) -> (f64, f64) {
    (
        rates.macro_user_macro_rate() * holding.0,
        rates.femto_user_macro_rate() * holding.1,
    )
}

/// Erlang-B blocking of `traffic` Erlang offered to `channels` servers.
pub fn erlang_b(traffic: f64, channels: u32) -> Result<f64> {
    if !(traffic.is_finite() && traffic >= 0.0) {
        return Err(Error::NegativeTraffic(traffic));
    }
    let mut b = 1.0;
    for k in 1..=channels {
        b = traffic * b / (f64::from(k) + traffic * b);
    }
    Ok(b)
}
