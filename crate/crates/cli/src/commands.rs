use femtoflow::mcsim::{simulate_capacity, simulate_system};
use femtoflow::{
    efficiency, solve, BlockingProbs, EfficiencyReport, SimEstimate, Solution, SystemParams,
};
use femtoflow::{HandoffProbs, TrafficRates};
use serde::Serialize;

use crate::config::{Config, SystemConfig};
use crate::error::CliError;

/// Relative tolerance for simulated vs analytic blocking.
const BLOCKING_REL_TOL: f64 = 0.10;

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub system: SystemConfig,
    pub blocking: BlockingProbs,
    pub handoff: HandoffProbs,
    pub rates: TrafficRates,
    pub iterations: usize,
    pub residual: f64,
    pub p_closed: f64,
    pub p_open: f64,
}

impl SolveReport {
    fn new(p: &SystemParams, s: &Solution) -> Self {
        let (p_closed, p_open) = s.occupancy();
        Self {
            system: SystemConfig::from_params(p),
            blocking: s.blocking,
            handoff: s.handoff,
            rates: s.rates,
            iterations: s.iterations,
            residual: s.residual,
            p_closed,
            p_open,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CapacityReport {
    pub solve: SolveReport,
    pub efficiency: EfficiencyReport,
}

#[derive(Debug, Serialize)]
pub struct MetricCheck {
    pub analytic: f64,
    /// Time-averaged fraction of time in a refusing state.
    pub mc: SimEstimate,
    /// Fraction of measured arrivals that were refused.
    pub mc_arrivals: SimEstimate,
    pub agrees: bool,
}

#[derive(Debug, Serialize)]
pub struct CapacityCheck {
    pub analytic: f64,
    pub analytic_ci95: (f64, f64),
    pub mc: SimEstimate,
    pub agrees: bool,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub seed: u64,
    pub replications: usize,
    pub ci_available: bool,
    pub p_fu_f: MetricCheck,
    pub p_mu_f: MetricCheck,
    pub p_u_m: MetricCheck,
    pub c_total: CapacityCheck,
    pub bits_per_joule: CapacityCheck,
    pub all_agree: bool,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn check_probability(name: &str, x: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{name} = {x} is not a probability"
        )))
    }
}

fn check_nonnegative(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{name} = {x} must be finite and nonnegative"
        )))
    }
}

pub(crate) fn check_blocking(b: &BlockingProbs) -> Result<(), CliError> {
    check_probability("P_FU_F", b.femto_user)?;
    check_probability("P_MU_F", b.macro_user)?;
    check_probability("P_U_M", b.macro_cell)
}

pub(crate) fn check_efficiency(e: &EfficiencyReport) -> Result<(), CliError> {
    check_probability("P_closed", e.p_closed)?;
    check_probability("P_open", e.p_open)?;
    check_nonnegative("C_total", e.capacity.c_total)?;
    check_nonnegative("E_PW_FBS", e.e_pw_fbs)?;
    check_nonnegative("bits_per_joule", e.bits_per_joule)
}

fn solved(cfg: &Config) -> Result<(SystemParams, Solution), CliError> {
    let (p, _) = cfg.params()?;
    let s = solve(&p, &cfg.solver_config()?)?;
    check_blocking(&s.blocking)?;
    Ok((p, s))
}

pub fn solve_report(cfg: &Config) -> Result<String, CliError> {
    let (p, s) = solved(cfg)?;
    to_json(&SolveReport::new(&p, &s))
}

pub fn capacity_report(cfg: &Config) -> Result<String, CliError> {
    let samples = cfg.check_mc_samples()?;
    let (p, s) = solved(cfg)?;
    let (_, r) = cfg.params()?;
    let e = efficiency(&p, &r, &s, samples, cfg.seed)?;
    check_efficiency(&e)?;
    to_json(&CapacityReport {
        solve: SolveReport::new(&p, &s),
        efficiency: e,
    })
}

fn blocking_check(
    analytic: f64,
    mc: SimEstimate,
    mc_arrivals: SimEstimate,
) -> Result<MetricCheck, CliError> {
    check_probability("simulated blocking", mc.point)?;
    check_probability("simulated blocking", mc_arrivals.point)?;
    Ok(MetricCheck {
        analytic,
        mc,
        mc_arrivals,
        agrees: mc.agrees_with(analytic, BLOCKING_REL_TOL),
    })
}

fn capacity_check(
    analytic: f64,
    ci: (f64, f64),
    mc: SimEstimate,
) -> Result<CapacityCheck, CliError> {
    check_nonnegative("simulated capacity", mc.point)?;
    Ok(CapacityCheck {
        analytic,
        analytic_ci95: ci,
        mc,
        agrees: mc.overlaps(ci.0, ci.1),
    })
}

pub fn simulate_report(cfg: &Config) -> Result<String, CliError> {
    let samples = cfg.check_mc_samples()?;
    let sim = cfg.sim_config()?;
    let (p, s) = solved(cfg)?;
    let (_, r) = cfg.params()?;
    let e = efficiency(&p, &r, &s, samples, cfg.seed)?;
    check_efficiency(&e)?;

    let sys = simulate_system(&p, &sim)?;
    let cap = simulate_capacity(&p, &r, &s, &sim, cfg.simulation.capacity_samples)?;

    let (lo, hi) = e.capacity.ci95();
    let bpj_ci = (lo / e.e_pw_fbs, hi / e.e_pw_fbs);
    let b = s.blocking;
    let report = SimulateReport {
        seed: cfg.seed,
        replications: sim.replications,
        ci_available: sim.replications > 1,
        p_fu_f: blocking_check(b.femto_user, sys.femto_user_time, sys.femto_user)?,
        p_mu_f: blocking_check(b.macro_user, sys.macro_user_time, sys.macro_user)?,
        p_u_m: blocking_check(b.macro_cell, sys.macro_cell_time, sys.macro_cell)?,
        c_total: capacity_check(e.capacity.c_total, (lo, hi), cap.c_total)?,
        bits_per_joule: capacity_check(e.bits_per_joule, bpj_ci, cap.bits_per_joule)?,
        all_agree: false,
    };
    let all_agree = report.p_fu_f.agrees
        && report.p_mu_f.agrees
        && report.p_u_m.agrees
        && report.c_total.agrees
        && report.bits_per_joule.agrees;
    to_json(&SimulateReport {
        all_agree,
        ..report
    })
}
