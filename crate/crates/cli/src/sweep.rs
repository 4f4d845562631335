//! One CSV row per axis value. Every point reuses the configured seed, so
//! neighbouring rows share random numbers.

use femtoflow::mcsim::{simulate_capacity, simulate_system};
use femtoflow::{efficiency, solve, SimEstimate, SystemParams};
use rayon::prelude::*;

use crate::commands::{check_blocking, check_efficiency};
use crate::config::{Axis, Config, SweepSection};
use crate::error::CliError;

pub const SCHEMA_LINE: &str = "# femtoflow-schema v1";

/// Analytic columns after the axis value.
pub const OUTPUTS: [&str; 9] = [
    "P_FU_F",
    "P_MU_F",
    "P_U_M",
    "P_closed",
    "P_open",
    "C_total",
    "E_PW_FBS",
    "eta_EE",
    "bits_per_joule",
];

const MC_OUTPUTS: [&str; 5] = ["P_FU_F", "P_MU_F", "P_U_M", "C_total", "bits_per_joule"];

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::LambdaT => "lambda_T",
            Axis::M => "M",
            Axis::N => "N",
            Axis::OpenChannels => "N_F_O",
            Axis::ClosedChannels => "N_F_closed",
        }
    }

    fn count(&self, v: f64) -> Result<u32, CliError> {
        if v.fract() == 0.0 && (0.0..=f64::from(u32::MAX)).contains(&v) {
            Ok(v as u32)
        } else {
            Err(CliError::Validation(format!(
                "sweep value {v} for axis {} must be a nonnegative integer",
                self.name()
            )))
        }
    }

    /// Baseline with the axis parameter set to `v`.
    pub fn apply(&self, base: &SystemParams, v: f64) -> Result<SystemParams, CliError> {
        let mut p = *base;
        match self {
            Axis::LambdaT => p.total_arrival_rate = v,
            Axis::M => p.mean_femto_users = v,
            Axis::N => p.femtocells = self.count(v)?,
            Axis::OpenChannels => {
                let closed = base.closed_channels();
                p.open_channels = self.count(v)?;
                p.femto_channels = closed + p.open_channels;
            }
            Axis::ClosedChannels => p.femto_channels = base.open_channels + self.count(v)?,
        }
        Ok(p)
    }
}

fn header(mc: bool) -> Vec<String> {
    let mut h = vec!["axis_value".to_string()];
    h.extend(OUTPUTS.iter().map(|s| s.to_string()));
    if mc {
        for name in MC_OUTPUTS {
            h.push(format!("mc_{name}"));
            h.push(format!("mc_{name}_ci"));
        }
    }
    h
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn mc_cells(e: &SimEstimate) -> [String; 2] {
    [e.point.to_string(), cell(e.ci_half_width)]
}

fn requested(sweep: &SweepSection) -> Result<[bool; OUTPUTS.len()], CliError> {
    let Some(list) = &sweep.outputs else {
        return Ok([true; OUTPUTS.len()]);
    };
    let mut on = [false; OUTPUTS.len()];
    for name in list {
        let k = OUTPUTS
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| CliError::Validation(format!("unknown sweep output `{name}`")))?;
        on[k] = true;
    }
    Ok(on)
}

fn point(
    cfg: &Config,
    p: &SystemParams,
    v: f64,
    mc: bool,
    on: &[bool],
) -> Result<Vec<String>, CliError> {
    let (_, r) = cfg.params()?;
    let p = femtoflow::validate(p, &r)?.0;
    let s = solve(&p, &cfg.solver_config()?)?;
    check_blocking(&s.blocking)?;
    let e = efficiency(&p, &r, &s, cfg.mc_samples, cfg.seed)?;
    check_efficiency(&e)?;

    let b = s.blocking;
    let values = [
        Some(b.femto_user),
        Some(b.macro_user),
        Some(b.macro_cell),
        Some(e.p_closed),
        Some(e.p_open),
        Some(e.capacity.c_total),
        Some(e.e_pw_fbs),
        e.eta_ee,
        Some(e.bits_per_joule),
    ];
    let mut row = vec![v.to_string()];
    row.extend(
        values
            .iter()
            .zip(on)
            .map(|(x, &keep)| if keep { cell(*x) } else { String::new() }),
    );

    if mc {
        let sim = cfg.sim_config()?;
        let sys = simulate_system(&p, &sim)?;
        let cap = simulate_capacity(&p, &r, &s, &sim, cfg.simulation.capacity_samples)?;
        for e in [
            sys.femto_user,
            sys.macro_user,
            sys.macro_cell,
            cap.c_total,
            cap.bits_per_joule,
        ] {
            row.extend(mc_cells(&e));
        }
    }
    Ok(row)
}

/// Runs the sweep in `cfg.sweep`. Points are evaluated in parallel and
/// written in axis order.
pub fn sweep_csv(cfg: &Config) -> Result<String, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("config has no `sweep` section".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Validation("sweep.values is empty".into()));
    }
    let on = requested(sweep)?;
    cfg.check_mc_samples()?;
    if sweep.monte_carlo {
        cfg.sim_config()?;
    }
    let (base, _) = cfg.params()?;
    let points: Vec<SystemParams> = sweep
        .values
        .iter()
        .map(|&v| sweep.axis.apply(&base, v))
        .collect::<Result<_, _>>()?;

    let rows: Vec<Vec<String>> = points
        .par_iter()
        .zip(sweep.values.par_iter())
        .map(|(p, &v)| point(cfg, p, v, sweep.monte_carlo, &on))
        .collect::<Result<_, _>>()?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header(sweep.monte_carlo))?;
    for row in &rows {
        w.write_record(row)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format!("{SCHEMA_LINE}\n{body}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_axes_hold_the_other_class_fixed() {
        let base = SystemParams {
            femto_channels: 5,
            open_channels: 3,
            ..SystemParams::default()
        };
        let p = Axis::OpenChannels.apply(&base, 4.0).unwrap();
        assert_eq!((p.femto_channels, p.open_channels), (6, 4));
        let p = Axis::ClosedChannels.apply(&base, 6.0).unwrap();
        assert_eq!((p.femto_channels, p.open_channels), (9, 3));
        assert!(Axis::N.apply(&base, 2.5).is_err());
    }

    #[test]
    fn header_matches_row_width() {
        assert_eq!(header(false).len(), 1 + OUTPUTS.len());
        assert_eq!(header(true).len(), 1 + OUTPUTS.len() + 2 * MC_OUTPUTS.len());
    }
}
