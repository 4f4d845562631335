//! Parameter and result types shared by the analytic and simulation layers.
//!
//! All rates are in s⁻¹ and all lengths in metres. Mean durations (session
//! length, dwell times) are converted to rates when a configuration is read;
//! nothing downstream ever sees a duration.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result, Violation};

/// Population, topology and traffic parameters of one macrocell together
/// with its `N` underlying femtocells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Macrocell radius `R_M` (m).
    pub macro_radius: f64,
    /// Femtocell radius `R_F` (m).
    pub femto_radius: f64,
    /// Number of femtocells per macrocell `N`.
    pub femtocells: u32,
    /// Mean number of femtocell users per femtocell `M`.
    pub mean_femto_users: f64,
    /// Channels per femtocell `N_F`.
    pub femto_channels: u32,
    /// Open channels per femtocell `N_F_O`.
    pub open_channels: u32,
    /// Macrocell channels `N_M`.
    pub macro_channels: u32,
    /// Fraction `q` of a femtocell user's calls that originate indoors.
    pub indoor_fraction: f64,
    /// New-call rate of one femtocell user `λ_F`.
    pub user_call_rate: f64,
    /// Total new-call rate of the macrocell entity `λ_T`.
    pub total_arrival_rate: f64,
    /// Session-end rate `μ`.
    pub session_end_rate: f64,
    /// Femtocell-user dwell departure rate `η_RT_F`.
    pub femto_dwell_rate: f64,
    /// Macrocell-user dwell departure rate `η_RT_M`.
    pub macro_dwell_rate: f64,
}

impl Default for SystemParams {
    /// The reference parameter set (M = 4, λ_T = 1 s⁻¹).
    fn default() -> Self {
        Self {
            macro_radius: 1000.0,
            femto_radius: 20.0,
            femtocells: 40,
            mean_femto_users: 4.0,
            femto_channels: 3,
            open_channels: 1,
            macro_channels: 24,
            indoor_fraction: 0.6,
            user_call_rate: 0.002,
            total_arrival_rate: 1.0,
            session_end_rate: 1.0 / 110.0,
            femto_dwell_rate: 1.0 / 990.0,
            macro_dwell_rate: 1.0 / 300.0,
        }
    }
}

impl SystemParams {
    /// Number of closed (femtocell-user only) channels, `N_F − N_F_O`.
    ///
    /// Saturates at zero for an invalid split; call [`SystemParams::violations`]
    /// first if that matters.
    pub fn closed_channels(&self) -> u32 {
        self.femto_channels.saturating_sub(self.open_channels)
    }

    /// `A_F / A_M`, which equals `(R_F / R_M)²`.
    pub fn area_ratio(&self) -> f64 {
        let femto_area = PI * self.femto_radius * self.femto_radius;
        let macro_area = PI * self.macro_radius * self.macro_radius;
        femto_area / macro_area
    }

    /// Fraction of the macrocell covered by femtocells, `N·A_F/A_M`.
    pub fn femto_coverage(&self) -> f64 {
        f64::from(self.femtocells) * self.area_ratio()
    }

    /// Aggregate new-call rate of all femtocell users in the entity, `N·M·λ_F`.
    pub fn femto_user_rate(&self) -> f64 {
        f64::from(self.femtocells) * self.mean_femto_users * self.user_call_rate
    }

    /// New-call rate of macrocell users in the entity, `λ_M = λ_T − N·M·λ_F`.
    pub fn macro_user_rate(&self) -> f64 {
        self.total_arrival_rate - self.femto_user_rate()
    }

    /// `ln(r)/r − (1/r)(e^{−1/r} − 1)` with `r = μ/η_RT_M`, the bracket shared
    /// by the macrocell-to-femtocell handoff probability and `E(Z)`.
    ///
    /// It lies in `[0, 1 − 1/e]` for `r` above about 0.4 and is negative below.
    pub fn dwell_bracket(&self) -> f64 {
        let r = self.session_end_rate / self.macro_dwell_rate;
        r.ln() / r - (1.0 / r) * ((-1.0 / r).exp() - 1.0)
    }

    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut positive = |field: &'static str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        };
        positive("macro_radius", self.macro_radius);
        positive("femto_radius", self.femto_radius);
        positive("mean_femto_users", self.mean_femto_users);
        positive("user_call_rate", self.user_call_rate);
        positive("session_end_rate", self.session_end_rate);
        positive("femto_dwell_rate", self.femto_dwell_rate);
        positive("macro_dwell_rate", self.macro_dwell_rate);

        if self.femtocells < 1 {
            out.push(Violation::new("femtocells", "need at least one femtocell"));
        }
        if self.macro_channels < 1 {
            out.push(Violation::new(
                "macro_channels",
                "need at least one macrocell channel",
            ));
        }
        if self.open_channels > self.femto_channels {
            out.push(Violation::new(
                "open_channels",
                format!(
                    "{} open channels exceed the {} femtocell channels",
                    self.open_channels, self.femto_channels
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.indoor_fraction) {
            out.push(Violation::new(
                "indoor_fraction",
                format!("must lie in [0, 1], got {}", self.indoor_fraction),
            ));
        }
        if !self.total_arrival_rate.is_finite() {
            out.push(Violation::new("total_arrival_rate", "must be finite"));
        } else if self.user_call_rate.is_finite()
            && self.mean_femto_users.is_finite()
            && self.macro_user_rate() < 0.0
        {
            out.push(Violation::new(
                "total_arrival_rate",
                format!(
                    "{} is below N·M·λ_F = {}, so the macrocell-user rate would be negative",
                    self.total_arrival_rate,
                    self.femto_user_rate()
                ),
            ));
        }
        let (mu, eta) = (self.session_end_rate, self.macro_dwell_rate);
        if mu.is_finite() && eta.is_finite() && mu > 0.0 && eta > 0.0 && self.dwell_bracket() < 0.0
        {
            out.push(Violation::new(
                "session_end_rate",
                format!(
                    "μ/η_RT_M = {:.4} is too small: the macrocell-to-femtocell handoff probability would be negative",
                    mu / eta
                ),
            ));
        }
        let coverage = self.femto_coverage();
        if coverage.is_finite() && coverage > 1.0 {
            out.push(Violation::new(
                "femtocells",
                format!("femtocells cover {coverage:.4} of the macrocell area (must be <= 1)"),
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// Propagation, power and noise parameters of the femtocell tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Log-normal shadowing deviation σ (dB).
    pub shadowing_sigma_db: f64,
    /// Path-loss exponent β.
    pub path_loss_exponent: f64,
    /// Number of walls between femtocells `n_w`.
    pub walls: f64,
    /// Protection distance between a user and its femtocell BS `R_p` (m).
    pub protection_distance: f64,
    /// Indoor shadowing constant `Z_shadowing` (dB).
    pub indoor_shadowing_db: f64,
    /// Transmit power per femtocell channel `PW_v` (W).
    pub channel_power: f64,
    /// Fixed circuit power of a femtocell BS `PW_c` (W).
    pub circuit_power: f64,
    /// Channel bandwidth `B_W` (Hz).
    pub bandwidth: f64,
    /// Noise power `n_0` (W).
    pub noise_power: f64,
}

/// Thermal noise floor density, dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

/// Thermal noise power over `bandwidth` Hz, in watts.
pub fn thermal_noise(bandwidth: f64) -> f64 {
    10f64.powf((THERMAL_NOISE_DBM_PER_HZ - 30.0) / 10.0) * bandwidth
}

impl Default for RadioParams {
    fn default() -> Self {
        let bandwidth = 180e3;
        Self {
            shadowing_sigma_db: 8.0,
            path_loss_exponent: 2.0,
            walls: 2.0,
            protection_distance: 5.0,
            indoor_shadowing_db: 4.0,
            channel_power: 0.02,
            circuit_power: 5.0,
            bandwidth,
            noise_power: thermal_noise(bandwidth),
        }
    }
}

impl RadioParams {
    /// Violations of the radio invariants that do not involve the femtocell radius.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut positive = |field: &'static str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(
                    field,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        };
        positive("path_loss_exponent", self.path_loss_exponent);
        positive("protection_distance", self.protection_distance);
        positive("channel_power", self.channel_power);
        positive("circuit_power", self.circuit_power);
        positive("bandwidth", self.bandwidth);
        positive("noise_power", self.noise_power);

        if !(self.walls.is_finite() && self.walls >= 0.0) {
            out.push(Violation::new(
                "walls",
                format!("must be finite and >= 0, got {}", self.walls),
            ));
        }
        if !(self.shadowing_sigma_db.is_finite() && self.shadowing_sigma_db >= 0.0) {
            out.push(Violation::new(
                "shadowing_sigma_db",
                format!("must be finite and >= 0, got {}", self.shadowing_sigma_db),
            ));
        }
        if !self.indoor_shadowing_db.is_finite() {
            out.push(Violation::new("indoor_shadowing_db", "must be finite"));
        }
        out
    }

    /// σ converted from dB to the natural-log amplitude scale, so that
    /// `e^{2σG}` equals `10^{σ_dB·G/10}`.
    pub fn shadowing_sigma(&self) -> f64 {
        self.shadowing_sigma_db * std::f64::consts::LN_10 / 20.0
    }

    /// Linear indoor shadowing factor, `10^{Z_dB/10}`.
    pub fn indoor_shadowing(&self) -> f64 {
        10f64.powf(self.indoor_shadowing_db / 10.0)
    }

    /// Through-wall attenuation factor, `10^{1.2·n_w}`.
    pub fn wall_loss(&self) -> f64 {
        10f64.powf(1.2 * self.walls)
    }
}

/// Validates both parameter sets together and returns them unchanged.
///
/// The error lists every violated invariant, not just the first one.
pub fn validate(params: &SystemParams, radio: &RadioParams) -> Result<(SystemParams, RadioParams)> {
    let mut v = params.violations();
    v.extend(radio.violations());
    let rp = radio.protection_distance;
    if rp.is_finite() && params.femto_radius.is_finite() && rp >= params.femto_radius {
        v.push(Violation::new(
            "protection_distance",
            format!(
                "{rp} must be below the femtocell radius {}",
                params.femto_radius
            ),
        ));
    }
    if v.is_empty() {
        Ok((*params, *radio))
    } else {
        Err(Error::Validation(v))
    }
}

/// The three coupled blocking probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BlockingProbs {
    /// Femtocell user blocked at its femtocell (`P_FU_F`).
    pub femto_user: f64,
    /// Macrocell user blocked at a femtocell (`P_MU_F`).
    pub macro_user: f64,
    /// Any user blocked at the macrocell (`P_U_M`).
    pub macro_cell: f64,
}

impl BlockingProbs {
    pub fn new(femto_user: f64, macro_user: f64, macro_cell: f64) -> Self {
        Self {
            femto_user,
            macro_user,
            macro_cell,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.femto_user, self.macro_user, self.macro_cell]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_valid(&self) -> bool {
        self.as_array().iter().all(|p| (0.0..=1.0).contains(p))
    }
}
