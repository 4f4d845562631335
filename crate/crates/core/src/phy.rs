//! Distance distributions, propagation and Monte-Carlo capacity.
//!
//! Interferer distances follow the distance between two independent uniform
//! points in the macrocell disk; user distances are radial with density
//! `2L/(R_F² − R_p²)` on `[R_p, R_F]`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{RadioParams, SystemParams};
use crate::error::{Error, Result};
use crate::stats::{CdfTable, Moments};

/// Samples evaluated per parallel work unit.
pub const BLOCK_SIZE: usize = 1024;

/// Word offset between the random streams of two channels within one sample.
const CHANNEL_WORD_STRIDE: u128 = 1 << 40;

fn out_of_support(name: &'static str, value: f64, lower: f64, upper: f64) -> Error {
    Error::OutOfSupport {
        name,
        value,
        lower,
        upper,
    }
}

fn check_support(name: &'static str, value: f64, lower: f64, upper: f64) -> Result<()> {
    if value.is_finite() && value >= lower && value <= upper {
        Ok(())
    } else {
        Err(out_of_support(name, value, lower, upper))
    }
}

/// Density of the distance between two femtocell BSs dropped uniformly in a
/// disk of radius `r_m`.
pub fn pdf_inter_bs(l: f64, r_m: f64) -> Result<f64> {
    check_support("l", l, 0.0, 2.0 * r_m)?;
    let t = l / (2.0 * r_m);
    let core = t.acos() - t * (1.0 - t * t).max(0.0).sqrt();
    Ok(4.0 * l / (PI * r_m * r_m) * core.max(0.0))
}

/// Numerically integrated CDF of [`pdf_inter_bs`].
pub fn inter_bs_cdf(r_m: f64) -> CdfTable {
    CdfTable::from_pdf(
        |l| pdf_inter_bs(l.min(2.0 * r_m), r_m).unwrap_or(0.0),
        0.0,
        2.0 * r_m,
        1 << 14,
    )
}

/// Density of the user-to-BS distance, `2L/(R_F² − R_p²)` on `[R_p, R_F]`.
pub fn pdf_user_distance(distance: f64, r_p: f64, r_f: f64) -> Result<f64> {
    check_support("L", distance, r_p, r_f)?;
    Ok(2.0 * distance / (r_f * r_f - r_p * r_p))
}

pub fn cdf_user_distance(distance: f64, r_p: f64, r_f: f64) -> f64 {
    let x = distance.clamp(r_p, r_f);
    (x * x - r_p * r_p) / (r_f * r_f - r_p * r_p)
}

/// Distance between two uniform points of a disk of radius `r_m`.
pub fn sample_inter_bs<R: Rng + ?Sized>(rng: &mut R, r_m: f64) -> f64 {
    let mut point = || {
        let r = r_m * rng.random::<f64>().sqrt();
        let th = 2.0 * PI * rng.random::<f64>();
        (r * th.cos(), r * th.sin())
    };
    let (a, b) = (point(), point());
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Inverse-CDF draw of the user-to-BS distance.
pub fn sample_user_distance<R: Rng + ?Sized>(rng: &mut R, r_p: f64, r_f: f64) -> f64 {
    let u: f64 = rng.random();
    (u * (r_f * r_f - r_p * r_p) + r_p * r_p).sqrt()
}

/// Random quantities of one interferer and the user it disturbs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FadingSample {
    /// Standard normal shadowing variate `G`.
    pub g: f64,
    /// Unit-mean exponential Rayleigh power `α²`.
    pub alpha_sq: f64,
    /// Distance to the interfering BS (m).
    pub l: f64,
    /// Distance from the user to its own BS (m).
    pub user_distance: f64,
    pub n_interferers: u32,
}

/// `I_k = P·e^{2σG}·α² / (10^{1.2 n_w}·l^β)`.
pub fn interference_sample(radio: &RadioParams, sample: &FadingSample, power: f64) -> f64 {
    let shadow = (2.0 * radio.shadowing_sigma() * sample.g).exp();
    power * shadow * sample.alpha_sq / (radio.wall_loss() * sample.l.powf(radio.path_loss_exponent))
}

/// `S_m = P·Z_shadowing / L^β` for a user at `distance` inside a femtocell of
/// radius `femto_radius`.
pub fn signal_power(
    radio: &RadioParams,
    femto_radius: f64,
    distance: f64,
    power: f64,
) -> Result<f64> {
    check_support("L", distance, radio.protection_distance, femto_radius)?;
    Ok(power * radio.indoor_shadowing() / distance.powf(radio.path_loss_exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityEstimate {
    /// Mean capacity of all closed channels (bit/s).
    pub c_closed: f64,
    /// Mean capacity of all open channels (bit/s).
    pub c_open: f64,
    /// `c_closed + c_open` (bit/s).
    pub c_total: f64,
    /// Standard error of `c_total` (bit/s).
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl CapacityEstimate {
    pub fn ci95(&self) -> (f64, f64) {
        let h = 1.959_963_984_540_054 * self.std_error;
        (self.c_total - h, self.c_total + h)
    }
}

/// One channel class: occupancy probability and channel count.
#[derive(Debug, Clone, Copy)]
struct ChannelClass {
    p_occ: f64,
    size: u32,
}

impl ChannelClass {
    fn interferer_prob(&self) -> f64 {
        (self.p_occ / f64::from(self.size)).min(1.0)
    }
}

/// Capacity of one channel for a single realisation.
///
/// Draw order is fixed per neighbour (activity, shadowing, fading, distance),
/// so runs that differ only in occupancy or population share random numbers.
fn channel_capacity<R: Rng>(
    rng: &mut R,
    params: &SystemParams,
    radio: &RadioParams,
    class: ChannelClass,
) -> Result<f64> {
    let user_distance = sample_user_distance(rng, radio.protection_distance, params.femto_radius);
    let signal = signal_power(
        radio,
        params.femto_radius,
        user_distance,
        radio.channel_power,
    )?;
    let q = class.interferer_prob();
    let neighbours = params.femtocells.saturating_sub(1);
    let mut draws = Vec::with_capacity(neighbours as usize);
    for _ in 0..neighbours {
        let active = rng.random::<f64>() < q;
        let g: f64 = rng.sample(StandardNormal);
        let alpha_sq: f64 = rng.sample(Exp1);
        let l = sample_inter_bs(rng, params.macro_radius);
        draws.push((active, g, alpha_sq, l));
    }
    let n_interferers = draws.iter().filter(|d| d.0).count() as u32;
    let interference: f64 = draws
        .iter()
        .filter(|d| d.0)
        .map(|&(_, g, alpha_sq, l)| {
            let s = FadingSample {
                g,
                alpha_sq,
                l,
                user_distance,
                n_interferers,
            };
            interference_sample(radio, &s, radio.channel_power)
        })
        .sum();
    let c =
        radio.bandwidth * (1.0 + class.p_occ * signal / (radio.noise_power + interference)).log2();
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::NonFiniteSample)
    }
}

fn sample_rng(seed: u64, sample: u64, slot: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng.set_word_pos(u128::from(slot) * CHANNEL_WORD_STRIDE);
    rng
}

#[derive(Default, Clone, Copy)]
struct BlockSums {
    closed: f64,
    open: f64,
    total: Moments,
}

/// Monte-Carlo estimate of the femtocell capacity for given closed and open
/// channel occupancy probabilities.
///
/// Every channel of a class gets a fresh user position, a binomial number of
/// co-channel interferers and fresh fading per interferer; the expectation is
/// taken outside the logarithm. Each (sample, channel) pair owns a disjoint
/// random stream, so the estimate depends only on `seed`, not on how work
/// is split across threads.
pub fn estimate_capacity(
    params: &SystemParams,
    radio: &RadioParams,
    p_closed: f64,
    p_open: f64,
    samples: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    check_support("p_closed", p_closed, 0.0, 1.0)?;
    check_support("p_open", p_open, 0.0, 1.0)?;
    if samples == 0 {
        return Err(Error::InvalidConfig(
            "capacity needs at least one sample".into(),
        ));
    }
    let classes = [
        ChannelClass {
            p_occ: p_closed,
            size: params.closed_channels(),
        },
        ChannelClass {
            p_occ: p_open,
            size: params.open_channels,
        },
    ];

    let blocks: Vec<BlockSums> = (0..samples.div_ceil(BLOCK_SIZE))
        .into_par_iter()
        .map(|b| -> Result<BlockSums> {
            let start = b * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(samples);
            let mut sums = BlockSums::default();
            for s in start..end {
                let mut per_class = [0.0; 2];
                let mut slot = 0u32;
                for (k, class) in classes.iter().enumerate() {
                    for _ in 0..class.size {
                        if class.p_occ > 0.0 {
                            let mut rng = sample_rng(seed, s as u64, slot);
                            per_class[k] += channel_capacity(&mut rng, params, radio, *class)?;
                        }
                        slot += 1;
                    }
                }
                sums.closed += per_class[0];
                sums.open += per_class[1];
                sums.total.push(per_class[0] + per_class[1]);
            }
            Ok(sums)
        })
        .collect::<Result<_>>()?;

    let mut closed = 0.0;
    let mut open = 0.0;
    let mut total = Moments::default();
    for b in &blocks {
        closed += b.closed;
        open += b.open;
        total.merge(&b.total);
    }
    let n = samples as f64;
    let (c_closed, c_open) = (closed / n, open / n);
    Ok(CapacityEstimate {
        c_closed,
        c_open,
        c_total: c_closed + c_open,
        std_error: total.std_error(),
        samples,
        seed,
    })
}
