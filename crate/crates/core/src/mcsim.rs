//! Monte-Carlo validators: a next-event simulation of the femtocell chain, a
//! call-level simulation of a whole macrocell entity, and an independent
//! capacity sampler.
//!
//! Replication `r` draws from ChaCha stream `r` of the master seed, so
//! replications are disjoint and their results do not depend on scheduling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{RadioParams, SystemParams};
use crate::error::{Error, Result};
use crate::markov::{self, ChainRates, ChannelSplit, ChannelState, StationaryDistribution};
use crate::phy;
use crate::solver::{self, Solution, SolverConfig};
use crate::stats;

/// Stream offset separating the capacity sampler from the chain replications.
const CAPACITY_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Horizon {
    /// Number of simulated events, blocked arrivals included.
    Events(u64),
    /// Simulated seconds.
    Time(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub horizon: Horizon,
    /// Leading fraction of the horizon discarded before measuring.
    pub warmup: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: Horizon::Events(1_000_000),
            warmup: 0.2,
            replications: 20,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(Error::InvalidConfig(format!(
                "warmup must lie in [0, 1), got {}",
                self.warmup
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        match self.horizon {
            Horizon::Events(0) => Err(Error::InvalidConfig("event horizon must be >= 1".into())),
            Horizon::Time(t) if !(t.is_finite() && t > 0.0) => Err(Error::InvalidConfig(format!(
                "time horizon must be > 0, got {t}"
            ))),
            _ => Ok(()),
        }
    }

    fn rng(&self, replication: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replication as u64);
        rng
    }
}

/// Mean of independent replications with a 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub point: f64,
    /// Absent with a single replication.
    pub ci_half_width: Option<f64>,
    pub replications: usize,
}

impl SimEstimate {
    pub fn from_replicates(values: &[f64]) -> Self {
        let (point, ci_half_width) = stats::mean_ci95(values);
        Self {
            point,
            ci_half_width,
            replications: values.len(),
        }
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        self.ci_half_width.map(|h| (self.point - h, self.point + h))
    }

    pub fn covers(&self, x: f64) -> bool {
        self.interval().is_some_and(|(lo, hi)| lo <= x && x <= hi)
    }

    /// Within `rel` relative error of `x`, or `x` inside the interval.
    pub fn agrees_with(&self, x: f64, rel: f64) -> bool {
        (self.point - x).abs() <= rel * x.abs() || self.covers(x)
    }

    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.interval().is_some_and(|(a, b)| a <= hi && lo <= b)
    }
}

fn estimate<T>(runs: &[T], f: impl Fn(&T) -> f64) -> SimEstimate {
    let v: Vec<f64> = runs.iter().map(f).collect();
    SimEstimate::from_replicates(&v)
}

fn share(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        part / whole
    } else {
        0.0
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn exp_draw<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Tracks the horizon and the warmup cut of one replication.
struct Clock {
    horizon: Horizon,
    warm_time: f64,
    warm_events: u64,
    now: f64,
    events: u64,
}

impl Clock {
    fn new(horizon: Horizon, warmup: f64) -> Self {
        let (warm_time, warm_events) = match horizon {
            Horizon::Time(t) => (warmup * t, 0),
            Horizon::Events(n) => (0.0, (warmup * n as f64) as u64),
        };
        Self {
            horizon,
            warm_time,
            warm_events,
            now: 0.0,
            events: 0,
        }
    }

    fn done(&self) -> bool {
        match self.horizon {
            Horizon::Time(t) => self.now >= t,
            Horizon::Events(n) => self.events >= n,
        }
    }

    /// Advances by `dt` and returns the measured part of the sojourn.
    fn advance(&mut self, dt: f64) -> f64 {
        let start = self.now;
        let mut end = start + dt;
        if let Horizon::Time(t) = self.horizon {
            end = end.min(t);
        }
        self.now = end;
        match self.horizon {
            Horizon::Time(_) => (end - start.max(self.warm_time)).max(0.0),
            Horizon::Events(_) if self.events >= self.warm_events => end - start,
            Horizon::Events(_) => 0.0,
        }
    }

    /// Counts an event that fires at the current time; true if it is measured.
    fn fire(&mut self) -> bool {
        self.events += 1;
        match self.horizon {
            Horizon::Time(t) => self.now >= self.warm_time && self.now < t,
            Horizon::Events(_) => self.events > self.warm_events,
        }
    }
}

#[derive(Debug, Clone)]
struct ChainRun {
    time: Vec<f64>,
    femto_arrivals: u64,
    femto_blocked: u64,
    macro_arrivals: u64,
    macro_blocked: u64,
}

fn run_chain<R: Rng>(
    split: ChannelSplit,
    rates: ChainRates,
    cfg: &SimConfig,
    rng: &mut R,
) -> ChainRun {
    let mut run = ChainRun {
        time: vec![0.0; split.state_count()],
        femto_arrivals: 0,
        femto_blocked: 0,
        macro_arrivals: 0,
        macro_blocked: 0,
    };
    let mut clock = Clock::new(cfg.horizon, cfg.warmup);
    let mut s = ChannelState::new(0, 0);
    while !clock.done() {
        let k = split.index_of(s).expect("state stays in the space");
        let (i, j) = (f64::from(s.femto_users), f64::from(s.macro_users));
        let a1 = rates.femto_arrival;
        let a2 = rates.macro_arrival;
        let d1 = i * rates.femto_departure;
        let d2 = j * rates.macro_departure;
        let total = a1 + a2 + d1 + d2;
        if total <= 0.0 {
            // Absorbing idle state: the rest of the horizon is spent here.
            run.time[k] += match cfg.horizon {
                Horizon::Time(t) => clock.advance(t - clock.now),
                Horizon::Events(_) => 1.0,
            };
            break;
        }
        run.time[k] += clock.advance(exp_draw(rng, total));
        if clock.done() {
            break;
        }
        let measured = clock.fire();
        let u = rng.random::<f64>() * total;
        if u < a1 {
            let ok = split.admits_femto(s);
            if measured {
                run.femto_arrivals += 1;
                run.femto_blocked += u64::from(!ok);
            }
            if ok {
                s.femto_users += 1;
            }
        } else if u < a1 + a2 {
            let ok = split.admits_macro(s);
            if measured {
                run.macro_arrivals += 1;
                run.macro_blocked += u64::from(!ok);
            }
            if ok {
                s.macro_users += 1;
            }
        } else if u < a1 + a2 + d1 {
            s.femto_users -= 1;
        } else {
            s.macro_users -= 1;
        }
    }
    run
}

/// Empirical view of the femtocell chain.
#[derive(Debug, Clone)]
pub struct ChainSimulation {
    /// Time-weighted state occupancy, averaged over replications.
    pub dist: StationaryDistribution,
    /// Per-state estimates in the order of `dist.states()`.
    pub states: Vec<SimEstimate>,
    /// Fraction of femtocell-user arrivals that found no channel.
    pub femto_blocking: SimEstimate,
    /// Fraction of macrocell-user arrivals that found no open channel.
    pub macro_blocking: SimEstimate,
    /// Time spent in femtocell-user blocking states.
    pub femto_blocking_time: SimEstimate,
    pub macro_blocking_time: SimEstimate,
    pub occupied: SimEstimate,
    pub p_closed: SimEstimate,
    pub p_open: SimEstimate,
}

fn run_distribution(
    split: ChannelSplit,
    rates: ChainRates,
    run: &ChainRun,
) -> Result<StationaryDistribution> {
    StationaryDistribution::from_weights(split, rates, run.time.clone())
}

/// Next-event simulation of the `(i, j)` chain.
pub fn simulate_chain(
    rates: ChainRates,
    n_f: u32,
    n_f_o: u32,
    cfg: &SimConfig,
) -> Result<ChainSimulation> {
    let split = ChannelSplit::new(n_f, n_f_o)?;
    // Reuse the product-form argument checks.
    markov::stationary_product_form(rates, n_f, n_f_o)?;
    cfg.check()?;
    let runs: Vec<ChainRun> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_chain(split, rates, cfg, &mut cfg.rng(r)))
        .collect();
    let dists = runs
        .iter()
        .map(|r| run_distribution(split, rates, r))
        .collect::<Result<Vec<_>>>()?;

    let n_states = split.state_count();
    let states: Vec<SimEstimate> = (0..n_states)
        .map(|k| estimate(&dists, |d| d.probabilities()[k]))
        .collect();
    let mean: Vec<f64> = states.iter().map(|e| e.point).collect();
    let dist = StationaryDistribution::from_weights(split, rates, mean)?;

    Ok(ChainSimulation {
        dist,
        states,
        femto_blocking: estimate(&runs, |r| ratio(r.femto_blocked, r.femto_arrivals)),
        macro_blocking: estimate(&runs, |r| ratio(r.macro_blocked, r.macro_arrivals)),
        femto_blocking_time: estimate(&dists, markov::blocking_femto_user),
        macro_blocking_time: estimate(&dists, markov::blocking_macro_user_in_femto),
        occupied: estimate(&dists, StationaryDistribution::mean_occupied),
        p_closed: estimate(&dists, |d| markov::occupancy_probabilities(d).0),
        p_open: estimate(&dists, |d| markov::occupancy_probabilities(d).1),
    })
}

/// Blocking estimates of the call-level simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemSimulation {
    pub femto_user: SimEstimate,
    pub macro_user: SimEstimate,
    pub macro_cell: SimEstimate,
    /// Time-averaged fraction of femtocells that would refuse a femtocell user.
    pub femto_user_time: SimEstimate,
    /// Time-averaged fraction of femtocells that would refuse a macrocell user.
    pub macro_user_time: SimEstimate,
    /// Time-averaged fraction of time with every macrocell channel busy.
    pub macro_cell_time: SimEstimate,
}

/// Which population a call on a macrocell channel belongs to.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Femto,
    Macro,
}

#[derive(Default)]
struct Counters {
    fu_att: u64,
    fu_blk: u64,
    mu_att: u64,
    mu_blk: u64,
    mc_att: u64,
    mc_blk: u64,
    time: f64,
    fu_time: f64,
    mu_time: f64,
    mc_time: f64,
}

struct Entity<'a> {
    p: &'a SystemParams,
    femto_users: Vec<u32>,
    macro_users: Vec<u32>,
    sum_i: u32,
    sum_j: u32,
    /// Femtocell and macrocell users holding macrocell channels.
    macro_fu: u32,
    macro_mu: u32,
    /// Femtocells currently refusing femtocell users and macrocell users.
    refuse_fu: u32,
    refuse_mu: u32,
    c: Counters,
}

impl<'a> Entity<'a> {
    fn new(p: &'a SystemParams) -> Self {
        let n = p.femtocells as usize;
        Self {
            p,
            femto_users: vec![0; n],
            macro_users: vec![0; n],
            sum_i: 0,
            sum_j: 0,
            macro_fu: 0,
            macro_mu: 0,
            refuse_fu: 0,
            refuse_mu: 0,
            c: Counters::default(),
        }
    }

    fn refuses(&self, f: usize) -> (bool, bool) {
        let (i, j) = (self.femto_users[f], self.macro_users[f]);
        let n_f = self.p.femto_channels;
        (i + j >= n_f, j >= self.p.open_channels.min(n_f - i))
    }

    /// Adds `delta` calls of `class` at femtocell `f`.
    fn shift(&mut self, f: usize, class: Class, delta: i32) {
        let (fu0, mu0) = self.refuses(f);
        match class {
            Class::Femto => {
                self.femto_users[f] = self.femto_users[f].wrapping_add_signed(delta);
                self.sum_i = self.sum_i.wrapping_add_signed(delta);
            }
            Class::Macro => {
                self.macro_users[f] = self.macro_users[f].wrapping_add_signed(delta);
                self.sum_j = self.sum_j.wrapping_add_signed(delta);
            }
        }
        let (fu1, mu1) = self.refuses(f);
        self.refuse_fu = self.refuse_fu + u32::from(fu1) - u32::from(fu0);
        self.refuse_mu = self.refuse_mu + u32::from(mu1) - u32::from(mu0);
    }

    /// Accumulates a measured sojourn of length `dt` in the current state.
    fn dwell(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        let n = f64::from(self.p.femtocells);
        self.c.time += dt;
        self.c.fu_time += dt * f64::from(self.refuse_fu) / n;
        self.c.mu_time += dt * f64::from(self.refuse_mu) / n;
        if self.macro_busy() >= self.p.macro_channels {
            self.c.mc_time += dt;
        }
    }

    fn macro_busy(&self) -> u32 {
        self.macro_fu + self.macro_mu
    }

    /// Attempt to seat a call on a macrocell channel.
    fn macro_attempt(&mut self, class: Class, measured: bool) -> bool {
        let ok = self.macro_busy() < self.p.macro_channels;
        if measured {
            self.c.mc_att += 1;
            self.c.mc_blk += u64::from(!ok);
        }
        if ok {
            match class {
                Class::Femto => self.macro_fu += 1,
                Class::Macro => self.macro_mu += 1,
            }
        }
        ok
    }

    /// Attempt to seat a call at femtocell `f`.
    fn femto_attempt(&mut self, f: usize, class: Class, measured: bool) -> bool {
        let (i, j) = (self.femto_users[f], self.macro_users[f]);
        let n_f = self.p.femto_channels;
        let ok = match class {
            Class::Femto => i + j < n_f,
            Class::Macro => j < self.p.open_channels.min(n_f - i),
        };
        if measured {
            let (att, blk) = match class {
                Class::Femto => (&mut self.c.fu_att, &mut self.c.fu_blk),
                Class::Macro => (&mut self.c.mu_att, &mut self.c.mu_blk),
            };
            *att += 1;
            *blk += u64::from(!ok);
        }
        if ok {
            self.shift(f, class, 1);
        }
        ok
    }
}

/// Index `f` chosen with probability proportional to `weights[f]`, given their sum.
fn pick_weighted<R: Rng>(rng: &mut R, weights: &[u32], sum: u32) -> usize {
    let mut target = rng.random_range(0..sum);
    for (f, &w) in weights.iter().enumerate() {
        if target < w {
            return f;
        }
        target -= w;
    }
    unreachable!("weights sum to {sum}")
}

/// Externally fixed rates of the call-level simulation.
#[derive(Debug, Clone, Copy)]
struct SystemRates {
    femto_new: f64,
    macro_in_femto_new: f64,
    femto_outdoor_new: f64,
    macro_outdoor_new: f64,
    inbound_femto: f64,
    inbound_macro: f64,
    /// Probability that an expired macrocell dwell leads into a femtocell.
    to_femto: f64,
}

fn run_system<R: Rng>(p: &SystemParams, sr: SystemRates, cfg: &SimConfig, rng: &mut R) -> Counters {
    let mu = p.session_end_rate;
    let eta_f = p.femto_dwell_rate;
    let eta_m = p.macro_dwell_rate;
    let n = p.femtocells as usize;
    let mut e = Entity::new(p);
    e.refuse_mu = if p.open_channels == 0 {
        p.femtocells
    } else {
        0
    };
    let mut clock = Clock::new(cfg.horizon, cfg.warmup);
    let external = sr.femto_new
        + sr.macro_in_femto_new
        + sr.femto_outdoor_new
        + sr.macro_outdoor_new
        + sr.inbound_femto
        + sr.inbound_macro;

    while !clock.done() {
        let r_fu_femto = (mu + eta_f) * f64::from(e.sum_i);
        let r_mu_femto = (mu + eta_m) * f64::from(e.sum_j);
        let r_macro = (mu + eta_m) * f64::from(e.macro_busy());
        let total = external + r_fu_femto + r_mu_femto + r_macro;
        if total <= 0.0 {
            break;
        }
        let dt = clock.advance(exp_draw(rng, total));
        e.dwell(dt);
        if clock.done() {
            break;
        }
        let m = clock.fire();
        let mut u = rng.random::<f64>() * total;

        let mut take = |rate: f64| {
            if u < rate {
                true
            } else {
                u -= rate;
                false
            }
        };

        if take(sr.femto_new) {
            let f = rng.random_range(0..n);
            if !e.femto_attempt(f, Class::Femto, m) {
                e.macro_attempt(Class::Femto, m);
            }
        } else if take(sr.macro_in_femto_new) {
            let f = rng.random_range(0..n);
            if !e.femto_attempt(f, Class::Macro, m) {
                e.macro_attempt(Class::Macro, m);
            }
        } else if take(sr.femto_outdoor_new) || take(sr.inbound_femto) {
            e.macro_attempt(Class::Femto, m);
        } else if take(sr.macro_outdoor_new) || take(sr.inbound_macro) {
            e.macro_attempt(Class::Macro, m);
        } else if take(r_fu_femto) {
            let f = pick_weighted(rng, &e.femto_users, e.sum_i);
            e.shift(f, Class::Femto, -1);
            if rng.random::<f64>() * (mu + eta_f) < eta_f {
                e.macro_attempt(Class::Femto, m);
            }
        } else if take(r_mu_femto) {
            let f = pick_weighted(rng, &e.macro_users, e.sum_j);
            e.shift(f, Class::Macro, -1);
            if rng.random::<f64>() * (mu + eta_m) < eta_m {
                e.macro_attempt(Class::Macro, m);
            }
        } else {
            let busy = e.macro_busy();
            if busy == 0 {
                continue;
            }
            let class = if rng.random_range(0..busy) < e.macro_fu {
                Class::Femto
            } else {
                Class::Macro
            };
            let release = |e: &mut Entity| match class {
                Class::Femto => e.macro_fu -= 1,
                Class::Macro => e.macro_mu -= 1,
            };
            if rng.random::<f64>() * (mu + eta_m) < mu {
                release(&mut e);
            } else if rng.random::<f64>() < sr.to_femto {
                let f = rng.random_range(0..n);
                // Admission frees the macrocell channel; a refused handoff keeps it.
                if e.femto_attempt(f, class, m) {
                    release(&mut e);
                }
            } else {
                release(&mut e);
            }
        }
    }
    e.c
}

/// Call-level simulation of one macrocell entity.
///
/// Handoffs to adjacent macrocells leave the entity; the matching inbound
/// streams are injected at the balanced rates of the analytic solution.
pub fn simulate_system(params: &SystemParams, cfg: &SimConfig) -> Result<SystemSimulation> {
    cfg.check()?;
    let sol = solver::solve(params, &SolverConfig::default())?;
    let p = params;
    let n = f64::from(p.femtocells);
    let hp = sol.handoff;
    let sr = SystemRates {
        femto_new: n * p.mean_femto_users * p.indoor_fraction * p.user_call_rate,
        macro_in_femto_new: n * p.area_ratio() * p.macro_user_rate(),
        femto_outdoor_new: sol.rates.lambda_fu_m,
        macro_outdoor_new: sol.rates.lambda_mu_m,
        inbound_femto: sol.rates.lambda_fu_mm,
        inbound_macro: sol.rates.lambda_mu_mm,
        to_femto: hp.p_mf / (hp.p_mf + hp.p_mm),
    };
    let runs: Vec<Counters> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_system(p, sr, cfg, &mut cfg.rng(r)))
        .collect();
    Ok(SystemSimulation {
        femto_user: estimate(&runs, |c| ratio(c.fu_blk, c.fu_att)),
        macro_user: estimate(&runs, |c| ratio(c.mu_blk, c.mu_att)),
        macro_cell: estimate(&runs, |c| ratio(c.mc_blk, c.mc_att)),
        femto_user_time: estimate(&runs, |c| share(c.fu_time, c.time)),
        macro_user_time: estimate(&runs, |c| share(c.mu_time, c.time)),
        macro_cell_time: estimate(&runs, |c| share(c.mc_time, c.time)),
    })
}

/// Simulated capacity and efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacitySimulation {
    pub c_total: SimEstimate,
    pub bits_per_joule: SimEstimate,
    pub p_closed: SimEstimate,
    pub p_open: SimEstimate,
}

/// Samplers used by [`simulate_capacity`], deliberately distinct from the
/// ones in [`phy`].
struct RejectionSamplers {
    r_m: f64,
    pdf_bound: f64,
}

impl RejectionSamplers {
    fn new(r_m: f64) -> Self {
        let peak = (0..=4096)
            .map(|k| phy::pdf_inter_bs(2.0 * r_m * f64::from(k) / 4096.0, r_m).unwrap_or(0.0))
            .fold(0.0, f64::max);
        Self {
            r_m,
            pdf_bound: 1.05 * peak,
        }
    }

    fn inter_bs<R: Rng>(&self, rng: &mut R) -> f64 {
        loop {
            let l = 2.0 * self.r_m * rng.random::<f64>();
            let f = phy::pdf_inter_bs(l, self.r_m).unwrap_or(0.0);
            if rng.random::<f64>() * self.pdf_bound < f {
                return l;
            }
        }
    }

    /// Radius of a uniform point in the annulus, by rejection from the square.
    fn user_distance<R: Rng>(rng: &mut R, r_p: f64, r_f: f64) -> f64 {
        loop {
            let x = r_f * (2.0 * rng.random::<f64>() - 1.0);
            let y = r_f * (2.0 * rng.random::<f64>() - 1.0);
            let r = x.hypot(y);
            if r >= r_p && r <= r_f {
                return r;
            }
        }
    }

    fn box_muller<R: Rng>(rng: &mut R) -> f64 {
        let u1 = 1.0 - rng.random::<f64>();
        let u2 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

fn sampled_capacity<R: Rng>(
    rng: &mut R,
    params: &SystemParams,
    radio: &RadioParams,
    occupancy: [f64; 2],
    samples: usize,
    samplers: &RejectionSamplers,
) -> Result<f64> {
    let sizes = [params.closed_channels(), params.open_channels];
    let sigma = radio.shadowing_sigma();
    let mut total = 0.0;
    for (p_occ, size) in occupancy.into_iter().zip(sizes) {
        if size == 0 || p_occ <= 0.0 {
            continue;
        }
        let q = (p_occ / f64::from(size)).min(1.0);
        let count = Binomial::new(u64::from(params.femtocells.saturating_sub(1)), q)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let mut acc = 0.0;
        for _ in 0..samples {
            for _ in 0..size {
                let dist = RejectionSamplers::user_distance(
                    rng,
                    radio.protection_distance,
                    params.femto_radius,
                );
                let signal = radio.channel_power * radio.indoor_shadowing()
                    / dist.powf(radio.path_loss_exponent);
                let n = count.sample(rng);
                let mut interference = 0.0;
                for _ in 0..n {
                    let g = RejectionSamplers::box_muller(rng);
                    let alpha_sq = -(1.0 - rng.random::<f64>()).ln();
                    let l = samplers.inter_bs(rng);
                    interference += radio.channel_power * (2.0 * sigma * g).exp() * alpha_sq
                        / (radio.wall_loss() * l.powf(radio.path_loss_exponent));
                }
                let c = radio.bandwidth
                    * (1.0 + p_occ * signal / (radio.noise_power + interference)).log2();
                if !c.is_finite() {
                    return Err(Error::NonFiniteSample);
                }
                acc += c;
            }
        }
        total += acc / samples as f64;
    }
    Ok(total)
}

/// Capacity and bits-per-joule by simulation.
///
/// Each replication simulates the femtocell chain at the solution's rates to
/// obtain empirical occupancy, then samples the capacity expression with
/// `samples` draws per channel.
pub fn simulate_capacity(
    params: &SystemParams,
    radio: &RadioParams,
    solution: &Solution,
    cfg: &SimConfig,
    samples: usize,
) -> Result<CapacitySimulation> {
    cfg.check()?;
    if samples == 0 {
        return Err(Error::InvalidConfig(
            "capacity needs at least one sample".into(),
        ));
    }
    let rates = solution.dist.rates();
    let split = solution.dist.split();
    let samplers = RejectionSamplers::new(params.macro_radius);

    let reps = (0..cfg.replications)
        .into_par_iter()
        .map(|r| -> Result<[f64; 4]> {
            let run = run_chain(split, rates, cfg, &mut cfg.rng(r));
            let dist = run_distribution(split, rates, &run)?;
            let (pc, po) = markov::occupancy_probabilities(&dist);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(CAPACITY_STREAM | r as u64);
            let c = sampled_capacity(&mut rng, params, radio, [pc, po], samples, &samplers)?;
            let power = radio.circuit_power + dist.mean_occupied() * radio.channel_power;
            Ok([c, c / power, pc, po])
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CapacitySimulation {
        c_total: estimate(&reps, |r| r[0]),
        bits_per_joule: estimate(&reps, |r| r[1]),
        p_closed: estimate(&reps, |r| r[2]),
        p_open: estimate(&reps, |r| r[3]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::stationary_product_form;

    fn events(n: u64, reps: usize, seed: u64) -> SimConfig {
        SimConfig {
            horizon: Horizon::Events(n),
            warmup: 0.2,
            replications: reps,
            seed,
        }
    }

    #[test]
    fn config_checks() {
        assert!(SimConfig::default().check().is_ok());
        for bad in [
            SimConfig {
                warmup: 1.0,
                ..SimConfig::default()
            },
            SimConfig {
                replications: 0,
                ..SimConfig::default()
            },
            SimConfig {
                horizon: Horizon::Time(-1.0),
                ..SimConfig::default()
            },
        ] {
            assert!(matches!(bad.check(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn single_replication_has_no_interval() {
        let e = SimEstimate::from_replicates(&[0.3]);
        assert_eq!(e.ci_half_width, None);
        assert!(!e.covers(0.3));
        assert!(e.agrees_with(0.3, 0.0));
    }

    #[test]
    fn single_channel_chain() {
        let rates = ChainRates::new(1.0, 1.0, 1.0, 1.0);
        let sim = simulate_chain(rates, 1, 0, &events(200_000, 5, 3)).unwrap();
        assert!(sim.states[0].covers(0.5) || (sim.dist.prob(0, 0) - 0.5).abs() < 0.005);
        assert!((sim.dist.prob(0, 0) - 0.5).abs() < 0.01);
    }

    #[test]
    fn no_macro_arrivals_never_leave_j_zero() {
        let rates = ChainRates::new(1.0, 0.0, 1.0, 1.0);
        let sim = simulate_chain(rates, 3, 2, &events(50_000, 2, 3)).unwrap();
        for (s, p) in sim.dist.iter() {
            if s.macro_users > 0 {
                assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn chain_matches_product_form_in_total_variation() {
        for nf in 1..=4 {
            for nfo in 0..=nf {
                let rates = ChainRates::new(1.0, 1.0, 1.0, 1.0);
                let sim = simulate_chain(rates, nf, nfo, &events(200_000, 4, 17)).unwrap();
                let exact = stationary_product_form(rates, nf, nfo).unwrap();
                assert!(sim.dist.total_variation(&exact) < 0.02, "({nf},{nfo})");
            }
        }
    }

    #[test]
    fn arrival_and_time_blocking_agree() {
        let rates = ChainRates::new(1.3, 0.8, 1.0, 1.1);
        let sim = simulate_chain(rates, 3, 1, &events(300_000, 10, 5)).unwrap();
        let (a, t) = (sim.femto_blocking, sim.femto_blocking_time);
        assert!(a.overlaps(t.interval().unwrap().0, t.interval().unwrap().1));
        let (a, t) = (sim.macro_blocking, sim.macro_blocking_time);
        assert!(a.overlaps(t.interval().unwrap().0, t.interval().unwrap().1));
    }

    #[test]
    fn time_horizon_runs() {
        let rates = ChainRates::new(2.0, 1.0, 1.0, 1.0);
        let cfg = SimConfig {
            horizon: Horizon::Time(50_000.0),
            ..events(1, 4, 8)
        };
        let sim = simulate_chain(rates, 2, 1, &cfg).unwrap();
        let exact = stationary_product_form(rates, 2, 1).unwrap();
        assert!(sim.dist.total_variation(&exact) < 0.02);
    }

    #[test]
    fn chain_simulation_is_deterministic() {
        let rates = ChainRates::new(1.0, 0.5, 1.0, 1.0);
        let a = simulate_chain(rates, 3, 1, &events(20_000, 3, 9)).unwrap();
        let b = simulate_chain(rates, 3, 1, &events(20_000, 3, 9)).unwrap();
        assert_eq!(a.dist.probabilities(), b.dist.probabilities());
        assert_eq!(a.femto_blocking, b.femto_blocking);
    }

    #[test]
    fn light_system_never_blocks() {
        let p = SystemParams {
            user_call_rate: 1e-7,
            total_arrival_rate: 1e-4,
            ..SystemParams::default()
        };
        let cfg = SimConfig {
            horizon: Horizon::Events(20_000),
            replications: 3,
            ..SimConfig::default()
        };
        let s = simulate_system(&p, &cfg).unwrap();
        for e in [s.femto_user, s.macro_user, s.macro_cell] {
            assert_eq!(e.point, 0.0);
        }
    }

    #[test]
    fn time_averaged_blocking_tracks_rare_events() {
        let p = SystemParams {
            femto_channels: 6,
            open_channels: 3,
            ..SystemParams::default()
        };
        let sol = solver::solve(&p, &SolverConfig::default()).unwrap();
        let s = simulate_system(&p, &SimConfig::default()).unwrap();
        let b = sol.blocking;
        for (est, x) in [
            (s.femto_user_time, b.femto_user),
            (s.macro_user_time, b.macro_user),
            (s.macro_cell_time, b.macro_cell),
        ] {
            assert!(est.agrees_with(x, 0.10), "{est:?} vs {x}");
        }
        for e in [s.femto_user_time, s.macro_user_time, s.macro_cell_time] {
            assert!(e.ci_half_width.unwrap() < 0.5 * e.point);
        }
    }

    #[test]
    fn system_blocking_grows_with_load() {
        let cfg = SimConfig {
            horizon: Horizon::Time(200_000.0),
            replications: 8,
            ..SimConfig::default()
        };
        let base = SystemParams::default();
        let heavy = SystemParams {
            total_arrival_rate: 2.0 * base.total_arrival_rate,
            ..base
        };
        let a = simulate_system(&base, &cfg).unwrap();
        let b = simulate_system(&heavy, &cfg).unwrap();
        assert!(b.femto_user.point > a.femto_user.point);
        assert!(b.macro_user.point > a.macro_user.point);
        assert!(b.macro_cell.point > a.macro_cell.point);
    }

    #[test]
    fn capacity_simulation_zero_and_deterministic() {
        let p = SystemParams {
            femto_channels: 6,
            open_channels: 3,
            ..SystemParams::default()
        };
        let r = RadioParams::default();
        let sol = solver::solve(&p, &SolverConfig::default()).unwrap();
        let cfg = events(20_000, 3, 2);
        let a = simulate_capacity(&p, &r, &sol, &cfg, 500).unwrap();
        let b = simulate_capacity(&p, &r, &sol, &cfg, 500).unwrap();
        assert_eq!(a, b);
        assert!(a.c_total.point > 0.0);

        let samplers = RejectionSamplers::new(p.macro_radius);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sampled_capacity(&mut rng, &p, &r, [0.0, 0.0], 100, &samplers).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejection_samplers_pass_ks() {
        let s = RejectionSamplers::new(1000.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let table = phy::inter_bs_cdf(1000.0);
        let mut ls: Vec<f64> = (0..20_000).map(|_| s.inter_bs(&mut rng)).collect();
        let d = stats::ks_statistic(&mut ls, |x| table.cdf(x));
        assert!(stats::ks_p_value(d, ls.len()) > 0.01);
        let mut us: Vec<f64> = (0..20_000)
            .map(|_| RejectionSamplers::user_distance(&mut rng, 5.0, 20.0))
            .collect();
        let d = stats::ks_statistic(&mut us, |x| phy::cdf_user_distance(x, 5.0, 20.0));
        assert!(stats::ks_p_value(d, us.len()) > 0.01);
    }
}
