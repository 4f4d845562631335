//! The femtocell occupancy chain.
//!
//! A state `(i, j)` counts channels held by femtocell users (`i`, closed
//! channels first, then open ones) and by macrocell users (`j`, open channels
//! only). With `N_F` channels of which `N_F_O` are open the reachable states
//! are `0 ≤ i ≤ N_F`, `0 ≤ j ≤ min(N_F_O, N_F − i)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest chain the dense direct solver accepts.
pub const DIRECT_SOLVE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ChannelState {
    /// Channels held by femtocell users.
    pub femto_users: u32,
    /// Channels held by macrocell users.
    pub macro_users: u32,
}

impl ChannelState {
    pub const fn new(femto_users: u32, macro_users: u32) -> Self {
        Self {
            femto_users,
            macro_users,
        }
    }

    pub fn occupied(&self) -> u32 {
        self.femto_users + self.macro_users
    }
}

/// Arrival and holding rates of the two user classes at one femtocell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRates {
    /// Femtocell-user arrival rate λ1.
    pub femto_arrival: f64,
    /// Macrocell-user arrival rate λ2.
    pub macro_arrival: f64,
    /// Femtocell-user holding rate μ1.
    pub femto_departure: f64,
    /// Macrocell-user holding rate μ2.
    pub macro_departure: f64,
}

impl ChainRates {
    pub fn new(
        femto_arrival: f64,
        macro_arrival: f64,
        femto_departure: f64,
        macro_departure: f64,
    ) -> Self {
        Self {
            femto_arrival,
            macro_arrival,
            femto_departure,
            macro_departure,
        }
    }

    /// Offered loads `(λ1/μ1, λ2/μ2)`.
    pub fn loads(&self) -> (f64, f64) {
        (
            self.femto_arrival / self.femto_departure,
            self.macro_arrival / self.macro_departure,
        )
    }

    fn check(&self) -> Result<()> {
        let arrivals = [
            ("lambda_1", self.femto_arrival),
            ("lambda_2", self.macro_arrival),
        ];
        for (name, value) in arrivals {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::NonFiniteRate { name, value });
            }
        }
        let departures = [
            ("mu_1", self.femto_departure),
            ("mu_2", self.macro_departure),
        ];
        for (name, value) in departures {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonFiniteRate { name, value });
            }
        }
        Ok(())
    }
}

/// Channel layout of one femtocell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelSplit {
    pub total: u32,
    pub open: u32,
}

impl ChannelSplit {
    pub fn new(total: u32, open: u32) -> Result<Self> {
        if open > total {
            return Err(Error::InvalidChannelSplit { total, open });
        }
        Ok(Self { total, open })
    }

    pub fn closed(&self) -> u32 {
        self.total - self.open
    }

    /// Largest admissible macrocell-user count when `i` channels hold femtocell users.
    pub fn max_macro(&self, i: u32) -> u32 {
        self.open.min(self.total - i)
    }

    pub fn contains(&self, s: ChannelState) -> bool {
        s.femto_users <= self.total && s.macro_users <= self.max_macro(s.femto_users)
    }

    /// Number of reachable states,
    /// `(N_F − N_F_O + 1)(N_F_O + 1) + N_F_O(N_F_O + 1)/2`.
    pub fn state_count(&self) -> usize {
        let (n, o) = (self.total as usize, self.open as usize);
        (n - o + 1) * (o + 1) + o * (o + 1) / 2
    }

    /// Position of `s` in the lexicographic state order.
    pub fn index_of(&self, s: ChannelState) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..s.femto_users {
            idx += self.max_macro(i) as usize + 1;
        }
        Some(idx + s.macro_users as usize)
    }

    /// Whether a femtocell user arriving in state `s` finds a free channel.
    pub fn admits_femto(&self, s: ChannelState) -> bool {
        s.occupied() < self.total
    }

    /// Whether a macrocell user arriving in state `s` finds a free open channel.
    pub fn admits_macro(&self, s: ChannelState) -> bool {
        s.macro_users < self.max_macro(s.femto_users)
    }
}

/// All reachable states in lexicographic `(i, j)` order.
pub fn enumerate_states(n_f: u32, n_f_o: u32) -> Result<Vec<ChannelState>> {
    let split = ChannelSplit::new(n_f, n_f_o)?;
    Ok(states_of(split))
}

fn states_of(split: ChannelSplit) -> Vec<ChannelState> {
    let mut out = Vec::with_capacity(split.state_count());
    for i in 0..=split.total {
        for j in 0..=split.max_macro(i) {
            out.push(ChannelState::new(i, j));
        }
    }
    out
}

/// A probability vector over the states of one channel split.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    split: ChannelSplit,
    rates: ChainRates,
    states: Vec<ChannelState>,
    probs: Vec<f64>,
}

impl StationaryDistribution {
    /// Builds a distribution from raw weights, normalising them.
    ///
    /// `weights` must follow the lexicographic state order of `split`.
    pub fn from_weights(split: ChannelSplit, rates: ChainRates, weights: Vec<f64>) -> Result<Self> {
        let states = states_of(split);
        if weights.len() != states.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} weights, got {}",
                states.len(),
                weights.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::SingularSystem);
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            split,
            rates,
            states,
            probs,
        })
    }

    pub fn split(&self) -> ChannelSplit {
        self.split
    }

    pub fn rates(&self) -> ChainRates {
        self.rates
    }

    pub fn states(&self) -> &[ChannelState] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChannelState, f64)> + '_ {
        self.states.iter().copied().zip(self.probs.iter().copied())
    }

    /// `S(i, j)`, or 0 for an unreachable state.
    pub fn prob(&self, i: u32, j: u32) -> f64 {
        self.split
            .index_of(ChannelState::new(i, j))
            .map_or(0.0, |k| self.probs[k])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean number of occupied channels, `Σ (i+j)·S(i,j)`.
    pub fn mean_occupied(&self) -> f64 {
        self.iter().map(|(s, p)| f64::from(s.occupied()) * p).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Total-variation distance `½ Σ |p − q|` to a distribution over the same split.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// `k·ln ρ − ln k!`, with `0^0 = 1`.
fn ln_poisson_term(load: f64, k: u32) -> f64 {
    if k == 0 {
        0.0
    } else if load == 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::from(k) * load.ln() - ln_factorial(k)
    }
}

/// Closed-form product-form solution `S(i,j) ∝ (ρ1^i/i!)(ρ2^j/j!)`.
///
/// Terms are built in the log domain and shifted by their maximum before
/// exponentiating.
pub fn stationary_product_form(
    rates: ChainRates,
    n_f: u32,
    n_f_o: u32,
) -> Result<StationaryDistribution> {
    let split = ChannelSplit::new(n_f, n_f_o)?;
    rates.check()?;
    let (rho1, rho2) = rates.loads();
    let log_w: Vec<f64> = states_of(split)
        .iter()
        .map(|s| ln_poisson_term(rho1, s.femto_users) + ln_poisson_term(rho2, s.macro_users))
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = log_w.iter().map(|w| (w - max).exp()).collect();
    StationaryDistribution::from_weights(split, rates, weights)
}

/// Transitions out of `s`: `(target, rate)` pairs with positive rate.
pub fn transitions(
    split: ChannelSplit,
    rates: ChainRates,
    s: ChannelState,
) -> Vec<(ChannelState, f64)> {
    let (i, j) = (s.femto_users, s.macro_users);
    let mut out = Vec::with_capacity(4);
    if split.admits_femto(s) && rates.femto_arrival > 0.0 {
        out.push((ChannelState::new(i + 1, j), rates.femto_arrival));
    }
    if split.admits_macro(s) && rates.macro_arrival > 0.0 {
        out.push((ChannelState::new(i, j + 1), rates.macro_arrival));
    }
    if i > 0 {
        out.push((
            ChannelState::new(i - 1, j),
            f64::from(i) * rates.femto_departure,
        ));
    }
    if j > 0 {
        out.push((
            ChannelState::new(i, j - 1),
            f64::from(j) * rates.macro_departure,
        ));
    }
    out
}

/// Solves the global-balance equations `πQ = 0`, `Σπ = 1` directly.
///
/// The generator is assembled from the chain's transition rules; the last
/// balance row is replaced by the normalisation row and the system is solved
/// by LU decomposition. Independent of [`stationary_product_form`].
pub fn stationary_direct_solve(
    rates: ChainRates,
    n_f: u32,
    n_f_o: u32,
) -> Result<StationaryDistribution> {
    let split = ChannelSplit::new(n_f, n_f_o)?;
    rates.check()?;
    let states = states_of(split);
    let n = states.len();
    if n > DIRECT_SOLVE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            states: n,
            limit: DIRECT_SOLVE_LIMIT,
        });
    }

    // a = Qᵀ, so row `to` collects inflow into `to` and the diagonal the outflow.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (from, s) in states.iter().enumerate() {
        for (target, rate) in transitions(split, rates, *s) {
            let to = split
                .index_of(target)
                .expect("transition leaves the state space");
            a[(to, from)] += rate;
            a[(from, from)] -= rate;
        }
    }
    for col in 0..n {
        a[(n - 1, col)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let x = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    // Round-off can leave tiny negatives on near-zero states.
    let weights = x.iter().map(|v| v.max(0.0)).collect();
    StationaryDistribution::from_weights(split, rates, weights)
}

/// Probability that a femtocell user finds every channel busy:
/// `Σ_{i=N_F−N_F_O}^{N_F} S(i, N_F − i)`.
pub fn blocking_femto_user(dist: &StationaryDistribution) -> f64 {
    let split = dist.split();
    (split.closed()..=split.total)
        .map(|i| dist.prob(i, split.total - i))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Probability that a macrocell user finds no free open channel:
/// `Σ_{i<N_F−N_F_O} S(i, N_F_O) + Σ_{i≥N_F−N_F_O} S(i, N_F − i)`.
pub fn blocking_macro_user_in_femto(dist: &StationaryDistribution) -> f64 {
    let split = dist.split();
    let open_full: f64 = (0..split.closed()).map(|i| dist.prob(i, split.open)).sum();
    (open_full + blocking_femto_user(dist)).clamp(0.0, 1.0)
}

/// Occupancy probability of one closed channel.
///
/// Up to `N_F − N_F_O` femtocell users spread over the closed channels, so
/// each closed channel is busy with probability `i/(N_F − N_F_O)`; beyond
/// that every closed channel is busy.
pub fn occupancy_closed(dist: &StationaryDistribution) -> Result<f64> {
    let split = dist.split();
    let closed = split.closed();
    if closed == 0 {
        return Err(Error::DegenerateSplit("closed"));
    }
    let p = dist
        .iter()
        .map(|(s, p)| {
            let i = s.femto_users;
            let share = if i <= closed {
                f64::from(i) / f64::from(closed)
            } else {
                1.0
            };
            share * p
        })
        .sum::<f64>();
    Ok(p.clamp(0.0, 1.0))
}

/// Occupancy probability of one open channel.
///
/// While femtocell users fit in the closed channels only the `j` macrocell
/// users hold open channels (share `j/N_F_O`). Once femtocell users spill
/// over, the share counts the spilled femtocell users, `(i − (N_F − N_F_O))/N_F_O`.
pub fn occupancy_open(dist: &StationaryDistribution) -> Result<f64> {
    let split = dist.split();
    let open = split.open;
    if open == 0 {
        return Err(Error::DegenerateSplit("open"));
    }
    let closed = split.closed();
    let p = dist
        .iter()
        .map(|(s, p)| {
            let (i, j) = (s.femto_users, s.macro_users);
            let held = if i <= closed { j } else { i - closed };
            f64::from(held) / f64::from(open) * p
        })
        .sum::<f64>();
    Ok(p.clamp(0.0, 1.0))
}

/// `(P_closed, P_open)` with an empty channel class contributing 0.
pub fn occupancy_probabilities(dist: &StationaryDistribution) -> (f64, f64) {
    (
        occupancy_closed(dist).unwrap_or(0.0),
        occupancy_open(dist).unwrap_or(0.0),
    )
}
