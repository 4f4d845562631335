//! Small statistical helpers: confidence intervals, Kolmogorov-Smirnov and
//! Simpson quadrature.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Running mean and sum of squared deviations (Welford), mergeable in order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        self.mean += d * nb / n as f64;
        self.m2 += other.m2 + d * d * na * nb / n as f64;
        self.count = n;
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Two-sided Student-t quantile `t_{1−α/2, dof}`.
pub fn t_quantile(confidence: f64, dof: u64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, dof as f64).expect("dof >= 1");
    t.inverse_cdf(0.5 + confidence / 2.0)
}

/// Mean and 95% half-width of independent replicates; `None` for a single one.
pub fn mean_ci95(values: &[f64]) -> (f64, Option<f64>) {
    let m: Moments = values.iter().copied().collect();
    if m.count < 2 {
        return (m.mean, None);
    }
    (m.mean, Some(t_quantile(0.95, m.count - 1) * m.std_error()))
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`. Sorts in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            let above = (k + 1) as f64 / n - f;
            let below = f - k as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value `Q_KS((√n + 0.12 + 0.11/√n)·D)`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_tail(lambda)
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = f64::from(k);
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Composite Simpson rule on `[a, b]` with `panels` panels (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * k as f64);
    }
    acc * h / 3.0
}

/// A CDF tabulated by cumulative Simpson integration of a density, with
/// linear interpolation between knots.
#[derive(Debug, Clone)]
pub struct CdfTable {
    lower: f64,
    step: f64,
    values: Vec<f64>,
}

impl CdfTable {
    pub fn from_pdf(pdf: impl Fn(f64) -> f64, lower: f64, upper: f64, panels: usize) -> Self {
        let step = (upper - lower) / panels as f64;
        let mut values = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        let mut left = pdf(lower);
        values.push(0.0);
        for k in 0..panels {
            let x0 = lower + step * k as f64;
            let right = pdf(x0 + step);
            acc += step / 6.0 * (left + 4.0 * pdf(x0 + 0.5 * step) + right);
            values.push(acc);
            left = right;
        }
        Self {
            lower,
            step,
            values,
        }
    }

    /// Integral of the density over the whole support.
    pub fn total(&self) -> f64 {
        *self.values.last().expect("non-empty table")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.lower) / self.step;
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.values.len() - 1;
        if t >= last as f64 {
            return self.values[last];
        }
        let k = t.floor() as usize;
        let frac = t - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}
