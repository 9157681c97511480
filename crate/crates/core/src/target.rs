//! Beta target density rescaled to an interval, and a reproducible sampler.
//!
//! The uniform stream is ChaCha20 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64`, mapped to `(0, 1)` through `rand::distr::Open01`, and
//! pushed through the beta quantile. Identical `(n, seed)` pairs give
//! identical samples on every platform.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basis::{Grid, Interval};
use crate::error::{Error, Result};
use crate::learn::DensityCurve;
use crate::samples::SampleSet;

/// Bisection stops once the bracket is this narrow (in unit coordinates).
pub const QUANTILE_TOLERANCE: f64 = 1e-12;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    // the continued fraction converges fast below the mean; reflect above it
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Beta(a, b) density mapped affinely onto an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaTarget {
    a: f64,
    b: f64,
    interval: Interval,
}

impl BetaTarget {
    pub fn new(a: f64, b: f64, interval: Interval) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta parameters must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b, interval })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    fn unit(&self, s: f64) -> f64 {
        (s - self.interval.lo()) / self.interval.width()
    }

    /// `beta_pdf((s - lo) / (hi - lo)) / (hi - lo)`; zero outside the interval.
    pub fn density(&self, s: f64) -> f64 {
        if !self.interval.contains(s) {
            return 0.0;
        }
        let x = self.unit(s);
        let log_norm = ln_beta(self.a, self.b);
        x.powf(self.a - 1.0) * (1.0 - x).powf(self.b - 1.0) * (-log_norm).exp()
            / self.interval.width()
    }

    pub fn cdf(&self, s: f64) -> f64 {
        regularized_incomplete_beta(self.a, self.b, self.unit(s))
    }

    /// Inverse CDF by bisection on `[lo, hi]`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.interval.lo();
        }
        if u >= 1.0 {
            return self.interval.hi();
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while hi - lo > QUANTILE_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if regularized_incomplete_beta(self.a, self.b, mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.interval.lo() + 0.5 * (lo + hi) * self.interval.width()
    }

    pub fn curve(&self, grid: &Grid) -> Result<DensityCurve> {
        DensityCurve::from_fn(grid.clone(), |s| self.density(s))
    }

    /// `n` noise-free singletons drawn by inverse transform sampling.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "sample count must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            })
            .collect();
        Ok(SampleSet::new(points, self.interval)?.with_seed(seed))
    }
}
