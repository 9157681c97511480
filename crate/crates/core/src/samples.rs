//! Observed singletons and their measurement noise.

use std::io::{BufRead, Write};

use crate::basis::Interval;
use crate::error::{Error, Result};

/// Measurement noise `P(S_i | s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKernel {
    None,
    /// Gaussian in `s` centred on the observation, truncated to `interval`
    /// and renormalized there.
    Gaussian {
        sigma: f64,
        interval: Interval,
    },
}

impl NoiseKernel {
    pub fn gaussian(sigma: f64, interval: Interval) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be positive, got {sigma}"
            )));
        }
        Ok(NoiseKernel::Gaussian { sigma, interval })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseKernel::None)
    }

    /// `P(observed | s)` as a density in `s`. `None` has no density form
    /// (it is a Dirac mass) and returns `NaN`.
    pub fn density(&self, observed: f64, s: f64) -> f64 {
        match *self {
            NoiseKernel::None => f64::NAN,
            NoiseKernel::Gaussian { sigma, interval } => {
                if !interval.contains(s) {
                    return 0.0;
                }
                let z = (s - observed) / sigma;
                let raw = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                raw / truncated_mass(observed, sigma, &interval)
            }
        }
    }
}

fn truncated_mass(mean: f64, sigma: f64, interval: &Interval) -> f64 {
    let cdf = |x: f64| 0.5 * libm::erfc(-(x - mean) / (sigma * std::f64::consts::SQRT_2));
    cdf(interval.hi()) - cdf(interval.lo())
}

/// Ordered singletons `S_i` inside an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    interval: Interval,
    seed: Option<u64>,
    noise: NoiseKernel,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, interval: Interval) -> Result<Self> {
        if let Some(&value) = points
            .iter()
            .find(|&&s| !(s.is_finite() && interval.contains(s)))
        {
            return Err(Error::SampleOutsideInterval {
                value,
                lo: interval.lo(),
                hi: interval.hi(),
            });
        }
        Ok(Self {
            points,
            interval,
            seed: None,
            noise: NoiseKernel::None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_noise(mut self, noise: NoiseKernel) -> Self {
        self.noise = noise;
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// Seed of the generator that produced the points, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn noise(&self) -> &NoiseKernel {
        &self.noise
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The points followed by themselves again.
    pub fn doubled(&self) -> Self {
        let mut points = self.points.clone();
        points.extend_from_slice(&self.points);
        Self {
            points,
            ..self.clone()
        }
    }

    /// One decimal per line, shortest representation that round-trips.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.points {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }

    /// Parses one decimal per line. Blank lines and `#` comments are skipped.
    pub fn read_from<R: BufRead>(input: R, interval: Interval) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let value: f64 = text.parse().map_err(|_| Error::Parse {
                line: n + 1,
                msg: format!("'{text}' is not a number"),
            })?;
            if !(value.is_finite() && interval.contains(value)) {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!(
                        "sample {value} lies outside [{}, {}]",
                        interval.lo(),
                        interval.hi()
                    ),
                });
            }
            points.push(value);
        }
        if points.is_empty() {
            return Err(Error::EmptySamples);
        }
        Self::new(points, interval)
    }
}
