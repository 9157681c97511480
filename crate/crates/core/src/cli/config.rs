//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # defaults
//! lo = 0
//! hi = 3
//! family = daubechies4
//! scale = 2
//! active = interior
//! weights = projection
//! beta_a = 2
//! beta_b = 5
//! n_samples = 300
//! seed = 1
//! grid_cells = 49152
//! ```
//!
//! `active` is `interior` (fathers supported inside the interval) or `all`
//! (every translate meeting it). `weights` is `projection` or a
//! comma-separated list of nonnegative `alpha_j`, one per active translate.
//! `output` optionally names the file written by `reproduce` and `estimate`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::basis::{BasisSpec, Family, Grid, Interval};
use crate::embedding::EmbeddingOperator;
use crate::error::{Error, Result};
use crate::target::BetaTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveSet {
    Interior,
    All,
}

impl FromStr for ActiveSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(ActiveSet::Interior),
            "all" => Ok(ActiveSet::All),
            other => Err(Error::Config(format!(
                "active must be 'interior' or 'all', got '{other}'"
            ))),
        }
    }
}

impl ActiveSet {
    fn as_str(self) -> &'static str {
        match self {
            ActiveSet::Interior => "interior",
            ActiveSet::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Projection,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub lo: f64,
    pub hi: f64,
    pub family: Family,
    pub scale: u32,
    pub active: ActiveSet,
    pub weights: Weights,
    pub beta_a: f64,
    pub beta_b: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub grid_cells: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 3.0,
            family: Family::Daubechies4,
            scale: 2,
            active: ActiveSet::Interior,
            weights: Weights::Projection,
            beta_a: 2.0,
            beta_b: 5.0,
            n_samples: 300,
            seed: 1,
            // 2^12 cells per unit of the father argument at scale 2 on [0, 3]
            grid_cells: 3 * (1 << 14),
            output: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl ExperimentConfig {
    /// Defaults overridden by the entries of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Parse {
                    line: n + 1,
                    msg: e.to_string(),
                })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Assigns one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lo" => self.lo = parse_value(key, value)?,
            "hi" => self.hi = parse_value(key, value)?,
            "family" => self.family = value.parse()?,
            "scale" => self.scale = parse_value(key, value)?,
            "active" => self.active = value.parse()?,
            "weights" => {
                self.weights = if value == "projection" {
                    Weights::Projection
                } else {
                    Weights::Explicit(
                        value
                            .split(',')
                            .map(|w| parse_value::<f64>(key, w.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "beta_a" => self.beta_a = parse_value(key, value)?,
            "beta_b" => self.beta_b = parse_value(key, value)?,
            "n_samples" => self.n_samples = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "grid_cells" => self.grid_cells = parse_value(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Checks every derived object can be built.
    pub fn validate(&self) -> Result<()> {
        self.operator()?;
        self.grid()?;
        self.target()?;
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn interval(&self) -> Result<Interval> {
        Interval::new(self.lo, self.hi)
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::covering(self.family, self.scale, &self.interval()?)
    }

    pub fn operator(&self) -> Result<EmbeddingOperator> {
        let interval = self.interval()?;
        let basis = self.basis()?;
        let active = match self.active {
            ActiveSet::Interior => basis.interior_translates(&interval),
            ActiveSet::All => basis.translates().collect(),
        };
        if active.is_empty() {
            return Err(Error::Config(
                "no father is supported inside the interval at this scale".into(),
            ));
        }
        match &self.weights {
            Weights::Projection => EmbeddingOperator::projection(basis, active),
            Weights::Explicit(alpha) => {
                if alpha.len() != active.len() {
                    return Err(Error::Config(format!(
                        "{} weights given for {} active translates {:?}",
                        alpha.len(),
                        active.len(),
                        active
                    )));
                }
                EmbeddingOperator::new(basis, active, alpha.clone())
            }
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.interval()?, self.grid_cells)
    }

    pub fn target(&self) -> Result<BetaTarget> {
        BetaTarget::new(self.beta_a, self.beta_b, self.interval()?)
    }

    /// Every key with its effective value; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "lo = {}", self.lo);
        let _ = writeln!(out, "hi = {}", self.hi);
        let _ = writeln!(out, "family = {}", self.family);
        let _ = writeln!(out, "scale = {}", self.scale);
        let _ = writeln!(out, "active = {}", self.active.as_str());
        match &self.weights {
            Weights::Projection => {
                let _ = writeln!(out, "weights = projection");
            }
            Weights::Explicit(alpha) => {
                let list: Vec<String> = alpha.iter().map(|a| a.to_string()).collect();
                let _ = writeln!(out, "weights = {}", list.join(","));
            }
        }
        let _ = writeln!(out, "beta_a = {}", self.beta_a);
        let _ = writeln!(out, "beta_b = {}", self.beta_b);
        let _ = writeln!(out, "n_samples = {}", self.n_samples);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "grid_cells = {}", self.grid_cells);
        if let Some(path) = &self.output {
            let _ = writeln!(out, "output = {}", path.display());
        }
        out
    }
}
