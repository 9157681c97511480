//! Command-line front end: figure tables, estimation on sample files and
//! the oracle suites. The `densop` binary is a thin wrapper over this module.

pub mod config;
pub mod oracle;

use std::fmt;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::basis::wavelet_approximation;
use crate::error::{Error, Result};
use crate::learn::{embedded_density_exact, embedded_density_map, normalized_ratio, DensityCurve};
use crate::samples::SampleSet;

pub use config::{ActiveSet, ExperimentConfig, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Father wavelets and the kernel diagonal.
    Fig2a,
    /// Target density and its wavelet approximation.
    Fig2b,
    /// Target with the exact and MAP embedded densities.
    Fig3a,
    /// Target with both normalized ratios.
    Fig3b,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig2a, Figure::Fig2b, Figure::Fig3a, Figure::Fig3b];
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig2a => "fig2a",
            Figure::Fig2b => "fig2b",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
        })
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown figure '{s}' (expected fig2a, fig2b, fig3a or fig3b)"
                ))
            })
    }
}

/// Named columns of equal length; the first column is the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(grid: &[f64]) -> Self {
        Self {
            header: vec!["s".into()],
            columns: vec![grid.to_vec()],
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(
            values.len(),
            self.columns[0].len(),
            "column length differs from the grid"
        );
        self.header.push(name.into());
        self.columns.push(values);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    /// Comma-separated, header first, 17 significant digits per value.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for r in 0..self.rows() {
            for (c, column) in self.columns.iter().enumerate() {
                if c > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{:.16e}", column[r])?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes to `path`, or stdout when `None`. The table is rendered in
    /// memory first so a failure leaves no partial file behind.
    pub fn save(&self, path: Option<&Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(self.rows() * self.columns.len() * 24);
        self.write_to(&mut buf)?;
        match path {
            Some(p) => fs::write(p, buf)?,
            None => io::stdout().lock().write_all(&buf)?,
        }
        Ok(())
    }
}

/// The curves of one figure on the configured grid.
pub fn figure_table(figure: Figure, config: &ExperimentConfig) -> Result<Table> {
    config.validate()?;
    let grid = config.grid()?;
    let a = config.operator()?;
    let target = config.target()?;
    let mut table = Table::new(grid.points());
    match figure {
        Figure::Fig2a => {
            let basis = a.basis();
            for k in basis.translates() {
                table.push(
                    format!("phi_{}_{}", basis.scale(), k),
                    grid.sample(|s| basis.eval(k, s)),
                );
            }
            table.push("kernel_diag", grid.sample(|s| a.kernel_diag(s)));
        }
        Figure::Fig2b => {
            let zeta = grid.sample(|s| target.density(s));
            let approx = wavelet_approximation(&zeta, a.basis(), &grid)?;
            table.push("zeta", zeta);
            table.push("wavelet_approx", approx.values);
        }
        Figure::Fig3a | Figure::Fig3b => {
            let zeta = target.curve(&grid)?;
            let samples = target.sample(config.n_samples, config.seed)?;
            let exact = embedded_density_exact(&a, &zeta)?;
            let map = embedded_density_map(&a, &samples, &grid)?;
            let (exact_name, map_name, exact, map) = if figure == Figure::Fig3a {
                ("embedded_exact", "embedded_map", exact, map)
            } else {
                (
                    "ratio_exact",
                    "ratio_map",
                    normalized_ratio(&exact, &a)?,
                    normalized_ratio(&map, &a)?,
                )
            };
            table.push("zeta", zeta.into_values());
            table.push(exact_name, exact.into_values());
            table.push(map_name, map.into_values());
        }
    }
    Ok(table)
}

/// Reads a one-sample-per-line file against the configured interval.
pub fn read_samples(path: &Path, config: &ExperimentConfig) -> Result<SampleSet> {
    let file = fs::File::open(path)?;
    SampleSet::read_from(BufReader::new(file), config.interval()?)
}

/// MAP embedded density of `samples` and its normalized ratio.
pub fn estimate_table(samples: &SampleSet, config: &ExperimentConfig) -> Result<Table> {
    config.validate()?;
    let grid = config.grid()?;
    let a = config.operator()?;
    let map: DensityCurve = embedded_density_map(&a, samples, &grid)?;
    let ratio = normalized_ratio(&map, &a)?;
    let mut table = Table::new(grid.points());
    table.push("embedded_map", map.into_values());
    table.push("ratio_map", ratio.into_values());
    Ok(table)
}
