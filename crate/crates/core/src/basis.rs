//! Orthonormal father-wavelet families on a bounded interval.
//!
//! `phi_nk(s) = 2^{n/2} phi(2^n s - k)` for the Haar box function and for
//! the 4-tap Daubechies scaling function. The latter has no closed form and
//! is tabulated on dyadic points by the cascade (refinement) algorithm.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Level of the shared Daubechies table: `2^12` cells per unit.
pub const DEFAULT_TABLE_LEVEL: u32 = 12;
/// Largest table level accepted by [`ScalingTable::build`].
pub const MAX_TABLE_LEVEL: u32 = 22;

/// Refinement coefficients of the 4-tap Daubechies father, normalized so that
/// they sum to 2: `phi(x) = sum_t c_t phi(2x - t)`.
pub fn daub4_coefficients() -> [f64; 4] {
    let r3 = 3.0_f64.sqrt();
    [
        (1.0 + r3) / 4.0,
        (3.0 + r3) / 4.0,
        (3.0 - r3) / 4.0,
        (1.0 - r3) / 4.0,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Haar,
    Daubechies4,
}

impl Family {
    /// Length of the support of the unscaled father.
    pub fn support_length(self) -> i64 {
        match self {
            Family::Haar => 1,
            Family::Daubechies4 => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Haar => "haar",
            Family::Daubechies4 => "daubechies4",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Family::Haar),
            "daubechies4" | "db4" | "daub4" | "d4" => Ok(Family::Daubechies4),
            other => Err(Error::InvalidArgument(format!(
                "unknown basis family '{other}'"
            ))),
        }
    }
}

/// Father wavelets `phi_nk` for one scale and a contiguous range of translates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    family: Family,
    scale: u32,
    k_min: i64,
    k_max: i64,
}

impl BasisSpec {
    pub fn new(family: Family, scale: u32, k_min: i64, k_max: i64) -> Result<Self> {
        if scale > 30 {
            return Err(Error::InvalidArgument(format!(
                "scale {scale} is too large"
            )));
        }
        if k_min > k_max {
            return Err(Error::InvalidArgument(format!(
                "empty translate range [{k_min}, {k_max}]"
            )));
        }
        Ok(Self {
            family,
            scale,
            k_min,
            k_max,
        })
    }

    /// Every translate whose support meets the interior of `interval`.
    pub fn covering(family: Family, scale: u32, interval: &Interval) -> Result<Self> {
        let dyadic = (1_i64 << scale.min(30)) as f64;
        let len = family.support_length();
        // support of phi_nk is [k, k + len] / 2^n
        let k_min = (interval.lo() * dyadic).floor() as i64 - len + 1;
        let k_max = (interval.hi() * dyadic).ceil() as i64 - 1;
        Self::new(family, scale, k_min, k_max)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn translate_range(&self) -> (i64, i64) {
        (self.k_min, self.k_max)
    }

    pub fn translates(&self) -> impl Iterator<Item = i64> {
        self.k_min..=self.k_max
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_translate(&self, k: i64) -> bool {
        (self.k_min..=self.k_max).contains(&k)
    }

    /// Position of translate `k` in `translates()`.
    pub fn position(&self, k: i64) -> Option<usize> {
        self.contains_translate(k)
            .then(|| (k - self.k_min) as usize)
    }

    fn dyadic(&self) -> f64 {
        (1_u64 << self.scale) as f64
    }

    fn amplitude(&self) -> f64 {
        self.dyadic().sqrt()
    }

    /// Closed support `[k, k + len] / 2^n` of `phi_nk`.
    pub fn support(&self, k: i64) -> (f64, f64) {
        let d = self.dyadic();
        (k as f64 / d, (k + self.family.support_length()) as f64 / d)
    }

    /// Whether the support of every translate meets `interval`.
    pub fn covers(&self, interval: &Interval) -> bool {
        match Self::covering(self.family, self.scale, interval) {
            Ok(full) => self.k_min <= full.k_min && self.k_max >= full.k_max,
            Err(_) => false,
        }
    }

    /// Translates whose support lies inside `interval`. Restricted to the
    /// interval these remain orthonormal, unlike the edge translates.
    pub fn interior_translates(&self, interval: &Interval) -> Vec<i64> {
        self.translates()
            .filter(|&k| {
                let (a, b) = self.support(k);
                a >= interval.lo() && b <= interval.hi()
            })
            .collect()
    }

    /// `phi_nk(s)`.
    pub fn eval(&self, k: i64, s: f64) -> f64 {
        let x = self.dyadic() * s - k as f64;
        self.amplitude() * unit_father(self.family, x)
    }

    /// The translates in range that may be nonzero at `s`, with their values.
    pub fn row(&self, s: f64) -> BasisRow {
        let x = self.dyadic() * s;
        let top = x.floor() as i64;
        let amp = self.amplitude();
        let mut row = BasisRow::default();
        let first = top - self.family.support_length() + 1;
        for k in first.max(self.k_min)..=top.min(self.k_max) {
            let v = unit_father(self.family, x - k as f64);
            if v != 0.0 {
                row.push(k, amp * v);
            }
        }
        row
    }
}

fn unit_father(family: Family, x: f64) -> f64 {
    match family {
        Family::Haar => {
            if (0.0..1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        Family::Daubechies4 => default_table().value(x),
    }
}

/// Nonzero father values at one point; at most three for the supported families.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BasisRow {
    entries: [(i64, f64); 3],
    len: usize,
}

impl BasisRow {
    fn push(&mut self, k: i64, value: f64) {
        self.entries[self.len] = (k, value);
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.entries[..self.len].iter().copied()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// The 4-tap Daubechies father sampled at `j / 2^level`, `j = 0 ..= 3 * 2^level`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    level: u32,
    values: Vec<f64>,
}

impl ScalingTable {
    /// Cascade algorithm: integer values from the eigenvector of the
    /// refinement matrix, then each finer dyadic level from the coarser one.
    pub fn build(level: u32) -> Result<Self> {
        if level > MAX_TABLE_LEVEL {
            return Err(Error::TableTooLarge {
                level,
                cap: MAX_TABLE_LEVEL,
            });
        }
        let c = daub4_coefficients();
        let unit = 1_usize << level;
        let last = 3 * unit;
        let mut values = vec![0.0; last + 1];

        // phi(1) = c1 phi(1) + c0 phi(2), phi(2) = c3 phi(1) + c2 phi(2);
        // eigenvalue 1 eigenvector scaled so phi(1) + phi(2) = 1.
        let (v1, v2) = (c[0], 1.0 - c[1]);
        values[unit] = v1 / (v1 + v2);
        values[2 * unit] = v2 / (v1 + v2);

        for l in 1..=level {
            let step = 1_usize << (level - l);
            let mut i = step;
            while i < last {
                values[i] = refine(&values, unit, i, &c);
                i += 2 * step;
            }
        }
        Ok(Self { level, values })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dyadic abscissa of table entry `i`.
    pub fn abscissa(&self, i: usize) -> f64 {
        i as f64 / (1_u64 << self.level) as f64
    }

    /// `phi(x)`, linearly interpolated between table points; zero outside `(0, 3)`.
    pub fn value(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 3.0) {
            return 0.0;
        }
        let y = x * (1_u64 << self.level) as f64;
        let i = y.floor() as usize;
        let frac = y - i as f64;
        if frac == 0.0 {
            self.values[i]
        } else {
            self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
        }
    }

    /// Largest `|phi(x) - sum_t c_t phi(2x - t)|` over the table.
    pub fn refinement_residual(&self) -> f64 {
        let c = daub4_coefficients();
        let unit = 1_usize << self.level;
        (0..self.values.len())
            .map(|i| (self.values[i] - refine(&self.values, unit, i, &c)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|sum_k phi(x - k) - 1|` over tabulated `x` in `[0, 1)`.
    pub fn partition_of_unity_defect(&self) -> f64 {
        let unit = 1_usize << self.level;
        (0..unit)
            .map(|i| {
                (self.values[i] + self.values[i + unit] + self.values[i + 2 * unit] - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Riemann sum `sum_j phi(j / 2^m) 2^{-m}`.
    pub fn riemann_integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / (1_u64 << self.level) as f64
    }
}

fn refine(values: &[f64], unit: usize, i: usize, c: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for (t, ct) in c.iter().enumerate() {
        let j = 2 * i as i64 - (t * unit) as i64;
        if j >= 0 && (j as usize) < values.len() {
            acc += ct * values[j as usize];
        }
    }
    acc
}

/// Level-12 table shared by all evaluations.
pub fn default_table() -> &'static ScalingTable {
    static TABLE: OnceLock<ScalingTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        ScalingTable::build(DEFAULT_TABLE_LEVEL).expect("default level is below the cap")
    })
}

/// Uniform grid on an interval with composite-trapezoid quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    interval: Interval,
    points: Vec<f64>,
}

impl Grid {
    pub fn new(interval: Interval, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument(
                "grid needs at least one cell".into(),
            ));
        }
        let h = interval.width() / cells as f64;
        let mut points: Vec<f64> = (0..cells).map(|i| interval.lo() + i as f64 * h).collect();
        points.push(interval.hi());
        Ok(Self { interval, points })
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.interval.width() / self.cells() as f64
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.cells() {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let n = values.len() - 1;
        let interior: f64 = values[1..n].iter().sum();
        self.spacing() * (interior + 0.5 * (values[0] + values[n]))
    }

    /// Linear interpolation of nodal values; zero outside the interval.
    pub fn interpolate(&self, values: &[f64], s: f64) -> f64 {
        if !self.interval.contains(s) {
            return 0.0;
        }
        let y = (s - self.interval.lo()) / self.spacing();
        let i = (y.floor() as usize).min(self.cells() - 1);
        let frac = y - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&s| f(s)).collect()
    }

    /// Basis rows at every node.
    pub fn rows(&self, spec: &BasisSpec) -> Vec<BasisRow> {
        self.points.iter().map(|&s| spec.row(s)).collect()
    }
}

/// Quadrature Gram matrix `G(k, k') = <phi_nk | phi_nk'>` over the translates of `spec`.
pub fn gram_check(spec: &BasisSpec, grid: &Grid) -> DMatrix<f64> {
    let mut gram = DMatrix::zeros(spec.len(), spec.len());
    for (i, row) in grid.rows(spec).iter().enumerate() {
        let w = grid.weight(i);
        for (k, a) in row.iter() {
            let p = (k - spec.k_min) as usize;
            for (l, b) in row.iter() {
                gram[(p, (l - spec.k_min) as usize)] += w * a * b;
            }
        }
    }
    gram
}

/// Quadrature inner products `<phi_nk | f>` for every translate of `spec`.
pub fn inner_products(f: &[f64], spec: &BasisSpec, grid: &Grid) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: f.len(),
        });
    }
    let mut out = vec![0.0; spec.len()];
    for (i, row) in grid.rows(spec).iter().enumerate() {
        let wf = grid.weight(i) * f[i];
        for (k, v) in row.iter() {
            out[(k - spec.k_min) as usize] += wf * v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletApproximation {
    /// Expansion coefficients, aligned with `spec.translates()`.
    pub coefficients: Vec<f64>,
    /// `sum_k c_k phi_nk(s)` at the grid nodes.
    pub values: Vec<f64>,
}

/// Orthogonal projection of `f` onto the span of the fathers restricted to
/// the grid interval.
///
/// Coefficients solve `G c = b` with `b` the quadrature inner products and
/// `G` the quadrature Gram matrix. For fathers inside the interval `G` is the
/// identity up to quadrature error and `c = b`; the edge fathers are cut by
/// the interval and need the correction to keep the map idempotent.
pub fn wavelet_approximation(
    f: &[f64],
    spec: &BasisSpec,
    grid: &Grid,
) -> Result<WaveletApproximation> {
    let b = inner_products(f, spec, grid)?;
    let gram = gram_check(spec, grid);
    // translates that never touch the grid carry no information
    let live: Vec<usize> = (0..spec.len()).filter(|&p| gram[(p, p)] > 0.0).collect();
    let sub = DMatrix::from_fn(live.len(), live.len(), |a, c| gram[(live[a], live[c])]);
    let rhs = DVector::from_iterator(live.len(), live.iter().map(|&p| b[p]));
    let solved = sub
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("basis Gram matrix is singular on this grid".into()))?
        .solve(&rhs);
    let mut coefficients = vec![0.0; spec.len()];
    for (a, &p) in live.iter().enumerate() {
        coefficients[p] = solved[a];
    }
    let values = grid
        .rows(spec)
        .iter()
        .map(|row| {
            row.iter()
                .map(|(k, v)| coefficients[(k - spec.k_min) as usize] * v)
                .sum()
        })
        .collect();
    Ok(WaveletApproximation {
        coefficients,
        values,
    })
}
