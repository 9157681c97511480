//! Posterior functionals and MAP estimators.
//!
//! Continuous-space formulas are written in density form: the infinite
//! normalization of the position eigenstates cancels from every measurable
//! quantity, so only densities `zeta(s)` and kernels `<s|K|t>` appear.

use nalgebra::DMatrix;

use crate::basis::{BasisSpec, Grid};
use crate::discrete::{self, DensityMatrix, DiscreteDistribution, UnitaryBasis};
use crate::embedding::{EmbeddingOperator, TRACE_FLOOR};
use crate::error::{Error, Result};
use crate::samples::{NoiseKernel, SampleSet};

/// A function sampled on a grid; nonnegative when it represents a density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityCurve {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "density value {v} is negative or not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.sample(f);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trapezoid integral over the grid.
    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    /// Linear interpolation between nodes.
    pub fn at(&self, s: f64) -> f64 {
        self.grid.interpolate(&self.values, s)
    }

    /// Trapezoid L2 distance; both curves must share the grid.
    pub fn l2_distance(&self, other: &DensityCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument(
                "curves live on different grids".into(),
            ));
        }
        let sq: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        Ok(self.grid.trapezoid(&sq).sqrt())
    }
}

/// Log prior density over densities, evaluated in whichever coordinates
/// the posterior is written in. Implementations must agree across
/// representations of the same state.
pub trait LogPrior {
    fn curve(&self, zeta: &DensityCurve) -> f64;
    fn distribution(&self, z: &DiscreteDistribution) -> f64;
    fn coefficients(&self, w: &DensityMatrix) -> f64;
}

/// Constant prior.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Homogeneous;

impl LogPrior for Homogeneous {
    fn curve(&self, _: &DensityCurve) -> f64 {
        0.0
    }

    fn distribution(&self, _: &DiscreteDistribution) -> f64 {
        0.0
    }

    fn coefficients(&self, _: &DensityMatrix) -> f64 {
        0.0
    }
}

/// `-strength * ||rho||^2`: Frobenius norm of the coefficient matrix, which
/// is basis independent and equals `sum Z^2` on ensemble states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPenalty {
    pub strength: f64,
}

impl LogPrior for QuadraticPenalty {
    fn curve(&self, zeta: &DensityCurve) -> f64 {
        let sq: Vec<f64> = zeta.values().iter().map(|z| z * z).collect();
        -self.strength * zeta.grid().trapezoid(&sq)
    }

    fn distribution(&self, z: &DiscreteDistribution) -> f64 {
        -self.strength * z.probabilities().iter().map(|p| p * p).sum::<f64>()
    }

    fn coefficients(&self, w: &DensityMatrix) -> f64 {
        -self.strength * w.entries().iter().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

/// Row-stochastic `P(observed | true)`: row = true sample, column = observed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    rows: DMatrix<f64>,
}

impl NoiseMatrix {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        if !rows.is_square() {
            return Err(Error::DimensionMismatch {
                expected: rows.nrows(),
                found: rows.ncols(),
            });
        }
        if rows.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::NotStochastic("negative or non-finite entry".into()));
        }
        for (r, row) in rows.row_iter().enumerate() {
            let total = row.sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::NotStochastic(format!("row {r} sums to {total}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            rows: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    pub fn probability(&self, observed: usize, truth: usize) -> f64 {
        self.rows[(truth, observed)]
    }

    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut rows = DMatrix::from_fn(dim, dim, |_, _| rng.random::<f64>() + 1e-3);
        for mut row in rows.row_iter_mut() {
            let total = row.sum();
            row /= total;
        }
        Self { rows }
    }
}

fn log_likelihood_discrete(
    probabilities: &[f64],
    samples: &[usize],
    noise: &NoiseMatrix,
) -> Result<f64> {
    let dim = probabilities.len();
    if noise.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: noise.dim(),
        });
    }
    let mut total = 0.0;
    for &observed in samples {
        if observed >= dim {
            return Err(Error::IndexOutOfRange {
                index: observed,
                dim,
            });
        }
        let lik: f64 = (0..dim)
            .map(|truth| noise.probability(observed, truth) * probabilities[truth])
            .sum();
        if lik <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += lik.ln();
    }
    Ok(total)
}

/// Unnormalized log posterior of a distribution on a finite sample space:
/// `log P(Z) + sum_i log sum_s P(S_i|s) Z(s)`.
pub fn log_posterior_discrete(
    prior: &dyn LogPrior,
    z: &DiscreteDistribution,
    samples: &[usize],
    noise: &NoiseMatrix,
) -> Result<f64> {
    let lik = log_likelihood_discrete(z.probabilities(), samples, noise)?;
    Ok(prior.distribution(z) + lik)
}

/// The same posterior written in the coefficients `w(psi_j, psi_l)` of a
/// rotated basis; the sample probabilities are read through the basis overlaps.
pub fn log_posterior_coefficients(
    prior: &dyn LogPrior,
    w: &DensityMatrix,
    u: &UnitaryBasis,
    samples: &[usize],
    noise: &NoiseMatrix,
) -> Result<f64> {
    let probabilities = discrete::probabilities_from_coefficients(w, u)?;
    let lik = log_likelihood_discrete(&probabilities, samples, noise)?;
    Ok(prior.coefficients(w) + lik)
}

fn log_likelihood_curve(values: &[f64], grid: &Grid, samples: &SampleSet) -> f64 {
    let mut total = 0.0;
    for &observed in samples.points() {
        let lik = match samples.noise() {
            NoiseKernel::None => grid.interpolate(values, observed),
            noise => {
                let integrand: Vec<f64> = grid
                    .points()
                    .iter()
                    .zip(values)
                    .map(|(&s, z)| noise.density(observed, s) * z)
                    .collect();
                grid.trapezoid(&integrand)
            }
        };
        if lik <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += lik.ln();
    }
    total
}

/// `log P(zeta) + sum_i log integral P(S_i|s) zeta(s) ds`, dropping the
/// evidence. Without noise the integral is `zeta(S_i)`, interpolated on the
/// grid. A zero likelihood yields `-inf`.
pub fn log_posterior_position(
    prior: &dyn LogPrior,
    zeta: &DensityCurve,
    samples: &SampleSet,
) -> f64 {
    prior.curve(zeta) + log_likelihood_curve(zeta.values(), zeta.grid(), samples)
}

/// Posterior functional for embedded learning: the likelihood is taken under
/// the embedded density `p(A|s> | rho_A)` of `zeta`, and the prior is
/// evaluated on that embedded density.
pub fn log_posterior_embedded(
    prior: &dyn LogPrior,
    a: &EmbeddingOperator,
    zeta: &DensityCurve,
    samples: &SampleSet,
) -> Result<f64> {
    let embedded = embedded_density_exact(a, zeta)?;
    Ok(log_posterior_position(prior, &embedded, samples))
}

/// Empirical coefficient matrix of the MAP state.
#[derive(Debug, Clone, PartialEq)]
pub struct MapCoefficients {
    basis: BasisSpec,
    indices: Vec<i64>,
    matrix: DMatrix<f64>,
}

impl MapCoefficients {
    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    /// Translates indexing rows and columns.
    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, k: i64, l: i64) -> Option<f64> {
        let a = self.indices.iter().position(|&j| j == k)?;
        let b = self.indices.iter().position(|&j| j == l)?;
        Some(self.matrix[(a, b)])
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigen().eigenvalues.min()
    }
}

/// `w(psi_j, psi_l) = (1/N) sum_i psi_j(S_i) psi_l(S_i)` over every translate
/// of `basis`; the posterior mode for a homogeneous prior and noise-free samples.
pub fn map_coefficients(samples: &SampleSet, basis: &BasisSpec) -> Result<MapCoefficients> {
    map_coefficients_on(samples, basis, basis.translates().collect())
}

/// As [`map_coefficients`], restricted to the translates in `indices`.
pub fn map_coefficients_on(
    samples: &SampleSet,
    basis: &BasisSpec,
    indices: Vec<i64>,
) -> Result<MapCoefficients> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !samples.noise().is_none() {
        return Err(Error::NoisySamples);
    }
    if let Some(k) = indices.iter().find(|k| !basis.contains_translate(**k)) {
        return Err(Error::InvalidArgument(format!(
            "translate {k} outside the basis range"
        )));
    }
    let dim = indices.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut psi = vec![0.0; dim];
    for &s in samples.points() {
        for (slot, &k) in psi.iter_mut().zip(&indices) {
            *slot = basis.eval(k, s);
        }
        for a in 0..dim {
            if psi[a] == 0.0 {
                continue;
            }
            for b in 0..dim {
                matrix[(a, b)] += psi[a] * psi[b];
            }
        }
    }
    matrix /= samples.len() as f64;
    Ok(MapCoefficients {
        basis: *basis,
        indices,
        matrix,
    })
}

/// `p(A|s> | rho_A) = (1/T) integral zeta(s') <s|K|s'>^2 ds'` with
/// `T = tr(A rho A*)`.
///
/// The squared kernel factorizes through the eigenbasis of `K`, so the
/// quadrature over `s'` collapses to the moments
/// `M_jk = alpha_j^2 alpha_k^2 integral zeta psi_j psi_k`, leaving a
/// quadratic form per output node.
pub fn embedded_density_exact(a: &EmbeddingOperator, zeta: &DensityCurve) -> Result<DensityCurve> {
    let trace = a.trace_k_rho(zeta)?;
    let grid = zeta.grid();
    let basis = a.basis();
    let (k_min, _) = basis.translate_range();
    let rows = grid.rows(basis);
    let dim = basis.len();
    let mut moments = DMatrix::<f64>::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        let wz = grid.weight(i) * zeta.values()[i];
        if wz == 0.0 {
            continue;
        }
        for (k, vk) in row.iter() {
            for (l, vl) in row.iter() {
                moments[((k - k_min) as usize, (l - k_min) as usize)] += wz * vk * vl;
            }
        }
    }
    for p in 0..dim {
        for q in 0..dim {
            let k = k_min + p as i64;
            let l = k_min + q as i64;
            moments[(p, q)] *= a.eigenvalue(k) * a.eigenvalue(l);
        }
    }
    let values = rows
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            for (k, vk) in row.iter() {
                for (l, vl) in row.iter() {
                    acc += vk * vl * moments[((k - k_min) as usize, (l - k_min) as usize)];
                }
            }
            (acc / trace).max(0.0)
        })
        .collect();
    DensityCurve::new(grid.clone(), values)
}

/// `p(A|s> | rho~_A) = (1 / (N T)) sum_i <S_i|K|s>^2` with `T` the mean of
/// `<S_i|K|S_i>`. Evaluated through the kernel alone; samples are never
/// projected onto the basis.
pub fn embedded_density_map(
    a: &EmbeddingOperator,
    samples: &SampleSet,
    grid: &Grid,
) -> Result<DensityCurve> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !samples.noise().is_none() {
        return Err(Error::NoisySamples);
    }
    let trace = a.trace_k_map(samples)?;
    if trace <= TRACE_FLOOR {
        return Err(Error::KernelOfOperator(trace));
    }
    let basis = a.basis();
    let grid_rows = grid.rows(basis);
    let lo = grid.interval().lo();
    let h = grid.spacing();
    let last = grid.cells();
    let mut acc = vec![0.0; grid.len()];
    for &sample in samples.points() {
        let row = basis.row(sample);
        if row.is_empty() {
            continue;
        }
        // <S_i|K|.> vanishes outside the union of the supports active at S_i
        let (start, end) = row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (k, _)| {
                let (sa, sb) = basis.support(k);
                (a.min(sa), b.max(sb))
            });
        let first = (((start - lo) / h).floor().max(0.0) as usize).min(last);
        let stop = (((end - lo) / h).ceil().max(0.0) as usize).min(last);
        for j in first..=stop {
            let kv = a.kernel_rows(&row, &grid_rows[j]);
            acc[j] += kv * kv;
        }
    }
    let norm = samples.len() as f64 * trace;
    DensityCurve::new(grid.clone(), acc.into_iter().map(|v| v / norm).collect())
}

/// `curve(s) / <s|K|s>` renormalized to unit mass. Nodes where the kernel
/// diagonal is at most `1e-8` times its maximum are set to zero.
pub fn normalized_ratio(curve: &DensityCurve, a: &EmbeddingOperator) -> Result<DensityCurve> {
    let grid = curve.grid();
    let diag: Vec<f64> = grid.points().iter().map(|&s| a.kernel_diag(s)).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::RatioUndefined);
    }
    let eps = 1e-8 * max;
    let ratio: Vec<f64> = curve
        .values()
        .iter()
        .zip(&diag)
        .map(|(v, d)| if *d > eps { v / d } else { 0.0 })
        .collect();
    let mass = grid.trapezoid(&ratio);
    if mass <= 0.0 {
        return Err(Error::RatioUndefined);
    }
    DensityCurve::new(grid.clone(), ratio.into_iter().map(|v| v / mass).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Family, Interval};
    use crate::discrete::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn interval() -> Interval {
        Interval::new(0.0, 3.0).unwrap()
    }

    fn fine_grid() -> Grid {
        Grid::new(interval(), 3 * (1 << 14)).unwrap()
    }

    fn daub2() -> EmbeddingOperator {
        let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval()).unwrap();
        EmbeddingOperator::interior_projection(basis, &interval()).unwrap()
    }

    fn haar(n: u32) -> EmbeddingOperator {
        let basis = BasisSpec::covering(Family::Haar, n, &interval()).unwrap();
        EmbeddingOperator::full_projection(basis).unwrap()
    }

    fn smooth_zeta(grid: Grid) -> DensityCurve {
        // 30 x (1 - x)^4 / 3 with x = s / 3
        DensityCurve::from_fn(grid, |s| {
            let x = s / 3.0;
            10.0 * x * (1.0 - x).powi(4)
        })
        .unwrap()
    }

    #[test]
    fn uniform_density_posterior() {
        let grid = Grid::new(interval(), 600).unwrap();
        let zeta = DensityCurve::new(grid.clone(), vec![1.0 / 3.0; grid.len()]).unwrap();
        let samples = SampleSet::new(vec![0.2, 1.7, 2.9, 3.0], interval()).unwrap();
        let lp = log_posterior_position(&Homogeneous, &zeta, &samples);
        assert!((lp - 4.0 * (1.0_f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn spike_density_with_gaussian_noise() {
        let grid = Grid::new(interval(), 300).unwrap();
        let c_index = 120;
        let c = grid.points()[c_index];
        let mut values = vec![0.0; grid.len()];
        values[c_index] = 1.0 / grid.spacing();
        let zeta = DensityCurve::new(grid, values).unwrap();
        let noise = NoiseKernel::gaussian(0.3, interval()).unwrap();
        let samples = SampleSet::new(vec![0.9, 1.3, 2.0], interval())
            .unwrap()
            .with_noise(noise);
        let expected: f64 = samples
            .points()
            .iter()
            .map(|&s| noise.density(s, c).ln())
            .sum();
        let lp = log_posterior_position(&Homogeneous, &zeta, &samples);
        assert!((lp - expected).abs() < 1e-12, "{lp} vs {expected}");
    }

    #[test]
    fn posterior_is_stable_under_grid_refinement() {
        let noise = NoiseKernel::gaussian(0.25, interval()).unwrap();
        let samples = SampleSet::new(vec![0.4, 0.8, 1.1, 2.2], interval()).unwrap();
        for set in [samples.clone(), samples.with_noise(noise)] {
            let coarse = log_posterior_position(
                &Homogeneous,
                &smooth_zeta(Grid::new(interval(), 2048).unwrap()),
                &set,
            );
            let fine = log_posterior_position(
                &Homogeneous,
                &smooth_zeta(Grid::new(interval(), 4096).unwrap()),
                &set,
            );
            assert!((coarse - fine).abs() < 1e-4, "{coarse} vs {fine}");
        }
    }

    #[test]
    fn zero_likelihood_is_negative_infinity() {
        let grid = Grid::new(interval(), 300).unwrap();
        let zeta = DensityCurve::from_fn(grid, |s| if s < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let samples = SampleSet::new(vec![0.5, 2.5], interval()).unwrap();
        assert_eq!(
            log_posterior_position(&Homogeneous, &zeta, &samples),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn identity_basis_reduces_to_position_form() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let z = random::distribution(6, &mut rng);
        let rho = discrete::ensemble_from_distribution(&z);
        let noise = NoiseMatrix::random(6, &mut rng);
        let samples = [0, 3, 3, 5, 1];
        let prior = QuadraticPenalty { strength: 0.7 };
        let a = log_posterior_discrete(&prior, &z, &samples, &noise).unwrap();
        let b =
            log_posterior_coefficients(&prior, &rho, &UnitaryBasis::identity(6), &samples, &noise)
                .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_free_coefficient_posterior() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let rho = random::ensemble(4, &mut rng);
        let u = random::unitary(4, &mut rng);
        let w = discrete::change_basis(&rho, &u).unwrap();
        let samples = [2, 0, 2];
        let lp =
            log_posterior_coefficients(&Homogeneous, &w, &u, &samples, &NoiseMatrix::identity(4))
                .unwrap();
        let expected: f64 = samples
            .iter()
            .map(|&j| {
                discrete::probability_from_coefficients(&w, &u, j)
                    .unwrap()
                    .ln()
            })
            .sum();
        assert!((lp - expected).abs() < 1e-14);
    }

    #[test]
    fn coefficient_posterior_errors() {
        let rho = discrete::ensemble_from_distribution(&DiscreteDistribution::uniform(3).unwrap());
        let u = UnitaryBasis::identity(3);
        let bad = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.2, 0.2, 0.2, 0.0, 0.0, 1.0]);
        assert!(matches!(
            NoiseMatrix::new(bad),
            Err(Error::NotStochastic(_))
        ));
        let noise = NoiseMatrix::identity(2);
        assert!(matches!(
            log_posterior_coefficients(&Homogeneous, &rho, &u, &[0], &noise),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn map_coefficients_single_sample_is_rank_one() {
        let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval()).unwrap();
        let s0 = 1.234;
        let set = SampleSet::new(vec![s0], interval()).unwrap();
        let map = map_coefficients(&set, &basis).unwrap();
        for k in basis.translates() {
            for l in basis.translates() {
                assert_eq!(
                    map.entry(k, l).unwrap(),
                    basis.eval(k, s0) * basis.eval(l, s0)
                );
            }
        }
        assert_eq!(map.matrix().rank(1e-12), 1);
    }

    #[test]
    fn map_coefficients_invariants() {
        let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval()).unwrap();
        let set = SampleSet::new(vec![0.3, 0.31, 1.0, 1.9, 2.7, 2.95], interval()).unwrap();
        let map = map_coefficients(&set, &basis).unwrap();
        assert!((map.matrix() - map.matrix().transpose()).amax() <= 1e-12);
        assert!(map.min_eigenvalue() >= -1e-10);
        let diag_sum: f64 = set
            .points()
            .iter()
            .map(|&s| {
                basis
                    .translates()
                    .map(|k| basis.eval(k, s).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / set.len() as f64;
        assert!((map.trace() - diag_sum).abs() < 1e-10);
        let full = EmbeddingOperator::full_projection(basis).unwrap();
        assert!((map.trace() - full.trace_k_map(&set).unwrap()).abs() < 1e-10);

        let doubled = map_coefficients(&set.doubled(), &basis).unwrap();
        assert!((doubled.matrix() - map.matrix()).amax() < 1e-14);
    }

    #[test]
    fn map_coefficients_reject_noisy_and_empty_sets() {
        let basis = BasisSpec::covering(Family::Haar, 2, &interval()).unwrap();
        let noisy = SampleSet::new(vec![1.0], interval())
            .unwrap()
            .with_noise(NoiseKernel::gaussian(0.1, interval()).unwrap());
        assert!(matches!(
            map_coefficients(&noisy, &basis),
            Err(Error::NoisySamples)
        ));
        let empty = SampleSet::new(vec![], interval()).unwrap();
        assert!(matches!(
            map_coefficients(&empty, &basis),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn exact_density_matches_direct_double_quadrature() {
        let grid = Grid::new(interval(), 300).unwrap();
        let zeta = smooth_zeta(grid.clone());
        let zeta = DensityCurve::new(
            grid.clone(),
            zeta.values().iter().map(|v| v / zeta.mass()).collect(),
        )
        .unwrap();
        let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval()).unwrap();
        let a = EmbeddingOperator::new(basis, vec![0, 2, 3, 4, 7], vec![1.0, 0.5, 2.0, 1.0, 0.3])
            .unwrap();
        let fast = embedded_density_exact(&a, &zeta).unwrap();
        let trace = a.trace_k_rho(&zeta).unwrap();
        for (i, &s) in grid.points().iter().enumerate() {
            let integrand: Vec<f64> = grid
                .points()
                .iter()
                .zip(zeta.values())
                .map(|(&t, z)| z * a.kernel_eval(s, t).powi(2))
                .collect();
            let direct = grid.trapezoid(&integrand) / trace;
            assert!((fast.values()[i] - direct).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn haar_exact_density_is_bin_smoothing() {
        let grid = Grid::new(interval(), 3 * 1024).unwrap();
        let zeta = smooth_zeta(grid.clone());
        for n in [1, 2] {
            let a = haar(n);
            let out = embedded_density_exact(&a, &zeta).unwrap();
            let trace = a.trace_k_rho(&zeta).unwrap();
            let width = 1.0 / (1 << n) as f64;
            for (i, &s) in grid.points().iter().enumerate().take(grid.cells()) {
                let bin = (s / width).floor();
                let in_bin: Vec<f64> = grid
                    .points()
                    .iter()
                    .zip(zeta.values())
                    .map(|(&t, z)| if (t / width).floor() == bin { *z } else { 0.0 })
                    .collect();
                let bin_mass = grid.trapezoid(&in_bin);
                let dyadic = (1 << n) as f64;
                let expected = dyadic * dyadic * bin_mass / trace;
                assert!((out.values()[i] - expected).abs() < 1e-12, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn concentrated_zeta_fills_one_haar_bin() {
        let grid = Grid::new(interval(), 3 * 1024).unwrap();
        let zeta = DensityCurve::from_fn(
            grid.clone(),
            |s| if s > 1.05 && s < 1.2 { 1.0 } else { 0.0 },
        )
        .unwrap();
        let zeta = DensityCurve::new(
            grid.clone(),
            zeta.values().iter().map(|v| v / zeta.mass()).collect(),
        )
        .unwrap();
        let out = embedded_density_exact(&haar(2), &zeta).unwrap();
        for (&s, v) in grid.points().iter().zip(out.values()) {
            let expected = if (1.0..1.25).contains(&s) { 4.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "s={s}: {v}");
        }
    }

    #[test]
    fn projections_give_unit_mass() {
        let grid = fine_grid();
        let zeta = smooth_zeta(grid.clone());
        let a = daub2();
        let exact = embedded_density_exact(&a, &zeta).unwrap();
        assert!((exact.mass() - 1.0).abs() < 1e-5, "{}", exact.mass());
        let set = SampleSet::new(vec![0.2, 0.5, 0.9, 1.4, 2.6], interval()).unwrap();
        let map = embedded_density_map(&a, &set, &grid).unwrap();
        assert!((map.mass() - 1.0).abs() < 1e-5, "{}", map.mass());
    }

    #[test]
    fn haar_map_is_a_histogram() {
        let set = SampleSet::new(vec![0.1, 0.2, 0.26, 1.0, 1.24, 2.5, 2.99], interval()).unwrap();
        let grid = Grid::new(interval(), 1000).unwrap();
        for n in 0..=3 {
            let out = embedded_density_map(&haar(n), &set, &grid).unwrap();
            let dyadic = (1 << n) as f64;
            for (&s, v) in grid.points().iter().zip(out.values()) {
                let bin = (s * dyadic).floor();
                let count = set
                    .points()
                    .iter()
                    .filter(|&&x| (x * dyadic).floor() == bin)
                    .count();
                let expected = if s < 3.0 {
                    dyadic * count as f64 / set.len() as f64
                } else {
                    0.0
                };
                assert!(
                    (v - expected).abs() < 1e-12,
                    "n={n} s={s}: {v} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn single_sample_map_is_normalized_squared_kernel() {
        let grid = fine_grid();
        let a = daub2();
        let s0 = 1.3;
        let set = SampleSet::new(vec![s0], interval()).unwrap();
        let out = embedded_density_map(&a, &set, &grid).unwrap();
        let diag = a.kernel_diag(s0);
        for (&s, v) in grid.points().iter().zip(out.values()).step_by(97) {
            assert!((v - a.kernel_eval(s0, s).powi(2) / diag).abs() < 1e-12);
        }
        assert!((out.mass() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn kernel_trick_matches_coefficient_route() {
        let grid = Grid::new(interval(), 3000).unwrap();
        let a = daub2();
        let set = SampleSet::new(vec![0.3, 0.7, 1.2, 1.25, 2.2, 2.8], interval()).unwrap();
        let via_kernel = embedded_density_map(&a, &set, &grid).unwrap();
        let map = map_coefficients_on(&set, a.basis(), a.active_set().to_vec()).unwrap();
        let trace = map.trace();
        for (i, &s) in grid.points().iter().enumerate() {
            let psi: Vec<f64> = map
                .indices()
                .iter()
                .map(|&k| a.basis().eval(k, s))
                .collect();
            let quad = (map.matrix() * nalgebra::DVector::from_vec(psi.clone()))
                .dot(&nalgebra::DVector::from_vec(psi));
            assert!(
                (via_kernel.values()[i] - quad / trace).abs() < 1e-12,
                "s={s}"
            );
        }
    }

    #[test]
    fn map_errors() {
        let grid = Grid::new(interval(), 100).unwrap();
        let empty = SampleSet::new(vec![], interval()).unwrap();
        assert!(matches!(
            embedded_density_map(&daub2(), &empty, &grid),
            Err(Error::EmptySamples)
        ));
        let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval()).unwrap();
        let a = EmbeddingOperator::projection(basis, vec![0]).unwrap();
        let far = SampleSet::new(vec![2.5], interval()).unwrap();
        assert!(matches!(
            embedded_density_map(&a, &far, &grid),
            Err(Error::KernelOfOperator(_))
        ));
    }

    #[test]
    fn ratio_examples() {
        let grid = fine_grid();
        // Haar diagonal is constant: a unit-mass input comes back unchanged
        let zeta = smooth_zeta(grid.clone());
        let a = haar(2);
        let out = normalized_ratio(&zeta, &a).unwrap();
        let mass = zeta.mass();
        for (x, y) in zeta.values().iter().zip(out.values()).take(grid.cells()) {
            assert!((x / mass - y).abs() < 1e-9);
        }

        let d = daub2();
        let diag = DensityCurve::from_fn(grid.clone(), |s| d.kernel_diag(s)).unwrap();
        let out = normalized_ratio(&diag, &d).unwrap();
        let eps = 1e-8 * diag.values().iter().copied().fold(0.0, f64::max);
        let kept: Vec<f64> = out
            .values()
            .iter()
            .zip(diag.values())
            .filter(|(_, d)| **d > eps)
            .map(|(v, _)| *v)
            .collect();
        let first = kept[0];
        assert!(kept.iter().all(|v| (v - first).abs() < 1e-12));

        let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval()).unwrap();
        let far = EmbeddingOperator::projection(basis, vec![-2]).unwrap();
        let grid = Grid::new(Interval::new(1.0, 3.0).unwrap(), 100).unwrap();
        let flat = DensityCurve::new(grid.clone(), vec![0.5; grid.len()]).unwrap();
        assert!(matches!(
            normalized_ratio(&flat, &far),
            Err(Error::RatioUndefined)
        ));
    }

    #[test]
    fn embedded_posterior_prefers_nearby_samples() {
        let grid = fine_grid();
        let zeta = smooth_zeta(grid.clone());
        let a = daub2();
        let near = SampleSet::new(vec![0.6, 0.8, 1.0], interval()).unwrap();
        let far = SampleSet::new(vec![2.4, 2.5, 2.6], interval()).unwrap();
        let lp_near = log_posterior_embedded(&Homogeneous, &a, &zeta, &near).unwrap();
        let lp_far = log_posterior_embedded(&Homogeneous, &a, &zeta, &far).unwrap();
        assert!(lp_near > lp_far);
        let embedded = embedded_density_exact(&a, &zeta).unwrap();
        assert_eq!(
            lp_near,
            log_posterior_position(&Homogeneous, &embedded, &near)
        );
    }
}
