//! Finite sample spaces: wave functions, density matrices, Born-rule
//! readout and unitary changes of basis.
//!
//! A sample space `{s_0, ..., s_{d-1}}` is identified with the position
//! basis of `C^d`. A probability distribution `Z` corresponds one-to-one to
//! the diagonal density matrix `diag(Z)` (the ensemble set), and every
//! density matrix can be re-expressed in any orthonormal basis `{psi_j}`
//! without changing the probabilities it assigns to the samples.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for the unit-norm, Hermitian and unit-trace checks.
pub const STATE_TOLERANCE: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semi-definite.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Tolerance on `U* U = I`.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Normalized probability vector over a finite sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probabilities
            .iter()
            .find(|p| !(p.is_finite() && **p >= 0.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} is negative or not finite"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self { probabilities })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        Ok(Self {
            probabilities: vec![1.0 / dim as f64; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// Unit vector of `C^d`; its squared moduli form a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amplitudes: DVector<Complex64>,
}

impl WaveFunction {
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument(
                "wave function has no amplitudes".into(),
            ));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "squared norm is {norm_sqr}, expected 1"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// The canonical wave function of `z`: nonnegative real amplitudes `sqrt(Z(s_j))`.
    pub fn canonical(z: &DiscreteDistribution) -> Self {
        let amplitudes = z
            .probabilities()
            .iter()
            .map(|p| Complex64::new(p.sqrt(), 0.0));
        Self {
            amplitudes: DVector::from_iterator(z.dim(), amplitudes),
        }
    }

    /// A wave function of `z` with arbitrary phases `exp(i theta_j)`.
    pub fn with_phases(z: &DiscreteDistribution, phases: &[f64]) -> Result<Self> {
        if phases.len() != z.dim() {
            return Err(Error::DimensionMismatch {
                expected: z.dim(),
                found: phases.len(),
            });
        }
        let amplitudes = z
            .probabilities()
            .iter()
            .zip(phases)
            .map(|(p, theta)| Complex64::from_polar(p.sqrt(), *theta));
        Ok(Self {
            amplitudes: DVector::from_iterator(z.dim(), amplitudes),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// Squared moduli of the amplitudes.
    pub fn distribution(&self) -> DiscreteDistribution {
        let probabilities: Vec<f64> = self.amplitudes.iter().map(|a| a.norm_sqr()).collect();
        let total: f64 = probabilities.iter().sum();
        DiscreteDistribution {
            probabilities: probabilities.into_iter().map(|p| p / total).collect(),
        }
    }

    /// The pure state `|z><z|`.
    pub fn pure_state(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Hermitian, positive semi-definite, unit-trace matrix `w(s_j, s_l)`.
///
/// The same type holds the coefficients `w(psi_j, psi_l)` of a density
/// operator in a rotated basis, which obey the same invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity. Eigenvalues in
    /// `[-PSD_TOLERANCE, 0)` are clipped to zero and the trace renormalized.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 {
            return Err(Error::InvalidDensity("empty matrix".into()));
        }
        if entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.ncols(),
            });
        }
        if entries
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let asym = hermitian_defect(&entries);
        if asym > STATE_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (defect {asym:.3e})"
            )));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > STATE_TOLERANCE || trace.im.abs() > STATE_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "trace is {trace}, expected 1"
            )));
        }
        let eigen = entries.clone().symmetric_eigen();
        let min = eigen
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -PSD_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {min:.3e} is negative"
            )));
        }
        if min < 0.0 {
            let mut eigenvalues = eigen.eigenvalues.map(|l| l.max(0.0));
            let total = eigenvalues.sum();
            eigenvalues /= total;
            let diag = DMatrix::from_diagonal(&eigenvalues.map(|l| Complex64::new(l, 0.0)));
            let mut rebuilt = &eigen.eigenvectors * diag * eigen.eigenvectors.adjoint();
            symmetrize(&mut rebuilt);
            return Ok(Self { entries: rebuilt });
        }
        Ok(Self { entries })
    }

    /// Real symmetric input, e.g. coefficient matrices of real bases.
    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entry(&self, j: usize, l: usize) -> Complex64 {
        self.entries[(j, l)]
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Largest `|entry(j,l) - conj(entry(l,j))|`.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.entries)
    }

    /// The diagonal as a distribution, i.e. the Born probabilities in the
    /// position basis.
    pub fn diagonal_distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution {
            probabilities: born_probabilities(self),
        }
    }
}

/// Orthonormal basis `{psi_j}` stored column-wise in position coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryBasis {
    columns: DMatrix<Complex64>,
}

impl UnitaryBasis {
    pub fn new(columns: DMatrix<Complex64>) -> Result<Self> {
        let dim = columns.nrows();
        if columns.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: columns.ncols(),
            });
        }
        let gram = columns.adjoint() * &columns;
        let defect = (gram - DMatrix::<Complex64>::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { columns })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            columns: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn columns(&self) -> &DMatrix<Complex64> {
        &self.columns
    }

    /// `<s_k | psi_j>`.
    pub fn overlap(&self, k: usize, j: usize) -> Complex64 {
        self.columns[(k, j)]
    }

    /// The basis whose change of coordinates undoes this one.
    pub fn inverse(&self) -> Self {
        Self {
            columns: self.columns.adjoint(),
        }
    }
}

/// `rho = sum_j Z(s_j) |s_j><s_j|`.
pub fn ensemble_from_distribution(z: &DiscreteDistribution) -> DensityMatrix {
    let diag = DVector::from_iterator(
        z.dim(),
        z.probabilities().iter().map(|p| Complex64::new(*p, 0.0)),
    );
    DensityMatrix {
        entries: DMatrix::from_diagonal(&diag),
    }
}

/// `P(s_j | rho) = tr(rho |s_j><s_j|) = w(s_j, s_j)`.
pub fn born_probability(rho: &DensityMatrix, j: usize) -> Result<f64> {
    if j >= rho.dim() {
        return Err(Error::IndexOutOfRange {
            index: j,
            dim: rho.dim(),
        });
    }
    Ok(rho.entries[(j, j)].re)
}

pub fn born_probabilities(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|j| rho.entries[(j, j)].re).collect()
}

/// Coefficients of `rho` in the basis `u`: `w(psi_j, psi_l) = (U* rho U)_{jl}`.
pub fn change_basis(rho: &DensityMatrix, u: &UnitaryBasis) -> Result<DensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: u.dim(),
        });
    }
    let mut entries = u.columns.adjoint() * &rho.entries * &u.columns;
    symmetrize(&mut entries);
    Ok(DensityMatrix { entries })
}

/// `P(s_j | rho) = sum_{k,l} w(psi_k, psi_l) <s_j|psi_k> <psi_l|s_j>`, read
/// straight off the coefficients without rotating back.
pub fn probability_from_coefficients(w: &DensityMatrix, u: &UnitaryBasis, j: usize) -> Result<f64> {
    let dim = w.dim();
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.dim(),
        });
    }
    if j >= dim {
        return Err(Error::IndexOutOfRange { index: j, dim });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..dim {
        let left = u.columns[(j, k)];
        for l in 0..dim {
            acc += w.entries[(k, l)] * left * u.columns[(j, l)].conj();
        }
    }
    Ok(acc.re)
}

pub fn probabilities_from_coefficients(w: &DensityMatrix, u: &UnitaryBasis) -> Result<Vec<f64>> {
    (0..w.dim())
        .map(|j| probability_from_coefficients(w, u, j))
        .collect()
}

fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for l in j..n {
            worst = worst.max((m[(j, l)] - m[(l, j)].conj()).norm());
        }
    }
    worst
}

fn symmetrize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for l in (j + 1)..n {
            let avg = (m[(j, l)] + m[(l, j)].conj()) * 0.5;
            m[(j, l)] = avg;
            m[(l, j)] = avg.conj();
        }
    }
}

/// Seeded random instances for property checks.
pub mod random {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::{DensityMatrix, DiscreteDistribution, UnitaryBasis};

    fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
        DMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Strictly positive entries drawn uniformly then normalized.
    pub fn distribution<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DiscreteDistribution {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        DiscreteDistribution {
            probabilities: raw.into_iter().map(|p| p / total).collect(),
        }
    }

    /// `G G* / tr(G G*)` for a complex Gaussian `G`.
    pub fn density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
        let g = gaussian_matrix(dim, rng);
        let mut entries = &g * g.adjoint();
        let trace = entries.trace();
        entries /= trace;
        super::symmetrize(&mut entries);
        DensityMatrix { entries }
    }

    /// A member of the ensemble set: diagonal with a random distribution.
    pub fn ensemble<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
        super::ensemble_from_distribution(&distribution(dim, rng))
    }

    /// Q factor of a complex Gaussian matrix.
    pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryBasis {
        let q = gaussian_matrix(dim, rng).qr().q();
        UnitaryBasis { columns: q }
    }
}
