//! Self-checks run by `densop oracle`. Each check measures one residual and
//! compares it to a fixed tolerance.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basis::{
    default_table, gram_check, wavelet_approximation, BasisSpec, Family, Grid, Interval,
};
use crate::discrete::{self, random};
use crate::embedding::EmbeddingOperator;
use crate::error::{Error, Result};
use crate::learn::{
    embedded_density_exact, embedded_density_map, log_posterior_coefficients,
    log_posterior_discrete, map_coefficients_on, Homogeneous, LogPrior, NoiseMatrix,
    QuadraticPenalty,
};
use crate::samples::SampleSet;
use crate::target::BetaTarget;

const SEED: u64 = 0x5eed;
const FINE_CELLS: usize = 3 * (1 << 14);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Discrete,
    Basis,
    Embedding,
    Learn,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Suite::Discrete),
            "basis" => Ok(Suite::Basis),
            "embedding" => Ok(Suite::Embedding),
            "learn" => Ok(Suite::Learn),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite '{other}' (expected discrete, basis, embedding, learn or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} residual={:.3e} tolerance={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.residual,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for check in &self.checks {
            writeln!(f, "{check}")?;
        }
        write!(
            f,
            "{} checks, {} failed",
            self.checks.len(),
            self.failures()
        )
    }
}

type SuiteFn = fn(&mut Vec<Check>) -> Result<()>;

pub fn run(suite: Suite) -> Result<Report> {
    let mut report = Report::default();
    let suites: &[SuiteFn] = match suite {
        Suite::Discrete => &[discrete_suite],
        Suite::Basis => &[basis_suite],
        Suite::Embedding => &[embedding_suite],
        Suite::Learn => &[learn_suite],
        Suite::All => &[discrete_suite, basis_suite, embedding_suite, learn_suite],
    };
    for run in suites {
        run(&mut report.checks)?;
    }
    Ok(report)
}

fn interval() -> Interval {
    Interval::new(0.0, 3.0).expect("static interval")
}

fn daub2() -> Result<EmbeddingOperator> {
    let basis = BasisSpec::covering(Family::Daubechies4, 2, &interval())?;
    EmbeddingOperator::interior_projection(basis, &interval())
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |m, v| {
        if v.is_nan() {
            f64::INFINITY
        } else {
            m.max(v.abs())
        }
    })
}

fn discrete_suite(checks: &mut Vec<Check>) -> Result<()> {
    let check = |name, residual, tolerance| Check {
        suite: "discrete",
        name,
        residual,
        tolerance,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let (mut born, mut sum, mut round_trip, mut spectrum, mut ensemble) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        let rho = random::density(d, &mut rng);
        let u = random::unitary(d, &mut rng);
        let w = discrete::change_basis(&rho, &u)?;
        let direct = discrete::born_probabilities(&rho);
        let via = discrete::probabilities_from_coefficients(&w, &u)?;
        born = born.max(max_abs(direct.iter().zip(&via).map(|(a, b)| a - b)));
        sum = sum.max((direct.iter().sum::<f64>() - 1.0).abs());
        let back = discrete::change_basis(&w, &u.inverse())?;
        round_trip = round_trip.max(max_abs(
            (back.entries() - rho.entries()).iter().map(|c| c.norm()),
        ));
        spectrum = spectrum.max(max_abs(
            rho.spectrum().iter().zip(w.spectrum()).map(|(a, b)| a - b),
        ));
        let z = random::distribution(d, &mut rng);
        let diag = discrete::born_probabilities(&discrete::ensemble_from_distribution(&z));
        ensemble = ensemble.max(max_abs(
            diag.iter().zip(z.probabilities()).map(|(a, b)| a - b),
        ));
    }
    checks.push(check("born_coefficient_invariance", born, 1e-10));
    checks.push(check("born_sums_to_one", sum, 1e-12));
    checks.push(check("change_basis_round_trip", round_trip, 1e-10));
    checks.push(check("spectrum_preserved", spectrum, 1e-10));
    checks.push(check("ensemble_round_trip", ensemble, 0.0));
    Ok(())
}

fn basis_suite(checks: &mut Vec<Check>) -> Result<()> {
    let check = |name, residual, tolerance| Check {
        suite: "basis",
        name,
        residual,
        tolerance,
    };
    let table = default_table();
    checks.push(check(
        "refinement_residual",
        table.refinement_residual(),
        1e-10,
    ));
    checks.push(check(
        "partition_of_unity",
        table.partition_of_unity_defect(),
        1e-8,
    ));
    checks.push(check(
        "unit_integral",
        (table.riemann_integral() - 1.0).abs(),
        1e-4,
    ));

    let grid = Grid::new(interval(), FINE_CELLS)?;
    let spec = BasisSpec::covering(Family::Daubechies4, 2, &interval())?;
    let interior = spec.interior_translates(&interval());
    let inner = BasisSpec::new(
        Family::Daubechies4,
        2,
        interior[0],
        interior[interior.len() - 1],
    )?;
    let gram = gram_check(&inner, &grid);
    let identity = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    checks.push(check(
        "interior_gram",
        max_abs((gram - identity).iter().copied()),
        1e-6,
    ));

    let target = BetaTarget::new(2.0, 5.0, interval())?;
    let f = grid.sample(|s| target.density(s));
    let once = wavelet_approximation(&f, &spec, &grid)?;
    let twice = wavelet_approximation(&once.values, &spec, &grid)?;
    checks.push(check(
        "approximation_idempotent",
        max_abs(
            once.coefficients
                .iter()
                .zip(&twice.coefficients)
                .map(|(a, b)| a - b),
        ),
        1e-8,
    ));
    Ok(())
}

fn embedding_suite(checks: &mut Vec<Check>) -> Result<()> {
    let check = |name, residual, tolerance| Check {
        suite: "embedding",
        name,
        residual,
        tolerance,
    };
    let a = daub2()?;
    let points: Vec<f64> = (0..40).map(|i| 0.013 + i as f64 * 0.0747).collect();
    let gram = DMatrix::from_fn(points.len(), points.len(), |i, j| {
        a.kernel_eval(points[i], points[j])
    });
    checks.push(check(
        "kernel_symmetric",
        max_abs((&gram - gram.transpose()).iter().copied()),
        0.0,
    ));
    let min = gram.symmetric_eigen().eigenvalues.min();
    checks.push(check("kernel_psd", (-min).max(0.0), 1e-8));

    let grid = Grid::new(interval(), FINE_CELLS)?;
    let mut reproducing = 0.0_f64;
    for (s, t) in [(0.7, 1.1), (1.5, 1.5), (2.2, 2.4), (0.3, 0.6)] {
        let f: Vec<f64> = grid
            .points()
            .iter()
            .map(|&u| a.kernel_eval(s, u) * a.kernel_eval(u, t))
            .collect();
        reproducing = reproducing.max((grid.trapezoid(&f) - a.kernel_eval(s, t)).abs());
    }
    checks.push(check("reproducing_property", reproducing, 1e-5));

    let haar =
        EmbeddingOperator::full_projection(BasisSpec::covering(Family::Haar, 2, &interval())?)?;
    let flat = max_abs((0..3000).map(|i| haar.kernel_diag(i as f64 * 1e-3) - 4.0));
    checks.push(check("haar_diagonal_constant", flat, 0.0));

    let samples = BetaTarget::new(2.0, 5.0, interval())?.sample(200, SEED)?;
    let coefficients = map_coefficients_on(&samples, a.basis(), a.active_set().to_vec())?;
    checks.push(check(
        "diagonal_sum_identity",
        (coefficients.trace() - a.trace_k_map(&samples)?).abs(),
        1e-12,
    ));
    Ok(())
}

fn learn_suite(checks: &mut Vec<Check>) -> Result<()> {
    let check = |name, residual, tolerance| Check {
        suite: "learn",
        name,
        residual,
        tolerance,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let priors: [&dyn LogPrior; 2] = [&Homogeneous, &QuadraticPenalty { strength: 0.5 }];
    let mut invariance = 0.0_f64;
    for i in 0..500 {
        let d = rng.random_range(1..=8);
        let z = random::distribution(d, &mut rng);
        let rho = discrete::ensemble_from_distribution(&z);
        let u = random::unitary(d, &mut rng);
        let w = discrete::change_basis(&rho, &u)?;
        let noise = NoiseMatrix::random(d, &mut rng);
        let n = rng.random_range(1..=20);
        let samples: Vec<usize> = (0..n).map(|_| rng.random_range(0..d)).collect();
        let prior = priors[i % 2];
        let position = log_posterior_discrete(prior, &z, &samples, &noise)?;
        let rotated = log_posterior_coefficients(prior, &w, &u, &samples, &noise)?;
        invariance = invariance.max(max_abs([position - rotated]));
    }
    checks.push(check("coordinate_invariance", invariance, 1e-8));

    let grid = Grid::new(interval(), 3 * 400)?;
    let mut histogram = 0.0_f64;
    let points: Vec<f64> = (0..97).map(|_| rng.random_range(0.0..3.0)).collect();
    let set = SampleSet::new(points, interval())?;
    for n in 0..=3u32 {
        let haar =
            EmbeddingOperator::full_projection(BasisSpec::covering(Family::Haar, n, &interval())?)?;
        let out = embedded_density_map(&haar, &set, &grid)?;
        let width = (1u32 << n) as f64;
        for (&s, v) in grid.points().iter().zip(out.values()) {
            let bin = (s * width).floor();
            let count = set
                .points()
                .iter()
                .filter(|&&x| (x * width).floor() == bin)
                .count();
            let expected = if s < 3.0 {
                width * count as f64 / set.len() as f64
            } else {
                0.0
            };
            histogram = histogram.max((v - expected).abs());
        }
    }
    checks.push(check("haar_histogram", histogram, 1e-12));

    let a = daub2()?;
    let fine = Grid::new(interval(), FINE_CELLS)?;
    let target = BetaTarget::new(2.0, 5.0, interval())?;
    let exact = embedded_density_exact(&a, &target.curve(&fine)?)?;
    let map = embedded_density_map(&a, &target.sample(300, 1)?, &fine)?;
    checks.push(check(
        "projection_mass",
        max_abs([exact.mass() - 1.0, map.mass() - 1.0]),
        1e-5,
    ));

    let coefficients =
        map_coefficients_on(&target.sample(50, 2)?, a.basis(), a.active_set().to_vec())?;
    checks.push(check(
        "map_coefficients_psd",
        (-coefficients.min_eigenvalue()).max(0.0),
        1e-12,
    ));
    Ok(())
}
