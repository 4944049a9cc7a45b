//! Monte Carlo estimate of how often Haar-random states with a fixed spectrum
//! come close to a level crossing under phase-flip noise.
//!
//! A sample is `n = Σ_a d_a ⊗_k R^{(k)}_{a,·}` with independent Haar rotations,
//! shrunk to physicality. It counts as a hit at `ε` when the smallest interior
//! gap `d₁ − d₂` along its trajectory is below `ε` times its largest initial
//! track.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{min_interior_gap, tracks_of, uniform_grid, DEFAULT_POINTS};
use crate::qstate::{pow3, shrink_to_physical, BlochTensor};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Epsilons with fewer hits are left out of the slope fit.
pub const MIN_FIT_HITS: usize = 10;

/// Haar-uniform element of SO(3) from a normalized Gaussian quaternion.
pub fn sample_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        if q.norm() > 1e-12 {
            return *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledState {
    pub tensor: BlochTensor,
    /// Factor applied to reach physicality (1 when already physical).
    pub shrink_factor: f64,
    pub rotations: Vec<Matrix3<f64>>,
}

impl SampledState {
    pub fn was_unphysical(&self) -> bool {
        self.shrink_factor < 1.0
    }
}

fn check_spectrum(spectrum: [f64; 3]) -> Result<()> {
    if spectrum.iter().any(|d| !d.is_finite()) {
        return Err(Error::Argument("spectrum must be finite".into()));
    }
    if spectrum[0].abs() < spectrum[1].abs() || spectrum[1].abs() < spectrum[2].abs() {
        return Err(Error::Argument("spectrum magnitudes must be sorted descending".into()));
    }
    Ok(())
}

/// Builds the state from given per-site rotations (rows are the singular
/// vectors) and shrinks it to physicality.
pub fn state_from_rotations(spectrum: [f64; 3], rotations: &[Matrix3<f64>]) -> Result<SampledState> {
    check_spectrum(spectrum)?;
    let nq = rotations.len();
    if nq < 2 {
        return Err(Error::Argument("need at least two qubits".into()));
    }
    let mut values = vec![0.0; pow3(nq)];
    for (pos, slot) in values.iter_mut().enumerate() {
        let mut digits = vec![0; nq];
        let mut rest = pos;
        for k in (0..nq).rev() {
            digits[k] = rest % 3;
            rest /= 3;
        }
        *slot = (0..3)
            .map(|a| spectrum[a] * rotations.iter().zip(&digits).map(|(r, &i)| r[(a, i)]).product::<f64>())
            .sum();
    }
    let raw = BlochTensor::from_restricted(nq, &values)?;
    let (tensor, shrink_factor) = shrink_to_physical(&raw);
    Ok(SampledState { tensor, shrink_factor, rotations: rotations.to_vec() })
}

pub fn sample_state(spectrum: [f64; 3], n_qubits: usize, rng: &mut impl Rng) -> Result<SampledState> {
    let rotations: Vec<Matrix3<f64>> = (0..n_qubits).map(|_| sample_rotation(rng)).collect();
    state_from_rotations(spectrum, &rotations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_qubits: usize,
    pub spectrum: [f64; 3],
    pub samples: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    /// Uniform trajectory grid on `[0, ½]`.
    pub grid_points: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_qubits: 2,
            spectrum: [1.0, 0.8, 0.6],
            samples: 1000,
            epsilons: vec![0.02, 0.05, 0.1, 0.2],
            seed: 0,
            grid_points: DEFAULT_POINTS,
            threads: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::Argument("n_qubits must be at least 2".into()));
        }
        check_spectrum(self.spectrum)?;
        if self.samples < 1 {
            return Err(Error::Argument("samples must be at least 1".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Argument("at least one epsilon is required".into()));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::Argument("epsilons must lie in (0, 1)".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("epsilons must be strictly ascending".into()));
        }
        if self.grid_points < 3 {
            return Err(Error::Argument("grid_points must be at least 3".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Argument("threads must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    pub hits: usize,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// `None` with exactly two points.
    pub std_error: Option<f64>,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n_qubits: usize,
    pub samples: usize,
    pub estimates: Vec<EpsilonEstimate>,
    /// Least-squares slope of `ln P` against `ln ε`; `None` with fewer than
    /// two informative epsilons.
    pub slope: Option<SlopeFit>,
    /// Raw samples that needed shrinking to become physical.
    pub rejections: usize,
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares of `y` on `x`; slope and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let std_error = (n > 2).then(|| {
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    });
    Some(SlopeFit { slope, std_error, points_used: n })
}

/// Smallest interior gap relative to the largest initial track, or `None`
/// for the zero tensor.
pub fn relative_min_gap(tensor: &BlochTensor, grid: &[f64]) -> Result<Option<f64>> {
    let (tracks, _) = tracks_of(tensor)?;
    if tracks[0] == 0.0 {
        return Ok(None);
    }
    let (_, gap) = min_interior_gap(tensor, grid)?;
    Ok(Some(gap / tracks[0]))
}

fn run_samples(config: &McConfig, grid: &[f64]) -> Result<Vec<(Option<f64>, bool)>> {
    (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ i as u64);
            let s = sample_state(config.spectrum, config.n_qubits, &mut rng)?;
            Ok((relative_min_gap(&s.tensor, grid)?, s.was_unphysical()))
        })
        .collect()
}

/// Hit probabilities per epsilon with Wilson intervals and a log–log fit.
/// The result depends only on the configuration, not on the thread count.
pub fn estimate_probability(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let grid = uniform_grid(0.5, config.grid_points)?;
    let outcomes = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?
            .install(|| run_samples(config, &grid))?,
        None => run_samples(config, &grid)?,
    };
    let rejections = outcomes.iter().filter(|o| o.1).count();
    let estimates: Vec<EpsilonEstimate> = config
        .epsilons
        .iter()
        .map(|&epsilon| {
            let hits = outcomes
                .iter()
                .filter(|o| matches!(o.0, Some(g) if g < epsilon))
                .count();
            let (ci_low, ci_high) = wilson_interval(hits, config.samples, Z95);
            EpsilonEstimate {
                epsilon,
                hits,
                probability: hits as f64 / config.samples as f64,
                ci_low,
                ci_high,
            }
        })
        .collect();
    let informative: Vec<&EpsilonEstimate> = estimates.iter().filter(|e| e.hits >= MIN_FIT_HITS).collect();
    let x: Vec<f64> = informative.iter().map(|e| e.epsilon.ln()).collect();
    let y: Vec<f64> = informative.iter().map(|e| e.probability.ln()).collect();
    Ok(McReport {
        n_qubits: config.n_qubits,
        samples: config.samples,
        slope: fit_slope(&x, &y),
        estimates,
        rejections,
    })
}
