//! Maximization of `C({Θ_i}) = Σ_a n_a Π_i Θ_{i,a_i}` over unit vectors, i.e. the
//! injective norm of the Bloch tensor.
//!
//! Three routes are provided:
//! * damped mean-field sweeps with multi-start ([`injective_norm_meanfield`]),
//! * an exhaustive spherical grid followed by an undamped polish
//!   ([`injective_norm_bruteforce`]), used as an oracle,
//! * the two-qubit operator norm from the signed SVD ([`injective_norm_exact2`]).
//!
//! For tensors with zero digits the convention `Θ_{i,0} = 1` applies, so the
//! objective is affine in each site: `C = f₀ + f·Θ_i`.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::svd3;
use crate::qstate::{contract_all, norm3, pow3, BlochTensor, MeasurementFrame, RESTRICTED_TOL};
use crate::{Error, Result};

/// Axis-aligned seed frames are capped at this many.
pub const MAX_AXIS_SEEDS: usize = 729;
/// Largest qubit count accepted by the grid oracle.
pub const BRUTEFORCE_MAX_QUBITS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Damping factor in `(0, 1]`; 1 is the undamped update.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Convergence threshold on `|ΔC|` per sweep.
    pub convergence_tol: f64,
    /// Number of uniformly random starting frames.
    pub restarts: usize,
    pub seed: u64,
    /// Also start from every axis-aligned frame (`3^N`, capped at 729).
    pub include_axis_seeds: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            max_iterations: 500,
            convergence_tol: 1e-10,
            restarts: 20,
            seed: 0,
            include_axis_seeds: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Argument(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Argument("convergence_tol must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Argument("at least one restart is required".into()));
        }
        Ok(())
    }
}

/// Outcome of a maximization. `value` always equals `correlation_c(n, &frame)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormResult {
    pub value: f64,
    pub frame: MeasurementFrame,
    pub iterations_used: usize,
    pub converged: bool,
    pub restart_index: usize,
}

pub fn correlation_c(n: &BlochTensor, frame: &MeasurementFrame) -> f64 {
    n.contract(frame)
}

/// The 3-vector `f` with `C = f₀ + f·Θ_site` when the other sites are held
/// fixed (`f₀ = 0` for restricted tensors).
pub fn local_field(n: &BlochTensor, frame: &MeasurementFrame, site: usize) -> Result<[f64; 3]> {
    if site >= n.n_qubits() {
        return Err(Error::Argument(format!(
            "site {site} out of range for {} qubits",
            n.n_qubits()
        )));
    }
    if frame.len() != n.n_qubits() {
        return Err(Error::Argument("frame size does not match the tensor".into()));
    }
    let f = n.contract_except(frame, site);
    Ok([f[1], f[2], f[3]])
}

fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let norm = norm3(&v);
    (norm > 0.0 && norm.is_finite()).then(|| [v[0] / norm, v[1] / norm, v[2] / norm])
}

/// One Gauss–Seidel pass: each site in index order moves to
/// `normalize((1-α)·old + α·normalize(field))`, the field being computed
/// against the partially updated frame.
pub fn mean_field_sweep(n: &BlochTensor, frame: &MeasurementFrame, alpha: f64) -> MeasurementFrame {
    let mut next = frame.clone();
    for site in 0..n.n_qubits() {
        let f = n.contract_except(&next, site);
        let Some(candidate) = normalize([f[1], f[2], f[3]]) else {
            continue;
        };
        let old = next.site(site);
        let mixed = if alpha >= 1.0 {
            candidate
        } else {
            let m = [
                (1.0 - alpha) * old[0] + alpha * candidate[0],
                (1.0 - alpha) * old[1] + alpha * candidate[1],
                (1.0 - alpha) * old[2] + alpha * candidate[2],
            ];
            normalize(m).unwrap_or(candidate)
        };
        next.set_site(site, mixed);
    }
    next
}

fn run_from(n: &BlochTensor, start: MeasurementFrame, config: &OptimizerConfig, index: usize) -> NormResult {
    let mut frame = start;
    let mut value = correlation_c(n, &frame);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        frame = mean_field_sweep(n, &frame, config.alpha);
        iterations += 1;
        let next = correlation_c(n, &frame);
        let delta = (next - value).abs();
        value = next;
        if delta < config.convergence_tol {
            converged = true;
            break;
        }
    }
    NormResult {
        value,
        frame,
        iterations_used: iterations,
        converged,
        restart_index: index,
    }
}

/// Every product of positive coordinate axes, first `MAX_AXIS_SEEDS` in
/// lexicographic order.
pub fn axis_seeds(n_qubits: usize) -> Vec<MeasurementFrame> {
    let count = if n_qubits >= 7 { MAX_AXIS_SEEDS } else { pow3(n_qubits).min(MAX_AXIS_SEEDS) };
    (0..count)
        .map(|code| {
            let mut rest = code;
            let mut axes = vec![[0.0; 3]; n_qubits];
            for site in (0..n_qubits).rev() {
                axes[site][rest % 3] = 1.0;
                rest /= 3;
            }
            MeasurementFrame::new(axes).expect("unit axes")
        })
        .collect()
}

/// Uniformly distributed unit vector.
pub fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ];
        if let Some(u) = normalize(v) {
            return u;
        }
    }
}

pub fn random_frame(n_qubits: usize, rng: &mut impl Rng) -> MeasurementFrame {
    MeasurementFrame::new((0..n_qubits).map(|_| random_direction(rng)).collect())
        .expect("normalized directions")
}

fn best_of(results: Vec<NormResult>) -> NormResult {
    results
        .into_iter()
        .reduce(|best, r| {
            if r.value > best.value || (r.value == best.value && r.restart_index < best.restart_index) {
                r
            } else {
                best
            }
        })
        .expect("at least one start")
}

/// Mean-field maximization from the given starting frames, run independently;
/// the best result wins (ties go to the lowest index).
pub fn injective_norm_from_seeds(
    n: &BlochTensor,
    seeds: &[MeasurementFrame],
    config: &OptimizerConfig,
) -> Result<NormResult> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Argument("no starting frames given".into()));
    }
    if seeds.iter().any(|s| s.len() != n.n_qubits()) {
        return Err(Error::Argument("seed frame size does not match the tensor".into()));
    }
    let results: Vec<NormResult> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| run_from(n, s.clone(), config, i))
        .collect();
    Ok(best_of(results))
}

/// Multi-start damped mean-field maximization. The value is a lower bound on
/// the injective norm.
///
/// Starts are the axis-aligned frames (when enabled) followed by
/// `config.restarts` random frames; random start `r` draws from a generator
/// seeded with `seed + r`, so the result does not depend on scheduling.
pub fn injective_norm_meanfield(n: &BlochTensor, config: &OptimizerConfig) -> Result<NormResult> {
    config.validate()?;
    let nq = n.n_qubits();
    let mut seeds = if config.include_axis_seeds { axis_seeds(nq) } else { Vec::new() };
    seeds.extend((0..config.restarts).map(|r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
        random_frame(nq, &mut rng)
    }));
    injective_norm_from_seeds(n, &seeds, config)
}

/// Polish settings used after grid searches.
pub fn polish_config() -> OptimizerConfig {
    OptimizerConfig {
        alpha: 1.0,
        max_iterations: 20_000,
        convergence_tol: 1e-15,
        restarts: 1,
        seed: 0,
        include_axis_seeds: false,
    }
}

/// Per-site spherical grid: `grid_steps` polar angles over `[0, π]` and
/// `2·grid_steps` azimuths over `[0, 2π)`.
pub fn sphere_grid(grid_steps: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(2 * grid_steps * grid_steps);
    for j in 0..grid_steps {
        let theta = std::f64::consts::PI * j as f64 / (grid_steps - 1) as f64;
        for k in 0..2 * grid_steps {
            let phi = std::f64::consts::PI * k as f64 / grid_steps as f64;
            out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    out
}

fn contract_leading(t: &[f64], v: &[f64; 3], out: &mut Vec<f64>) {
    let rest = t.len() / 4;
    out.clear();
    out.extend((0..rest).map(|r| t[r] + v[0] * t[rest + r] + v[1] * t[2 * rest + r] + v[2] * t[3 * rest + r]));
}

// Best value over grid directions for the leading sites of `t`, with the last
// site maximized exactly (`f₀ + |f|`). Returns the value and the grid choices.
fn scan(t: &[f64], grid: &[[f64; 3]]) -> (f64, Vec<usize>) {
    if t.len() == 4 {
        return (t[0] + norm3(&[t[1], t[2], t[3]]), Vec::new());
    }
    let mut buf = Vec::with_capacity(t.len() / 4);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for (g, v) in grid.iter().enumerate() {
        contract_leading(t, v, &mut buf);
        let (value, mut path) = scan(&buf, grid);
        if value > best.0 {
            path.insert(0, g);
            best = (value, path);
        }
    }
    best
}

/// Exhaustive grid oracle followed by an undamped polish from the best grid
/// point. The last site is maximized analytically at each grid point of the
/// others, so the scan costs `(2·grid_steps²)^{N-1}` local fields.
pub fn injective_norm_bruteforce(n: &BlochTensor, grid_steps: usize) -> Result<NormResult> {
    let nq = n.n_qubits();
    if nq > BRUTEFORCE_MAX_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "grid search is limited to {BRUTEFORCE_MAX_QUBITS} qubits, got {nq}"
        )));
    }
    if grid_steps < 2 {
        return Err(Error::Argument("grid_steps must be at least 2".into()));
    }
    let grid = sphere_grid(grid_steps);
    let coeffs = n.coeffs();
    let (grid_value, path) = if nq == 1 {
        (0.0, Vec::new())
    } else {
        grid.par_iter()
            .enumerate()
            .map(|(g, v)| {
                let mut buf = Vec::new();
                contract_leading(coeffs, v, &mut buf);
                let (value, mut path) = scan(&buf, &grid);
                path.insert(0, g);
                (value, path)
            })
            .reduce(
                || (f64::NEG_INFINITY, Vec::new()),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            )
    };
    let mut dirs: Vec<[f64; 3]> = path.iter().map(|&g| grid[g]).collect();
    dirs.push([0.0, 0.0, 1.0]);
    let mut frame = MeasurementFrame::new(dirs)?;
    let f = n.contract_except(&frame, nq - 1);
    if let Some(best_last) = normalize([f[1], f[2], f[3]]) {
        frame.set_site(nq - 1, best_last);
    }
    let start_value = correlation_c(n, &frame);
    let polished = run_from(n, frame.clone(), &polish_config(), 0);
    let result = if polished.value >= start_value {
        polished
    } else {
        NormResult {
            value: start_value,
            frame,
            iterations_used: 0,
            converged: true,
            restart_index: 0,
        }
    };
    debug_assert!(nq == 1 || result.value >= grid_value - 1e-12);
    Ok(result)
}

/// Two-qubit injective norm: the largest singular value of `n_{ij}`, attained
/// at the matching left/right singular vectors.
pub fn injective_norm_exact2(n: &BlochTensor) -> Result<NormResult> {
    if n.n_qubits() != 2 {
        return Err(Error::Precondition("exact route needs exactly two qubits".into()));
    }
    if !n.is_restricted(RESTRICTED_TOL) {
        return Err(Error::Precondition(
            "exact route needs a restricted two-qubit tensor".into(),
        ));
    }
    let m = matrix_of(n);
    let svd = svd3(&m);
    let sign = if svd.diag[0] < 0.0 { -1.0 } else { 1.0 };
    let u: Vector3<f64> = svd.left.column(0) * sign;
    let v: Vector3<f64> = svd.right.column(0).into_owned();
    let frame = MeasurementFrame::normalized(vec![[u[0], u[1], u[2]], [v[0], v[1], v[2]]])?;
    Ok(NormResult {
        value: correlation_c(n, &frame),
        frame,
        iterations_used: 0,
        converged: true,
        restart_index: 0,
    })
}

/// `n_{ij}`, `i, j ∈ {1,2,3}`, of a two-qubit tensor.
pub fn matrix_of(n: &BlochTensor) -> Matrix3<f64> {
    assert_eq!(n.n_qubits(), 2);
    Matrix3::from_fn(|i, j| n.get_digits(&[i + 1, j + 1]))
}

/// Contracts a raw dense `4^N` table; see [`BlochTensor::contract`].
pub fn contract_dense(coeffs: &[f64], frame: &MeasurementFrame) -> f64 {
    contract_all(coeffs, &frame.homogeneous())
}
