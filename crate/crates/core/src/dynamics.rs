//! Phase-flip decoherence of Bloch tensors and detection of sudden changes in
//! the decay of the geometric discord.
//!
//! Each qubit independently undergoes `ρ → (1−p)ρ + p σ_z ρ σ_z`, which scales
//! `n_a` by `λ^{w(a)}` with `λ = 1 − 2p` and `w(a)` the number of x/y digits.
//! A kink in `D_GG(p)` appears when the two largest singular-value tracks cross.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{hosvd, is_hosvd_diagonal, svd3};
use crate::discord::{self, MethodChoice, HOSVD_DIAGONAL_TOL};
use crate::qstate::{
    density_from_bloch, physicality, pow3, BlochTensor, RESTRICTED_TOL,
};
use crate::tensor_norm::OptimizerConfig;
use crate::{Error, Result};

pub const DEFAULT_POINTS: usize = 201;
pub const DEFAULT_GAP_TOL: f64 = 1e-3;
/// Slope jumps at or below this never count, whatever the automatic threshold.
pub const SLOPE_FLOOR: f64 = 1e-9;
const MIN_DETECTOR_POINTS: usize = 5;

/// Transverse damping factor of the channel.
pub fn lambda(p: f64) -> f64 {
    1.0 - 2.0 * p
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(Error::Argument(format!("flip probability {p} outside [0, 1/2]")))
    }
}

/// Independent phase flip with probability `p` on every qubit.
pub fn phase_flip(n: &BlochTensor, p: f64) -> Result<BlochTensor> {
    check_p(p)?;
    let l = lambda(p);
    let powers: Vec<f64> = (0..=n.n_qubits()).map(|w| l.powi(w as i32)).collect();
    let mut out = n.clone();
    let entries: Vec<(usize, f64)> = n.nonzero_entries().collect();
    for (index, value) in entries {
        let mut w = 0;
        let mut rest = index;
        for _ in 0..n.n_qubits() {
            if matches!(rest % 4, 1 | 2) {
                w += 1;
            }
            rest /= 4;
        }
        out.set(index, value * powers[w]);
    }
    Ok(out)
}

// Phase flip on the restricted 3^N block (digits 0, 1 are x, y).
fn flip_restricted(values: &[f64], n_qubits: usize, l: f64) -> Vec<f64> {
    let powers: Vec<f64> = (0..=n_qubits).map(|w| l.powi(w as i32)).collect();
    values
        .iter()
        .enumerate()
        .map(|(pos, v)| {
            let mut w = 0;
            let mut rest = pos;
            for _ in 0..n_qubits {
                if rest % 3 != 2 {
                    w += 1;
                }
                rest /= 3;
            }
            v * powers[w]
        })
        .collect()
}

/// Descending singular-value magnitudes of a restricted block, and whether the
/// HOSVD core is diagonal (always true for two qubits).
pub fn tracks_of_restricted(values: &[f64], n_qubits: usize) -> Result<([f64; 3], bool)> {
    let (d, diagonal) = if n_qubits == 2 {
        (svd3(&Matrix3::from_row_slice(values)).magnitudes(), true)
    } else {
        let t = hosvd(values, n_qubits)?;
        let s = t.superdiagonal();
        (
            [s[0].abs(), s[1].abs(), s[2].abs()],
            is_hosvd_diagonal(&t, HOSVD_DIAGONAL_TOL),
        )
    };
    let mut d = d;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok((d, diagonal))
}

pub fn tracks_of(n: &BlochTensor) -> Result<([f64; 3], bool)> {
    require_restricted(n)?;
    tracks_of_restricted(&n.restricted_values(), n.n_qubits())
}

fn require_restricted(n: &BlochTensor) -> Result<()> {
    if n.n_qubits() < 2 {
        return Err(Error::Precondition("dynamics needs at least two qubits".into()));
    }
    if n.is_restricted(RESTRICTED_TOL) {
        Ok(())
    } else {
        Err(Error::Precondition("dynamics needs a restricted tensor".into()))
    }
}

/// `points` uniform values on `[0, pmax]`.
pub fn uniform_grid(pmax: f64, points: usize) -> Result<Vec<f64>> {
    check_p(pmax)?;
    if points < 2 || pmax <= 0.0 {
        return Err(Error::Argument("a grid needs two or more points and pmax > 0".into()));
    }
    Ok((0..points).map(|i| pmax * i as f64 / (points - 1) as f64).collect())
}

fn check_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.len() < 2 {
        return Err(Error::Argument("a grid needs at least two points".into()));
    }
    for &p in p_grid {
        check_p(p)?;
    }
    if p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub with_gqd: bool,
    pub method: MethodChoice,
    pub optimizer: OptimizerConfig,
    /// Grid resolution when `method` is brute force.
    pub grid_steps: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            with_gqd: false,
            method: MethodChoice::Auto,
            optimizer: OptimizerConfig::default(),
            grid_steps: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub p: f64,
    pub tensor: BlochTensor,
    pub ggqd: f64,
    pub gqd: Option<f64>,
    /// Descending magnitudes `d₁ ≥ d₂ ≥ d₃`.
    pub tracks: [f64; 3],
    /// Whether the tracks are exact singular values (HOSVD core diagonal).
    pub hosvd_diagonal: bool,
}

impl TrajectoryPoint {
    pub fn gap(&self) -> f64 {
        self.tracks[0] - self.tracks[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: BlochTensor,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn p_grid(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.p).collect()
    }

    pub fn ggqd_series(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.ggqd).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(TrajectoryPoint::gap).collect()
    }
}

/// Tracks and discord at every grid point, evaluated in parallel.
pub fn compute_trajectory(n0: &BlochTensor, p_grid: &[f64], config: &TrajectoryConfig) -> Result<Trajectory> {
    require_restricted(n0)?;
    check_grid(p_grid)?;
    let (physical, lambda_min) = physicality(n0);
    if !physical {
        return Err(Error::InvalidState(format!(
            "initial state is unphysical (minimum eigenvalue {lambda_min:e})"
        )));
    }
    let points = p_grid
        .par_iter()
        .map(|&p| {
            let tensor = phase_flip(n0, p)?;
            let (tracks, hosvd_diagonal) = tracks_of(&tensor)?;
            let (ggqd, gqd) = if n0.n_qubits() == 2 && !config.with_gqd && config.method == MethodChoice::Auto {
                (0.25 * (tracks[1] * tracks[1] + tracks[2] * tracks[2]), None)
            } else {
                let (norm, _) =
                    discord::max_correlation(&tensor, config.method, &config.optimizer, config.grid_steps)?;
                let gg = discord::ggqd(&tensor, &norm)?;
                let g = if config.with_gqd {
                    Some(discord::gqd(&density_from_bloch(&tensor), &tensor, &norm)?)
                } else {
                    None
                };
                (gg, g)
            };
            Ok(TrajectoryPoint { p, tensor, ggqd, gqd, tracks, hosvd_diagonal })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { initial: n0.clone(), points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    DiscontinuousKink,
    SmoothCrossover,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub kind: TransitionKind,
    pub p_c: Option<f64>,
    /// Smallest `d₁ − d₂`, refined between grid points.
    pub min_gap: f64,
    /// Location of `min_gap`.
    pub p_min_gap: f64,
    /// Change of `dD_GG/dp` across the transition (finite differences).
    pub slope_jump: f64,
    pub gap_tol: f64,
    pub slope_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub gap_tol: f64,
    /// `None` selects five times the median `|Δ²D_GG|/h`.
    pub slope_tol: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { gap_tol: DEFAULT_GAP_TOL, slope_tol: None }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

/// Minimizer of a function on `[lo, hi]` by golden-section search.
fn golden_min(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (mut best_p, mut best) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for p in [lo, hi] {
        let v = f(p)?;
        if v < best {
            best = v;
            best_p = p;
        }
    }
    Ok((best_p, best))
}

/// Smallest `d₁ − d₂` over the interior grid points `p₁ … p_{m−1}`, refined
/// by a golden-section search between the neighbours of the best one (never
/// reaching the end points). Returns `(p, gap)`.
pub fn min_interior_gap(n0: &BlochTensor, p_grid: &[f64]) -> Result<(f64, f64)> {
    require_restricted(n0)?;
    check_grid(p_grid)?;
    if p_grid.len() < 3 {
        return Err(Error::Argument("need at least one interior grid point".into()));
    }
    let values = n0.restricted_values();
    let nq = n0.n_qubits();
    let gap = |p: f64| -> Result<f64> {
        let (d, _) = tracks_of_restricted(&flip_restricted(&values, nq, lambda(p)), nq)?;
        Ok(d[0] - d[1])
    };
    let gaps = p_grid[1..p_grid.len() - 1]
        .iter()
        .map(|&p| gap(p))
        .collect::<Result<Vec<_>>>()?;
    refine_gap(&gap, p_grid, &gaps)
}

// `interior_gaps[k]` belongs to grid index k + 1.
fn refine_gap(gap: &impl Fn(f64) -> Result<f64>, p_grid: &[f64], interior_gaps: &[f64]) -> Result<(f64, f64)> {
    let mut best = 0;
    for (k, g) in interior_gaps.iter().enumerate() {
        if *g < interior_gaps[best] {
            best = k;
        }
    }
    let i = best + 1;
    let lo = p_grid[(i - 1).max(1)];
    let hi = p_grid[(i + 1).min(p_grid.len() - 2)];
    let (p, g) = if hi > lo { golden_min(gap, lo, hi)? } else { (p_grid[i], interior_gaps[best]) };
    if g < interior_gaps[best] {
        Ok((p, g))
    } else {
        Ok((p_grid[i], interior_gaps[best]))
    }
}

fn slope(p: &[f64], d: &[f64], i: usize) -> f64 {
    (d[i + 1] - d[i]) / (p[i + 1] - p[i])
}

// Slope change across the grid interval containing `pc`, skipping that
// interval: left slope on [p_{j-1}, p_j], right slope on [p_{j+1}, p_{j+2}].
fn jump_at(p: &[f64], d: &[f64], pc: f64) -> Option<f64> {
    let j = p.partition_point(|&x| x <= pc).checked_sub(1)?;
    if j < 1 || j + 2 >= p.len() {
        return None;
    }
    Some((slope(p, d, j + 1) - slope(p, d, j - 1)).abs())
}

/// Classifies the trajectory as a kink (`d₁`/`d₂` touch and `D_GG` changes
/// slope), a smooth crossover (tracks approach without touching while the
/// slope turns by more than `slope_tol` across the approach) or neither.
pub fn detect_transition(traj: &Trajectory, config: &DetectorConfig) -> Result<TransitionReport> {
    let len = traj.points.len();
    if len < MIN_DETECTOR_POINTS {
        return Err(Error::Argument(format!(
            "detection needs at least {MIN_DETECTOR_POINTS} grid points, got {len}"
        )));
    }
    if !(config.gap_tol >= 0.0) {
        return Err(Error::Argument("gap_tol must be nonnegative".into()));
    }
    let p = traj.p_grid();
    let d = traj.ggqd_series();
    let gaps = traj.gaps();
    let slope_tol = match config.slope_tol {
        Some(t) => t,
        None => {
            let h = (p[len - 1] - p[0]) / (len - 1) as f64;
            5.0 * median((1..len - 1).map(|i| (d[i + 1] - 2.0 * d[i] + d[i - 1]).abs() / h).collect())
        }
    };
    let threshold = slope_tol.max(SLOPE_FLOOR);

    let values = traj.initial.restricted_values();
    let nq = traj.initial.n_qubits();
    let gap_fn = |q: f64| -> Result<f64> {
        let (t, _) = tracks_of_restricted(&flip_restricted(&values, nq, lambda(q)), nq)?;
        Ok(t[0] - t[1])
    };
    let (p_star, g_star) = refine_gap(&gap_fn, &p, &gaps[1..len - 1])?;

    // kink candidates: every touching grid point and the refined minimum
    let mut best_jump = jump_at(&p, &d, p_star).unwrap_or(0.0);
    let mut best_p = p_star;
    for i in 1..len - 1 {
        if gaps[i] <= config.gap_tol {
            if let Some(j) = jump_at(&p, &d, p[i]) {
                if j > best_jump {
                    best_jump = j;
                    best_p = p[i];
                }
            }
        }
    }
    let interior = p_star > p[0] && p_star < p[len - 1];
    if g_star <= config.gap_tol && interior && best_jump > threshold {
        return Ok(TransitionReport {
            kind: TransitionKind::DiscontinuousKink,
            p_c: Some(best_p),
            min_gap: g_star,
            p_min_gap: p_star,
            slope_jump: best_jump,
            gap_tol: config.gap_tol,
            slope_tol,
        });
    }

    let mut kind = TransitionKind::None;
    let mut jump = best_jump;
    let dips = g_star + config.gap_tol < gaps[0] && g_star + config.gap_tol < gaps[len - 1];
    if g_star > config.gap_tol && dips {
        // window where the gap first doubles on either side
        let j = p.partition_point(|&x| x <= p_star).saturating_sub(1);
        let left = (0..=j).rev().find(|&i| gaps[i] >= 2.0 * g_star).unwrap_or(0).max(1) - 1;
        let right = (j + 1..len).find(|&i| gaps[i] >= 2.0 * g_star).unwrap_or(len - 2).min(len - 2);
        jump = (slope(&p, &d, right) - slope(&p, &d, left)).abs();
        if jump > threshold {
            kind = TransitionKind::SmoothCrossover;
        }
    }
    Ok(TransitionReport {
        kind,
        p_c: (kind != TransitionKind::None).then_some(p_star),
        min_gap: g_star,
        p_min_gap: p_star,
        slope_jump: jump,
        gap_tol: config.gap_tol,
        slope_tol,
    })
}

/// `|n₁₁| ≥ |n₃₃|` or `|n₂₂| ≥ |n₃₃|`.
pub fn maziero_condition_diag(d: [f64; 3]) -> bool {
    d[0].abs() >= d[2].abs() || d[1].abs() >= d[2].abs()
}

/// [`maziero_condition_diag`] for a diagonal two-qubit tensor.
pub fn maziero_condition(n0: &BlochTensor) -> Result<bool> {
    if n0.n_qubits() != 2 || !n0.is_restricted(RESTRICTED_TOL) {
        return Err(Error::Precondition("the condition applies to two-qubit restricted tensors".into()));
    }
    for i in 1..=3 {
        for j in 1..=3 {
            if i != j && n0.get_digits(&[i, j]).abs() > RESTRICTED_TOL {
                return Err(Error::Precondition("the condition applies to diagonal tensors".into()));
            }
        }
    }
    Ok(maziero_condition_diag([
        n0.get_digits(&[1, 1]),
        n0.get_digits(&[2, 2]),
        n0.get_digits(&[3, 3]),
    ]))
}

/// Robust (channel-protected) parts of the singular values,
/// `n_{αα…α} Π_k R^{(k)}_{aα}`, in singular-value order.
pub fn robust_values(n0: &BlochTensor, protected_axis: usize) -> Result<[f64; 3]> {
    require_restricted(n0)?;
    if !(1..=3).contains(&protected_axis) {
        return Err(Error::Argument(format!("protected axis {protected_axis} not in 1..=3")));
    }
    let nq = n0.n_qubits();
    let alpha = protected_axis - 1;
    let n_protected = n0.get_digits(&vec![protected_axis; nq]);
    let t = hosvd(&n0.restricted_values(), nq)?;
    if nq > 2 && !is_hosvd_diagonal(&t, HOSVD_DIAGONAL_TOL) {
        return Err(Error::Precondition(
            "robust values need an HOSVD-diagonal tensor for three or more qubits".into(),
        ));
    }
    let mut out = [0.0; 3];
    for (a, slot) in out.iter_mut().enumerate() {
        *slot = n_protected * t.factors.iter().map(|r| r[(a, alpha)]).product::<f64>();
    }
    Ok(out)
}

/// Predicts a transition when a robust value other than the first exceeds
/// the first in magnitude.
pub fn predict_transition(n0: &BlochTensor, protected_axis: usize) -> Result<bool> {
    let r = robust_values(n0, protected_axis)?;
    Ok(r[1].abs() > r[0].abs() || r[2].abs() > r[0].abs())
}

/// Number of restricted coefficients, for callers sizing buffers.
pub fn restricted_len(n_qubits: usize) -> usize {
    pow3(n_qubits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{conjugate_local, shrink_to_physical, DensityMatrix, C64};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig1() -> BlochTensor {
        shrink_to_physical(&BlochTensor::diagonal2([1.0, 0.8, 0.6])).0
    }

    fn fig2() -> BlochTensor {
        let mut n = BlochTensor::diagonal2([1.0, 0.8, 0.6]);
        n.set_digits(&[1, 3], 0.2);
        n.set_digits(&[3, 1], 0.2);
        shrink_to_physical(&n).0
    }

    fn kraus(rho: &DensityMatrix, p: f64) -> DensityMatrix {
        let z = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]];
        let nq = rho.n_qubits();
        let mut m = rho.matrix().clone();
        for q in 0..nq {
            let flipped = conjugate_local(&m, q, nq, &z);
            m = m.scale(1.0 - p) + flipped.scale(p);
        }
        DensityMatrix::hermitian(nq, m).unwrap()
    }

    #[test]
    fn phase_flip_examples() {
        let n = BlochTensor::diagonal2([1.0, 0.8, 0.6]);
        assert_eq!(phase_flip(&n, 0.0).unwrap(), n);
        let half = phase_flip(&n, 0.5).unwrap();
        assert_eq!(half.get_digits(&[1, 1]), 0.0);
        assert_eq!(half.get_digits(&[3, 3]), 0.6);
        let q = phase_flip(&n, 0.1).unwrap();
        assert!((q.get_digits(&[1, 1]) - 0.64).abs() < 1e-15);
        assert!((q.get_digits(&[2, 2]) - 0.512).abs() < 1e-15);
        assert_eq!(q.get_digits(&[3, 3]), 0.6);
        assert!(phase_flip(&n, 0.6).is_err());
        assert!(phase_flip(&n, -0.1).is_err());
    }

    #[test]
    fn channel_matches_kraus() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for nq in 1..=3 {
            for _ in 0..100 {
                let d = 1 << nq;
                let a = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                let m = &a * a.adjoint();
                let tr = m.trace();
                let rho = DensityMatrix::new(nq, m.map(|x| x / tr)).unwrap();
                let p = rng.random_range(0.0..0.5);
                let n = crate::qstate::bloch_from_density(&rho).unwrap();
                let lhs = density_from_bloch(&phase_flip(&n, p).unwrap());
                assert!(lhs.max_abs_diff(&kraus(&rho, p)) < 1e-12);
                let flipped = phase_flip(&n, p).unwrap();
                for (index, v) in n.nonzero_entries() {
                    let mut rest = index;
                    let protected = (0..nq).all(|_| {
                        let ok = matches!(rest % 4, 0 | 3);
                        rest /= 4;
                        ok
                    });
                    if protected {
                        assert_eq!(flipped.get(index), v);
                    }
                }
                assert!(physicality(&flipped).1 >= -1e-10);
            }
        }
    }

    #[test]
    fn diagonal_tracks_follow_lambda() {
        let traj = compute_trajectory(&fig1(), &uniform_grid(0.5, 51).unwrap(), &TrajectoryConfig::default()).unwrap();
        let s = 1.0 / 2.4;
        for pt in &traj.points {
            let l2 = lambda(pt.p).powi(2);
            let mut expect = [s * l2, s * 0.8 * l2, s * 0.6];
            expect.sort_by(|a, b| b.total_cmp(a));
            for k in 0..3 {
                assert!((pt.tracks[k] - expect[k]).abs() < 1e-12);
            }
        }
        let zero = compute_trajectory(&BlochTensor::zeros(2), &uniform_grid(0.5, 11).unwrap(), &TrajectoryConfig::default()).unwrap();
        assert!(zero.points.iter().all(|pt| pt.ggqd == 0.0 && pt.tracks == [0.0; 3]));
        let report = detect_transition(&zero, &DetectorConfig::default()).unwrap();
        assert_eq!(report.kind, TransitionKind::None);
    }

    #[test]
    fn crossing_gives_kink() {
        let grid = uniform_grid(0.5, DEFAULT_POINTS).unwrap();
        let traj = compute_trajectory(&fig1(), &grid, &TrajectoryConfig::default()).unwrap();
        let r = detect_transition(&traj, &DetectorConfig::default()).unwrap();
        assert_eq!(r.kind, TransitionKind::DiscontinuousKink);
        let pc = (1.0 - 0.6f64.sqrt()) / 2.0;
        assert!((r.p_c.unwrap() - pc).abs() <= 0.5 / 200.0);
        assert!(r.slope_jump > r.slope_tol);
    }

    #[test]
    fn avoided_crossing_is_smooth() {
        for points in [DEFAULT_POINTS, 4 * (DEFAULT_POINTS - 1) + 1] {
            let grid = uniform_grid(0.5, points).unwrap();
            let traj = compute_trajectory(&fig2(), &grid, &TrajectoryConfig::default()).unwrap();
            let r = detect_transition(&traj, &DetectorConfig::default()).unwrap();
            assert!(r.min_gap > 0.0);
            assert_eq!(r.kind, TransitionKind::SmoothCrossover, "{r:?}");
        }
    }

    #[test]
    fn protected_largest_gives_none() {
        let n = shrink_to_physical(&BlochTensor::diagonal2([0.4, 0.3, 0.9])).0;
        let traj = compute_trajectory(&n, &uniform_grid(0.5, 201).unwrap(), &TrajectoryConfig::default()).unwrap();
        assert!(traj.points.iter().all(|pt| (pt.tracks[0] - n.get_digits(&[3, 3])).abs() < 1e-15));
        let r = detect_transition(&traj, &DetectorConfig::default()).unwrap();
        assert_eq!(r.kind, TransitionKind::None);
    }

    #[test]
    fn detector_needs_points() {
        let traj = compute_trajectory(&fig1(), &uniform_grid(0.5, 4).unwrap(), &TrajectoryConfig::default()).unwrap();
        assert!(detect_transition(&traj, &DetectorConfig::default()).is_err());
    }

    #[test]
    fn unphysical_start_is_rejected() {
        let n = BlochTensor::diagonal2([1.0, 0.8, 0.6]);
        let r = compute_trajectory(&n, &uniform_grid(0.5, 11).unwrap(), &TrajectoryConfig::default());
        assert!(matches!(r, Err(Error::InvalidState(_))));
    }

    #[test]
    fn ggqd_is_continuous_under_refinement() {
        let jump = |points| {
            let traj = compute_trajectory(&fig1(), &uniform_grid(0.5, points).unwrap(), &TrajectoryConfig::default()).unwrap();
            let d = traj.ggqd_series();
            d.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
        };
        let coarse = jump(101);
        let fine = jump(201);
        assert!(coarse / fine >= 1.9, "{coarse} {fine}");
    }

    #[test]
    fn maziero_examples() {
        assert!(maziero_condition_diag([1.0, 0.8, 0.6]));
        assert!(!maziero_condition_diag([0.4, 0.3, 0.9]));
        assert!(maziero_condition_diag([0.6, 0.2, 0.6]));
        assert!(maziero_condition(&fig1()).unwrap());
        assert!(matches!(maziero_condition(&fig2()), Err(Error::Precondition(_))));
    }

    #[test]
    fn prediction_examples() {
        let n = BlochTensor::diagonal2([1.0, 0.8, 0.6]);
        let r = robust_values(&n, 3).unwrap();
        assert_eq!(r[0], 0.0);
        assert_eq!(r[1], 0.0);
        assert!((r[2] - 0.6).abs() < 1e-15);
        assert!(predict_transition(&n, 3).unwrap());
        assert!(!predict_transition(&BlochTensor::diagonal2([0.4, 0.3, 0.9]), 3).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let mut m = BlochTensor::diagonal2([1.0, 0.8, 0.6]);
            for i in 1..=3 {
                for j in 1..=3 {
                    if i != j {
                        m.set_digits(&[i, j], rng.random_range(-0.02..0.02));
                    }
                }
            }
            let m = shrink_to_physical(&m).0;
            assert!(predict_transition(&m, 3).unwrap());
            let traj = compute_trajectory(&m, &uniform_grid(0.5, 201).unwrap(), &TrajectoryConfig::default()).unwrap();
            let kind = detect_transition(&traj, &DetectorConfig::default()).unwrap().kind;
            assert_ne!(kind, TransitionKind::None);
        }
    }

    #[test]
    fn three_qubit_trajectory_runs() {
        let mut n = BlochTensor::zeros(3);
        n.set_digits(&[1, 1, 1], 0.5);
        n.set_digits(&[2, 2, 2], 0.3);
        n.set_digits(&[3, 3, 3], 0.2);
        let traj = compute_trajectory(&n, &uniform_grid(0.5, 41).unwrap(), &TrajectoryConfig::default()).unwrap();
        for pt in &traj.points {
            assert!(pt.ggqd >= -1e-9 && pt.ggqd.is_finite());
            assert!(pt.hosvd_diagonal);
        }
        let r = detect_transition(&traj, &DetectorConfig::default()).unwrap();
        assert_eq!(r.kind, TransitionKind::DiscontinuousKink);
        let pc = (1.0 - (0.2f64 / 0.5).powf(1.0 / 3.0)) / 2.0;
        assert!((r.p_c.unwrap() - pc).abs() <= 0.5 / 40.0);
    }
}
