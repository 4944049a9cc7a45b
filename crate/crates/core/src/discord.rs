//! Global quantum discord (GQD, bits) and geometric global quantum discord
//! (GGQD) of restricted states.
//!
//! Both reduce to the maximal correlation `max_C` over measurement frames:
//!
//! ```text
//! GGQD = (Σ_a n_a² − max_C²) / 2^N
//! GQD  = I(ρ) − 1 + h₂(½(1 + max_C))
//! ```
//!
//! The GQD form follows from `min [I(ρ) − I(Π(ρ))]`: a measured restricted
//! state has uniform marginals and entropy `N − 1 + h₂`, so
//! `I(Π(ρ)) = 1 − h₂` for every `N`.

use serde::{Deserialize, Serialize};

use crate::decompose::{hosvd_bloch, is_hosvd_diagonal, svd3, TuckerDecomposition};
use crate::qstate::{
    density_from_bloch, mutual_information, physicality, BlochTensor, DensityMatrix, MeasurementFrame,
    RESTRICTED_TOL,
};
use crate::tensor_norm::{
    correlation_c, injective_norm_bruteforce, injective_norm_exact2, injective_norm_meanfield,
    matrix_of, NormResult, OptimizerConfig,
};
use crate::{Error, Result};

/// Core entries off the superdiagonal below this count as zero.
pub const HOSVD_DIAGONAL_TOL: f64 = 1e-8;
/// Negative results within this slack are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-9;
/// `|max_C|` beyond `1 +` this is an optimizer or input failure.
pub const MAX_C_TOL: f64 = 1e-6;
/// Largest qubit count for which the entropic discord is evaluated.
pub const GQD_MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact2,
    HosvdDiagonal,
    Meanfield,
    Bruteforce,
}

/// Method request; `Auto` picks the cheapest route that applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    #[default]
    Auto,
    Exact2,
    Hosvd,
    Meanfield,
    Bruteforce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscordResult {
    pub ggqd: f64,
    /// `None` above [`GQD_MAX_QUBITS`].
    pub gqd: Option<f64>,
    pub max_c: f64,
    pub optimal_frame: MeasurementFrame,
    pub method: Method,
}

fn clamp_small_negative(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -CLAMP_TOL {
        log::warn!("{what} = {value:e} clamped to 0");
        Ok(0.0)
    } else {
        Err(Error::Inconsistency(format!("{what} = {value:e} is negative")))
    }
}

fn require_restricted(n: &BlochTensor) -> Result<()> {
    if n.is_restricted(RESTRICTED_TOL) {
        Ok(())
    } else {
        Err(Error::Precondition(
            "discord formulas need a restricted tensor (no identity digits)".into(),
        ))
    }
}

fn check_norm(n: &BlochTensor, norm: &NormResult) -> Result<()> {
    if norm.frame.len() != n.n_qubits() {
        return Err(Error::Argument(format!(
            "norm frame has {} sites, tensor has {} qubits",
            norm.frame.len(),
            n.n_qubits()
        )));
    }
    let c = correlation_c(n, &norm.frame);
    if (c - norm.value).abs() > 1e-9 * (1.0 + c.abs()) {
        return Err(Error::Argument(format!(
            "norm value {} does not match C = {c} at its frame",
            norm.value
        )));
    }
    Ok(())
}

/// `(Σ n_a² − max_C²)/2^N`. With a lower-bound norm this is an upper bound.
pub fn ggqd(n: &BlochTensor, norm: &NormResult) -> Result<f64> {
    require_restricted(n)?;
    check_norm(n, norm)?;
    let value = (n.norm_squared() - norm.value * norm.value) / 2f64.powi(n.n_qubits() as i32);
    clamp_small_negative(value, "ggqd")
}

/// `¼(d₂² + d₃²)` from the signed SVD of a two-qubit correlation matrix.
pub fn ggqd_two_qubit(m: &nalgebra::Matrix3<f64>) -> f64 {
    let d = svd3(m).magnitudes();
    0.25 * (d[1] * d[1] + d[2] * d[2])
}

fn hosvd_if_diagonal(n: &BlochTensor) -> Option<TuckerDecomposition> {
    if !n.is_restricted(RESTRICTED_TOL) {
        return None;
    }
    let t = hosvd_bloch(n).ok()?;
    is_hosvd_diagonal(&t, HOSVD_DIAGONAL_TOL).then_some(t)
}

/// Closed form for HOSVD-diagonal tensors, `None` otherwise.
pub fn ggqd_hosvd(n: &BlochTensor) -> Option<f64> {
    let t = hosvd_if_diagonal(n)?;
    let d = t.superdiagonal();
    let sum: f64 = d.iter().map(|x| x * x).sum();
    let max = d.iter().map(|x| x * x).fold(0.0, f64::max);
    Some(((sum - max) / 2f64.powi(n.n_qubits() as i32)).max(0.0))
}

/// Norm from an HOSVD-diagonal decomposition: the frame is the factor row of
/// the largest superdiagonal entry on every site.
fn hosvd_norm(n: &BlochTensor, t: &TuckerDecomposition) -> Result<NormResult> {
    let d = t.superdiagonal();
    let mut best = 0;
    for a in 1..3 {
        if d[a].abs() > d[best].abs() {
            best = a;
        }
    }
    let sign = if d[best] < 0.0 { -1.0 } else { 1.0 };
    let dirs: Vec<[f64; 3]> = t
        .factors
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let s = if k == 0 { sign } else { 1.0 };
            [s * r[(best, 0)], s * r[(best, 1)], s * r[(best, 2)]]
        })
        .collect();
    let frame = MeasurementFrame::normalized(dirs)?;
    Ok(NormResult {
        value: correlation_c(n, &frame),
        frame,
        iterations_used: 0,
        converged: true,
        restart_index: 0,
    })
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Argument(format!("probability {p} outside [0, 1]")));
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// `I(ρ) − 1 + h₂(½(1 + max_C))` in bits.
pub fn gqd(rho: &DensityMatrix, n: &BlochTensor, norm: &NormResult) -> Result<f64> {
    require_restricted(n)?;
    if rho.n_qubits() != n.n_qubits() {
        return Err(Error::Argument("density matrix and tensor sizes differ".into()));
    }
    check_norm(n, norm)?;
    if norm.value.abs() > 1.0 + MAX_C_TOL {
        return Err(Error::Inconsistency(format!(
            "max C = {} exceeds 1; the state or the norm is unphysical",
            norm.value
        )));
    }
    let c = norm.value.clamp(-1.0, 1.0);
    let value = mutual_information(rho)? - 1.0 + binary_entropy(0.5 * (1.0 + c))?;
    clamp_small_negative(value, "gqd")
}

/// Maximal correlation through the requested route.
pub fn max_correlation(
    n: &BlochTensor,
    choice: MethodChoice,
    config: &OptimizerConfig,
    grid_steps: usize,
) -> Result<(NormResult, Method)> {
    require_restricted(n)?;
    let nq = n.n_qubits();
    match choice {
        MethodChoice::Exact2 => Ok((injective_norm_exact2(n)?, Method::Exact2)),
        MethodChoice::Hosvd => {
            let t = hosvd_if_diagonal(n).ok_or_else(|| {
                Error::Precondition("tensor is not HOSVD-diagonal at tolerance 1e-8".into())
            })?;
            Ok((hosvd_norm(n, &t)?, Method::HosvdDiagonal))
        }
        MethodChoice::Meanfield => Ok((injective_norm_meanfield(n, config)?, Method::Meanfield)),
        MethodChoice::Bruteforce => Ok((injective_norm_bruteforce(n, grid_steps)?, Method::Bruteforce)),
        MethodChoice::Auto if nq == 2 => Ok((injective_norm_exact2(n)?, Method::Exact2)),
        MethodChoice::Auto => match hosvd_if_diagonal(n) {
            Some(t) => Ok((hosvd_norm(n, &t)?, Method::HosvdDiagonal)),
            None => Ok((injective_norm_meanfield(n, config)?, Method::Meanfield)),
        },
    }
}

/// Both discord measures of a restricted state.
pub fn compute(
    n: &BlochTensor,
    choice: MethodChoice,
    config: &OptimizerConfig,
    grid_steps: usize,
) -> Result<DiscordResult> {
    let (physical, min) = physicality(n);
    if !physical {
        return Err(Error::InvalidState(format!(
            "state is unphysical (minimum eigenvalue {min:e})"
        )));
    }
    let (norm, method) = max_correlation(n, choice, config, grid_steps)?;
    let gg = ggqd(n, &norm)?;
    let g = if n.n_qubits() <= GQD_MAX_QUBITS {
        Some(gqd(&density_from_bloch(n), n, &norm)?)
    } else {
        None
    };
    Ok(DiscordResult {
        ggqd: gg,
        gqd: g,
        max_c: norm.value,
        optimal_frame: norm.frame,
        method,
    })
}

/// Two-qubit correlation matrix shortcut used by trajectories.
pub fn ggqd_of_two_qubit_tensor(n: &BlochTensor) -> f64 {
    ggqd_two_qubit(&matrix_of(n))
}
