//! N-qubit states in density-matrix and generalized-Bloch form.
//!
//! A Bloch multi-index `a ∈ {0,1,2,3}^N` is stored as a base-4 integer whose
//! most significant digit belongs to qubit 1 (index 0 in the API). Basis
//! states of the density matrix use the matching bit order: qubit 1 is the
//! most significant bit, so `σ_{a_1} ⊗ … ⊗ σ_{a_N}` is an ordinary Kronecker
//! product.

use nalgebra::{Complex, DMatrix, Matrix3};

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Hermiticity and trace tolerance for [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue still considered positive semidefinite.
pub const PHYSICAL_TOL: f64 = -1e-10;
/// Entropy evaluation refuses eigenvalues below this.
pub const ENTROPY_NEG_TOL: f64 = -1e-8;
/// Zero tolerance for the restricted-subspace check.
pub const RESTRICTED_TOL: f64 = 1e-12;
/// Unit-norm tolerance for measurement directions.
pub const FRAME_TOL: f64 = 1e-12;

const ZERO: C64 = Complex { re: 0.0, im: 0.0 };

/// `4^n` without overflow checks; callers keep `n` small.
pub fn pow4(n: usize) -> usize {
    1usize << (2 * n)
}

/// `3^n`.
pub fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

/// Digit of `index` belonging to `qubit` (0-based, qubit 0 most significant).
#[inline]
pub fn digit(index: usize, n_qubits: usize, qubit: usize) -> usize {
    (index >> (2 * (n_qubits - 1 - qubit))) & 3
}

/// Base-4 digits of a multi-index, qubit 0 first.
pub fn digits_of(index: usize, n_qubits: usize) -> Vec<usize> {
    (0..n_qubits).map(|q| digit(index, n_qubits, q)).collect()
}

/// Packs base-4 digits (qubit 0 first) into a multi-index.
pub fn index_from_digits(digits: &[usize]) -> usize {
    digits.iter().fold(0, |acc, &d| (acc << 2) | (d & 3))
}

/// Parses the textual form used in files, e.g. `"13"` for `n_{13}`.
pub fn parse_index(text: &str, n_qubits: usize) -> Result<usize> {
    if text.len() != n_qubits {
        return Err(Error::Parse(format!(
            "multi-index {text:?} must have exactly {n_qubits} base-4 digits"
        )));
    }
    let mut index = 0usize;
    for ch in text.chars() {
        let d = ch
            .to_digit(4)
            .ok_or_else(|| Error::Parse(format!("multi-index {text:?} has a non base-4 digit")))?;
        index = (index << 2) | d as usize;
    }
    Ok(index)
}

/// Inverse of [`parse_index`].
pub fn format_index(index: usize, n_qubits: usize) -> String {
    digits_of(index, n_qubits)
        .into_iter()
        .map(|d| char::from(b'0' + d as u8))
        .collect()
}

/// Real coefficients `n_a` of a state in the tensor-product Pauli basis.
///
/// Stored densely over all `4^N` multi-indices; the identity slot (index 0)
/// is always zero here because the identity coefficient is fixed at 1 and
/// is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTensor {
    n_qubits: usize,
    coeffs: Vec<f64>,
}

impl BlochTensor {
    pub fn zeros(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "a Bloch tensor needs at least one qubit");
        Self {
            n_qubits,
            coeffs: vec![0.0; pow4(n_qubits)],
        }
    }

    /// Builds a tensor from a dense `4^N` table. The identity slot must be zero.
    pub fn from_dense(n_qubits: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Argument("n_qubits must be positive".into()));
        }
        if coeffs.len() != pow4(n_qubits) {
            return Err(Error::Argument(format!(
                "expected {} coefficients for {} qubits, got {}",
                pow4(n_qubits),
                n_qubits,
                coeffs.len()
            )));
        }
        if coeffs[0] != 0.0 {
            return Err(Error::Argument(
                "the all-zero multi-index is implicit and must not be set".into(),
            ));
        }
        if let Some(bad) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Argument(format!(
                "coefficient {} is not finite",
                format_index(bad, n_qubits)
            )));
        }
        Ok(Self { n_qubits, coeffs })
    }

    /// Builds a restricted tensor from its `3^N` nonzero-digit block, with the
    /// block laid out in base 3 (digit value `k` meaning Pauli `k + 1`).
    pub fn from_restricted(n_qubits: usize, values: &[f64]) -> Result<Self> {
        if values.len() != pow3(n_qubits) {
            return Err(Error::Argument(format!(
                "expected {} restricted coefficients, got {}",
                pow3(n_qubits),
                values.len()
            )));
        }
        let mut t = Self::zeros(n_qubits);
        for (pos, &v) in values.iter().enumerate() {
            t.coeffs[restricted_to_full(pos, n_qubits)] = v;
        }
        Ok(t)
    }

    /// Two-qubit restricted tensor `n_{ij}` with `i, j ∈ {1,2,3}`.
    pub fn from_matrix3(m: &Matrix3<f64>) -> Self {
        let mut t = Self::zeros(2);
        for i in 0..3 {
            for j in 0..3 {
                t.coeffs[index_from_digits(&[i + 1, j + 1])] = m[(i, j)];
            }
        }
        t
    }

    /// Two-qubit diagonal tensor `diag(n11, n22, n33)`.
    pub fn diagonal2(d: [f64; 3]) -> Self {
        Self::from_matrix3(&Matrix3::from_diagonal(&d.into()))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Dense `4^N` table; slot 0 is the (implicit) identity and reads zero.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, index: usize) -> f64 {
        self.coeffs[index]
    }

    pub fn get_digits(&self, digits: &[usize]) -> f64 {
        self.coeffs[index_from_digits(digits)]
    }

    /// Sets `n_a`. Panics on the identity slot, which is not a free coefficient.
    pub fn set(&mut self, index: usize, value: f64) {
        assert!(index != 0, "the all-zero multi-index is implicit");
        self.coeffs[index] = value;
    }

    pub fn set_digits(&mut self, digits: &[usize], value: f64) {
        assert_eq!(digits.len(), self.n_qubits);
        self.set(index_from_digits(digits), value);
    }

    /// The `3^N` block with every digit nonzero, base-3 ordered, qubit 0 most significant.
    pub fn restricted_values(&self) -> Vec<f64> {
        (0..pow3(self.n_qubits))
            .map(|pos| self.coeffs[restricted_to_full(pos, self.n_qubits)])
            .collect()
    }

    /// True when every coefficient with a zero digit vanishes within `tol`.
    pub fn is_restricted(&self, tol: f64) -> bool {
        self.coeffs.iter().enumerate().all(|(index, &c)| {
            has_all_nonzero_digits(index, self.n_qubits) || c.abs() <= tol
        })
    }

    /// `Σ_a n_a²` over the non-identity coefficients.
    pub fn norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Nonzero entries as `(multi-index, value)`.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i, *c))
    }

    /// Applies a proper rotation to the Pauli components of each site:
    /// `n'_{..i..} = Σ_j R_{ij} n_{..j..}` on digits 1..3, digit 0 untouched.
    /// This is conjugation of the state by a product of local unitaries.
    pub fn rotate_sites(&self, rotations: &[Matrix3<f64>]) -> Self {
        assert_eq!(rotations.len(), self.n_qubits);
        let n = self.n_qubits;
        let mut cur = self.coeffs.clone();
        for (q, rot) in rotations.iter().enumerate() {
            let stride = 1usize << (2 * (n - 1 - q));
            let mut next = cur.clone();
            for index in 0..cur.len() {
                let d = digit(index, n, q);
                if d == 0 {
                    continue;
                }
                let base = index - d * stride;
                let mut acc = 0.0;
                for j in 1..4 {
                    acc += rot[(d - 1, j - 1)] * cur[base + j * stride];
                }
                next[index] = acc;
            }
            cur = next;
        }
        cur[0] = 0.0;
        Self {
            n_qubits: n,
            coeffs: cur,
        }
    }

    /// Multilinear contraction `C = Σ_a n_a Π_i Θ_{i,a_i}` with `Θ_{i,0} := 1`.
    pub fn contract(&self, frame: &MeasurementFrame) -> f64 {
        assert_eq!(frame.len(), self.n_qubits, "frame size must match qubit count");
        let vecs = frame.homogeneous();
        contract_all(&self.coeffs, &vecs)
    }

    /// Contraction over every site except `site`, returned per digit of that
    /// site: `C = out[0] + Σ_{d=1..3} out[d] Θ_{site,d}`.
    pub fn contract_except(&self, frame: &MeasurementFrame, site: usize) -> [f64; 4] {
        assert_eq!(frame.len(), self.n_qubits, "frame size must match qubit count");
        let vecs = frame.homogeneous();
        contract_skipping(&self.coeffs, &vecs, site)
    }
}

/// Full multi-index of the `pos`-th entry of a restricted (`3^N`) table laid
/// out in base 3 with qubit 0 most significant; base-3 digit `k` is Pauli `k + 1`.
pub fn restricted_to_full(pos: usize, n_qubits: usize) -> usize {
    let mut rest = pos;
    let mut index = 0usize;
    for q in (0..n_qubits).rev() {
        let d = rest % 3;
        rest /= 3;
        index |= (d + 1) << (2 * (n_qubits - 1 - q));
    }
    index
}

fn has_all_nonzero_digits(index: usize, n_qubits: usize) -> bool {
    (0..n_qubits).all(|q| digit(index, n_qubits, q) != 0)
}

fn contract_last(t: &[f64], v: &[f64; 4]) -> Vec<f64> {
    t.chunks_exact(4)
        .map(|c| c[0] * v[0] + c[1] * v[1] + c[2] * v[2] + c[3] * v[3])
        .collect()
}

fn contract_first(t: &[f64], v: &[f64; 4]) -> Vec<f64> {
    let rest = t.len() / 4;
    (0..rest)
        .map(|r| (0..4).map(|d| v[d] * t[d * rest + r]).sum())
        .collect()
}

pub(crate) fn contract_all(coeffs: &[f64], vecs: &[[f64; 4]]) -> f64 {
    let mut cur: Vec<f64> = coeffs.to_vec();
    for v in vecs.iter().rev() {
        cur = contract_last(&cur, v);
    }
    cur[0]
}

pub(crate) fn contract_skipping(coeffs: &[f64], vecs: &[[f64; 4]], site: usize) -> [f64; 4] {
    let n = vecs.len();
    assert!(site < n, "site {site} out of range for {n} qubits");
    let mut cur: Vec<f64> = coeffs.to_vec();
    for v in vecs[site + 1..].iter().rev() {
        cur = contract_last(&cur, v);
    }
    for v in &vecs[..site] {
        cur = contract_first(&cur, v);
    }
    [cur[0], cur[1], cur[2], cur[3]]
}

/// One unit 3-vector per qubit: the local projective measurement directions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    angles: Vec<[f64; 3]>,
}

impl MeasurementFrame {
    /// Validates that every direction is a unit vector within [`FRAME_TOL`].
    pub fn new(angles: Vec<[f64; 3]>) -> Result<Self> {
        for (i, v) in angles.iter().enumerate() {
            let norm = norm3(v);
            if !norm.is_finite() || (norm - 1.0).abs() > FRAME_TOL {
                return Err(Error::Argument(format!(
                    "direction {i} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { angles })
    }

    /// Normalizes each direction; zero vectors are rejected.
    pub fn normalized(directions: Vec<[f64; 3]>) -> Result<Self> {
        let mut angles = Vec::with_capacity(directions.len());
        for (i, v) in directions.into_iter().enumerate() {
            let norm = norm3(&v);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::Argument(format!("direction {i} cannot be normalized")));
            }
            angles.push([v[0] / norm, v[1] / norm, v[2] / norm]);
        }
        Ok(Self { angles })
    }

    /// Same direction on every site.
    pub fn uniform(n_qubits: usize, direction: [f64; 3]) -> Result<Self> {
        Self::normalized(vec![direction; n_qubits])
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn site(&self, i: usize) -> [f64; 3] {
        self.angles[i]
    }

    pub fn sites(&self) -> &[[f64; 3]] {
        &self.angles
    }

    pub(crate) fn set_site(&mut self, i: usize, v: [f64; 3]) {
        self.angles[i] = v;
    }

    /// `(1, Θ_x, Θ_y, Θ_z)` per site, matching Pauli digits 0..3.
    pub(crate) fn homogeneous(&self) -> Vec<[f64; 4]> {
        self.angles.iter().map(|v| [1.0, v[0], v[1], v[2]]).collect()
    }

    /// Applies `Θ_i → R_i Θ_i` on every site.
    pub fn rotated(&self, rotations: &[Matrix3<f64>]) -> Self {
        let angles = self
            .angles
            .iter()
            .zip(rotations)
            .map(|(v, r)| {
                let w = r * nalgebra::Vector3::new(v[0], v[1], v[2]);
                [w[0], w[1], w[2]]
            })
            .collect();
        Self { angles }
    }
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// A `2^N × 2^N` Hermitian, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(n_qubits: usize, data: DMatrix<C64>) -> Result<Self> {
        let rho = Self::hermitian(n_qubits, data)?;
        let min = rho.min_eigenvalue();
        if min < PHYSICAL_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semidefinite (minimum eigenvalue {min:e})"
            )));
        }
        Ok(rho)
    }

    /// Validates Hermiticity and unit trace only. Positivity is the caller's concern.
    pub fn hermitian(n_qubits: usize, data: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if n_qubits == 0 || data.nrows() != dim || data.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "expected a {dim}×{dim} matrix for {n_qubits} qubits, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        check_hermitian_unit_trace(&data)?;
        Ok(Self { n_qubits, data })
    }

    /// Projector onto a pure state given by its (not necessarily normalized) amplitudes.
    pub fn pure(n_qubits: usize, amplitudes: &[C64]) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::InvalidState(format!(
                "expected {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi: Vec<C64> = amplitudes.iter().map(|a| a / norm).collect();
        let data = DMatrix::from_fn(dim, dim, |r, c| psi[r] * psi[c].conj());
        Self::new(n_qubits, data)
    }

    /// `I / 2^N`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let data = DMatrix::from_diagonal_element(dim, dim, C64::new(1.0 / dim as f64, 0.0));
        Self { n_qubits, data }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.data.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= PHYSICAL_TOL
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            data: self.data.kronecker(&other.data),
        }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.data - &other.data).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_hermitian_unit_trace(data: &DMatrix<C64>) -> Result<()> {
    let dim = data.nrows();
    let mut worst = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            worst = worst.max((data[(r, c)] - data[(c, r)].conj()).norm());
        }
    }
    if !worst.is_finite() || worst > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!(
            "matrix is not Hermitian (max deviation {worst:e})"
        )));
    }
    let trace = data.trace();
    if (trace.re - 1.0).abs() > HERMITIAN_TOL || trace.im.abs() > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!(
            "trace is {} + {}i, expected 1",
            trace.re, trace.im
        )));
    }
    Ok(())
}

/// Nonzero element of a Pauli string in column `col`: returns `(row, value)`.
/// Every Pauli string has exactly one nonzero per column.
#[inline]
fn pauli_column(index: usize, n_qubits: usize, col: usize) -> (usize, C64) {
    let mut row = col;
    let mut value = C64::new(1.0, 0.0);
    for q in 0..n_qubits {
        let bit = 1usize << (n_qubits - 1 - q);
        let c = (col & bit != 0) as usize;
        match digit(index, n_qubits, q) {
            0 => {}
            1 => row ^= bit,
            2 => {
                row ^= bit;
                // σ_y = [[0, -i], [i, 0]]: column 0 carries +i, column 1 carries -i.
                value *= if c == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) };
            }
            _ => {
                if c == 1 {
                    value = -value;
                }
            }
        }
    }
    (row, value)
}

/// `n_a = Tr(ρ O_a)` for every non-identity Pauli string.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochTensor> {
    let n = rho.n_qubits;
    let dim = 1usize << n;
    if rho.data.nrows() != dim || rho.data.ncols() != dim {
        return Err(Error::InvalidState("density matrix has the wrong dimension".into()));
    }
    check_hermitian_unit_trace(&rho.data)?;
    let mut coeffs = vec![0.0; pow4(n)];
    for (index, slot) in coeffs.iter_mut().enumerate().skip(1) {
        // Tr(ρ O) = Σ_c Σ_r ρ[c][r] O[r][c]
        let mut acc = ZERO;
        for col in 0..dim {
            let (row, value) = pauli_column(index, n, col);
            acc += rho.data[(col, row)] * value;
        }
        if acc.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!(
                "coefficient {} has imaginary part {:e}",
                format_index(index, n),
                acc.im
            )));
        }
        *slot = acc.re;
    }
    BlochTensor::from_dense(n, coeffs)
}

/// `ρ = 2^{-N} (I + Σ_a n_a O_a)`. Hermitian with unit trace; positivity is not checked.
pub fn density_from_bloch(n: &BlochTensor) -> DensityMatrix {
    let nq = n.n_qubits;
    let dim = 1usize << nq;
    let scale = 1.0 / dim as f64;
    let mut data = DMatrix::from_diagonal_element(dim, dim, C64::new(scale, 0.0));
    for (index, value) in n.nonzero_entries() {
        for col in 0..dim {
            let (row, op) = pauli_column(index, nq, col);
            data[(row, col)] += op * (value * scale);
        }
    }
    DensityMatrix {
        n_qubits: nq,
        data,
    }
}

/// Whether `density_from_bloch(n)` is positive semidefinite, with its minimum eigenvalue.
pub fn physicality(n: &BlochTensor) -> (bool, f64) {
    let min = density_from_bloch(n).min_eigenvalue();
    (min >= PHYSICAL_TOL, min)
}

/// Largest `t ∈ (0, 1]` with `density_from_bloch(t·n)` positive semidefinite,
/// and the scaled tensor.
///
/// The spectrum of `2^{-N}(I + t P)` is `(1 + t μ)/2^N` for the eigenvalues `μ`
/// of `P = Σ n_a O_a`, so `t* = min(1, -1/μ_min)`.
pub fn shrink_to_physical(n: &BlochTensor) -> (BlochTensor, f64) {
    let dim = (1usize << n.n_qubits) as f64;
    let mu_min = density_from_bloch(n).min_eigenvalue() * dim - 1.0;
    let t = if mu_min < -1.0 { -1.0 / mu_min } else { 1.0 };
    if t == 1.0 {
        (n.clone(), 1.0)
    } else {
        (n.scaled(t), t)
    }
}

/// Partial trace onto the qubits in `keep` (0-based, any order; the result
/// orders them ascending).
pub fn marginal(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits;
    if keep.is_empty() {
        return Err(Error::Argument("marginal needs at least one kept qubit".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&q| q >= n) {
        return Err(Error::Argument(format!(
            "keep set {keep:?} is not a set of qubit indices below {n}"
        )));
    }
    let k = kept.len();
    let dim = 1usize << n;
    let kept_mask: usize = kept.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    let reduce = |full: usize| -> usize {
        kept.iter()
            .fold(0usize, |acc, &q| (acc << 1) | ((full >> (n - 1 - q)) & 1))
    };
    let mut out = DMatrix::from_element(1 << k, 1 << k, ZERO);
    for r in 0..dim {
        for c in 0..dim {
            if (r & !kept_mask) != (c & !kept_mask) {
                continue;
            }
            out[(reduce(r), reduce(c))] += rho.data[(r, c)];
        }
    }
    Ok(DensityMatrix {
        n_qubits: k,
        data: out,
    })
}

/// Shannon entropy in bits of a probability list, with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `S(ρ) = -Σ λ log₂ λ` in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let ev = rho.eigenvalues();
    if ev[0] < ENTROPY_NEG_TOL {
        return Err(Error::InvalidState(format!(
            "negative eigenvalue {:e} in entropy evaluation",
            ev[0]
        )));
    }
    Ok(shannon_entropy(&ev))
}

/// `Σ_i S(ρ_i) - S(ρ)` over single-qubit marginals.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    let mut total = 0.0;
    for q in 0..rho.n_qubits {
        total += von_neumann_entropy(&marginal(rho, &[q])?)?;
    }
    Ok(total - von_neumann_entropy(rho)?)
}

fn pauli_dot(v: &[f64; 3]) -> [[C64; 2]; 2] {
    [
        [C64::new(v[2], 0.0), C64::new(v[0], -v[1])],
        [C64::new(v[0], v[1]), C64::new(-v[2], 0.0)],
    ]
}

// m → (S on qubit q) · m
fn apply_local_left(m: &DMatrix<C64>, q: usize, n: usize, s: &[[C64; 2]; 2]) -> DMatrix<C64> {
    let bit = 1usize << (n - 1 - q);
    let mut out = m.clone();
    for r0 in (0..m.nrows()).filter(|r| r & bit == 0) {
        let r1 = r0 | bit;
        for c in 0..m.ncols() {
            let a = m[(r0, c)];
            let b = m[(r1, c)];
            out[(r0, c)] = s[0][0] * a + s[0][1] * b;
            out[(r1, c)] = s[1][0] * a + s[1][1] * b;
        }
    }
    out
}

// m → m · (S on qubit q)
fn apply_local_right(m: &DMatrix<C64>, q: usize, n: usize, s: &[[C64; 2]; 2]) -> DMatrix<C64> {
    let bit = 1usize << (n - 1 - q);
    let mut out = m.clone();
    for c0 in (0..m.ncols()).filter(|c| c & bit == 0) {
        let c1 = c0 | bit;
        for r in 0..m.nrows() {
            let a = m[(r, c0)];
            let b = m[(r, c1)];
            out[(r, c0)] = a * s[0][0] + b * s[1][0];
            out[(r, c1)] = a * s[0][1] + b * s[1][1];
        }
    }
    out
}

/// Conjugates qubit `q` by a 2×2 operator: `ρ → A_q ρ A_q†`.
pub(crate) fn conjugate_local(
    rho: &DMatrix<C64>,
    q: usize,
    n: usize,
    a: &[[C64; 2]; 2],
) -> DMatrix<C64> {
    let adj = [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]];
    apply_local_right(&apply_local_left(rho, q, n, a), q, n, &adj)
}

/// `Σ_s P_s ρ P_s` over all `2^N` outcomes of the product projective measurement
/// with `P_± = (I ± Θ_i·σ)/2` on each qubit.
///
/// The sum factorizes per qubit into `ρ → ½(ρ + S ρ S)` with `S = Θ_i·σ`.
pub fn apply_measurement(rho: &DensityMatrix, frame: &MeasurementFrame) -> Result<DensityMatrix> {
    let n = rho.n_qubits;
    if frame.len() != n {
        return Err(Error::Argument(format!(
            "frame has {} directions for {n} qubits",
            frame.len()
        )));
    }
    let mut data = rho.data.clone();
    for (q, v) in frame.sites().iter().enumerate() {
        let s = pauli_dot(v);
        let flipped = conjugate_local(&data, q, n, &s);
        data = (data + flipped) * C64::new(0.5, 0.0);
    }
    Ok(DensityMatrix { n_qubits: n, data })
}

/// Eigenvalues of the measured restricted state: `2^{-N}(1 ± C)`, each `2^{N-1}`-fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostMeasurementSpectrum {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub degeneracy: usize,
}

pub fn post_measurement_spectrum(
    n: &BlochTensor,
    frame: &MeasurementFrame,
) -> Result<PostMeasurementSpectrum> {
    if !n.is_restricted(RESTRICTED_TOL) {
        return Err(Error::Precondition(
            "post-measurement spectrum requires a restricted Bloch tensor".into(),
        ));
    }
    if frame.len() != n.n_qubits {
        return Err(Error::Argument("frame size does not match the tensor".into()));
    }
    let c = n.contract(frame);
    let scale = 1.0 / (1usize << n.n_qubits) as f64;
    Ok(PostMeasurementSpectrum {
        lambda_plus: scale * (1.0 + c),
        lambda_minus: scale * (1.0 - c),
        degeneracy: 1usize << (n.n_qubits - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_phi_plus() -> DensityMatrix {
        let s = C64::new(1.0, 0.0);
        DensityMatrix::pure(2, &[s, ZERO, ZERO, s]).unwrap()
    }

    #[test]
    fn index_text_round_trip() {
        let i = parse_index("1302", 4).unwrap();
        assert_eq!(digits_of(i, 4), vec![1, 3, 0, 2]);
        assert_eq!(format_index(i, 4), "1302");
        assert!(parse_index("14", 2).is_err());
        assert!(parse_index("1", 2).is_err());
    }

    #[test]
    fn maximally_mixed_has_zero_bloch_vector() {
        for n in 1..=3 {
            let b = bloch_from_density(&DensityMatrix::maximally_mixed(n)).unwrap();
            assert!(b.coeffs().iter().all(|c| c.abs() < 1e-15));
        }
    }

    #[test]
    fn bell_state_bloch_components() {
        let b = bloch_from_density(&bell_phi_plus()).unwrap();
        for (index, v) in b.coeffs().iter().enumerate() {
            let expected = match format_index(index, 2).as_str() {
                "11" => 1.0,
                "22" => -1.0,
                "33" => 1.0,
                _ => 0.0,
            };
            assert!((v - expected).abs() < 1e-12, "n_{} = {v}", format_index(index, 2));
        }
    }

    #[test]
    fn z_eigenstate() {
        let rho = DensityMatrix::pure(1, &[C64::new(1.0, 0.0), ZERO]).unwrap();
        let b = bloch_from_density(&rho).unwrap();
        assert!((b.get(3) - 1.0).abs() < 1e-15);
        assert!(b.get(1).abs() < 1e-15 && b.get(2).abs() < 1e-15);
    }

    #[test]
    fn zero_tensor_gives_maximally_mixed() {
        let rho = density_from_bloch(&BlochTensor::zeros(3));
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(3)) < 1e-15);
    }

    #[test]
    fn bell_tensor_is_rank_one_projector() {
        let rho = density_from_bloch(&BlochTensor::diagonal2([1.0, -1.0, 1.0]));
        assert!(rho.max_abs_diff(&bell_phi_plus()) < 1e-12);
        let ev = rho.eigenvalues();
        assert!((ev[3] - 1.0).abs() < 1e-12);
        assert!(ev[..3].iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn physicality_examples() {
        let (ok, min) = physicality(&BlochTensor::zeros(2));
        assert!(ok && (min - 0.25).abs() < 1e-15);
        let (ok, min) = physicality(&BlochTensor::diagonal2([1.0, 1.0, 1.0]));
        assert!(!ok);
        assert!((min + 0.5).abs() < 1e-12);
        let (ok, min) = physicality(&BlochTensor::diagonal2([0.4, 0.3, 0.2]));
        assert!(ok && (min - 0.025).abs() < 1e-15);
    }

    #[test]
    fn shrink_lands_on_the_boundary() {
        let n = BlochTensor::diagonal2([1.0, 0.8, 0.6]);
        let (s, t) = shrink_to_physical(&n);
        assert!((t - 1.0 / 2.4).abs() < 1e-12);
        let (ok, min) = physicality(&s);
        assert!(ok && min.abs() < 1e-12);
        let (_, t) = shrink_to_physical(&BlochTensor::diagonal2([0.4, 0.3, 0.2]));
        assert_eq!(t, 1.0);
    }

    #[test]
    fn marginal_cases() {
        let rho = bell_phi_plus();
        let m = marginal(&rho, &[1]).unwrap();
        assert!(m.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-15);

        let a = DensityMatrix::pure(1, &[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let b = DensityMatrix::maximally_mixed(1);
        let ab = a.tensor(&b);
        assert!(marginal(&ab, &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(marginal(&ab, &[1]).unwrap().max_abs_diff(&b) < 1e-15);
        assert!(marginal(&ab, &[0, 1]).unwrap().max_abs_diff(&ab) < 1e-15);
        assert!(matches!(marginal(&ab, &[]), Err(Error::Argument(_))));
        assert!(matches!(marginal(&ab, &[2]), Err(Error::Argument(_))));
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&bell_phi_plus()).unwrap().abs() < 1e-12);
        for n in 1..=3 {
            let s = von_neumann_entropy(&DensityMatrix::maximally_mixed(n)).unwrap();
            assert!((s - n as f64).abs() < 1e-12);
        }
        // Werner mixture: eigenvalues {5/8, 1/8, 1/8, 1/8}.
        let werner = BlochTensor::diagonal2([0.5, -0.5, 0.5]);
        let s = von_neumann_entropy(&density_from_bloch(&werner)).unwrap();
        let expected = -(5.0 / 8.0f64) * (5.0 / 8.0f64).log2() - 3.0 * (1.0 / 8.0) * (1.0 / 8.0f64).log2();
        assert!((s - expected).abs() < 1e-12);
        let bad = density_from_bloch(&BlochTensor::diagonal2([1.0, 1.0, 1.0]));
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::InvalidState(_))));
    }

    #[test]
    fn mutual_information_examples() {
        let a = DensityMatrix::pure(1, &[C64::new(0.6, 0.0), C64::new(0.8, 0.0)]).unwrap();
        let b = density_from_bloch(&{
            let mut t = BlochTensor::zeros(1);
            t.set(1, 0.3);
            t
        });
        assert!(mutual_information(&a.tensor(&b)).unwrap().abs() < 1e-12);
        assert!((mutual_information(&bell_phi_plus()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_examples() {
        let z = MeasurementFrame::uniform(2, [0.0, 0.0, 1.0]).unwrap();
        let measured = apply_measurement(&bell_phi_plus(), &z).unwrap();
        let expected = DMatrix::from_fn(4, 4, |r, c| {
            if r == c && (r == 0 || r == 3) {
                C64::new(0.5, 0.0)
            } else {
                ZERO
            }
        });
        assert!((measured.matrix() - expected).iter().all(|e| e.norm() < 1e-15));
        // Already diagonal in the z basis.
        let again = apply_measurement(&measured, &z).unwrap();
        assert!(again.max_abs_diff(&measured) < 1e-15);
    }

    #[test]
    fn spectrum_examples() {
        let z = MeasurementFrame::uniform(2, [0.0, 0.0, 1.0]).unwrap();
        let s = post_measurement_spectrum(&BlochTensor::zeros(2), &z).unwrap();
        assert_eq!((s.lambda_plus, s.lambda_minus, s.degeneracy), (0.25, 0.25, 2));
        let s = post_measurement_spectrum(&BlochTensor::diagonal2([1.0, -1.0, 1.0]), &z).unwrap();
        assert!((s.lambda_plus - 0.5).abs() < 1e-15 && s.lambda_minus.abs() < 1e-15);
        let mut general = BlochTensor::zeros(2);
        general.set_digits(&[0, 3], 0.2);
        assert!(matches!(
            post_measurement_spectrum(&general, &z),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn frame_validation() {
        assert!(MeasurementFrame::new(vec![[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]]).is_ok());
        assert!(MeasurementFrame::new(vec![[1.0, 0.1, 0.0]]).is_err());
        assert!(MeasurementFrame::normalized(vec![[0.0; 3]]).is_err());
    }

    #[test]
    fn restricted_layout() {
        let values: Vec<f64> = (0..27).map(|i| i as f64 + 1.0).collect();
        let t = BlochTensor::from_restricted(3, &values).unwrap();
        assert!(t.is_restricted(0.0));
        assert_eq!(t.get_digits(&[1, 1, 1]), 1.0);
        assert_eq!(t.get_digits(&[1, 1, 2]), 2.0);
        assert_eq!(t.get_digits(&[2, 1, 1]), 10.0);
        assert_eq!(t.restricted_values(), values);
        assert_eq!(format_index(restricted_to_full(5, 2), 2), "23");
    }

    #[test]
    fn from_dense_rejects_identity_slot() {
        let mut c = vec![0.0; 16];
        c[0] = 1.0;
        assert!(BlochTensor::from_dense(2, c).is_err());
        assert!(BlochTensor::from_dense(2, vec![0.0; 15]).is_err());
    }
}
