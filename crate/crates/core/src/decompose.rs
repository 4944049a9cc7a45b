//! Signed 3×3 SVD with proper-rotation factors, and HOSVD of tensors whose
//! modes all have size 3.
//!
//! Both are built on a one-sided Jacobi pass that orthogonalizes the three
//! rows of a `3 × m` matrix. For an unfolding this yields the left singular
//! vectors directly; for a 3×3 matrix the orthogonalized rows also give the
//! right singular vectors.

use nalgebra::{Matrix3, Vector3};

use crate::qstate::{pow3, BlochTensor, RESTRICTED_TOL};
use crate::{Error, Result};

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 50;
const TIE_TOL: f64 = 1e-12;

/// `M = left · diag(diag) · rightᵀ` with `left, right ∈ SO(3)` and
/// `|d₁| ≥ |d₂| ≥ |d₃|`. Only `d₃` can be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSvd3 {
    pub left: Matrix3<f64>,
    pub diag: [f64; 3],
    pub right: Matrix3<f64>,
}

impl SignedSvd3 {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.left * Matrix3::from_diagonal(&Vector3::from(self.diag)) * self.right.transpose()
    }

    /// `|d_a|` in descending order.
    pub fn magnitudes(&self) -> [f64; 3] {
        self.diag.map(f64::abs)
    }
}

/// Rotates the three rows of `rows` until they are mutually orthogonal.
/// Returns `Q` with `Q · rows_in = rows_out`.
fn orthogonalize_rows(rows: &mut [Vec<f64>; 3]) -> Matrix3<f64> {
    let mut q = Matrix3::identity();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for (p, r) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha: f64 = rows[p].iter().map(|x| x * x).sum();
            let beta: f64 = rows[r].iter().map(|x| x * x).sum();
            let gamma: f64 = rows[p].iter().zip(&rows[r]).map(|(x, y)| x * y).sum();
            if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            let (head, tail) = rows.split_at_mut(r);
            for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                let (a, b) = (*x, *y);
                *x = c * a - s * b;
                *y = s * a + c * b;
            }
            for k in 0..3 {
                let (a, b) = (q[(p, k)], q[(r, k)]);
                q[(p, k)] = c * a - s * b;
                q[(r, k)] = s * a + c * b;
            }
        }
        if !rotated {
            break;
        }
    }
    q
}

fn first_nonzero_negative(v: &Vector3<f64>) -> bool {
    v.iter()
        .find(|x| x.abs() > TIE_TOL)
        .is_some_and(|x| *x < 0.0)
}

fn lex_cmp(a: &Vector3<f64>, b: &Vector3<f64>) -> std::cmp::Ordering {
    for k in 0..3 {
        match a[k].total_cmp(&b[k]) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Orders `(value, left, extra)` triples by descending value, ties by
/// descending lexicographic order of `left`.
fn canonical_order<T>(items: &mut [(f64, Vector3<f64>, T)]) {
    let scale = items.iter().map(|i| i.0).fold(1.0, f64::max);
    items.sort_by(|a, b| {
        if (a.0 - b.0).abs() <= TIE_TOL * scale {
            lex_cmp(&b.1, &a.1)
        } else {
            b.0.total_cmp(&a.0)
        }
    });
}

/// Fills `None` slots with unit vectors orthogonal to the given ones.
fn complete_basis(vs: [Option<Vector3<f64>>; 3]) -> [Vector3<f64>; 3] {
    let mut out: Vec<Vector3<f64>> = vs.iter().flatten().copied().collect();
    let mut slots = vs;
    for slot in slots.iter_mut().filter(|s| s.is_none()) {
        let fresh = if out.len() == 2 {
            out[0].cross(&out[1]).normalize()
        } else {
            (0..3)
                .map(|k| {
                    let mut e = Vector3::zeros();
                    e[k] = 1.0;
                    for o in &out {
                        e -= *o * o.dot(&e);
                    }
                    e
                })
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .map(|e| e.normalize())
                .expect("three candidates")
        };
        out.push(fresh);
        *slot = Some(fresh);
    }
    slots.map(|s| s.expect("filled"))
}

/// Signed SVD of a 3×3 real matrix with both factors in SO(3).
///
/// Singular values are sorted by magnitude, ties broken by the descending
/// lexicographic order of the left singular vector, whose first nonzero
/// component is made positive. Improper factors get their third column
/// negated together with `d₃`.
pub fn svd3(m: &Matrix3<f64>) -> SignedSvd3 {
    let mut rows = [0, 1, 2].map(|i| m.row(i).iter().copied().collect::<Vec<f64>>());
    let q = orthogonalize_rows(&mut rows);
    let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let smax = norms.iter().copied().fold(0.0, f64::max);

    let mut items: Vec<(f64, Vector3<f64>, Option<Vector3<f64>>)> = (0..3)
        .map(|k| {
            let u = Vector3::new(q[(k, 0)], q[(k, 1)], q[(k, 2)]);
            let v = if norms[k] > 1e-14 * smax && norms[k] > 0.0 {
                Some(Vector3::new(rows[k][0], rows[k][1], rows[k][2]) / norms[k])
            } else {
                None
            };
            let s = if v.is_some() { norms[k] } else { 0.0 };
            (s, u, v)
        })
        .collect();
    for item in items.iter_mut() {
        if first_nonzero_negative(&item.1) {
            item.1 = -item.1;
            item.2 = item.2.map(|v| -v);
        }
    }
    canonical_order(&mut items);

    let vs = complete_basis([items[0].2, items[1].2, items[2].2]);
    let mut left = Matrix3::from_columns(&[items[0].1, items[1].1, items[2].1]);
    let mut right = Matrix3::from_columns(&vs);
    let mut diag = [items[0].0, items[1].0, items[2].0];
    if left.determinant() < 0.0 {
        left.set_column(2, &(-left.column(2)));
        diag[2] = -diag[2];
    }
    if right.determinant() < 0.0 {
        right.set_column(2, &(-right.column(2)));
        diag[2] = -diag[2];
    }
    SignedSvd3 { left, diag, right }
}

/// `n_{i₁…i_N} = Σ_a D_{a₁…a_N} Π_k R^{(k)}_{a_k i_k}` with every `R^{(k)} ∈ SO(3)`.
///
/// Tensors are dense `3^N` tables, base 3, mode 0 most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerDecomposition {
    pub order: usize,
    pub core: Vec<f64>,
    pub factors: Vec<Matrix3<f64>>,
}

impl TuckerDecomposition {
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut cur = self.core.clone();
        for (k, r) in self.factors.iter().enumerate() {
            // n = D ×_k Rᵀ
            cur = mode_product(&cur, self.order, k, &r.transpose());
        }
        cur
    }

    /// `D_{aa…a}` for `a = 0, 1, 2`.
    pub fn superdiagonal(&self) -> [f64; 3] {
        let step: usize = (0..self.order).map(pow3).sum();
        [self.core[0], self.core[step], self.core[2 * step]]
    }

    /// Largest magnitude among core entries off the superdiagonal.
    pub fn off_diagonal_max(&self) -> f64 {
        let step: usize = (0..self.order).map(pow3).sum();
        self.core
            .iter()
            .enumerate()
            .filter(|(i, _)| i % step != 0 || *i / step > 2)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// `out[..a..] = Σ_i m[a][i] · t[..i..]` along mode `k`.
pub fn mode_product(t: &[f64], order: usize, k: usize, m: &Matrix3<f64>) -> Vec<f64> {
    let stride = pow3(order - 1 - k);
    let mut out = vec![0.0; t.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let a = (idx / stride) % 3;
        let base = idx - a * stride;
        *slot = (0..3).map(|i| m[(a, i)] * t[base + i * stride]).sum();
    }
    out
}

/// Rows of the mode-`k` unfolding: row `i` holds every entry with `i_k = i`.
fn unfolding_rows(t: &[f64], order: usize, k: usize) -> [Vec<f64>; 3] {
    let stride = pow3(order - 1 - k);
    let mut rows: [Vec<f64>; 3] = Default::default();
    for (idx, &v) in t.iter().enumerate() {
        rows[(idx / stride) % 3].push(v);
    }
    rows
}

/// Left singular vectors of the mode-`k` unfolding as the rows of a proper rotation.
fn mode_factor(t: &[f64], order: usize, k: usize) -> Matrix3<f64> {
    let mut rows = unfolding_rows(t, order, k);
    let q = orthogonalize_rows(&mut rows);
    let mut items: Vec<(f64, Vector3<f64>, ())> = (0..3)
        .map(|a| {
            let norm = rows[a].iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut u = Vector3::new(q[(a, 0)], q[(a, 1)], q[(a, 2)]);
            if first_nonzero_negative(&u) {
                u = -u;
            }
            (norm, u, ())
        })
        .collect();
    canonical_order(&mut items);
    let mut r = Matrix3::from_rows(&[
        items[0].1.transpose(),
        items[1].1.transpose(),
        items[2].1.transpose(),
    ]);
    if r.determinant() < 0.0 {
        r.set_row(2, &(-r.row(2)));
    }
    r
}

/// Higher-order SVD of a `3^N` tensor (`N ≥ 2`).
///
/// Factors come from the left singular vectors of the mode-`k` unfoldings.
/// For `N = 2` this is [`svd3`] and the core is exactly diagonal.
pub fn hosvd(values: &[f64], order: usize) -> Result<TuckerDecomposition> {
    if order < 2 {
        return Err(Error::Argument("HOSVD needs at least two modes".into()));
    }
    if values.len() != pow3(order) {
        return Err(Error::Argument(format!(
            "expected {} entries for a {order}-mode tensor, got {}",
            pow3(order),
            values.len()
        )));
    }
    if order == 2 {
        let m = Matrix3::from_row_slice(values);
        let svd = svd3(&m);
        let mut core = vec![0.0; 9];
        for a in 0..3 {
            core[4 * a] = svd.diag[a];
        }
        return Ok(TuckerDecomposition {
            order,
            core,
            factors: vec![svd.left.transpose(), svd.right.transpose()],
        });
    }
    let factors: Vec<Matrix3<f64>> = (0..order).map(|k| mode_factor(values, order, k)).collect();
    let mut core = values.to_vec();
    for (k, r) in factors.iter().enumerate() {
        core = mode_product(&core, order, k, r);
    }
    Ok(TuckerDecomposition {
        order,
        core,
        factors,
    })
}

/// HOSVD of the restricted block of a Bloch tensor.
pub fn hosvd_bloch(n: &BlochTensor) -> Result<TuckerDecomposition> {
    if !n.is_restricted(RESTRICTED_TOL) {
        return Err(Error::Precondition(
            "HOSVD applies to restricted Bloch tensors".into(),
        ));
    }
    hosvd(&n.restricted_values(), n.n_qubits())
}

/// True iff every core entry off the superdiagonal has magnitude `≤ tol`.
pub fn is_hosvd_diagonal(t: &TuckerDecomposition, tol: f64) -> bool {
    t.off_diagonal_max() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::sample_rotation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng) -> Matrix3<f64> {
        Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    fn assert_proper(r: &Matrix3<f64>) {
        assert!((r.transpose() * r - Matrix3::identity()).abs().max() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    /// Classical two-sided Jacobi eigenvalue iteration, kept separate from the
    /// one-sided implementation under test.
    fn jacobi_eigenvalues(mut a: Matrix3<f64>) -> [f64; 3] {
        for _ in 0..100 {
            let (mut p, mut q, mut big) = (0, 1, 0.0);
            for i in 0..3 {
                for j in i + 1..3 {
                    if a[(i, j)].abs() > big {
                        big = a[(i, j)].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if big < 1e-300 {
                break;
            }
            let theta = 0.5 * (2.0 * a[(p, q)]).atan2(a[(q, q)] - a[(p, p)]);
            let (s, c) = theta.sin_cos();
            let mut g = Matrix3::identity();
            g[(p, p)] = c;
            g[(q, q)] = c;
            g[(p, q)] = s;
            g[(q, p)] = -s;
            a = g.transpose() * a * g;
        }
        let mut ev = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }

    #[test]
    fn identity_and_signed_diagonal() {
        let svd = svd3(&Matrix3::identity());
        assert_eq!(svd.diag, [1.0, 1.0, 1.0]);
        assert_eq!(svd.left, Matrix3::identity());
        assert_eq!(svd.right, Matrix3::identity());

        let m = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        let svd = svd3(&m);
        assert_eq!(svd.magnitudes(), [1.0, 1.0, 1.0]);
        assert!((svd.reconstruct() - m).abs().max() < 1e-15);
        assert_proper(&svd.left);
        assert_proper(&svd.right);
    }

    #[test]
    fn matches_jacobi_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let m = random_matrix(&mut rng);
            let ev = jacobi_eigenvalues(m.transpose() * m);
            let svd = svd3(&m);
            for k in 0..3 {
                assert!((svd.magnitudes()[k] - ev[k].max(0.0).sqrt()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn invariants_on_many_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..10_000 {
            let mut m = random_matrix(&mut rng);
            if i % 10 == 0 {
                // rank-deficient cases
                let c0 = m.column(0).into_owned();
                m.set_column(2, &(c0 * 2.0));
            }
            if i % 37 == 0 {
                m.set_column(1, &Vector3::zeros());
            }
            let svd = svd3(&m);
            assert!((svd.reconstruct() - m).abs().max() < 1e-12, "{m}");
            assert_proper(&svd.left);
            assert_proper(&svd.right);
            let mag = svd.magnitudes();
            assert!(mag[0] >= mag[1] && mag[1] >= mag[2]);
        }
    }

    #[test]
    fn zero_matrix() {
        let svd = svd3(&Matrix3::zeros());
        assert_eq!(svd.magnitudes(), [0.0; 3]);
        assert_proper(&svd.right);
    }

    #[test]
    fn singular_values_are_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let m = random_matrix(&mut rng);
            let q1 = sample_rotation(&mut rng);
            let q2 = sample_rotation(&mut rng);
            let a = svd3(&m).magnitudes();
            let b = svd3(&(q1 * m * q2.transpose())).magnitudes();
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hosvd_of_matrix_is_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_matrix(&mut rng);
            let values: Vec<f64> = m.transpose().iter().copied().collect();
            let t = hosvd(&values, 2).unwrap();
            assert!(t.off_diagonal_max() <= 1e-10);
            let svd = svd3(&m);
            assert_eq!(t.superdiagonal(), svd.diag);
            let back = t.reconstruct();
            for (a, b) in back.iter().zip(&values) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    fn build(d: [f64; 3], rots: &[Matrix3<f64>]) -> Vec<f64> {
        let order = rots.len();
        let mut core = vec![0.0; pow3(order)];
        let step: usize = (0..order).map(pow3).sum();
        for a in 0..3 {
            core[a * step] = d[a];
        }
        let t = TuckerDecomposition {
            order,
            core,
            factors: rots.to_vec(),
        };
        t.reconstruct()
    }

    #[test]
    fn rank_one_tensor() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rots: Vec<_> = (0..3).map(|_| sample_rotation(&mut rng)).collect();
        let n = build([1.0, 0.0, 0.0], &rots);
        let t = hosvd(&n, 3).unwrap();
        let big: Vec<f64> = t.core.iter().filter(|v| v.abs() > 1e-10).copied().collect();
        assert_eq!(big.len(), 1);
        assert!((big[0].abs() - 1.0).abs() < 1e-12);
        assert!(is_hosvd_diagonal(&t, 1e-10));
    }

    #[test]
    fn construct_then_decompose_recovers_superdiagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for order in 3..=4 {
            for _ in 0..20 {
                let rots: Vec<_> = (0..order).map(|_| sample_rotation(&mut rng)).collect();
                let d = [0.9, -0.5, 0.2];
                let n = build(d, &rots);
                let t = hosvd(&n, order).unwrap();
                assert!(is_hosvd_diagonal(&t, 1e-10), "{}", t.off_diagonal_max());
                let mut got = t.superdiagonal().map(f64::abs);
                got.sort_by(|a, b| b.total_cmp(a));
                for k in 0..3 {
                    assert!((got[k] - d[k].abs()).abs() < 1e-10);
                }
                for r in &t.factors {
                    assert_proper(r);
                }
                for (a, b) in t.reconstruct().iter().zip(&n) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn all_orthogonality_of_core() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for order in 3..=4 {
            for _ in 0..20 {
                let n: Vec<f64> = (0..pow3(order)).map(|_| rng.random_range(-1.0..1.0)).collect();
                let t = hosvd(&n, order).unwrap();
                for (a, b) in t.reconstruct().iter().zip(&n) {
                    assert!((a - b).abs() < 1e-10);
                }
                for k in 0..order {
                    let rows = unfolding_rows(&t.core, order, k);
                    for i in 0..3 {
                        for j in i + 1..3 {
                            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(x, y)| x * y).sum();
                            assert!(dot.abs() < 1e-8);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_check_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let n: Vec<f64> = (0..27).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(!is_hosvd_diagonal(&hosvd(&n, 3).unwrap(), 1e-8));
        }
        let tol = 1e-6;
        let mut core = vec![0.0; 27];
        core[0] = 1.0;
        core[13] = 0.5;
        core[5] = 2.0 * tol;
        let t = TuckerDecomposition {
            order: 3,
            core,
            factors: vec![Matrix3::identity(); 3],
        };
        assert!(!is_hosvd_diagonal(&t, tol));
        assert!(is_hosvd_diagonal(&t, 3.0 * tol));
    }
}
