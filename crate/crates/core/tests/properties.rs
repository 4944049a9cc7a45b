use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bloch_discord::decompose::svd3;
use bloch_discord::discord::{compute, MethodChoice};
use bloch_discord::dynamics::phase_flip;
use bloch_discord::maxsat::{encode, encode_satisfying_sum, eval_energy, SatInstance};
use bloch_discord::montecarlo::sample_rotation;
use bloch_discord::qstate::{
    bloch_from_density, density_from_bloch, digits_of, marginal, physicality, pow4, shrink_to_physical,
    von_neumann_entropy, BlochTensor,
};
use bloch_discord::tensor_norm::OptimizerConfig;

fn physical(nq: usize, coeffs: Vec<f64>) -> BlochTensor {
    let mut c = vec![0.0];
    c.extend(coeffs);
    shrink_to_physical(&BlochTensor::from_dense(nq, c).unwrap()).0
}

fn general(nq: usize) -> impl Strategy<Value = BlochTensor> {
    prop::collection::vec(-1.0..1.0f64, pow4(nq) - 1).prop_map(move |c| physical(nq, c))
}

fn restricted(nq: usize) -> impl Strategy<Value = BlochTensor> {
    prop::collection::vec(-1.0..1.0f64, 3usize.pow(nq as u32)).prop_map(move |v| {
        shrink_to_physical(&BlochTensor::from_restricted(nq, &v).unwrap()).0
    })
}

fn matrix() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-2.0..2.0f64).prop_map(|a| Matrix3::from_row_slice(&a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bloch_density_round_trip(n in (1usize..=3).prop_flat_map(general)) {
        let back = bloch_from_density(&density_from_bloch(&n)).unwrap();
        for (a, b) in n.coeffs().iter().zip(back.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn restricted_marginals_are_maximally_mixed(n in (2usize..=3).prop_flat_map(restricted)) {
        let rho = density_from_bloch(&n);
        for q in 0..n.n_qubits() {
            let m = marginal(&rho, &[q]).unwrap();
            let d = m.matrix();
            prop_assert!((d[(0, 0)].re - 0.5).abs() <= 1e-12 && (d[(1, 1)].re - 0.5).abs() <= 1e-12);
            prop_assert!(d[(0, 1)].norm() <= 1e-12);
        }
    }

    #[test]
    fn entropy_is_local_unitary_invariant(n in general(2), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rots: Vec<_> = (0..2).map(|_| sample_rotation(&mut rng)).collect();
        let a = von_neumann_entropy(&density_from_bloch(&n)).unwrap();
        let b = von_neumann_entropy(&density_from_bloch(&n.rotate_sites(&rots))).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn svd3_reconstructs_with_proper_factors(m in matrix()) {
        let s = svd3(&m);
        prop_assert!((s.reconstruct() - m).abs().max() <= 1e-12);
        for f in [&s.left, &s.right] {
            prop_assert!((f.transpose() * *f - Matrix3::identity()).abs().max() <= 1e-12);
            prop_assert!((f.determinant() - 1.0).abs() <= 1e-12);
        }
        let d = s.magnitudes();
        prop_assert!(d[0] >= d[1] && d[1] >= d[2]);
    }

    #[test]
    fn phase_flip_keeps_protected_parts_and_physicality(n in (1usize..=3).prop_flat_map(general), p in 0.0..=0.5f64) {
        let out = phase_flip(&n, p).unwrap();
        let nq = n.n_qubits();
        for i in 1..pow4(nq) {
            if digits_of(i, nq).iter().all(|&d| d == 0 || d == 3) {
                prop_assert_eq!(out.get(i), n.get(i));
            }
        }
        prop_assert!(physicality(&out).0);
    }

    #[test]
    fn discord_is_nonnegative(n in (2usize..=3).prop_flat_map(restricted)) {
        let r = compute(&n, MethodChoice::Auto, &OptimizerConfig::default(), 30).unwrap();
        prop_assert!(r.ggqd >= 0.0);
        prop_assert!(r.gqd.unwrap() >= -1e-9);
    }

    #[test]
    fn sat_encodings_agree_and_count_clauses(
        clauses in prop::collection::vec(prop::collection::btree_map(1usize..=6, any::<bool>(), 1..=3), 1..12),
        mask in 0u32..64,
    ) {
        let signed: Vec<Vec<i64>> = clauses
            .iter()
            .map(|c| c.iter().map(|(&v, &neg)| if neg { -(v as i64) } else { v as i64 }).collect())
            .collect();
        let refs: Vec<&[i64]> = signed.iter().map(Vec::as_slice).collect();
        let inst = SatInstance::from_signed(6, &refs).unwrap();
        let a = encode(&inst).unwrap();
        let b = encode_satisfying_sum(&inst).unwrap();
        prop_assert!((a.constant - b.constant).abs() <= 1e-12);
        for key in a.coeffs.keys().chain(b.coeffs.keys()) {
            let x = a.coeffs.get(key).copied().unwrap_or(0.0);
            let y = b.coeffs.get(key).copied().unwrap_or(0.0);
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let assignment: Vec<bool> = (0..6).map(|j| mask >> j & 1 == 1).collect();
        let spins: Vec<i8> = assignment.iter().map(|&t| if t { 1 } else { -1 }).collect();
        let satisfied = inst.satisfied_count(&assignment).unwrap() as f64;
        prop_assert_eq!(-eval_energy(&a, &spins).unwrap(), satisfied);
    }
}
