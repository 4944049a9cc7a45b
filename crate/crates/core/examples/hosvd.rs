//! HOSVD of a rotated GHZ-like tensor: the core comes back superdiagonal.

use bloch_discord::decompose::{hosvd_bloch, is_hosvd_diagonal};
use bloch_discord::montecarlo::sample_rotation;
use bloch_discord::qstate::BlochTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bloch_discord::Result<()> {
    let mut n = BlochTensor::zeros(3);
    n.set_digits(&[1, 1, 1], 0.3);
    n.set_digits(&[2, 2, 2], -0.2);
    n.set_digits(&[3, 3, 3], 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rotations: Vec<_> = (0..3).map(|_| sample_rotation(&mut rng)).collect();
    let rotated = n.rotate_sites(&rotations);

    let t = hosvd_bloch(&rotated)?;
    println!("superdiagonal {:?}", t.superdiagonal());
    println!("largest off-diagonal {:.2e}", t.off_diagonal_max());
    println!("diagonal at 1e-8: {}", is_hosvd_diagonal(&t, 1e-8));
    Ok(())
}
