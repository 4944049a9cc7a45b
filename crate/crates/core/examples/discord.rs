//! Discord of a Bell state and of a random three-qubit state.
//!
//! ```text
//! cargo run --example discord
//! ```

use bloch_discord::discord::{compute, MethodChoice};
use bloch_discord::qstate::{bloch_from_density, shrink_to_physical, BlochTensor, DensityMatrix, C64};
use bloch_discord::tensor_norm::OptimizerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bloch_discord::Result<()> {
    let h = 0.5f64.sqrt();
    let zero = C64::new(0.0, 0.0);
    let bell = DensityMatrix::pure(2, &[C64::new(h, 0.0), zero, zero, C64::new(h, 0.0)])?;
    let n = bloch_from_density(&bell)?;
    let cfg = OptimizerConfig::default();
    let r = compute(&n, MethodChoice::Auto, &cfg, 30)?;
    println!("Bell: D_GG = {:.6}, D_G = {:.6} via {:?}", r.ggqd, r.gqd.unwrap(), r.method);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let values: Vec<f64> = (0..27).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (n3, t) = shrink_to_physical(&BlochTensor::from_restricted(3, &values)?);
    let r = compute(&n3, MethodChoice::Auto, &cfg, 30)?;
    println!(
        "random N=3 (shrunk by {t:.3}): D_GG = {:.6}, D_G = {:.6}, max C = {:.6} via {:?}",
        r.ggqd,
        r.gqd.unwrap(),
        r.max_c,
        r.method
    );
    for (i, d) in r.optimal_frame.sites().iter().enumerate() {
        println!("  qubit {}: ({:+.4}, {:+.4}, {:+.4})", i + 1, d[0], d[1], d[2]);
    }
    Ok(())
}
