//! Injective norm of a four-qubit tensor: mean-field lower bound against the
//! grid search.

use bloch_discord::qstate::{shrink_to_physical, BlochTensor};
use bloch_discord::tensor_norm::{injective_norm_bruteforce, injective_norm_meanfield, OptimizerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bloch_discord::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let values: Vec<f64> = (0..81).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = shrink_to_physical(&BlochTensor::from_restricted(4, &values)?).0;

    for alpha in [1.0, 0.5] {
        let cfg = OptimizerConfig { alpha, restarts: 50, ..OptimizerConfig::default() };
        let r = injective_norm_meanfield(&n, &cfg)?;
        println!(
            "mean field alpha={alpha}: C = {:.10} (start {}, {} sweeps, converged {})",
            r.value, r.restart_index, r.iterations_used, r.converged
        );
    }
    let grid = injective_norm_bruteforce(&n, 12)?;
    println!("grid 12 + polish:     C = {:.10}", grid.value);
    Ok(())
}
