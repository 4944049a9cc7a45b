//! MAX-SAT through its energy tensor.

use bloch_discord::maxsat::{encode, random_ksat, solve_bruteforce, solve_via_tensor, SatInstance};
use bloch_discord::tensor_norm::OptimizerConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> bloch_discord::Result<()> {
    let small = SatInstance::parse_dimacs("p cnf 2 2\n1 2 0\n1 -2 0\n")?;
    let t = encode(&small)?;
    println!("H constant {}", t.energy_constant());
    for (vars, c) in &t.coeffs {
        println!("  H coefficient of {vars:?}: {}", -c);
    }
    let best = solve_bruteforce(&small)?;
    println!("max satisfied {} at {:?}", best.max_satisfied, best.maximizers);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = random_ksat(16, 70, 3, &mut rng)?;
    let exact = solve_bruteforce(&inst)?;
    let heuristic = solve_via_tensor(&inst, &OptimizerConfig { restarts: 100, ..OptimizerConfig::default() })?;
    println!(
        "random 3-SAT, 16 vars, 70 clauses: exhaustive {} / tensor descent {}",
        exact.max_satisfied, heuristic.max_satisfied
    );
    Ok(())
}
