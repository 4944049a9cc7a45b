//! Probability that a random state comes within ε of a level crossing.

use bloch_discord::io::write_mc_csv;
use bloch_discord::montecarlo::{estimate_probability, McConfig};

fn main() -> bloch_discord::Result<()> {
    for n_qubits in [2, 3] {
        let report = estimate_probability(&McConfig { n_qubits, samples: 5000, seed: 1, ..McConfig::default() })?;
        println!("N = {n_qubits} ({} samples shrunk to physicality)", report.rejections);
        let mut csv = Vec::new();
        write_mc_csv(&report, &mut csv)?;
        print!("{}", String::from_utf8_lossy(&csv));
        if let Some(fit) = report.slope {
            println!("log-log slope {:.3} from {} points", fit.slope, fit.points_used);
        }
    }
    Ok(())
}
