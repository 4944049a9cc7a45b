//! Bloch tensor to density matrix and back.

use bloch_discord::io::{bloch_to_json, density_to_json, parse_bloch_json};
use bloch_discord::qstate::{bloch_from_density, density_from_bloch, physicality};

fn main() -> bloch_discord::Result<()> {
    let text = r#"{"n_qubits": 2, "entries": [
        {"a": "11", "value": 0.5}, {"a": "22", "value": -0.3}, {"a": "33", "value": 0.2}, {"a": "30", "value": 0.1}
    ]}"#;
    let n = parse_bloch_json(text)?;
    let (ok, min) = physicality(&n);
    println!("physical: {ok} (minimum eigenvalue {min:.4})");
    let rho = density_from_bloch(&n);
    println!("{}", serde_json::to_string_pretty(&density_to_json(&rho)).unwrap());
    println!("{}", bloch_to_json(&bloch_from_density(&rho)?));
    Ok(())
}
