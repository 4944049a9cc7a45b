//! File formats: Bloch-tensor and density-matrix JSON, trajectory and Monte
//! Carlo CSV.
//!
//! Bloch tensor: `{"n_qubits": 2, "entries": [{"a": "11", "value": 1.0}, …]}`,
//! one digit per qubit (qubit 1 first); missing entries are zero.
//!
//! Density matrix: `{"n_qubits": 1, "data": [[re, im], …]}`, row-major.

use std::collections::BTreeSet;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::Trajectory;
use crate::montecarlo::McReport;
use crate::qstate::{format_index, parse_index, BlochTensor, DensityMatrix, C64};
use crate::{Error, Result};

/// Largest qubit count accepted from files.
pub const MAX_FILE_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochEntry {
    pub a: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochFile {
    pub n_qubits: usize,
    pub entries: Vec<BlochEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub n_qubits: usize,
    pub data: Vec<[f64; 2]>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_FILE_QUBITS {
        return Err(Error::Parse(format!("n_qubits must lie in 1..={MAX_FILE_QUBITS}, got {n}")));
    }
    Ok(())
}

impl BlochFile {
    pub fn from_tensor(n: &BlochTensor) -> Self {
        Self {
            n_qubits: n.n_qubits(),
            entries: n
                .nonzero_entries()
                .map(|(i, value)| BlochEntry { a: format_index(i, n.n_qubits()), value })
                .collect(),
        }
    }

    pub fn to_tensor(&self) -> Result<BlochTensor> {
        check_qubits(self.n_qubits)?;
        let mut n = BlochTensor::zeros(self.n_qubits);
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            let index = parse_index(&e.a, self.n_qubits)?;
            if index == 0 {
                return Err(Error::Parse("the all-zero index is fixed to 1 and cannot be given".into()));
            }
            if !seen.insert(index) {
                return Err(Error::Parse(format!("index {:?} given twice", e.a)));
            }
            if !e.value.is_finite() {
                return Err(Error::Parse(format!("non-finite value at {:?}", e.a)));
            }
            n.set(index, e.value);
        }
        Ok(n)
    }
}

impl DensityFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let d = rho.dim();
        Self {
            n_qubits: rho.n_qubits(),
            data: (0..d * d).map(|k| {
                let z = m[(k / d, k % d)];
                [z.re, z.im]
            }).collect(),
        }
    }

    /// Validates shape, Hermiticity, trace and positivity.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        check_qubits(self.n_qubits)?;
        let d = 1usize << self.n_qubits;
        if self.data.len() != d * d {
            return Err(Error::Parse(format!(
                "expected {} matrix entries for {} qubits, got {}",
                d * d,
                self.n_qubits,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite matrix entry".into()));
        }
        let m = DMatrix::from_fn(d, d, |r, c| {
            let [re, im] = self.data[r * d + c];
            C64::new(re, im)
        });
        DensityMatrix::new(self.n_qubits, m)
    }
}

pub fn parse_bloch_json(text: &str) -> Result<BlochTensor> {
    let f: BlochFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("bloch tensor JSON: {e}")))?;
    f.to_tensor()
}

pub fn parse_density_json(text: &str) -> Result<DensityMatrix> {
    let f: DensityFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("density matrix JSON: {e}")))?;
    f.to_density()
}

pub fn bloch_to_json(n: &BlochTensor) -> Value {
    serde_json::to_value(BlochFile::from_tensor(n)).expect("serializable")
}

pub fn density_to_json(rho: &DensityMatrix) -> Value {
    serde_json::to_value(DensityFile::from_density(rho)).expect("serializable")
}

/// `x` rounded to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// Rounds every float in a JSON document to `digits` significant digits.
pub fn round_json(value: &mut Value, digits: usize) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x, digits))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| round_json(v, digits)),
        Value::Object(map) => map.values_mut().for_each(|v| round_json(v, digits)),
        _ => {}
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("csv: {other:?}")),
    }
}

/// Columns `p,ggqd,gqd,d1,d2,d3`; `gqd` is empty when not computed. Floats
/// use the shortest representation that round-trips.
pub fn write_trajectory_csv(traj: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "ggqd", "gqd", "d1", "d2", "d3"]).map_err(csv_error)?;
    for pt in &traj.points {
        w.write_record([
            num(pt.p),
            num(pt.ggqd),
            pt.gqd.map(num).unwrap_or_default(),
            num(pt.tracks[0]),
            num(pt.tracks[1]),
            num(pt.tracks[2]),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `epsilon,P,ci_lo,ci_hi`.
pub fn write_mc_csv(report: &McReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epsilon", "P", "ci_lo", "ci_hi"]).map_err(csv_error)?;
    for e in &report.estimates {
        w.write_record([num(e.epsilon), num(e.probability), num(e.ci_low), num(e.ci_high)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{compute_trajectory, uniform_grid, TrajectoryConfig};
    use crate::qstate::{bloch_from_density, density_from_bloch, pow3, shrink_to_physical};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bloch_json_round_trip() {
        let text = r#"{"n_qubits":2,"entries":[{"a":"11","value":1.0},{"a":"22","value":-1.0},{"a":"33","value":1.0}]}"#;
        let n = parse_bloch_json(text).unwrap();
        assert_eq!(n, BlochTensor::diagonal2([1.0, -1.0, 1.0]));
        let back = parse_bloch_json(&bloch_to_json(&n).to_string()).unwrap();
        assert_eq!(back, n);
    }

    #[test]
    fn bloch_json_rejections() {
        for bad in [
            r#"{"n_qubits":2,"entries":[{"a":"00","value":1.0}]}"#,
            r#"{"n_qubits":2,"entries":[{"a":"1","value":1.0}]}"#,
            r#"{"n_qubits":2,"entries":[{"a":"14","value":1.0}]}"#,
            r#"{"n_qubits":2,"entries":[{"a":"11","value":1.0},{"a":"11","value":0.5}]}"#,
            r#"{"n_qubits":0,"entries":[]}"#,
            r#"{"n_qubits":2}"#,
            "not json",
        ] {
            assert!(matches!(parse_bloch_json(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn density_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let values: Vec<f64> = (0..pow3(2)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = shrink_to_physical(&BlochTensor::from_restricted(2, &values).unwrap()).0;
            let rho = density_from_bloch(&n);
            let doc = density_to_json(&rho);
            let rho2 = parse_density_json(&doc.to_string()).unwrap();
            let n2 = bloch_from_density(&rho2).unwrap();
            for (a, b) in n.coeffs().iter().zip(n2.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
            let n3 = parse_bloch_json(&bloch_to_json(&n2).to_string()).unwrap();
            assert!(density_from_bloch(&n3).max_abs_diff(&rho) < 1e-12);
        }
    }

    #[test]
    fn unphysical_density_is_rejected() {
        let text = r#"{"n_qubits":1,"data":[[1.5,0],[0,0],[0,0],[-0.5,0]]}"#;
        assert!(matches!(parse_density_json(text), Err(Error::InvalidState(_))));
        let short = r#"{"n_qubits":1,"data":[[1,0]]}"#;
        assert!(matches!(parse_density_json(short), Err(Error::Parse(_))));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.123456789012345, 12), 0.123456789012);
        assert_eq!(round_sig(-1234.56789012345678, 12), -1234.56789012);
        let mut v = serde_json::json!({"a": [1.0, 0.333333333333333333], "b": 3});
        round_json(&mut v, 3);
        assert_eq!(v, serde_json::json!({"a": [1.0, 0.333], "b": 3}));
    }

    #[test]
    fn trajectory_csv_parses_back() {
        let n = shrink_to_physical(&BlochTensor::diagonal2([1.0, 0.8, 0.6])).0;
        let traj = compute_trajectory(&n, &uniform_grid(0.5, 11).unwrap(), &TrajectoryConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(r.headers().unwrap(), vec!["p", "ggqd", "gqd", "d1", "d2", "d3"]);
        for (rec, pt) in r.records().zip(&traj.points) {
            let rec = rec.unwrap();
            assert_eq!(rec[0].parse::<f64>().unwrap(), pt.p);
            assert_eq!(rec[1].parse::<f64>().unwrap(), pt.ggqd);
            assert_eq!(&rec[2], "");
            assert_eq!(rec[3].parse::<f64>().unwrap(), pt.tracks[0]);
        }
    }
}
