//! Phase-flip trajectory of a diagonal state: level crossing and kink.
//! Pass a Bloch JSON file to use another initial state.

use bloch_discord::dynamics::{compute_trajectory, detect_transition, uniform_grid, DetectorConfig, TrajectoryConfig};
use bloch_discord::io::{parse_bloch_json, write_trajectory_csv};
use bloch_discord::qstate::{shrink_to_physical, BlochTensor};

fn main() -> bloch_discord::Result<()> {
    let n = match std::env::args().nth(1) {
        Some(path) => parse_bloch_json(&std::fs::read_to_string(path)?)?,
        None => shrink_to_physical(&BlochTensor::diagonal2([1.0, 0.8, 0.6])).0,
    };
    let grid = uniform_grid(0.5, 201)?;
    let config = TrajectoryConfig { with_gqd: true, ..TrajectoryConfig::default() };
    let traj = compute_trajectory(&n, &grid, &config)?;
    let report = detect_transition(&traj, &DetectorConfig::default())?;
    println!("{:?} p_c={:?} min_gap={:.3e} slope_jump={:.4}", report.kind, report.p_c, report.min_gap, report.slope_jump);

    // every tenth row
    let mut csv = Vec::new();
    write_trajectory_csv(&traj, &mut csv)?;
    for line in String::from_utf8_lossy(&csv).lines().step_by(10) {
        println!("{line}");
    }
    Ok(())
}
