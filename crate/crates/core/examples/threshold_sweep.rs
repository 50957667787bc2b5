//! Sweeps the steady-state threshold and the transient threshold of the
//! trigger rule on the shipped scenario, running values in parallel.

use platoon::report::{sweep, SweepParam};
use platoon::scenario::ScenarioFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = ScenarioFile::paper_square();
    for (param, values) in [
        (SweepParam::Delta2, vec![0.1, 0.3, 0.6]),
        (SweepParam::Delta1, vec![0.01, 0.02, 0.05]),
        (SweepParam::K2, vec![0.6, 5.0, 10.0]),
    ] {
        let report = sweep(&base, param, &values)?;
        println!(
            "{:>8} {:>14} {:>10} {:>10} {:>12}",
            param.name(),
            "longitudinal",
            "lateral",
            "settling",
            "V floor"
        );
        for r in &report.rows {
            println!(
                "{:>8} {:>14} {:>10} {:>10.3} {:>12.3e}",
                r.value,
                r.longitudinal_triggers,
                r.lateral_triggers,
                r.settling_time.unwrap_or(f64::NAN),
                r.lyapunov_floor
            );
        }
        for s in &report.skipped {
            println!("{:>8} skipped: {}", s.value, s.diagnostics[0]);
        }
        println!();
    }
    Ok(())
}
