//! Runs the shipped square-formation scenario and prints the trigger table,
//! the constraint audit and the convergence figures. Pass a directory to
//! also write every CSV series and `summary.json` there.
//!
//! ```text
//! cargo run --release --example paper_square -- out/
//! ```

use std::path::PathBuf;
use std::time::Instant;

use platoon::report::{render_csv, summarize, write_artifacts};
use platoon::scenario::{self, ScenarioFile};
use platoon::sim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let file = ScenarioFile::paper_square();
    let scenario = scenario::paper_square();
    let started = Instant::now();
    let log = sim::run(&scenario)?;
    let summary = summarize(&scenario, &log, started.elapsed().as_secs_f64())?;

    println!(
        "{} ({} ticks in {:.2} s)\n",
        summary.scenario,
        log.ticks.len(),
        summary.runtime_seconds
    );
    println!(
        "{:<6} {:>14} {:>14} {:>10}",
        "", "longitudinal", "reduction %", "lateral"
    );
    for row in &summary.trigger_table {
        println!(
            "AV{:<4} {:>14} {:>14.2} {:>10}",
            row.vehicle,
            row.longitudinal.count,
            row.longitudinal.reduction_percent,
            row.lateral.count
        );
    }

    let audit = &summary.constraint_audit;
    println!("\nconstraint violations: {}", audit.violations());
    for (name, c) in [
        ("spacing", &audit.spacing),
        ("longitudinal velocity", &audit.longitudinal_velocity),
        ("lateral velocity", &audit.lateral_velocity),
    ] {
        println!(
            "  {name:<22} range [{:.3}, {:.3}] within ({}, {})",
            c.min, c.max, c.lower, c.upper
        );
    }
    if let Some(s) = &summary.settling {
        println!(
            "\nsettling time {:.3} s, back in band {:.3} s after the speed change",
            s.settling_time, s.recovery_after_ramp
        );
    }
    println!(
        "Lyapunov: initial {:.2}, final 10 s max {:.2e}",
        summary.lyapunov.initial, summary.lyapunov.final_floor
    );
    println!(
        "minimum inter-event interval {:?} s",
        summary.zeno.overall_min_interval
    );
    println!("adaptive weights bounded: {}", summary.weights.bounded());

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        let mut artifacts = render_csv(&scenario, &log, file.output.stride);
        artifacts.push(platoon::report::Artifact {
            name: "summary.json".into(),
            bytes: serde_json::to_vec_pretty(&summary)?,
        });
        let files = write_artifacts(&dir, &artifacts)?;
        println!("\nwrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}
