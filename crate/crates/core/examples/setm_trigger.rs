//! Switched event-triggered sample-and-hold on a scalar error loop
//! `z' = -a u_held + w(t)`. Prints where the trigger fired and which
//! threshold branch was active.

use platoon::setm::{SetmConfig, SetmState};

fn main() -> platoon::Result<()> {
    let cfg = SetmConfig::new(0.05, 0.5, 0.1)?;
    let (a, h) = (2.0, 1e-3);
    let mut state = SetmState::new();
    let mut z = 2.0;
    for k in 0..10_000 {
        let t = k as f64 * h;
        if state.fires(&cfg, z) {
            let (_, branch) = cfg.switched_sigma(z);
            state.on_trigger(t, z, z, branch)?;
        }
        z += h * (-a * state.held_u() + 0.02 * (1.5 * t).sin());
    }

    let events = state.events();
    for e in events.iter().take(12) {
        println!(
            "t = {:>6.3}  z2 = {:>9.5}  {}",
            e.time,
            e.z2,
            e.branch.as_str()
        );
    }
    let stats = state.interevent_stats(10.0, h)?;
    println!(
        "\n{} triggers in 10 s, {:.2}% fewer updates than periodic",
        stats.count, stats.reduction_percent
    );
    println!(
        "shortest interval {:.3} s, mean {:.3} s",
        stats.min_interval.unwrap_or(0.0),
        stats.mean_interval.unwrap_or(0.0)
    );

    let transient: Vec<f64> = state.intervals().take(5).collect();
    let late: Vec<f64> = state
        .intervals()
        .skip(stats.count.saturating_sub(6))
        .collect();
    println!("first intervals {transient:.3?}\nlast intervals  {late:.3?}");
    Ok(())
}
