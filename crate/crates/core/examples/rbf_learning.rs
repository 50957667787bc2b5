//! Online estimation of an unknown drag curve with the leakage-modified
//! adaptive law, driven by a scalar error signal.

use platoon::rbf::RbfNetwork;

fn main() -> platoon::Result<()> {
    // Unknown specific resistance of a 1800 kg vehicle (m/s^2).
    let drag = |v: f64| (0.4 * v * v + 8.0 * v) / 1800.0;

    let mut net = RbfNetwork::grid(&[(0.0, 24.0)], 9, 3.0, 1, 50.0, 0.01)?;
    let h = 1e-3;
    for k in 0..100_000 {
        // Low-discrepancy speeds spread evenly over [2, 22] m/s. A slow sweep
        // would drag neighboring estimates along with the current one.
        let v = 2.0 + 20.0 * (k as f64 * 0.618_033_988_7).fract();
        let err = drag(v) - net.approximate(&[v])[0];
        net.update_weights(&[v], &[err], h)?;
        if k % 20_000 == 0 {
            println!(
                "t = {:>5.0} s  |W| = {:.4}",
                k as f64 * h,
                net.weight_norm()
            );
        }
    }

    println!("\n{:>6} {:>10} {:>10}", "v", "true", "estimate");
    for v in [4.0, 8.0, 12.0, 16.0, 20.0] {
        println!(
            "{v:>6} {:>10.5} {:>10.5}",
            drag(v),
            net.approximate(&[v])[0]
        );
    }
    Ok(())
}
