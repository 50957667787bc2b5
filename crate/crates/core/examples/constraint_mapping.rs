//! The logarithmic constraint map: velocities inside the box become
//! unbounded coordinates, and the gain grows toward both edges.

use platoon::constraint::ConstraintBox;

fn main() -> platoon::Result<()> {
    let vx = ConstraintBox::new(0.0, 24.0, 0.05)?;
    println!(
        "box ({}, {}), minimum gain {:.4}",
        vx.lower,
        vx.upper,
        vx.min_gamma()
    );
    println!(
        "{:>8} {:>12} {:>12} {:>14}",
        "v", "s", "gamma", "inverse(s)"
    );
    for v in [0.01, 0.5, 3.0, 6.0, 12.0, 18.0, 23.5, 23.99] {
        let m = vx.forward(v)?;
        println!(
            "{v:>8} {:>12.5} {:>12.5} {:>14.10}",
            m.s,
            m.gamma,
            vx.inverse(m.s)
        );
    }

    // Extreme mapped values still land strictly inside the box.
    for s in [-800.0, 800.0] {
        println!("inverse({s}) = {}", vx.inverse(s));
    }
    println!("projection of 30 m/s: {}", vx.project(30.0));
    match vx.forward(24.0) {
        Ok(_) => unreachable!(),
        Err(e) => println!("boundary value rejected: {e}"),
    }
    Ok(())
}
