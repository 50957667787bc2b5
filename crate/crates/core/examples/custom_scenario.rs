//! Builds a scenario in code, validates it, and shows the diagnostics a
//! broken file produces.

use platoon::scenario::ScenarioFile;
use platoon::sim;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Start from the shipped file and turn it into a short, slow platoon.
    let mut file = ScenarioFile::paper_square();
    file.name = "slow-square".into();
    file.simulation.duration = 10.0;
    file.leader.cruise_speed = 8.0;
    file.leader.final_speed = 8.0;
    for v in &mut file.vehicles {
        v.velocity[0] = 8.0;
    }
    let scenario = file.validate()?;
    let log = sim::run(&scenario)?;
    let last = log.ticks.last().expect("at least one tick");
    println!(
        "{}: formation error after {} s = {:.4} m",
        scenario.name,
        last.time,
        last.formation_error_norm()
    );

    // The same document as TOML, ready to save and feed to the binary.
    let text = file.to_toml();
    println!("TOML is {} lines long", text.lines().count());

    // Every broken rule is reported, not just the first.
    let mut broken = file.clone();
    broken.setm.delta1 = 0.6;
    broken.setm.delta2 = 0.05;
    broken.vehicles[0].k2 = 0.6;
    if let Err(e) = broken.validate() {
        println!("\nrejected:\n{e}");
    }

    let typo = text.replacen("duration", "durration", 1);
    if let Err(e) = ScenarioFile::parse(&typo) {
        println!("\nparse error:\n{e}");
    }
    Ok(())
}
