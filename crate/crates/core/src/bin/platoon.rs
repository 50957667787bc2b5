use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use platoon::report::{self, ReportError, SweepParam};

#[derive(Parser)]
#[command(
    name = "platoon",
    version,
    about = "Constrained event-triggered platoon formation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every rule it breaks.
    Validate { file: PathBuf },
    /// Simulate a scenario and write CSV series plus summary.json.
    Run {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a scenario for each value of one parameter.
    Sweep {
        file: PathBuf,
        /// delta1, delta2, epsilon, k1 or k2
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), ReportError> {
    match command {
        Command::Validate { file } => {
            let (_, scenario) = report::load_scenario(&file)?;
            println!(
                "ok: {} ({} vehicles, {} ticks)",
                scenario.name,
                scenario.vehicle_count(),
                scenario.tick_count()
            );
        }
        Command::Run { file, out } => {
            let output = report::run_command(&file, &out)?;
            let s = &output.summary;
            println!("{}: {:.2} s wall time", s.scenario, s.runtime_seconds);
            for row in &s.trigger_table {
                println!(
                    "  AV{}: {} longitudinal triggers ({:.2}% reduction), {} lateral",
                    row.vehicle,
                    row.longitudinal.count,
                    row.longitudinal.reduction_percent,
                    row.lateral.count
                );
            }
            println!(
                "  constraint violations: {}",
                s.constraint_audit.violations()
            );
            if let Some(st) = &s.settling {
                println!("  settling time: {:.3} s", st.settling_time);
            }
            println!("  wrote {} files to {}", output.files.len(), out.display());
        }
        Command::Sweep {
            file,
            param,
            values,
            out,
        } => {
            let param: SweepParam = param.parse()?;
            let (report, files) = report::sweep_command(&file, param, &values, &out)?;
            println!(
                "{:>10} {:>10} {:>10} {:>12}",
                param.name(),
                "triggers",
                "settling",
                "final_error"
            );
            for r in &report.rows {
                println!(
                    "{:>10} {:>10} {:>10} {:>12.4e}",
                    r.value,
                    r.total_triggers,
                    r.settling_time
                        .map(|t| format!("{t:.3}"))
                        .unwrap_or_else(|| "-".into()),
                    r.final_formation_error
                );
            }
            for s in &report.skipped {
                for d in &s.diagnostics {
                    println!("skipped {} = {}: {d}", param.name(), s.value);
                }
            }
            println!("wrote {} files to {}", files.len(), out.display());
        }
    }
    Ok(())
}
