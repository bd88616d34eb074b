use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use frontlab_core::cli_io::{load_scenario, parse_selector, run};

/// Run verification suites for a front-propagation scenario.
#[derive(Parser, Debug)]
#[command(name = "frontlab", version)]
struct Args {
    /// Scenario file with `key = value` lines.
    config: PathBuf,
    /// waves, shoot, evolve, fronts, decay, width, lipschitz, limit, oscillation or all.
    #[arg(long)]
    suite: String,
    /// Output directory; overrides `output.dir` from the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies the reference run horizon.
    #[arg(long, default_value_t = 1.0)]
    horizon_scale: f64,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = parse_selector(&args.suite) {
        eprintln!("frontlab: {e}");
        return ExitCode::from(2);
    }
    let scenario = match load_scenario(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("frontlab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    eprint!("{}", scenario.echo());
    match run(&scenario, &args.suite, args.out.as_deref(), args.horizon_scale) {
        Ok(outcome) => {
            for r in &outcome.reports {
                println!("{}: {}", r.suite, if r.passed() { "PASS" } else { "FAIL" });
                for c in r.checks.iter().filter(|c| !c.pass) {
                    println!("  failed: {} ({} {} {})", c.name, c.measured, c.relation, c.bound);
                }
            }
            if let Some((suite, e)) = &outcome.failure {
                eprintln!("frontlab: suite {suite} failed: {e}");
            }
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("frontlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
