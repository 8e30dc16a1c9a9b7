//! Scenario runner: `probgeo run <config>`, `probgeo validate <config>`,
//! `probgeo list-scenarios`.
//!
//! Exit status: 0 when the scenario ran and every check passed, 1 when a
//! check failed or the run hit a runtime error, 2 for configuration
//! problems (reported with the offending line number).

use std::path::Path;
use std::process::ExitCode;

use probgeo::scenario::config::{load_config, Scenario};
use probgeo::scenario::runner::{run, CheckLine, Direction, ScenarioReport};
use probgeo::Error;

const USAGE: &str = "\
usage:
  probgeo run <config-path>       execute a scenario, write CSV artifacts
  probgeo validate <config-path>  parse and check a config, run nothing
  probgeo list-scenarios          list the available scenarios

The config format is `key = value` lines with [section] headers; see the
README for the keys. The PROBGEO_OUTPUT_DIR environment variable overrides
the configured output directory.";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["run", path] => run_command(Path::new(path)),
        ["validate", path] => validate_command(Path::new(path)),
        ["list-scenarios"] => list_command(),
        ["--help"] | ["-h"] | ["help"] => {
            println!("{USAGE}");
            ExitCode::SUCCESS
        }
        _ => {
            eprintln!("{USAGE}");
            ExitCode::from(2)
        }
    }
}

/// Maps an error to the documented exit status: config diagnostics are 2,
/// everything else (I/O, numeric preconditions) is a scenario failure, 1.
fn fail(error: &Error) -> ExitCode {
    eprintln!("error: {error}");
    match error {
        Error::Config { .. } => ExitCode::from(2),
        _ => ExitCode::FAILURE,
    }
}

fn run_command(path: &Path) -> ExitCode {
    let config = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    println!(
        "scenario {} (seed {})",
        config.scenario.name(),
        config.seed
    );
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    print_checks(&report);
    println!(
        "{}: {} ({} artifacts in {})",
        report.scenario.name(),
        if report.all_pass() { "PASS" } else { "FAIL" },
        report.artifacts.len(),
        report.output_dir.display()
    );
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn print_checks(report: &ScenarioReport) {
    let name_width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0);
    for check in &report.checks {
        let CheckLine {
            name,
            value,
            tolerance,
            direction,
        } = check;
        let relation = match direction {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
        };
        println!(
            "  {name:name_width$}  {value:13.6e} {relation} {tolerance:9.0e}  {}",
            if check.passes() { "PASS" } else { "FAIL" }
        );
    }
}

fn validate_command(path: &Path) -> ExitCode {
    match load_config(path) {
        Ok(config) => {
            println!(
                "ok: scenario {} on a {}-dimensional grid, seed {}, output {}",
                config.scenario.name(),
                config.grid.dim(),
                config.seed,
                config.output_dir
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn list_command() -> ExitCode {
    let width = Scenario::all()
        .iter()
        .map(|s| s.name().len())
        .max()
        .unwrap_or(0);
    for scenario in Scenario::all() {
        println!("{:width$}  {}", scenario.name(), scenario.describe());
    }
    ExitCode::SUCCESS
}
