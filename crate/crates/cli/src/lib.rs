//! Batch front end: reads a JSON run configuration, runs one pipeline and
//! writes `report.json` plus CSV tables.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails, 1 for
//! usage and configuration errors.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::{emit_outputs, Check, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "shearstab", version, about = "Rayleigh and Orr-Sommerfeld stability of boundary-layer profiles")]
struct Cli {
    /// JSON run configuration; defaults apply to every missing field
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides `output_dir` in the configuration)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads for parallel stages
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check the profile assumptions
    ProfileValidate,
    /// Rayleigh eigenvalue, its vanishing order and eigenmode
    RayleighEig,
    /// Delta property of the inviscid Green functions
    RayleighGreenVerify,
    /// Regularized Evans function on a grid of phase speeds
    OsEvansScan,
    /// Viscous eigenvalues along a decreasing viscosity grid
    OsTrack,
    /// Corrected viscous Green function with boundary conditions
    OsGreenVerify,
    /// Image membership and non-membership pairings
    ImageTest,
    /// Closed-form examples
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ProfileValidate => "profile-validate",
            Command::RayleighEig => "rayleigh-eig",
            Command::RayleighGreenVerify => "rayleigh-green-verify",
            Command::OsEvansScan => "os-evans-scan",
            Command::OsTrack => "os-track",
            Command::OsGreenVerify => "os-green-verify",
            Command::ImageTest => "image-test",
            Command::Selftest => "selftest",
        }
    }
}

fn run(cmd: Command, cfg: &RunConfig) -> commands::Outcome {
    let r = match cmd {
        Command::ProfileValidate => commands::profile_validate(cfg),
        Command::RayleighEig => commands::rayleigh_eig(cfg),
        Command::RayleighGreenVerify => commands::rayleigh_green_verify(cfg),
        Command::OsEvansScan => commands::os_evans_scan(cfg),
        Command::OsTrack => commands::os_track(cfg),
        Command::OsGreenVerify => commands::os_green_verify(cfg),
        Command::ImageTest => commands::image_test_cmd(cfg),
        Command::Selftest => commands::selftest(cfg),
    };
    r.unwrap_or_else(|e| {
        let mut o = commands::Outcome::default();
        o.checks.push(Check::flag("completed", false, e.to_string()));
        o
    })
}

fn summary(report: &RunReport, written: &[PathBuf], verbose: bool) {
    println!("shearstab {} {}", report.command, report.version);
    for c in &report.checks {
        println!("  [{}] {:<36} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if verbose {
        for (k, v) in &report.results {
            println!("  {k} = {v}");
        }
        for t in &report.timings {
            println!("  {:<24} {:.3} s", t.stage, t.seconds);
        }
    }
    for p in written {
        println!("  wrote {}", p.display());
    }
    println!("{}", if report.pass { "all checks passed" } else { "checks FAILED" });
}

/// Parses `argv` (program name first), runs the subcommand and returns
/// the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let lenient = matches!(cli.command, Command::ProfileValidate);
    let cfg = match RunConfig::load(cli.config.as_deref()).and_then(|c| c.validate(lenient).map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let out_dir = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("shearstab-out"));
    let outcome = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command, &cfg)),
            Err(e) => {
                eprintln!("error: cannot start thread pool: {e}");
                return EXIT_USAGE;
            }
        },
        None => run(cli.command, &cfg),
    };
    let pass = outcome.checks.iter().all(|c| c.pass);
    let report = RunReport {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: serde_json::to_value(&cfg).unwrap_or(serde_json::Value::Null),
        results: outcome.results,
        checks: outcome.checks,
        pass,
        timings: outcome.timings,
    };
    let written = match emit_outputs(&out_dir, &report, &outcome.tables) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    summary(&report, &written, cli.verbose);
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
