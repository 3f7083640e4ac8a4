//! Command-line driver: parses flags, layers a JSON config, runs one subcommand
//! and maps its outcome onto the exit-code contract.
//!
//! Exit codes: 0 when every check passes, 2 when a check or certification
//! fails (including numerical and domain failures), 1 for usage, config and
//! I/O errors. Errors are written to stderr as one JSON object.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use clap::{Parser, Subcommand};
use commands::Outcome;
use config::RunArgs;
use hornlab::Error;
use output::Sink;
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "HORNLAB_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "hornlab",
    version,
    about = "Numerical checks on glued metric horns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Glued profiles, gluing constants and junction smoothness.
    Build(RunArgs),
    /// Lower bound of the weighted Ricci tensor on a grid.
    CertifyCurvature(RunArgs),
    /// Vertex avoidance of geodesics near the horn tip.
    CheckGeodesics(RunArgs),
    /// Distortion-coefficient convexity of a sampled density.
    CheckDensity(RunArgs),
    /// Dirichlet problem with degree-one boundary data.
    Solve(RunArgs),
    /// Three-circle implication on the open regime, optionally the global construction.
    ThreeCircle(RunArgs),
    /// Vanishing order at the vertex.
    Decay(RunArgs),
    /// Build, certify, vertex avoidance and decay in one run.
    Reproduce(RunArgs),
}

type Handler = fn(&RunArgs, &mut Sink) -> hornlab::Result<Outcome>;

impl Command {
    fn split(self) -> (RunArgs, Handler) {
        match self {
            Command::Build(a) => (a, commands::build),
            Command::CertifyCurvature(a) => (a, commands::certify_curvature),
            Command::CheckGeodesics(a) => (a, commands::check_geodesics),
            Command::CheckDensity(a) => (a, commands::check_density),
            Command::Solve(a) => (a, commands::solve),
            Command::ThreeCircle(a) => (a, commands::three_circle),
            Command::Decay(a) => (a, commands::decay),
            Command::Reproduce(a) => (a, commands::reproduce),
        }
    }
}

/// Exit code for an error raised while running a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn report_error(kind: &str, message: &str) {
    let body = json!({ "error": kind, "message": message });
    let _ = writeln!(std::io::stderr(), "{body}");
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got '{raw}'"))?;
    // a pool that is already initialized (tests running in-process) is kept
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_PASS;
        }
        Err(e) => {
            report_error("UsageError", e.to_string().trim_end());
            return EXIT_USAGE;
        }
    };
    if let Err(msg) = configure_threads() {
        report_error("ConfigError", &msg);
        return EXIT_USAGE;
    }
    let (args, command) = cli.command.split();
    let result = args.layered().and_then(|args| {
        let mut sink = Sink::new(args.out.clone(), args.svg)?;
        command(&args, &mut sink)
    });
    match result {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = match &outcome.text {
                Some(text) => stdout.write_all(text.as_bytes()),
                None => writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&outcome.summary).unwrap_or_default()
                ),
            };
            if outcome.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}
