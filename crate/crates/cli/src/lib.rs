//! Driver for `wsaw-core`: subcommands, reproducible run manifests and plot-ready output.
//!
//! Exit codes are 0 on success, 1 for user errors (bad flags, invalid parameters, divergent
//! inputs) and 2 for internal failures or a `reproduce` mismatch.

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub mod cli;
pub mod commands;
pub mod manifest;
pub mod output;
pub mod params;

/// A problem with the invocation rather than the computation.
#[derive(Debug, Clone, PartialEq)]
pub struct UserError(pub String);

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

pub fn exit_code(err: &anyhow::Error) -> i32 {
    use wsaw_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UserError>() {
            return EXIT_USER;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidArgument(_)
                | E::Divergent(_)
                | E::Singular(_)
                | E::Table(_)
                | E::ScaleOutOfRange { .. }
                | E::Budget(_) => EXIT_USER,
                E::NoConvergence(_) | E::InvalidStep { .. } | E::NegativeMultiplier { .. } => EXIT_INTERNAL,
            };
        }
    }
    EXIT_INTERNAL
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USER } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &cli::Cli) -> anyhow::Result<i32> {
    if cli.threads == Some(0) {
        return Err(UserError("--threads must be at least 1".into()).into());
    }
    let threads = cli.threads;
    let params = cli.command.params()?;
    wsaw_core::exec::with_threads(threads, || -> anyhow::Result<i32> {
        let used = wsaw_core::exec::worker_threads();
        match (&cli.command, params) {
            (cli::Command::Reproduce(r), _) => {
                let report = manifest::reproduce(&r.manifest)?;
                let text = output::to_json_pretty(&report)?;
                print!("{}", String::from_utf8_lossy(&text));
                Ok(if report.identical { EXIT_OK } else { EXIT_INTERNAL })
            }
            (_, Some(p)) => {
                let out = match &cli.out {
                    Some(o) => o.clone(),
                    None => manifest::default_out_dir(&p)?,
                };
                manifest::run_to_dir(&p, &out, cli.force, used)?;
                println!("{}", out.join(manifest::MANIFEST_FILE).display());
                Ok(EXIT_OK)
            }
            (_, None) => anyhow::bail!("subcommand has no parameters"),
        }
    })?
}
