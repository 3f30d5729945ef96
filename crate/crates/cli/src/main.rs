use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use homapprox::{parse_mode, run, Format, JobConfig, Status};
use homapprox_core::approx::Mode;

/// Computes homogeneous approximations of single-input control systems.
#[derive(Parser, Debug)]
#[command(name = "homapprox", version, about, long_about = None)]
struct Args {
    /// System description file (`n = ...`, `a1 = ...`, `b1 = ...`)
    #[arg(short, long)]
    input: PathBuf,

    /// Largest series order to try
    #[arg(long)]
    max_order: Option<usize>,

    /// Which systems to construct: both, nonautonomous or autonomous
    #[arg(long, default_value = "both", value_parser = parse_mode)]
    mode: Mode,

    /// Report format: text, latex or json
    #[arg(long, default_value = "text")]
    format: Format,

    /// Also run the numerical checks
    #[arg(long)]
    verify: bool,

    /// Write the report into this directory instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,

    /// More log output (repeatable)
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let cfg = JobConfig {
        input: args.input,
        max_order: args.max_order,
        mode: args.mode,
        format: args.format,
        verify: args.verify,
        out: args.out,
        cache_dir: std::env::var_os("HOMAPPROX_CACHE_DIR").map(PathBuf::from),
    };
    match run(&cfg) {
        Ok(outcome) => {
            match &outcome.written {
                Some(path) => eprintln!("report written to {}", path.display()),
                None => print!("{}", outcome.rendered),
            }
            match outcome.status {
                Status::NoAutonomous => eprintln!("error: no autonomous approximating system exists"),
                Status::Internal => eprintln!("error: verification failed"),
                _ => {}
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.status().code() as u8)
        }
    }
}
