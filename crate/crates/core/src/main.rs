use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use inflow_ns::harness::{self, Mode, RunConfig, SweepSpec};

#[derive(Parser, Debug)]
#[command(version, about = "Perturbation solver and estimate checks for steady compressible flow with inflow")]
struct Cli {
    /// scenario TOML file
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "solve")]
    mode: Mode,
    /// override the grid resolution
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// omit timings so repeated runs give identical reports
    #[arg(long)]
    deterministic: bool,
    /// `name=v1,v2,...` (n, nx, ny, scale, s, p, epsilon, mu, nu, gamma, kappa, theta)
    #[arg(long)]
    sweep: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    harness::init_threads();
    let result = cli
        .sweep
        .as_deref()
        .map(str::parse::<SweepSpec>)
        .transpose()
        .and_then(|sweep| {
            harness::run(&RunConfig {
                scenario: cli.scenario,
                mode: cli.mode,
                nx: cli.nx,
                ny: cli.ny,
                out: cli.out,
                deterministic: cli.deterministic,
                sweep,
            })
        });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", harness::error_json(&e));
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
