use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use okdrop::cli::{run, RunConfig};
use okdrop::Error;

/// Runs one experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "okdrop", version, about)]
struct Args {
    /// JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for sweeps; overrides the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for every random source; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(e: &Error) -> ExitCode {
    let obj = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
    eprintln!("{obj}");
    ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let mut config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(dir) = args.output {
        config.output_dir = dir;
    }
    if let Some(t) = args.threads {
        config.threads = t;
    }
    if let Some(s) = args.seed {
        config = config.with_seed(s);
    }
    match run(&config) {
        Ok(_) => {
            println!("{}", config.output_dir.join("report.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
