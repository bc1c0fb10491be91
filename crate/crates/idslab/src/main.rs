use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use idslab::{parse_config, run, Command, RunError, RunOptions};

/// Integrated density of states experiments on lattice Anderson models.
#[derive(Debug, Parser)]
#[command(name = "idslab", version)]
struct Cli {
    command: Command,
    /// TOML file with [model] and [run] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Never changes the outputs.
    #[arg(long)]
    threads: Option<usize>,
    /// Recompute even if a cached result exists, and do not store one.
    #[arg(long)]
    no_cache: bool,
    /// Output directory (overrides run.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main_inner(cli: Cli) -> Result<Option<bool>, RunError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| RunError::Usage(format!("{}: {e}", path.display())))?,
        None if cli.command == Command::Selftest => String::new(),
        None => return Err(RunError::Usage("--config <file> is required".into())),
    };
    if cli.threads == Some(0) {
        return Err(RunError::Usage("--threads must be >= 1".into()));
    }
    let config = parse_config(cli.command, &text).map_err(RunError::Config)?;
    let opts = RunOptions {
        threads: cli.threads,
        out_dir: cli.out,
        cache_dir: None,
        use_cache: !cli.no_cache,
    };
    let out_dir =
        idslab::commands::output_dir(&config, &opts, &idslab::record::config_hash(&config));
    let record = run(&config, &opts)?;
    println!(
        "{} config_hash={} cached={} wall_time={:.3}s out={}",
        record.command,
        record.config_hash,
        record.cached,
        record.wall_time,
        out_dir.display()
    );
    if let Some(v) = record.verdict {
        println!("verdict: {}", if v { "pass" } else { "fail" });
    }
    Ok(record.verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(Some(false)) => ExitCode::from(3),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("idslab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
