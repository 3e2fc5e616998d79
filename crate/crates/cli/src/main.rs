use std::path::PathBuf;
use std::process::ExitCode;

use cavity_ising_cli::{run, CliError, Format, RunConfig, Task};
use clap::Parser;

#[derive(Parser, Debug)]
#[command(name = "cavity-ising", version, about = "Steady states of a driven Ising chain in a lossy cavity")]
struct Args {
    #[arg(value_enum)]
    task: Task,
    /// TOML run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn execute(args: &Args) -> Result<Vec<String>, CliError> {
    let config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let summary = run(args.task, &config, &args.out, args.format)?;
    let mut lines = summary.lines;
    lines.extend(summary.artifacts.iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let CliError::ValidationFailed { report, .. } = &e {
                for l in report {
                    println!("{l}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
