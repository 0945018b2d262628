use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sns_cli::run::{write_failure, EXIT_CONFIG, EXIT_IO, EXIT_OK};
use sns_cli::{run_experiment, validate_config};

/// Stochastic Navier-Stokes time-integration experiments.
#[derive(Parser, Debug)]
#[command(name = "sns", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for Monte Carlo samples (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Replace every seed in the config.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Validate the config and exit.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    ExitCode::from(run(args) as u8)
}

fn run(args: Args) -> i32 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_IO;
        }
    };
    let mut cfg = match validate_config(&text) {
        Ok(c) => c,
        Err(issues) => {
            for i in &issues {
                eprintln!("config error: {i}");
            }
            if let Some(out) = &args.output {
                if !args.dry_run {
                    let msgs: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
                    if let Err(e) = write_failure(out, None, EXIT_CONFIG, &msgs) {
                        eprintln!("error: cannot write failure record: {e}");
                    }
                }
            }
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = args.seed_override {
        cfg.override_seed(seed);
    }
    let out = match args.output.clone().or_else(|| cfg.output_dir.clone()) {
        Some(o) => o,
        None => {
            eprintln!("config error: output_dir: required (set it in the config or pass --output)");
            return EXIT_CONFIG;
        }
    };
    if args.dry_run {
        println!("config ok: command {} -> {}", cfg.command.as_str(), out.display());
        return EXIT_OK;
    }
    if let Some(n) = args.workers {
        if n == 0 {
            eprintln!("config error: --workers must be >= 1");
            return EXIT_CONFIG;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_IO;
        }
    }
    match run_experiment(&cfg, &out) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                log::warn!("{w}");
            }
            for f in &outcome.files {
                println!("{}", out.join(f).display());
            }
            EXIT_OK
        }
        Err((code, e)) => {
            eprintln!("error: {e}");
            eprintln!("failure record: {}", out.join("failed").join("error.json").display());
            code
        }
    }
}
