//! Command-line driver for the oscbath scenarios.
//!
//! Exit status: 0 when every verdict passes, 1 when some verdict fails,
//! 2 for usage or configuration errors, 3 for numerical failures.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use oscbath::exec::Execution;
use oscbath::scenarios::{digest, SCENARIOS};

use config::{parse_config, Format, RunConfig};
use output::{versions, write_failure, write_report, Metadata};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "OSCBATH_OUT";
const DEFAULT_OUT: &str = "oscbath-out";

#[derive(Debug, Parser)]
#[command(name = "oscbath", version, about = "Oscillator-bath scenario runner")]
pub struct Cli {
    /// List the available scenarios and exit.
    #[arg(long)]
    pub list_scenarios: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario described by a configuration file.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// TOML configuration file.
    pub config: PathBuf,
    /// Output directory (overrides the config file and $OSCBATH_OUT).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Data file format (overrides the config file).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Validate the configuration and exit without computing anything.
    #[arg(long)]
    pub check: bool,
    /// Maximum number of worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    if cli.list_scenarios {
        for (name, about) in SCENARIOS {
            println!("{name:<24} {about}");
        }
        return EXIT_PASS;
    }
    match cli.command {
        Some(Command::Run(args)) => run(&args),
        None => {
            eprintln!("error: nothing to do; use `oscbath run <config>` or `--list-scenarios`");
            EXIT_USAGE
        }
    }
}

fn output_dir(args: &RunArgs, cfg: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn run(args: &RunArgs) -> i32 {
    let cfg = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let format = args.format.or(cfg.output.format).unwrap_or_default();
    let resolved = serde_json::to_value(&cfg.scenario).expect("serializable");
    let name = cfg.scenario.name();
    let mut params = resolved.clone();
    if let Some(m) = params.as_object_mut() {
        m.remove("scenario");
    }
    let config_digest = digest(name, &params, seed);
    if args.check {
        println!("ok: {name} (digest {config_digest})");
        return EXIT_PASS;
    }

    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not resize the worker pool: {e}");
        }
    }
    let dir = output_dir(args, &cfg);
    log::info!("running {name} with seed {seed} into {}", dir.display());

    let result = cfg.scenario.run(seed, Execution::Parallel);
    let mut meta = Metadata {
        scenario: name,
        digest: &config_digest,
        seed,
        format,
        threads: args.threads,
        versions: versions(),
        wall_time_seconds: 0.0,
        config: resolved,
    };
    match result {
        Ok(report) => {
            meta.wall_time_seconds = report.wall_time;
            if let Err(e) = write_report(&dir, &report, format, &meta) {
                eprintln!("error: writing {}: {e}", dir.display());
                return EXIT_USAGE;
            }
            for v in &report.verdicts {
                println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.invariant, v.detail);
            }
            println!("wrote {}", dir.display());
            if report.passed() {
                EXIT_PASS
            } else {
                EXIT_VERDICT
            }
        }
        Err(e) => {
            let (code, time) = match &e {
                oscbath::Error::Integration { time, .. } => (EXIT_NUMERICAL, Some(*time)),
                oscbath::Error::InvalidSpec { .. } => (EXIT_USAGE, None),
                _ => (EXIT_NUMERICAL, None),
            };
            eprintln!("error: {e}");
            if code == EXIT_NUMERICAL {
                let failure = json!({
                    "scenario": name,
                    "digest": config_digest,
                    "seed": seed,
                    "status": "numerical-failure",
                    "error": { "message": e.to_string(), "time": time },
                });
                if let Err(w) = write_failure(&dir, &failure, &meta) {
                    eprintln!("error: writing {}: {w}", dir.display());
                }
            }
            code
        }
    }
}
