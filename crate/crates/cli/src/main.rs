//! `dbar run <suite>`: runs one check suite and writes its report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dbar_core::harness::{self, ConfigFile, GoldenStatus, RunConfig, Suite};
use dbar_core::{DbarError, Result};

#[derive(Parser)]
#[command(name = "dbar", version, about = "Canonical dbar solutions and Bergman projections on product domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite: kernel-check, spencer-check, slice-identities,
    /// product-solve, orthogonality, norm-sweep or sharpness.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    suite: String,
    /// JSON config file (domain schema plus optional seed/tol/members/sharpness).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    ntheta: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    /// Overwrite the golden baseline for this suite.
    #[arg(long)]
    bless: bool,
    /// Record wall-clock runtime in summary.json.
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "golden")]
    golden: PathBuf,
}

fn config(args: &RunArgs) -> Result<RunConfig> {
    let suite: Suite = args.suite.parse()?;
    let mut cfg = RunConfig::new(suite, &args.out);
    if let Some(path) = &args.config {
        let file = ConfigFile::load(path).map_err(|e| match e {
            // A missing config file is a usage error, not an output failure.
            DbarError::Io(io) => DbarError::Config(format!("{}: {io}", path.display())),
            other => other,
        })?;
        cfg = cfg.with_file(file);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if args.tol.is_some() {
        cfg.tol = args.tol;
    }
    if let Some(nr) = args.nr {
        cfg.domain.grid.nr = nr;
    }
    if let Some(nt) = args.ntheta {
        cfg.domain.grid.ntheta = nt;
    }
    if let Some(d) = args.degree {
        cfg.domain.degree = d;
    }
    cfg.timing = args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<i32> {
    harness::init_threads()?;
    let cfg = config(args)?;
    let result = harness::run_and_emit(&cfg)?;
    for c in &result.checks {
        println!("{} {}: {:e}", if c.pass() { "ok  " } else { "FAIL" }, c.name, c.value);
    }
    let mut code = harness::exit_code(&result);
    if args.bless {
        harness::bless(&result, &cfg, &args.golden)?;
        println!("blessed {}", args.golden.join(cfg.suite.name()).display());
    } else {
        match harness::compare_goldens(&result, &cfg, &args.golden)? {
            GoldenStatus::Missing => {}
            GoldenStatus::Matched { files } => println!("golden: {files} file(s) match"),
            GoldenStatus::Mismatched { messages } => {
                for m in messages {
                    eprintln!("golden drift: {m}");
                }
                code = 1;
            }
        }
    }
    println!("{}: {}", cfg.suite, if code == 0 { "PASS" } else { "FAIL" });
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    let code = match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
