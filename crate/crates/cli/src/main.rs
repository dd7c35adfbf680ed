//! `wavesheet` command-line front end.
//!
//! Exit codes: 0 success, 1 verification or audit failure, 2 input error,
//! 3 runtime abort.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wavesheet::audit::{audit, history_csv};
use wavesheet::run::{read_trajectory, run, write_outputs};
use wavesheet::verify::{verify, Mutation};
use wavesheet::{Error, SolverConfig};

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(name = "wavesheet", version, about = "Periodic gravity-capillary water-wave simulator and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (flat `key = value` pairs); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured grid size.
    #[arg(long)]
    n: Option<usize>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    FlipHilbertSign,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured problem and write trajectory and diagnostics.
    Run(Common),
    /// Run the self-verification suites and write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Inject a deliberate defect to check that the suites can fail.
        #[arg(long, hide = true)]
        mutate: Option<MutationArg>,
    },
    /// Audit the energy inequality along a trajectory and the estimate constants.
    Audit {
        #[command(flatten)]
        common: Common,
        /// Trajectory file; defaults to the configured snapshot path under --out.
        trajectory: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<SolverConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => SolverConfig::load(path)?,
        None => SolverConfig::default(),
    };
    if let Some(n) = common.n {
        cfg.n_points = n;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_for(err: &Error) -> u8 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_ABORT
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error [{}]: {err}", err.label());
    ExitCode::from(exit_for(&err))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::fs::write(path, text)?)
}

fn cmd_run(common: &Common) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let base = common.config.as_deref().and_then(Path::parent);
    let out = match run(&cfg, base) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    if let Err(e) = write_outputs(&out, &cfg, &common.out) {
        return fail(e);
    }
    if let Some(err) = out.abort {
        eprintln!("aborted [{}]: {err}", err.label());
        return ExitCode::from(EXIT_ABORT);
    }
    if !common.quiet {
        let last = out.diagnostics.last().expect("a run has at least one row");
        println!(
            "completed {} steps to t = {:.6}; E = {:.10e}, min a = {:.6}",
            out.diagnostics.len() - 1,
            last.t,
            last.energy.total,
            out.diagnostics.iter().map(|r| r.min_a).fold(f64::INFINITY, f64::min)
        );
    }
    ExitCode::SUCCESS
}

fn cmd_verify(common: &Common, mutate: Option<MutationArg>) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mutation = mutate.map(|m| match m {
        MutationArg::FlipHilbertSign => Mutation::FlipHilbertSign,
    });
    let report = match verify(cfg.n_points, cfg.seed, mutation) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let json = report.to_json();
    if let Err(e) = write_file(&common.out.join("verify.json"), &json) {
        return fail(e);
    }
    if !common.quiet || !report.pass {
        println!("{json}");
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn cmd_audit(common: &Common, trajectory: Option<&Path>) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let path = trajectory.map_or_else(|| common.out.join(&cfg.snapshot_path), Path::to_path_buf);
    let snapshots = match read_trajectory(&path) {
        Ok(s) => s,
        Err(Error::Io(e)) => return fail(Error::Format(format!("cannot read {}: {e}", path.display()))),
        Err(e) => return fail(e),
    };
    let (report, history) = match audit(&cfg, &snapshots) {
        Ok(r) => r,
        // A trajectory that cannot be audited is an input problem, not a runtime abort.
        Err(e) if !e.is_input_error() => return fail(Error::Format(e.to_string())),
        Err(e) => return fail(e),
    };
    let json = report.to_json();
    let written = write_file(&common.out.join("audit.json"), &json)
        .and_then(|_| write_file(&common.out.join("audit.csv"), &history_csv(&history)));
    if let Err(e) = written {
        return fail(e);
    }
    if !common.quiet || !report.pass {
        println!("{json}");
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let quiet = match &cli.command {
        Command::Run(c) | Command::Verify { common: c, .. } | Command::Audit { common: c, .. } => c.quiet,
    };
    env_logger::Builder::new()
        .filter_level(if quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Verify { common, mutate } => cmd_verify(common, *mutate),
        Command::Audit { common, trajectory } => cmd_audit(common, trajectory.as_deref()),
    }
}
