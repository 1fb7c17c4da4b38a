mod commands;
mod config;
mod report;

use clap::{Parser, Subcommand, ValueEnum};
use commands::Command;
use config::{CliError, Format, RunConfig};
use report::Report;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Direct and inverse spectral computations for Sturm-Liouville operators
/// with a jump condition at an interior point.
#[derive(Parser)]
#[command(name = "sturmdisc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues below a bound.
    Spectrum(Args),
    /// Norming constants per eigenvalue.
    Norming(Args),
    /// Characteristic functions, their derivatives and pair functions.
    Charfn(Args),
    /// Hadamard product against the characteristic function.
    Product(Args),
    /// Growth fit along the imaginary ray.
    Growth(Args),
    /// Decay orders of solution products.
    Asympt(Args),
    /// Uniqueness probes on a pair of problems.
    Uniq(Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

fn threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("STURMDISC_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Validation(format!("STURMDISC_THREADS: expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Computation(format!("thread pool: {e}")))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Computation(format!("writing {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Computation(format!("writing stdout: {e}")))
        }
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("sturmdisc: {}", e.message());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Norming(a) => (Command::Norming, a),
        Cmd::Charfn(a) => (Command::Charfn, a),
        Cmd::Product(a) => (Command::Product, a),
        Cmd::Growth(a) => (Command::Growth, a),
        Cmd::Asympt(a) => (Command::Asympt, a),
        Cmd::Uniq(a) => (Command::Uniq, a),
    };
    if let Err(e) = threads() {
        return fail(&e);
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(&CliError::Validation(format!("reading {}: {e}", args.config.display()))),
    };
    let cfg = match RunConfig::from_str(&text) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };

    let out_path = args.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let format = match args.format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => cfg.output.format.unwrap_or_else(|| match out_path.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "csv" => Format::Csv,
            _ => Format::Json,
        }),
    };

    let run = commands::run(&cfg, command);
    let resolved = json!({
        "problems": cfg.problems,
        "command": command.name(),
        "params": run.params,
        "output": { "path": out_path.as_ref().map(|p| p.display().to_string()), "format": format },
    });
    let pass = run.output.as_ref().and_then(|o| o.pass);
    let report = Report {
        command: command.name(),
        config: resolved,
        output: run.output,
        error: run.error.as_ref().map(|e| e.message().to_string()),
    };
    if let Err(e) = write(out_path.as_deref(), &report.render(format)) {
        return fail(&e);
    }
    match (&run.error, pass) {
        (Some(e), _) => fail(e),
        (None, Some(false)) => {
            eprintln!("sturmdisc: property check failed");
            ExitCode::from(3)
        }
        _ => ExitCode::SUCCESS,
    }
}
