//! Command line entry points: trace replay, the protocol service, and
//! file-to-file diff and patch tools.
//!
//! Exit codes: 0 success, 1 usage, 2 input error, 3 internal error.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use caret_core::context::content_lines;
use caret_core::diff::{render_diff, LineTag};
use caret_core::edit::{apply_edit, parse_edit_script};

use caret::config::HarnessConfig;
use caret::replay::replay;
use caret::report::{render_json, render_table};
use caret::service::{serve, ServeError, TimeMode, Transport};
use caret::trace::parse_trace;

#[derive(Parser)]
#[command(name = "caret", about = "Completion engine replay, service, diff, and patch tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace file under virtual time and print the metrics report.
    Replay {
        /// Trace file: one JSON step per line.
        trace: PathBuf,
        /// TOML settings for scheduler, packer, budget, and backend.
        #[arg(long)]
        config: PathBuf,
        /// Report format.
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        report: ReportFormat,
    },
    /// Serve engine sessions over the line-delimited JSON protocol.
    Serve {
        /// TOML settings for scheduler, packer, budget, and backend.
        #[arg(long)]
        config: PathBuf,
        /// TCP address to listen on, e.g. 127.0.0.1:7878.
        #[arg(long, conflicts_with = "stdio")]
        listen: Option<String>,
        /// Serve one session over stdin and stdout (the default).
        #[arg(long)]
        stdio: bool,
        /// Use real time for latency instead of message timestamps.
        #[arg(long)]
        wall_clock: bool,
    },
    /// Render a move-aware decorated diff between two files.
    Diff {
        before: PathBuf,
        after: PathBuf,
    },
    /// Apply an anchored edit script to a file and print the result.
    Patch {
        script: PathBuf,
        file: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("caret: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Replay { trace, config, report } => run_replay(&trace, &config, report),
        Command::Serve { config, listen, stdio: _, wall_clock } => {
            let transport = match listen {
                Some(addr) => Transport::Listen(addr),
                None => Transport::Stdio,
            };
            let mode = if wall_clock { TimeMode::Wall } else { TimeMode::Virtual };
            run_serve(&config, &transport, mode)
        }
        Command::Diff { before, after } => run_diff(&before, &after),
        Command::Patch { script, file } => run_patch(&script, &file),
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<HarnessConfig, Failure> {
    let text = read_file(path)?;
    HarnessConfig::parse(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn print_out(text: &str) -> Result<(), Failure> {
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| Failure::internal(format!("cannot write output: {e}")))
}

fn run_replay(trace_path: &Path, config_path: &Path, format: ReportFormat) -> Result<(), Failure> {
    let config = load_config(config_path)?;
    let trace_text = read_file(trace_path)?;
    let trace = parse_trace(&trace_text)
        .map_err(|e| Failure::input(format!("{}: {e}", trace_path.display())))?;
    let report = replay(&trace, &config)
        .map_err(|e| Failure::input(format!("{}: {e}", trace_path.display())))?;
    let rendered = match format {
        ReportFormat::Json => render_json(&report),
        ReportFormat::Table => render_table(&report),
    };
    print_out(&rendered)
}

fn run_serve(config_path: &Path, transport: &Transport, mode: TimeMode) -> Result<(), Failure> {
    let config = load_config(config_path)?;
    serve(&config, transport, mode).map_err(|e| match e {
        ServeError::Config(_) | ServeError::Bind { .. } => Failure::input(e.to_string()),
        ServeError::Io(_) => Failure::internal(e.to_string()),
    })
}

fn run_diff(before_path: &Path, after_path: &Path) -> Result<(), Failure> {
    let before_text = read_file(before_path)?;
    let after_text = read_file(after_path)?;
    let before = content_lines(&before_text);
    let after = content_lines(&after_text);
    let rendered = render_diff(&before, &after);
    let mut out = String::new();
    for line in &rendered.decorated_lines {
        let marker = match line.tag {
            LineTag::Unchanged => String::new(),
            LineTag::Added => String::from("+"),
            LineTag::Removed => String::from("-"),
            LineTag::Modified => String::from("~"),
            LineTag::MovedFrom { pair } => format!("<{pair}"),
            LineTag::MovedTo { pair } => format!(">{pair}"),
        };
        out.push_str(&format!("{marker:>2} {}\n", line.text));
    }
    print_out(&out)
}

fn run_patch(script_path: &Path, file_path: &Path) -> Result<(), Failure> {
    let script_text = read_file(script_path)?;
    let script = parse_edit_script(&script_text)
        .map_err(|e| Failure::input(format!("{}: {e}", script_path.display())))?;
    let file_text = read_file(file_path)?;
    let lines = content_lines(&file_text);
    let patched = apply_edit(&script, &lines)
        .map_err(|e| Failure::input(format!("{}: {e}", file_path.display())))?;
    let mut out = patched.join("\n");
    // The trailing-newline convention of the input is preserved.
    if !out.is_empty() && (file_text.ends_with('\n') || file_text.is_empty()) {
        out.push('\n');
    }
    print_out(&out)
}
