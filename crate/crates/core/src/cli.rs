//! `ged` command-line front end.
//!
//! Exit codes: 0 on success, 1 for parse, build, validation or serving
//! failures, 2 for I/O failures and usage errors. Diagnostics go to the
//! error stream as `FILE:LINE:COL: message`, or `FILE: message` when there is
//! no source position.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::dsl::{self, DesignSpec};
use crate::model::Design;
use crate::serve::{self, ServeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Serve,
    Check,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    Factor,
    Level,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub command: CommandKind,
    pub input_path: PathBuf,
    pub seed_override: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub graph_kind: GraphKind,
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(
    name = "ged",
    version,
    about = "Build, check and serve experimental designs from .ged files"
)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Build and assign the design, then write the design table as CSV.
    Serve {
        file: PathBuf,
        /// Overrides the seed given in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Report structural problems; exits 0 only when there are none.
    Check { file: PathBuf },
    /// Write the factor or level graph in DOT format.
    Graph {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "factor")]
        kind: GraphKind,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

impl CliConfig {
    pub fn from_args<I, T>(argv: I) -> Result<CliConfig, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let args = Args::try_parse_from(argv)?;
        Ok(match args.command {
            Cmd::Serve { file, seed, output } => CliConfig {
                command: CommandKind::Serve,
                input_path: file,
                seed_override: seed,
                output_path: output,
                graph_kind: GraphKind::Factor,
                format: Format::Csv,
            },
            Cmd::Check { file } => CliConfig {
                command: CommandKind::Check,
                input_path: file,
                seed_override: None,
                output_path: None,
                graph_kind: GraphKind::Factor,
                format: Format::Csv,
            },
            Cmd::Graph { file, kind, output } => CliConfig {
                command: CommandKind::Graph,
                input_path: file,
                seed_override: None,
                output_path: output,
                graph_kind: kind,
                format: Format::Dot,
            },
        })
    }
}

/// A failure with its exit code and already-formatted diagnostic lines.
struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn user(lines: Vec<String>) -> Self {
        Failure { code: 1, lines }
    }

    fn io(line: String) -> Self {
        Failure {
            code: 2,
            lines: vec![line],
        }
    }
}

/// Runs the CLI with `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match CliConfig::from_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&config, stdout) {
        Ok(()) => 0,
        Err(failure) => {
            for line in failure.lines {
                let _ = writeln!(stderr, "{line}");
            }
            failure.code
        }
    }
}

/// Parses source text. Invalid UTF-8 is reported at the first bad byte.
pub fn parse_bytes(bytes: &[u8]) -> Result<DesignSpec, dsl::ParseError> {
    let source = match std::str::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let line = valid.matches('\n').count() + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            return Err(dsl::ParseError::new(
                dsl::Pos { line, column },
                "input is not valid UTF-8",
            ));
        }
    };
    dsl::parse(source)
}

fn load(config: &CliConfig) -> Result<Design, Failure> {
    let path = config.input_path.display().to_string();
    let bytes = fs::read(&config.input_path)
        .map_err(|e| Failure::io(format!("{path}: cannot read input: {e}")))?;
    let mut spec = parse_bytes(&bytes).map_err(|e| {
        let mut line = format!("{path}:{}:{}: {}", e.line, e.column, e.message);
        if !e.expected.is_empty() {
            line.push_str(&format!(" (expected {})", e.expected.join(", ")));
        }
        Failure::user(vec![line])
    })?;
    if let (Some(seed), Some(assign)) = (config.seed_override, spec.assign_decl.as_mut()) {
        assign.seed = Some(seed);
    }
    dsl::build(&spec).map_err(|e| Failure::user(vec![format!("{path}: {e}")]))
}

fn emit(output: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, bytes)
            .map_err(|e| Failure::io(format!("{}: cannot write output: {e}", p.display()))),
        None => stdout
            .write_all(bytes)
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::io(format!("cannot write to standard output: {e}"))),
    }
}

fn serve_failure(path: &str, err: ServeError) -> Failure {
    match err {
        ServeError::Invalid(violations) => {
            Failure::user(violations.iter().map(|v| format!("{path}: {v}")).collect())
        }
        ServeError::Unservable(u) => Failure::user(vec![format!("{path}: {u}")]),
    }
}

fn execute(config: &CliConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let path = config.input_path.display().to_string();
    let design = load(config)?;
    match config.command {
        CommandKind::Serve => {
            let table = serve::serve_table(&design).map_err(|e| serve_failure(&path, e))?;
            emit(
                config.output_path.as_deref(),
                &serve::to_csv(&table),
                stdout,
            )
        }
        CommandKind::Check => {
            let table = serve::serve_table(&design).map_err(|e| serve_failure(&path, e))?;
            let summary = format!(
                "{path}: ok ({} factors, {} levels, {} rows)\n",
                design.factor_count(),
                design.level_graph().len(),
                table.rows.len()
            );
            emit(None, summary.as_bytes(), stdout)
        }
        CommandKind::Graph => {
            let dot = match config.graph_kind {
                GraphKind::Factor => serve::factor_graph_dot(&design),
                GraphKind::Level => serve::level_graph_dot(&design),
            };
            emit(config.output_path.as_deref(), dot.as_bytes(), stdout)
        }
    }
}
