//! `ssc`: compile, evaluate, inspect and audit spreadsheet models.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ssc_core::{RefMode, ResolutionMode};

#[derive(Debug, Parser)]
#[command(name = "ssc", version, about = "Structured spreadsheet model compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RefModeArg {
    Address,
    Name,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResolutionArg {
    Strict,
    Figure7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    GridJson,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AuditFormatArg {
    Text,
    Json,
}

#[derive(Debug, clap::Args)]
struct ModelArgs {
    /// Model source (.ssm)
    input: PathBuf,
    /// How shared functions are pulled out into modules
    #[arg(long, value_enum, default_value = "strict")]
    resolution: ResolutionArg,
    /// Decimal places for values
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(0..=18))]
    scale: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the workbook as grid-JSON and/or CSV
    Compile {
        #[command(flatten)]
        model: ModelArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "address")]
        ref_mode: RefModeArg,
        #[arg(long, value_enum, default_value = "grid-json")]
        format: FormatArg,
    },
    /// Print the value of every input and function
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// Show values with thousands separators
        #[arg(long)]
        pretty: bool,
        /// Add a table following the workings rows
        #[arg(long)]
        report: bool,
    },
    /// Print the structure forest
    Tree {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Lint a compiled workbook (.grid.json) or a model's own output (.ssm)
    Audit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "address")]
        ref_mode: RefModeArg,
        #[arg(long, value_enum, default_value = "text")]
        format: AuditFormatArg,
    },
    /// Parse, validate and structure a model without writing anything
    Check {
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Compile,
    Eval,
    Tree,
    Audit,
    Check,
}

/// Validated settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub ref_mode: RefMode,
    pub resolution: ResolutionMode,
    pub format: FormatArg,
    pub audit_format: AuditFormatArg,
    pub scale: u32,
    pub pretty: bool,
    pub report: bool,
    pub color: bool,
}

impl RunConfig {
    fn from_cli(cli: Cli, color: bool) -> Self {
        let mut config = RunConfig {
            command: CommandKind::Check,
            input: PathBuf::new(),
            out: None,
            ref_mode: RefMode::Address,
            resolution: ResolutionMode::Strict,
            format: FormatArg::GridJson,
            audit_format: AuditFormatArg::Text,
            scale: 2,
            pretty: false,
            report: false,
            color,
        };
        let model = match cli.command {
            Command::Compile {
                model,
                out,
                ref_mode,
                format,
            } => {
                config.command = CommandKind::Compile;
                config.out = Some(out);
                config.ref_mode = ref_mode.into();
                config.format = format;
                model
            }
            Command::Eval {
                model,
                pretty,
                report,
            } => {
                config.command = CommandKind::Eval;
                config.pretty = pretty;
                config.report = report;
                model
            }
            Command::Tree { model } => {
                config.command = CommandKind::Tree;
                model
            }
            Command::Audit {
                model,
                ref_mode,
                format,
            } => {
                config.command = CommandKind::Audit;
                config.ref_mode = ref_mode.into();
                config.audit_format = format;
                model
            }
            Command::Check { model } => model,
        };
        config.input = model.input;
        config.resolution = match model.resolution {
            ResolutionArg::Strict => ResolutionMode::Strict,
            ResolutionArg::Figure7 => ResolutionMode::Figure7Compat,
        };
        config.scale = model.scale;
        config
    }
}

impl From<RefModeArg> for RefMode {
    fn from(m: RefModeArg) -> Self {
        match m {
            RefModeArg::Address => RefMode::Address,
            RefModeArg::Name => RefMode::Name,
        }
    }
}

/// `SSC_COLOR=1` forces colour, `SSC_COLOR=0` disables it; otherwise colour
/// follows whether stderr is a terminal.
fn color_enabled() -> bool {
    use std::io::IsTerminal;
    match std::env::var("SSC_COLOR").as_deref() {
        Ok("1") => true,
        Ok("0") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let config = RunConfig::from_cli(cli, color_enabled());
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = commands::run(&config, &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code)
}
