use std::io::Write;
use std::path::Path;

use ssc_core::layout::WORKINGS_SHEET;
use ssc_core::{
    audit, compile_spec, evaluate_spec, load, parse_grid_json, render_tree, structure,
    CompileError, CompileOptions, EvalError, Origin, ValueKey, ValueMap, Violation,
};

use crate::artifacts::{render_artifacts, write_atomically};
use crate::{AuditFormatArg, CommandKind, RunConfig};

const OK: u8 = 0;
const INVALID: u8 = 1;
const STRUCTURAL: u8 = 2;
const VIOLATIONS: u8 = 3;

struct Reporter<'a> {
    err: &'a mut dyn Write,
    color: bool,
    path: String,
}

impl Reporter<'_> {
    fn tag(&self) -> &'static str {
        if self.color {
            "\x1b[1;31merror\x1b[0m"
        } else {
            "error"
        }
    }

    fn error(&mut self, message: &str) {
        let _ = writeln!(self.err, "{}: {}: {message}", self.path, self.tag());
    }

    fn compile_error(&mut self, e: &CompileError) -> u8 {
        match e {
            CompileError::Parse(p) => {
                let _ = writeln!(
                    self.err,
                    "{}:{}:{}: {}: {}",
                    self.path,
                    p.span.line,
                    p.span.column,
                    self.tag(),
                    p.message
                );
            }
            CompileError::Invalid(diagnostics) => {
                for d in diagnostics {
                    self.error(&format!(
                        "[{}] {}: {}",
                        d.code.as_str(),
                        d.location,
                        d.message
                    ));
                }
            }
            other => self.error(&other.to_string()),
        }
        u8::try_from(e.exit_code()).unwrap_or(STRUCTURAL)
    }

    fn eval_error(&mut self, e: &EvalError) -> u8 {
        self.error(&format!("[{}] {e}", e.code()));
        STRUCTURAL
    }
}

pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let mut reporter = Reporter {
        err,
        color: config.color,
        path: config.input.display().to_string(),
    };
    let source = match std::fs::read_to_string(&config.input) {
        Ok(s) => s,
        Err(e) => {
            reporter.error(&format!("cannot read input: {e}"));
            return INVALID;
        }
    };
    if config.command == CommandKind::Audit && is_grid_json(&config.input) {
        return match parse_grid_json(&source) {
            Ok(wb) => report_audit(config, &wb, out, &mut reporter),
            Err(e) => {
                reporter.error(&e.to_string());
                INVALID
            }
        };
    }
    let spec = match load(&source) {
        Ok(spec) => spec,
        Err(e) => return reporter.compile_error(&e),
    };
    let options = CompileOptions {
        resolution: config.resolution,
        ref_mode: config.ref_mode,
        scale: config.scale,
        ..CompileOptions::default()
    };
    match config.command {
        CommandKind::Check => match structure(&spec, config.resolution) {
            Ok((_, forest)) => {
                let _ = writeln!(
                    out,
                    "ok: {} inputs, {} ranges, {} functions, {} modules",
                    spec.inputs().count(),
                    spec.ranges().count(),
                    spec.functions.len(),
                    forest.modules.len()
                );
                OK
            }
            Err(e) => reporter.compile_error(&e),
        },
        CommandKind::Tree => match structure(&spec, config.resolution) {
            Ok((_, forest)) => {
                let _ = write!(out, "{}", render_tree(&forest));
                OK
            }
            Err(e) => reporter.compile_error(&e),
        },
        CommandKind::Eval => {
            let values = match evaluate_spec(&spec, config.scale) {
                Ok(v) => v,
                Err(e) => return reporter.eval_error(&e),
            };
            let show = |v: &ssc_core::Decimal| {
                if config.pretty {
                    v.to_grouped_string()
                } else {
                    v.to_string()
                }
            };
            for (key, v) in &values.values {
                let _ = writeln!(out, "{key} = {}", show(v));
            }
            if config.report {
                let compiled = match compile_spec(spec, &options) {
                    Ok(c) => c,
                    Err(e) => return reporter.compile_error(&e),
                };
                write_report(out, &compiled.workbook, &values, &show);
            }
            OK
        }
        CommandKind::Compile => {
            let compiled = match compile_spec(spec, &options) {
                Ok(c) => c,
                Err(e) => return reporter.compile_error(&e),
            };
            let stem = config
                .input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            let artifacts = match render_artifacts(&compiled.workbook, &stem, config.format) {
                Ok(a) => a,
                Err(e) => {
                    reporter.error(&e.to_string());
                    return STRUCTURAL;
                }
            };
            let dir = config.out.as_deref().expect("compile requires --out");
            if let Err(e) = write_atomically(dir, &artifacts) {
                reporter.error(&format!("cannot write artifacts: {e}"));
                return INVALID;
            }
            let rows = compiled.layouts.workings.rows.len();
            let _ = writeln!(
                out,
                "compiled {:?}: {} modules, {} workings rows, {} names",
                compiled.spec.title,
                compiled.forest.modules.len(),
                rows,
                compiled.workbook.names.len()
            );
            for (path, _) in &artifacts {
                let _ = writeln!(out, "wrote {}", dir.join(path).display());
            }
            OK
        }
        CommandKind::Audit => match compile_spec(spec, &options) {
            Ok(compiled) => report_audit(config, &compiled.workbook, out, &mut reporter),
            Err(e) => reporter.compile_error(&e),
        },
    }
}

fn is_grid_json(path: &Path) -> bool {
    path.to_string_lossy().ends_with(".json")
}

fn report_audit(
    config: &RunConfig,
    wb: &ssc_core::WorkbookGrid,
    out: &mut dyn Write,
    reporter: &mut Reporter,
) -> u8 {
    let violations = match audit(wb) {
        Ok(v) => v,
        Err(e) => {
            reporter.error(&format!("[{}] {e}", e.code()));
            return INVALID;
        }
    };
    match config.audit_format {
        AuditFormatArg::Json => {
            let list: Vec<serde_json::Value> = violations.iter().map(violation_json).collect();
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&list).expect("json values serialize")
            );
        }
        AuditFormatArg::Text => {
            for v in &violations {
                let _ = writeln!(out, "{v}");
            }
            if violations.is_empty() {
                let _ = writeln!(out, "no violations");
            }
        }
    }
    if violations.is_empty() {
        OK
    } else {
        VIOLATIONS
    }
}

fn violation_json(v: &Violation) -> serde_json::Value {
    serde_json::json!({
        "code": v.code.as_str(),
        "rule": v.code.rule(),
        "qualitative": v.code.is_qualitative(),
        "address": v.address.to_string(),
        "message": v.message,
    })
}

/// One line per workings row: row number, indented label, value.
fn write_report(
    out: &mut dyn Write,
    wb: &ssc_core::WorkbookGrid,
    values: &ValueMap,
    show: &dyn Fn(&ssc_core::Decimal) -> String,
) {
    let Some(sheet) = wb.sheet(WORKINGS_SHEET) else {
        return;
    };
    let mut lines = Vec::new();
    for (&(row, col), origin) in &sheet.origins {
        let key = match origin {
            Origin::Function(id) | Origin::Input(id) => ValueKey::id(id.clone()),
            Origin::Member(id, i) => ValueKey::member(id.clone(), *i),
        };
        let label = match sheet.get(row, 1) {
            Some(ssc_core::Cell::Label(t)) => t.clone(),
            _ => String::new(),
        };
        let value = values.values.get(&key).map(show).unwrap_or_default();
        lines.push((row, col, label, value));
    }
    let width = lines.iter().map(|l| l.2.chars().count()).max().unwrap_or(0);
    let _ = writeln!(out);
    for (row, col, label, value) in lines {
        let column = ssc_core::layout::column_letters(col);
        let _ = writeln!(out, "{row:>4}  {label:<width$}  {column:>2}  {value:>14}");
    }
}
