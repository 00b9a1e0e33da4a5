//! Compiles declarative spreadsheet models into structured Input / Workings /
//! Output workbooks.
//!
//! ```
//! use ssc_core::{compile, evaluate_grid, CompileOptions};
//!
//! let src = "model \"m\"\ninput x \"X\" = 2\nfunc f \"F\" = x*3\n";
//! let compiled = compile(src, &CompileOptions::default()).unwrap();
//! let values = evaluate_grid(&compiled.workbook, 2).unwrap();
//! assert_eq!(values.get("f").unwrap().to_string(), "6.00");
//! ```

pub mod auditor;
pub mod decimal;
pub mod emitter;
pub mod evaluator;
pub mod formula;
pub mod layout;
pub mod lexer;
pub mod model;
pub mod parser;
pub mod pipeline;
pub mod structurer;

pub use auditor::{audit, explain_violation, AuditError, Violation, ViolationCode};
pub use decimal::{Decimal, DecimalError};
pub use emitter::{
    derive_name, emit_workbook, parse_csv, parse_grid_json, serialize_csv, serialize_grid_json,
    Cell, EmitError, EmitOptions, NameRole, NameTarget, Origin, RefMode, Sheet, WorkbookGrid,
};
pub use evaluator::{diff_values, evaluate_grid, evaluate_spec, EvalError, ValueKey, ValueMap};
pub use formula::{parse_formula, render_formula, CellRef, Formula};
pub use layout::{
    layout_all, layout_input, layout_output, layout_workings, CellAddress, LayoutConfig,
    LayoutError, Layouts, INPUT_SHEET, OUTPUT_SHEET, WORKINGS_SHEET,
};
pub use lexer::{ParseError, SourceSpan};
pub use model::{pretty_expr, validate_model, Diagnostic, DiagnosticCode, Expr, Ident, ModelSpec};
pub use parser::{parse_expr, parse_model, serialize_model};
pub use pipeline::{
    compile, compile_spec, load, structure, CompileError, CompileOptions, Compiled,
};
pub use structurer::{
    build_graph, detect_cycles, render_tree, resolve_to_forest, DepGraph, NodeKind, ResolutionMode,
    StructureError, StructureForest, StructureNode,
};
