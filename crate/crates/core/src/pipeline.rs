//! The whole compiler in one call: parse, validate, structure, lay out, emit.

use crate::emitter::{emit_workbook, EmitError, EmitOptions, RefMode, WorkbookGrid};
use crate::layout::{layout_all, LayoutConfig, LayoutError, Layouts};
use crate::lexer::ParseError;
use crate::model::{validate_model, Diagnostic, ModelSpec};
use crate::parser::parse_model;
use crate::structurer::{
    build_graph, resolve_to_forest, DepGraph, ResolutionMode, StructureError, StructureForest,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileOptions {
    pub resolution: ResolutionMode,
    pub ref_mode: RefMode,
    pub scale: u32,
    pub layout: LayoutConfig,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            resolution: ResolutionMode::Strict,
            ref_mode: RefMode::Address,
            scale: 2,
            layout: LayoutConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{} validation error(s)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}

impl CompileError {
    /// 1 for problems in the source text, 2 for structural ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            CompileError::Parse(_) | CompileError::Invalid(_) => 1,
            CompileError::Emit(EmitError::EmptyAfterStrip(_)) => 1,
            CompileError::Structure(_) | CompileError::Layout(_) | CompileError::Emit(_) => 2,
        }
    }
}

/// Everything produced on the way to a workbook.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub spec: ModelSpec,
    pub graph: DepGraph,
    pub forest: StructureForest,
    pub layouts: Layouts,
    pub workbook: WorkbookGrid,
}

/// Parses and validates `source`.
pub fn load(source: &str) -> Result<ModelSpec, CompileError> {
    let spec = parse_model(source)?;
    let diagnostics = validate_model(&spec);
    if !diagnostics.is_empty() {
        return Err(CompileError::Invalid(diagnostics));
    }
    Ok(spec)
}

pub fn structure(
    spec: &ModelSpec,
    resolution: ResolutionMode,
) -> Result<(DepGraph, StructureForest), CompileError> {
    let graph = build_graph(spec);
    let forest = resolve_to_forest(&graph, spec, resolution)?;
    Ok((graph, forest))
}

pub fn compile_spec(spec: ModelSpec, options: &CompileOptions) -> Result<Compiled, CompileError> {
    let (graph, forest) = structure(&spec, options.resolution)?;
    let layouts = layout_all(&spec, &forest, &options.layout)?;
    let emit = EmitOptions {
        ref_mode: options.ref_mode,
        scale: options.scale,
    };
    let workbook = emit_workbook(&spec, &forest, &layouts, &emit)?;
    Ok(Compiled {
        spec,
        graph,
        forest,
        layouts,
        workbook,
    })
}

pub fn compile(source: &str, options: &CompileOptions) -> Result<Compiled, CompileError> {
    compile_spec(load(source)?, options)
}
