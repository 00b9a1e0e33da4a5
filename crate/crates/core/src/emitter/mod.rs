//! Turns layouts into a concrete workbook: cell text, formulas in Address or
//! Name reference style, and the name table.

mod csv;
mod json;
mod names;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

pub use self::csv::{parse_csv, serialize_csv, CsvError};
pub use self::json::{parse_grid_json, serialize_grid_json, GridJsonError};
pub use self::names::{derive_name, sanitize, EmptyAfterStrip, NameAllocator, NameRole};

use crate::decimal::{Decimal, DecimalError};
use crate::formula::{render_formula, CellRef, Coord, Formula, FormulaOption};
use crate::layout::{
    CellAddress, CellPlan, Layouts, SlotSource, ValueRef, INPUT_SHEET, OUTPUT_SHEET, WORKINGS_SHEET,
};
use crate::model::{Decl, Expr, Ident, InputDecl, ModelSpec};
use crate::structurer::{NodeKind, StructureForest, StructureNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum RefMode {
    #[default]
    Address,
    Name,
}

impl RefMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RefMode::Address => "Address",
            RefMode::Name => "Name",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Label(String),
    /// Text starting with `=`.
    Formula(String),
    Number(Decimal),
}

/// The model element a cell shows, so values can be read back by id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Function(Ident),
    Input(Ident),
    Member(Ident, usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Function(id) => write!(f, "fn:{id}"),
            Origin::Input(id) => write!(f, "in:{id}"),
            Origin::Member(id, i) => write!(f, "rm:{id}:{i}"),
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad origin `{s}`");
        let (tag, rest) = s.split_once(':').ok_or_else(bad)?;
        let ident = |t: &str| {
            if Ident::is_valid(t) {
                Ok(Ident::new(t))
            } else {
                Err(bad())
            }
        };
        match tag {
            "fn" => Ok(Origin::Function(ident(rest)?)),
            "in" => Ok(Origin::Input(ident(rest)?)),
            "rm" => {
                let (id, index) = rest.split_once(':').ok_or_else(bad)?;
                Ok(Origin::Member(
                    ident(id)?,
                    index.parse().map_err(|_| bad())?,
                ))
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sheet {
    pub name: String,
    pub cells: BTreeMap<(u32, u32), Cell>,
    pub origins: BTreeMap<(u32, u32), Origin>,
}

impl Sheet {
    pub fn new(name: &str) -> Self {
        Sheet {
            name: name.to_string(),
            ..Sheet::default()
        }
    }

    pub fn get(&self, row: u32, col: u32) -> Option<&Cell> {
        self.cells.get(&(row, col))
    }

    /// (last row, last column) in use, or (0, 0) when empty.
    pub fn extent(&self) -> (u32, u32) {
        let rows = self.cells.keys().map(|&(r, _)| r).max().unwrap_or(0);
        let cols = self.cells.keys().map(|&(_, c)| c).max().unwrap_or(0);
        (rows, cols)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum NameTarget {
    Cell(CellAddress),
    Range(CellAddress, CellAddress),
}

impl NameTarget {
    pub fn sheet(&self) -> &str {
        match self {
            NameTarget::Cell(a) | NameTarget::Range(a, _) => &a.sheet,
        }
    }
}

impl fmt::Display for NameTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NameTarget::Cell(a) => write!(f, "{a}"),
            NameTarget::Range(a, b) => write!(f, "{a}:{}", b.local()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WorkbookGrid {
    pub model: String,
    pub ref_mode: RefMode,
    pub sheets: Vec<Sheet>,
    pub names: BTreeMap<String, NameTarget>,
}

impl WorkbookGrid {
    pub fn sheet(&self, name: &str) -> Option<&Sheet> {
        self.sheets.iter().find(|s| s.name == name)
    }

    pub fn sheet_mut(&mut self, name: &str) -> Option<&mut Sheet> {
        self.sheets.iter_mut().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("layout is inconsistent with the model: {0}")]
    InconsistentLayout(String),
    #[error(transparent)]
    EmptyAfterStrip(#[from] EmptyAfterStrip),
    #[error("input `{0}` cannot be written at the requested scale: {1}")]
    Decimal(Ident, DecimalError),
}

impl EmitError {
    pub fn code(&self) -> &'static str {
        match self {
            EmitError::InconsistentLayout(_) => "INCONSISTENT_LAYOUT",
            EmitError::EmptyAfterStrip(_) => "EMPTY_AFTER_STRIP",
            EmitError::Decimal(..) => "DECIMAL_OVERFLOW",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    pub ref_mode: RefMode,
    /// Decimal places of every number cell.
    pub scale: u32,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            ref_mode: RefMode::Address,
            scale: 2,
        }
    }
}

pub fn emit_workbook(
    spec: &ModelSpec,
    forest: &StructureForest,
    layouts: &Layouts,
    options: &EmitOptions,
) -> Result<WorkbookGrid, EmitError> {
    Emitter::new(spec, forest, layouts, options)?.emit()
}

struct Emitter<'a> {
    spec: &'a ModelSpec,
    layouts: &'a Layouts,
    options: &'a EmitOptions,
    nodes: Vec<&'a StructureNode>,
    slots: HashMap<usize, CellAddress>,
    /// First full occurrence of each function, and first row of each input.
    home: HashMap<&'a Ident, usize>,
    input_names: HashMap<&'a Ident, String>,
    row_names: HashMap<usize, String>,
    names: BTreeMap<String, NameTarget>,
}

impl<'a> Emitter<'a> {
    fn new(
        spec: &'a ModelSpec,
        forest: &'a StructureForest,
        layouts: &'a Layouts,
        options: &'a EmitOptions,
    ) -> Result<Self, EmitError> {
        let nodes = forest.nodes();
        let slots = layouts
            .workings
            .cells
            .iter()
            .filter_map(|(&(r, c), plan)| match plan {
                CellPlan::FormulaSlot(SlotSource::Node(k)) => {
                    Some((*k, layouts.workings.address(r, c)))
                }
                _ => None,
            })
            .collect();
        let mut home = HashMap::new();
        for n in &nodes {
            if matches!(
                n.kind,
                NodeKind::Function | NodeKind::Selection | NodeKind::Leaf | NodeKind::Constant
            ) {
                home.entry(&n.id).or_insert(n.key);
            }
        }
        let mut emitter = Emitter {
            spec,
            layouts,
            options,
            nodes,
            slots,
            home,
            input_names: HashMap::new(),
            row_names: HashMap::new(),
            names: BTreeMap::new(),
        };
        emitter.allocate_names()?;
        Ok(emitter)
    }

    /// Inputs and ranges first, then each function's home row, then every
    /// other row in pre-order, so the most meaningful rows get unsuffixed
    /// names.
    fn allocate_names(&mut self) -> Result<(), EmitError> {
        let mut alloc = NameAllocator::new();
        let input = &self.layouts.input;
        for decl in &self.spec.input_section {
            let (name, target) = match decl {
                InputDecl::Scalar(item) => {
                    if self.options.ref_mode == RefMode::Address {
                        continue;
                    }
                    let name = alloc.allocate(&derive_name(&item.label, NameRole::Input)?);
                    let slot = input
                        .value_slot(&ValueRef::Input(item.id.clone()))
                        .ok_or_else(|| missing(&format!("input `{}`", item.id)))?;
                    (name, NameTarget::Cell(slot))
                }
                InputDecl::Range(range) => {
                    let base = match self.options.ref_mode {
                        RefMode::Address => range.id.to_string(),
                        RefMode::Name => derive_name(&range.label, NameRole::Range)?,
                    };
                    let name = alloc.allocate(&base);
                    let (a, b) = input
                        .range_extents
                        .get(&range.id)
                        .cloned()
                        .ok_or_else(|| missing(&format!("range `{}`", range.id)))?;
                    (name, NameTarget::Range(a, b))
                }
            };
            self.input_names.insert(decl.id(), name.clone());
            self.names.insert(name, target);
        }
        if self.options.ref_mode == RefMode::Address {
            return Ok(());
        }
        let function_homes: Vec<(usize, &Ident)> = self
            .nodes
            .iter()
            .filter(|n| {
                matches!(n.kind, NodeKind::Function | NodeKind::Selection)
                    && self.home.get(&n.id) == Some(&n.key)
            })
            .map(|n| (n.key, &n.id))
            .collect();
        for (key, id) in function_homes {
            let label = match self.spec.lookup(id.as_str()) {
                Some(Decl::Function(f)) => f.label.as_str(),
                _ => return Err(missing(&format!("function `{id}`"))),
            };
            let name = alloc.allocate(&derive_name(label, NameRole::Function)?);
            self.bind_row(key, name)?;
        }
        for i in 0..self.nodes.len() {
            let n = self.nodes[i];
            if n.kind == NodeKind::Iteration || self.row_names.contains_key(&n.key) {
                continue;
            }
            let name = alloc.allocate(&derive_name(&n.label, NameRole::Function)?);
            self.bind_row(n.key, name)?;
        }
        Ok(())
    }

    fn bind_row(&mut self, key: usize, name: String) -> Result<(), EmitError> {
        let slot = self.slot(key)?;
        self.names.insert(name.clone(), NameTarget::Cell(slot));
        self.row_names.insert(key, name);
        Ok(())
    }

    fn slot(&self, key: usize) -> Result<CellAddress, EmitError> {
        self.slots
            .get(&key)
            .cloned()
            .ok_or_else(|| missing(&format!("structure node #{key} has no workings slot")))
    }

    fn emit(self) -> Result<WorkbookGrid, EmitError> {
        let sheets = vec![
            self.input_sheet()?,
            self.workings_sheet()?,
            self.output_sheet()?,
        ];
        Ok(WorkbookGrid {
            model: self.spec.title.clone(),
            ref_mode: self.options.ref_mode,
            sheets,
            names: self.names,
        })
    }

    fn input_sheet(&self) -> Result<Sheet, EmitError> {
        let mut sheet = Sheet::new(INPUT_SHEET);
        for (&pos, plan) in &self.layouts.input.cells {
            match plan {
                CellPlan::Label(text) | CellPlan::UnitHeader(text) => {
                    sheet.cells.insert(pos, Cell::Label(text.clone()));
                }
                CellPlan::ValueSlot(value) => {
                    let (id, raw, origin) = match value {
                        ValueRef::Input(id) => {
                            let item = self
                                .spec
                                .inputs()
                                .find(|i| &i.id == id)
                                .ok_or_else(|| missing(&format!("input `{id}`")))?;
                            (id, item.value, Origin::Input(id.clone()))
                        }
                        ValueRef::Member(id, index) => {
                            let member = self
                                .spec
                                .ranges()
                                .find(|r| &r.id == id)
                                .and_then(|r| r.members.get(*index))
                                .ok_or_else(|| missing(&format!("member {index} of `{id}`")))?;
                            (id, member.value, Origin::Member(id.clone(), *index))
                        }
                    };
                    let value = raw
                        .rescale(self.options.scale)
                        .map_err(|e| EmitError::Decimal(id.clone(), e))?;
                    sheet.cells.insert(pos, Cell::Number(value));
                    sheet.origins.insert(pos, origin);
                }
                CellPlan::FormulaSlot(_) => {
                    return Err(missing("formula slot planned on the input sheet"));
                }
            }
        }
        Ok(sheet)
    }

    fn workings_sheet(&self) -> Result<Sheet, EmitError> {
        let mut sheet = Sheet::new(WORKINGS_SHEET);
        let by_key: HashMap<usize, &StructureNode> =
            self.nodes.iter().map(|n| (n.key, *n)).collect();
        for (&pos, plan) in &self.layouts.workings.cells {
            match plan {
                CellPlan::Label(text) | CellPlan::UnitHeader(text) => {
                    sheet.cells.insert(pos, Cell::Label(text.clone()));
                }
                CellPlan::FormulaSlot(SlotSource::Node(key)) => {
                    let node = by_key
                        .get(key)
                        .ok_or_else(|| missing(&format!("structure node #{key}")))?;
                    let formula = self.node_formula(node)?;
                    sheet
                        .cells
                        .insert(pos, Cell::Formula(render_formula(&formula)));
                    sheet.origins.insert(pos, self.origin_of(&node.id)?);
                }
                CellPlan::FormulaSlot(SlotSource::Target(_)) | CellPlan::ValueSlot(_) => {
                    return Err(missing("workings cell planned for another sheet"));
                }
            }
        }
        Ok(sheet)
    }

    fn output_sheet(&self) -> Result<Sheet, EmitError> {
        let mut sheet = Sheet::new(OUTPUT_SHEET);
        for (&pos, plan) in &self.layouts.output.cells {
            match plan {
                CellPlan::Label(text) | CellPlan::UnitHeader(text) => {
                    sheet.cells.insert(pos, Cell::Label(text.clone()));
                }
                CellPlan::FormulaSlot(SlotSource::Target(id)) => {
                    let key = *self.home.get(id).ok_or_else(|| {
                        missing(&format!("output target `{id}` has no workings row"))
                    })?;
                    let reference = match self.options.ref_mode {
                        RefMode::Address => {
                            let slot = self.slot(key)?;
                            CellRef::Cell(Coord {
                                sheet: Some(WORKINGS_SHEET.to_string()),
                                row: slot.row,
                                col: slot.col,
                            })
                        }
                        RefMode::Name => CellRef::Name(self.row_name(key)?),
                    };
                    sheet
                        .cells
                        .insert(pos, Cell::Formula(render_formula(&Formula::Ref(reference))));
                    sheet.origins.insert(pos, self.origin_of(id)?);
                }
                CellPlan::FormulaSlot(SlotSource::Node(_)) | CellPlan::ValueSlot(_) => {
                    return Err(missing("output cell planned for another sheet"));
                }
            }
        }
        Ok(sheet)
    }

    fn origin_of(&self, id: &Ident) -> Result<Origin, EmitError> {
        match self.spec.lookup(id.as_str()) {
            Some(Decl::Function(_)) => Ok(Origin::Function(id.clone())),
            Some(Decl::Input(_)) => Ok(Origin::Input(id.clone())),
            _ => Err(missing(&format!("`{id}` cannot occupy a row"))),
        }
    }

    fn row_name(&self, key: usize) -> Result<String, EmitError> {
        self.row_names
            .get(&key)
            .cloned()
            .ok_or_else(|| missing(&format!("structure node #{key} has no name")))
    }

    fn input_name(&self, id: &Ident) -> Result<String, EmitError> {
        self.input_names
            .get(id)
            .cloned()
            .ok_or_else(|| missing(&format!("input `{id}` has no name")))
    }

    fn node_formula(&self, node: &StructureNode) -> Result<Formula, EmitError> {
        match node.kind {
            NodeKind::Leaf | NodeKind::Constant => {
                let reference = match self.options.ref_mode {
                    RefMode::Address => {
                        let slot = self
                            .layouts
                            .input
                            .value_slot(&ValueRef::Input(node.id.clone()))
                            .ok_or_else(|| missing(&format!("input `{}`", node.id)))?;
                        CellRef::Cell(Coord {
                            sheet: Some(INPUT_SHEET.to_string()),
                            row: slot.row,
                            col: slot.col,
                        })
                    }
                    RefMode::Name => CellRef::Name(self.input_name(&node.id)?),
                };
                Ok(Formula::Ref(reference))
            }
            NodeKind::ModuleRef => {
                let key = *self
                    .home
                    .get(&node.id)
                    .ok_or_else(|| missing(&format!("module root `{}`", node.id)))?;
                Ok(Formula::Ref(self.row_ref(key)?))
            }
            NodeKind::Function | NodeKind::Selection => {
                let f = self
                    .spec
                    .function(node.id.as_str())
                    .ok_or_else(|| missing(&format!("function `{}`", node.id)))?;
                self.translate(&f.body, node)
            }
            NodeKind::Iteration | NodeKind::IndexedRef => {
                Err(missing(&format!("`{}` does not own a row", node.id)))
            }
        }
    }

    fn row_ref(&self, key: usize) -> Result<CellRef, EmitError> {
        match self.options.ref_mode {
            RefMode::Address => {
                let slot = self.slot(key)?;
                Ok(CellRef::Cell(Coord {
                    sheet: None,
                    row: slot.row,
                    col: slot.col,
                }))
            }
            RefMode::Name => Ok(CellRef::Name(self.row_name(key)?)),
        }
    }

    fn child_ref(&self, parent: &StructureNode, id: &Ident) -> Result<CellRef, EmitError> {
        let child = parent
            .children
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| missing(&format!("`{}` has no child `{id}`", parent.id)))?;
        match child.kind {
            NodeKind::Iteration => Ok(CellRef::Name(self.input_name(id)?)),
            _ => self.row_ref(child.key),
        }
    }

    fn translate(&self, e: &Expr, node: &StructureNode) -> Result<Formula, EmitError> {
        Ok(match e {
            Expr::Literal(v) => Formula::Number(*v),
            Expr::Ref(id) | Expr::RangeRef(id) => Formula::Ref(self.child_ref(node, id)?),
            Expr::Binary { op, left, right } => Formula::binary(
                *op,
                self.translate(left, node)?,
                self.translate(right, node)?,
            ),
            Expr::Aggregate { args, .. } => {
                let args = args
                    .iter()
                    .map(|a| self.translate(a, node))
                    .collect::<Result<Vec<_>, _>>()?;
                Formula::Sum(collapse_contiguous(args))
            }
            Expr::Select(options) => Formula::Select(
                options
                    .iter()
                    .map(|o| {
                        Ok(FormulaOption {
                            op: o.guard.op,
                            left: self.translate(&o.guard.left, node)?,
                            right: self.translate(&o.guard.right, node)?,
                            value: self.translate(&o.value, node)?,
                        })
                    })
                    .collect::<Result<Vec<_>, EmitError>>()?,
            ),
        })
    }
}

/// `SUM(F11; F12; F13)` becomes `SUM(F11:F13)`.
fn collapse_contiguous(args: Vec<Formula>) -> Vec<Formula> {
    let coords: Vec<&Coord> = args
        .iter()
        .filter_map(|a| match a {
            Formula::Ref(CellRef::Cell(c)) => Some(c),
            _ => None,
        })
        .collect();
    if args.len() < 2 || coords.len() != args.len() {
        return args;
    }
    let first = coords[0];
    let contiguous = coords.iter().enumerate().all(|(i, c)| {
        c.sheet == first.sheet && c.col == first.col && c.row == first.row + i as u32
    });
    if !contiguous {
        return args;
    }
    let last = coords[coords.len() - 1];
    vec![Formula::Ref(CellRef::Range(
        first.clone(),
        Coord {
            sheet: None,
            row: last.row,
            col: last.col,
        },
    ))]
}

fn missing(what: &str) -> EmitError {
    EmitError::InconsistentLayout(what.to_string())
}
