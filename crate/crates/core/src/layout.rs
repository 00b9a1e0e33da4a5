//! Placement of the forest and the model onto the three sheets. Positions
//! only: formula text is produced by the emitter.
//!
//! Workings rows follow a pre-order walk of each module, one node per row.
//! A node at depth `d` keeps its label in column A (indented two spaces per
//! level) and its formula in column `2 + d`, the node's *virtual column*.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Ident, InputDecl, ModelSpec};
use crate::structurer::{NodeKind, StructureForest, StructureNode};

pub const INPUT_SHEET: &str = "Input";
pub const WORKINGS_SHEET: &str = "Workings";
pub const OUTPUT_SHEET: &str = "Output";

/// Column of a depth-0 workings formula (column B).
pub const BASE_COLUMN: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("`{id}` sits at depth {depth}, beyond the {max} available virtual columns")]
    DepthOverflow { id: Ident, depth: usize, max: usize },
    #[error("unknown range `{0}`")]
    UnknownRange(Ident),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutConfig {
    pub workings_first_row: u32,
    pub input_first_row: u32,
    pub unit: String,
    pub max_virtual_columns: usize,
    pub module_gap: u32,
    pub output_block_gap: u32,
    pub indent: String,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            workings_first_row: 6,
            input_first_row: 5,
            unit: "£".to_string(),
            max_virtual_columns: 24,
            module_gap: 1,
            output_block_gap: 2,
            indent: "  ".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddress {
    pub sheet: String,
    pub row: u32,
    pub col: u32,
}

impl CellAddress {
    pub fn new(sheet: &str, row: u32, col: u32) -> Self {
        assert!(row >= 1 && col >= 1, "cell coordinates are 1-based");
        CellAddress {
            sheet: sheet.to_string(),
            row,
            col,
        }
    }

    /// `B5`, without the sheet.
    pub fn local(&self) -> String {
        format!("{}{}", column_letters(self.col), self.row)
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.sheet, self.local())
    }
}

/// `1 -> A`, `27 -> AA`.
pub fn column_letters(mut col: u32) -> String {
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Inverse of [`column_letters`] for 1-3 upper-case letters.
pub fn column_number(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 || !letters.bytes().all(|b| b.is_ascii_uppercase()) {
        return None;
    }
    Some(
        letters
            .bytes()
            .fold(0, |acc, b| acc * 26 + (b - b'A' + 1) as u32),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueRef {
    Input(Ident),
    Member(Ident, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotSource {
    /// A workings node, by its forest key.
    Node(usize),
    /// An output row showing this model element.
    Target(Ident),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellPlan {
    Label(String),
    FormulaSlot(SlotSource),
    ValueSlot(ValueRef),
    UnitHeader(String),
}

/// One placed workings node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowInfo {
    pub row: u32,
    pub depth: usize,
    pub key: usize,
    pub module: usize,
    pub kind: NodeKind,
    pub id: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SheetLayout {
    pub name: String,
    /// `(row, col) -> plan`; at most one plan per address.
    pub cells: BTreeMap<(u32, u32), CellPlan>,
    /// Workings only: placed nodes in row order.
    pub rows: Vec<RowInfo>,
    /// Input only: extent of every range's member column.
    pub range_extents: BTreeMap<Ident, (CellAddress, CellAddress)>,
}

impl SheetLayout {
    fn new(name: &str) -> Self {
        SheetLayout {
            name: name.to_string(),
            cells: BTreeMap::new(),
            rows: Vec::new(),
            range_extents: BTreeMap::new(),
        }
    }

    fn put(&mut self, row: u32, col: u32, plan: CellPlan) {
        let previous = self.cells.insert((row, col), plan);
        debug_assert!(
            previous.is_none(),
            "two plans for {}{}",
            column_letters(col),
            row
        );
    }

    pub fn address(&self, row: u32, col: u32) -> CellAddress {
        CellAddress::new(&self.name, row, col)
    }

    pub fn last_row(&self) -> u32 {
        self.cells.keys().map(|&(r, _)| r).max().unwrap_or(0)
    }

    /// Address of the formula slot for a workings node.
    pub fn slot_of(&self, key: usize) -> Option<CellAddress> {
        self.cells.iter().find_map(|(&(r, c), plan)| match plan {
            CellPlan::FormulaSlot(SlotSource::Node(k)) if *k == key => Some(self.address(r, c)),
            _ => None,
        })
    }

    /// Address of the value slot for an input or range member.
    pub fn value_slot(&self, value: &ValueRef) -> Option<CellAddress> {
        self.cells.iter().find_map(|(&(r, c), plan)| match plan {
            CellPlan::ValueSlot(v) if v == value => Some(self.address(r, c)),
            _ => None,
        })
    }
}

/// Workings label text for a node: indentation, label, and ` *` when the
/// node's own formula aggregates an input range.
pub fn workings_label(node: &StructureNode, indent: &str) -> String {
    let mut text = format!("{}{}", indent.repeat(node.depth), node.label);
    if aggregates_range(node) {
        text.push_str(" *");
    }
    text
}

/// Range references only occur inside `SUM`, and only they produce
/// iteration children.
pub fn aggregates_range(node: &StructureNode) -> bool {
    matches!(node.kind, NodeKind::Function | NodeKind::Selection)
        && node.children.iter().any(|c| c.kind == NodeKind::Iteration)
}

pub fn layout_workings(
    forest: &StructureForest,
    config: &LayoutConfig,
) -> Result<SheetLayout, LayoutError> {
    let mut sheet = SheetLayout::new(WORKINGS_SHEET);
    let mut row = config.workings_first_row;
    for (module_index, module) in forest.modules.iter().enumerate() {
        let placed: Vec<&StructureNode> = module
            .nodes()
            .into_iter()
            .filter(|n| n.kind != NodeKind::Iteration)
            .collect();
        if module_index > 0 {
            row += config.module_gap + 1;
        }
        let header_row = row - 1;
        let mut used_columns = BTreeSet::new();
        for node in placed {
            if node.depth >= config.max_virtual_columns {
                return Err(LayoutError::DepthOverflow {
                    id: node.id.clone(),
                    depth: node.depth,
                    max: config.max_virtual_columns,
                });
            }
            let col = BASE_COLUMN + node.depth as u32;
            used_columns.insert(col);
            sheet.put(
                row,
                1,
                CellPlan::Label(workings_label(node, &config.indent)),
            );
            sheet.put(row, col, CellPlan::FormulaSlot(SlotSource::Node(node.key)));
            sheet.rows.push(RowInfo {
                row,
                depth: node.depth,
                key: node.key,
                module: module_index,
                kind: node.kind,
                id: node.id.clone(),
            });
            row += 1;
        }
        for col in used_columns {
            sheet.put(header_row, col, CellPlan::UnitHeader(config.unit.clone()));
        }
    }
    Ok(sheet)
}

pub fn layout_input(spec: &ModelSpec, config: &LayoutConfig) -> SheetLayout {
    let mut sheet = SheetLayout::new(INPUT_SHEET);
    let mut row = config.input_first_row;
    for decl in &spec.input_section {
        match decl {
            InputDecl::Scalar(item) => {
                sheet.put(row, 1, CellPlan::Label(item.label.clone()));
                sheet.put(
                    row,
                    2,
                    CellPlan::ValueSlot(ValueRef::Input(item.id.clone())),
                );
                row += 1;
            }
            InputDecl::Range(range) => {
                sheet.put(row, 1, CellPlan::Label(range.label.clone()));
                row += 1;
                let first = row;
                for (i, m) in range.members.iter().enumerate() {
                    sheet.put(row, 1, CellPlan::Label(m.label.clone()));
                    sheet.put(
                        row,
                        3,
                        CellPlan::ValueSlot(ValueRef::Member(range.id.clone(), i)),
                    );
                    row += 1;
                }
                if row > first {
                    let extent = (sheet.address(first, 3), sheet.address(row - 1, 3));
                    sheet.range_extents.insert(range.id.clone(), extent);
                }
            }
        }
    }
    sheet
}

pub fn layout_output(spec: &ModelSpec, config: &LayoutConfig) -> SheetLayout {
    let mut sheet = SheetLayout::new(OUTPUT_SHEET);
    let mut row = 1;
    for (i, block) in spec.outputs.iter().enumerate() {
        if i > 0 {
            row += config.output_block_gap;
        }
        sheet.put(row, 2, CellPlan::Label(block.title.clone()));
        row += 2;
        for r in &block.rows {
            sheet.put(row, 2, CellPlan::Label(r.label.clone()));
            sheet.put(
                row,
                3,
                CellPlan::FormulaSlot(SlotSource::Target(r.target.clone())),
            );
            row += 1;
        }
    }
    sheet
}

/// The three sheet layouts of one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layouts {
    pub input: SheetLayout,
    pub workings: SheetLayout,
    pub output: SheetLayout,
}

pub fn layout_all(
    spec: &ModelSpec,
    forest: &StructureForest,
    config: &LayoutConfig,
) -> Result<Layouts, LayoutError> {
    Ok(Layouts {
        input: layout_input(spec, config),
        workings: layout_workings(forest, config)?,
        output: layout_output(spec, config),
    })
}

pub fn range_extent(
    layout: &SheetLayout,
    range: &Ident,
) -> Result<(CellAddress, CellAddress), LayoutError> {
    layout
        .range_extents
        .get(range)
        .cloned()
        .ok_or_else(|| LayoutError::UnknownRange(range.clone()))
}
