//! Structural lint for workbooks, including ones not produced by this
//! compiler.
//!
//! 1. at most one formula per Workings row
//! 2. a Workings formula sits in column `2 + depth`, depth read from the
//!    label indentation
//! 3. no formulas on the Input sheet
//! 4. Output formulas reference only Workings
//! 5. Workings formulas reference Input cells, named ranges, or Workings
//!    cells further right (module roots in column B of another block are
//!    also allowed)
//! 6. a label ends in ` *` exactly when its formula sums an input range

use std::collections::BTreeMap;
use std::fmt;

use crate::emitter::{Cell, NameTarget, Sheet, WorkbookGrid};
use crate::formula::{parse_formula, render_ref, CellRef, Formula};
use crate::layout::{CellAddress, BASE_COLUMN, INPUT_SHEET, OUTPUT_SHEET, WORKINGS_SHEET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationCode {
    OneFuncPerRow,
    ColumnDepthMismatch,
    InputHasFormula,
    OutputBadRef,
    WorkingsBadRef,
    MissingAsterisk,
    SpuriousAsterisk,
    UnnamedRange,
}

impl ViolationCode {
    pub const ALL: [ViolationCode; 8] = [
        ViolationCode::OneFuncPerRow,
        ViolationCode::ColumnDepthMismatch,
        ViolationCode::InputHasFormula,
        ViolationCode::OutputBadRef,
        ViolationCode::WorkingsBadRef,
        ViolationCode::MissingAsterisk,
        ViolationCode::SpuriousAsterisk,
        ViolationCode::UnnamedRange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::OneFuncPerRow => "ONE_FUNC_PER_ROW",
            ViolationCode::ColumnDepthMismatch => "COLUMN_DEPTH_MISMATCH",
            ViolationCode::InputHasFormula => "INPUT_HAS_FORMULA",
            ViolationCode::OutputBadRef => "OUTPUT_BAD_REF",
            ViolationCode::WorkingsBadRef => "WORKINGS_BAD_REF",
            ViolationCode::MissingAsterisk => "MISSING_ASTERISK",
            ViolationCode::SpuriousAsterisk => "SPURIOUS_ASTERISK",
            ViolationCode::UnnamedRange => "UNNAMED_RANGE",
        }
    }

    /// The numbered rule the code belongs to.
    pub fn rule(self) -> u8 {
        match self {
            ViolationCode::OneFuncPerRow => 1,
            ViolationCode::ColumnDepthMismatch => 2,
            ViolationCode::InputHasFormula => 3,
            ViolationCode::OutputBadRef => 4,
            ViolationCode::WorkingsBadRef | ViolationCode::UnnamedRange => 5,
            ViolationCode::MissingAsterisk | ViolationCode::SpuriousAsterisk => 6,
        }
    }

    /// Presentation problems rather than wrong wiring.
    pub fn is_qualitative(self) -> bool {
        matches!(
            self,
            ViolationCode::MissingAsterisk
                | ViolationCode::SpuriousAsterisk
                | ViolationCode::UnnamedRange
        )
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub address: CellAddress,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.address, self.code, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
}

impl AuditError {
    pub fn code(&self) -> &'static str {
        "MALFORMED_GRID"
    }
}

pub fn explain_violation(v: &Violation) -> String {
    let text = match v.code {
        ViolationCode::OneFuncPerRow => {
            "Each row of the workings section holds exactly one function, so that every \
             calculation has its own labelled line. This row carries more than one formula."
        }
        ViolationCode::ColumnDepthMismatch => {
            "A function's formula belongs in the column matching its depth in the structure: \
             column B for a root and one column further right per level, mirrored by two spaces \
             of label indentation per level. This formula sits in a different column."
        }
        ViolationCode::InputHasFormula => {
            "The input section holds raw values only. Keeping formulas out of it protects them \
             from being overwritten when inputs change."
        }
        ViolationCode::OutputBadRef => {
            "Output cells only present results already computed in the workings section. This \
             formula refers to something other than a workings cell."
        }
        ViolationCode::WorkingsBadRef => {
            "A workings formula refers to its precedents, which sit one level deeper and so \
             further right, or to inputs. Pointing left, to the same column, or at the output \
             section breaks the left-to-right reading of the structure."
        }
        ViolationCode::MissingAsterisk => {
            "A function that iterates over an input range is marked with an asterisk after its \
             label. This formula sums an input range but its label has no asterisk."
        }
        ViolationCode::SpuriousAsterisk => {
            "The asterisk after a label marks a function that iterates over an input range. \
             This row carries the asterisk without summing any input range."
        }
        ViolationCode::UnnamedRange => {
            "Input ranges are referenced as whole, named units. This formula spells out the \
             range's cell addresses instead of using its name."
        }
    };
    format!("{} at {}: {} ({})", v.code, v.address, text, v.message)
}

pub fn audit(wb: &WorkbookGrid) -> Result<Vec<Violation>, AuditError> {
    let mut seen = std::collections::HashSet::new();
    for s in &wb.sheets {
        if !seen.insert(s.name.as_str()) {
            return Err(AuditError::MalformedGrid(format!(
                "duplicate sheet {:?}",
                s.name
            )));
        }
    }
    let mut out = Vec::new();
    let empty = Sheet::new("");
    let input = wb.sheet(INPUT_SHEET).unwrap_or(&empty);
    let workings = wb.sheet(WORKINGS_SHEET).unwrap_or(&empty);
    let output = wb.sheet(OUTPUT_SHEET).unwrap_or(&empty);

    for &(row, col) in parsed(input)?.keys() {
        out.push(violation(
            ViolationCode::InputHasFormula,
            INPUT_SHEET,
            row,
            col,
            "formula on the input sheet".into(),
        ));
    }

    for (&(row, col), f) in &parsed(output)? {
        for r in f.refs() {
            if !matches!(target_sheet(wb, r, OUTPUT_SHEET), Some(WORKINGS_SHEET)) {
                out.push(violation(
                    ViolationCode::OutputBadRef,
                    OUTPUT_SHEET,
                    row,
                    col,
                    format!("`{}` is not a workings cell", render_ref(r)),
                ));
            }
        }
    }

    audit_workings(wb, workings, &mut out)?;
    let order = |sheet: &str| match sheet {
        INPUT_SHEET => 0,
        WORKINGS_SHEET => 1,
        OUTPUT_SHEET => 2,
        _ => 3,
    };
    out.sort_by(|a, b| {
        (
            order(&a.address.sheet),
            a.address.row,
            a.address.col,
            a.code,
        )
            .cmp(&(
                order(&b.address.sheet),
                b.address.row,
                b.address.col,
                b.code,
            ))
    });
    Ok(out)
}

fn violation(code: ViolationCode, sheet: &str, row: u32, col: u32, message: String) -> Violation {
    Violation {
        code,
        address: CellAddress::new(sheet, row, col),
        message,
    }
}

fn parsed(sheet: &Sheet) -> Result<BTreeMap<(u32, u32), Formula>, AuditError> {
    let mut out = BTreeMap::new();
    for (&(row, col), cell) in &sheet.cells {
        if let Cell::Formula(text) = cell {
            let f = parse_formula(text).map_err(|e| {
                AuditError::MalformedGrid(format!(
                    "{}: {e}",
                    CellAddress::new(&sheet.name, row, col)
                ))
            })?;
            out.insert((row, col), f);
        }
    }
    Ok(out)
}

/// Sheet a reference lands on, if it resolves at all.
fn target_sheet<'a>(wb: &'a WorkbookGrid, r: &'a CellRef, current: &'a str) -> Option<&'a str> {
    match r {
        CellRef::Cell(c) | CellRef::Range(c, _) => Some(c.resolve_sheet(current)),
        CellRef::Name(n) => wb.names.get(n).map(NameTarget::sheet),
    }
}

/// Resolved shape of a reference: sheet, rows and columns covered, and
/// whether it went through the name table.
struct Target<'a> {
    sheet: &'a str,
    rows: (u32, u32),
    cols: (u32, u32),
    named: bool,
    /// Written as a range, even when it spans a single cell.
    range: bool,
}

impl Target<'_> {
    fn is_range(&self) -> bool {
        self.range
    }
}

fn resolve<'a>(wb: &'a WorkbookGrid, r: &'a CellRef, current: &'a str) -> Option<Target<'a>> {
    let span = |a: (u32, u32), b: (u32, u32)| (a.0.min(b.0), a.0.max(b.0));
    Some(match r {
        CellRef::Cell(c) => Target {
            sheet: c.resolve_sheet(current),
            rows: (c.row, c.row),
            cols: (c.col, c.col),
            named: false,
            range: false,
        },
        CellRef::Range(a, b) => Target {
            sheet: a.resolve_sheet(current),
            rows: span((a.row, 0), (b.row, 0)),
            cols: span((a.col, 0), (b.col, 0)),
            named: false,
            range: true,
        },
        CellRef::Name(n) => match wb.names.get(n)? {
            NameTarget::Cell(a) => Target {
                sheet: &a.sheet,
                rows: (a.row, a.row),
                cols: (a.col, a.col),
                named: true,
                range: false,
            },
            NameTarget::Range(a, b) => Target {
                sheet: &a.sheet,
                rows: span((a.row, 0), (b.row, 0)),
                cols: span((a.col, 0), (b.col, 0)),
                named: true,
                range: true,
            },
        },
    })
}

fn audit_workings(
    wb: &WorkbookGrid,
    sheet: &Sheet,
    out: &mut Vec<Violation>,
) -> Result<(), AuditError> {
    let formulas = parsed(sheet)?;

    // Blocks are maximal runs of non-empty rows: one per module.
    let mut block_of: BTreeMap<u32, usize> = BTreeMap::new();
    let mut block = 0;
    let mut previous: Option<u32> = None;
    for &(row, _) in sheet.cells.keys() {
        if previous == Some(row) {
            continue;
        }
        if previous.is_some_and(|p| row > p + 1) {
            block += 1;
        }
        block_of.insert(row, block);
        previous = Some(row);
    }

    let mut by_row: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(row, col) in formulas.keys() {
        by_row.entry(row).or_default().push(col);
    }
    for (&row, cols) in &by_row {
        for &col in cols.iter().skip(1) {
            out.push(violation(
                ViolationCode::OneFuncPerRow,
                WORKINGS_SHEET,
                row,
                col,
                format!("row {row} already has a formula"),
            ));
        }
    }

    for (&(row, col), f) in &formulas {
        match label_depth(sheet, row) {
            Some(depth) if BASE_COLUMN + depth == col => {}
            Some(depth) => out.push(violation(
                ViolationCode::ColumnDepthMismatch,
                WORKINGS_SHEET,
                row,
                col,
                format!(
                    "label depth {depth} expects column {}",
                    crate::layout::column_letters(BASE_COLUMN + depth)
                ),
            )),
            None => out.push(violation(
                ViolationCode::ColumnDepthMismatch,
                WORKINGS_SHEET,
                row,
                col,
                "no readable label indentation in column A".into(),
            )),
        }

        for r in f.refs() {
            let bad = |message: String| {
                violation(
                    ViolationCode::WorkingsBadRef,
                    WORKINGS_SHEET,
                    row,
                    col,
                    message,
                )
            };
            let Some(t) = resolve(wb, r, WORKINGS_SHEET) else {
                out.push(bad(format!("`{}` does not resolve", render_ref(r))));
                continue;
            };
            match t.sheet {
                INPUT_SHEET if t.is_range() && !t.named => out.push(violation(
                    ViolationCode::UnnamedRange,
                    WORKINGS_SHEET,
                    row,
                    col,
                    format!(
                        "`{}` addresses an input range without its name",
                        render_ref(r)
                    ),
                )),
                INPUT_SHEET => {}
                WORKINGS_SHEET => {
                    let rightwards = t.cols.0 > col;
                    let module_root = !t.is_range()
                        && t.cols.0 == BASE_COLUMN
                        && block_of.get(&t.rows.0) != block_of.get(&row)
                        && formulas.contains_key(&(t.rows.0, t.cols.0));
                    if !rightwards && !module_root {
                        out.push(bad(format!(
                            "`{}` is not to the right of column {}",
                            render_ref(r),
                            crate::layout::column_letters(col)
                        )));
                    }
                }
                other => out.push(bad(format!(
                    "`{}` points at sheet {other:?}",
                    render_ref(r)
                ))),
            }
        }
    }

    // Rule 6 looks at every labelled row, with or without a formula.
    let mut rows: Vec<u32> = sheet
        .cells
        .keys()
        .filter(|&&(_, c)| c == 1)
        .map(|&(r, _)| r)
        .collect();
    rows.dedup();
    for row in rows {
        let Some(Cell::Label(label)) = sheet.get(row, 1) else {
            continue;
        };
        let marked = label.ends_with(" *");
        let sums_range = formulas
            .range((row, 0)..=(row, u32::MAX))
            .any(|(_, f)| sums_input_range(wb, f));
        let code = match (marked, sums_range) {
            (false, true) => ViolationCode::MissingAsterisk,
            (true, false) => ViolationCode::SpuriousAsterisk,
            _ => continue,
        };
        let message = match code {
            ViolationCode::MissingAsterisk => format!("{label:?} sums an input range"),
            _ => format!("{label:?} sums no input range"),
        };
        out.push(violation(code, WORKINGS_SHEET, row, 1, message));
    }
    Ok(())
}

fn label_depth(sheet: &Sheet, row: u32) -> Option<u32> {
    let Some(Cell::Label(text)) = sheet.get(row, 1) else {
        return None;
    };
    let spaces = text.len() - text.trim_start_matches(' ').len();
    (spaces % 2 == 0 && spaces < text.len()).then_some(spaces as u32 / 2)
}

fn sums_input_range(wb: &WorkbookGrid, f: &Formula) -> bool {
    f.sum_args().into_iter().any(|r| {
        resolve(wb, r, WORKINGS_SHEET).is_some_and(|t| t.sheet == INPUT_SHEET && t.is_range())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn workings(cells: &[((u32, u32), &str)]) -> WorkbookGrid {
        let mut sheet = Sheet::new(WORKINGS_SHEET);
        for &(pos, text) in cells {
            let cell = if text.starts_with('=') {
                Cell::Formula(text.into())
            } else {
                Cell::Label(text.into())
            };
            sheet.cells.insert(pos, cell);
        }
        let mut input = Sheet::new(INPUT_SHEET);
        input.cells.insert((5, 1), Cell::Label("X".into()));
        input
            .cells
            .insert((5, 2), Cell::Number("1".parse().unwrap()));
        WorkbookGrid {
            sheets: vec![input, sheet],
            ..WorkbookGrid::default()
        }
    }

    fn codes(wb: &WorkbookGrid) -> Vec<&'static str> {
        audit(wb).unwrap().iter().map(|v| v.code.as_str()).collect()
    }

    #[test]
    fn clean_minimal() {
        let wb = workings(&[
            ((6, 1), "F"),
            ((6, 2), "=C7"),
            ((7, 1), "  X"),
            ((7, 3), "=Input!B5"),
        ]);
        assert!(codes(&wb).is_empty());
    }

    #[test]
    fn rule_violations() {
        let wb = workings(&[
            ((6, 1), "F"),
            ((6, 2), "=C7"),
            ((6, 3), "=C7"),
            ((7, 1), "  X"),
            ((7, 3), "=Input!B5"),
        ]);
        assert!(codes(&wb).contains(&"ONE_FUNC_PER_ROW"));
        let wb = workings(&[
            ((6, 1), "F"),
            ((6, 2), "=B7"),
            ((7, 1), "X"),
            ((7, 2), "=Input!B5"),
        ]);
        assert_eq!(codes(&wb), vec!["WORKINGS_BAD_REF"]);
        let wb = workings(&[
            ((6, 1), "F *"),
            ((6, 2), "=C7"),
            ((7, 1), "  X"),
            ((7, 3), "=Input!B5"),
        ]);
        assert_eq!(codes(&wb), vec!["SPURIOUS_ASTERISK"]);
        let wb = workings(&[((6, 1), "F"), ((6, 2), "=SUM(Input!B5:B6)")]);
        assert_eq!(codes(&wb), vec!["MISSING_ASTERISK", "UNNAMED_RANGE"]);
    }

    #[test]
    fn one_member_range_still_needs_asterisk() {
        let mut wb = workings(&[((6, 1), "F *"), ((6, 2), "=SUM(R)")]);
        wb.names.insert(
            "R".into(),
            NameTarget::Range(
                CellAddress::new(INPUT_SHEET, 5, 2),
                CellAddress::new(INPUT_SHEET, 5, 2),
            ),
        );
        assert!(codes(&wb).is_empty());
        wb.sheets[1].cells.insert((6, 1), Cell::Label("F".into()));
        assert_eq!(codes(&wb), vec!["MISSING_ASTERISK"]);
    }

    #[test]
    fn input_formula_and_malformed() {
        let mut wb = workings(&[]);
        wb.sheets[0]
            .cells
            .insert((6, 2), Cell::Formula("=B5".into()));
        let v = audit(&wb).unwrap();
        assert_eq!(v[0].code, ViolationCode::InputHasFormula);
        assert_eq!(v[0].address.to_string(), "Input!B6");
        wb.sheets[0]
            .cells
            .insert((6, 2), Cell::Formula("=B5+".into()));
        assert_eq!(audit(&wb).unwrap_err().code(), "MALFORMED_GRID");
    }

    #[test]
    fn explanations() {
        for code in ViolationCode::ALL {
            let v = Violation {
                code,
                address: CellAddress::new(WORKINGS_SHEET, 6, 2),
                message: "m".into(),
            };
            assert!(!explain_violation(&v).is_empty());
        }
        let v = |code| Violation {
            code,
            address: CellAddress::new(WORKINGS_SHEET, 6, 2),
            message: String::new(),
        };
        assert!(explain_violation(&v(ViolationCode::OneFuncPerRow)).contains("one function"));
        assert!(explain_violation(&v(ViolationCode::MissingAsterisk)).contains("input range"));
    }
}
