//! Fixed set of single-rule mutations for exercising the auditor.

use ssc_core::formula::{Coord, FormulaOption};
use ssc_core::layout::column_letters;
use ssc_core::{
    parse_formula, render_formula, Cell, CellRef, Formula, NameTarget, WorkbookGrid, INPUT_SHEET,
    OUTPUT_SHEET, WORKINGS_SHEET,
};

#[derive(Debug, Clone)]
pub struct Mutation {
    /// Audit rule (1-6) the mutation breaks.
    pub rule: u8,
    pub name: &'static str,
    pub sheet: &'static str,
    pub row: u32,
    pub workbook: WorkbookGrid,
}

fn formulas(wb: &WorkbookGrid, sheet: &str) -> Vec<((u32, u32), String)> {
    wb.sheet(sheet)
        .map(|s| {
            s.cells
                .iter()
                .filter_map(|(&pos, c)| match c {
                    Cell::Formula(t) => Some((pos, t.clone())),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn label(wb: &WorkbookGrid, row: u32) -> Option<String> {
    match wb.sheet(WORKINGS_SHEET)?.get(row, 1) {
        Some(Cell::Label(t)) => Some(t.clone()),
        _ => None,
    }
}

fn with(wb: &WorkbookGrid, sheet: &str, edit: impl FnOnce(&mut ssc_core::Sheet)) -> WorkbookGrid {
    let mut out = wb.clone();
    if out.sheet(sheet).is_none() {
        out.sheets.push(ssc_core::Sheet::new(sheet));
    }
    edit(out.sheet_mut(sheet).expect("sheet exists"));
    out
}

/// Every mutation applicable to `wb`. Each rule is covered whenever the
/// workbook has a Workings formula; the range and asterisk variants need
/// a formula that sums an input range.
pub fn mutation_set(wb: &WorkbookGrid) -> Vec<Mutation> {
    let mut out = Vec::new();
    let workings = formulas(wb, WORKINGS_SHEET);
    let (Some(first), Some(last)) = (workings.first().cloned(), workings.last().cloned()) else {
        return out;
    };

    let ((row, col), text) = first.clone();
    out.push(Mutation {
        rule: 1,
        name: "second formula in a row",
        sheet: WORKINGS_SHEET,
        row,
        workbook: with(wb, WORKINGS_SHEET, |s| {
            s.cells.insert((row, col + 1), Cell::Formula(text));
        }),
    });

    let ((row, col), text) = last.clone();
    out.push(Mutation {
        rule: 2,
        name: "formula shifted right",
        sheet: WORKINGS_SHEET,
        row,
        workbook: with(wb, WORKINGS_SHEET, |s| {
            s.cells.remove(&(row, col));
            s.origins.remove(&(row, col));
            s.cells.insert((row, col + 1), Cell::Formula(text));
        }),
    });

    let input_row = wb.sheet(INPUT_SHEET).map(|s| s.extent().0 + 1).unwrap_or(1);
    out.push(Mutation {
        rule: 3,
        name: "formula planted on input",
        sheet: INPUT_SHEET,
        row: input_row,
        workbook: with(wb, INPUT_SHEET, |s| {
            s.cells.insert((input_row, 2), Cell::Formula("=B5".into()));
        }),
    });

    let output_pos = formulas(wb, OUTPUT_SHEET)
        .first()
        .map(|(pos, _)| *pos)
        .unwrap_or_else(|| {
            (
                wb.sheet(OUTPUT_SHEET).map(|s| s.extent().0).unwrap_or(0) + 1,
                3,
            )
        });
    out.push(Mutation {
        rule: 4,
        name: "output reads input",
        sheet: OUTPUT_SHEET,
        row: output_pos.0,
        workbook: with(wb, OUTPUT_SHEET, |s| {
            s.cells
                .insert(output_pos, Cell::Formula("=Input!B5".into()));
        }),
    });

    let ((row, col), _) = last;
    out.push(Mutation {
        rule: 5,
        name: "workings reads leftwards",
        sheet: WORKINGS_SHEET,
        row,
        workbook: with(wb, WORKINGS_SHEET, |s| {
            let target = format!("={}{row}", column_letters(col - 1));
            s.cells.insert((row, col), Cell::Formula(target));
        }),
    });

    // Rows whose formula sums a named input range.
    let summing: Vec<((u32, u32), Formula, String)> = workings
        .iter()
        .filter_map(|(pos, text)| {
            let f = parse_formula(text).ok()?;
            let name = f.sum_args().into_iter().find_map(|r| match r {
                CellRef::Name(n) => match wb.names.get(n) {
                    Some(NameTarget::Range(a, _)) if a.sheet == INPUT_SHEET => Some(n.clone()),
                    _ => None,
                },
                _ => None,
            })?;
            Some((*pos, f, name))
        })
        .collect();

    if let Some(((row, col), f, name)) = summing.first().cloned() {
        let Some(NameTarget::Range(a, b)) = wb.names.get(&name).cloned() else {
            unreachable!("filtered above");
        };
        let spelled = CellRef::Range(
            Coord {
                sheet: Some(INPUT_SHEET.to_string()),
                row: a.row,
                col: a.col,
            },
            Coord {
                sheet: None,
                row: b.row,
                col: b.col,
            },
        );
        let text = render_formula(&replace_name(&f, &name, &spelled));
        out.push(Mutation {
            rule: 5,
            name: "input range by address",
            sheet: WORKINGS_SHEET,
            row,
            workbook: with(wb, WORKINGS_SHEET, |s| {
                s.cells.insert((row, col), Cell::Formula(text));
            }),
        });
        if let Some(text) = label(wb, row).and_then(|l| l.strip_suffix(" *").map(str::to_string)) {
            out.push(Mutation {
                rule: 6,
                name: "asterisk dropped",
                sheet: WORKINGS_SHEET,
                row,
                workbook: with(wb, WORKINGS_SHEET, |s| {
                    s.cells.insert((row, 1), Cell::Label(text));
                }),
            });
        }
    }

    if let Some((row, text)) = workings
        .iter()
        .filter(|((row, _), _)| !summing.iter().any(|((r, _), _, _)| r == row))
        .find_map(|((row, _), _)| label(wb, *row).map(|l| (*row, l)))
    {
        out.push(Mutation {
            rule: 6,
            name: "asterisk added",
            sheet: WORKINGS_SHEET,
            row,
            workbook: with(wb, WORKINGS_SHEET, |s| {
                s.cells.insert((row, 1), Cell::Label(format!("{text} *")));
            }),
        });
    }
    out
}

fn replace_name(f: &Formula, name: &str, with: &CellRef) -> Formula {
    let go = |g: &Formula| replace_name(g, name, with);
    match f {
        Formula::Ref(CellRef::Name(n)) if n == name => Formula::Ref(with.clone()),
        Formula::Number(_) | Formula::Ref(_) => f.clone(),
        Formula::Binary { op, left, right } => Formula::binary(*op, go(left), go(right)),
        Formula::Sum(args) => Formula::Sum(args.iter().map(go).collect()),
        Formula::Select(options) => Formula::Select(
            options
                .iter()
                .map(|o| FormulaOption {
                    op: o.op,
                    left: go(&o.left),
                    right: go(&o.right),
                    value: go(&o.value),
                })
                .collect(),
        ),
    }
}
