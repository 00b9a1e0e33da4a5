use std::path::PathBuf;

use ssc_core::{
    audit, compile, evaluate_grid, evaluate_spec, serialize_grid_json, Cell, CompileOptions,
    Compiled, NameTarget, RefMode, ViolationCode, WorkbookGrid, INPUT_SHEET, OUTPUT_SHEET,
    WORKINGS_SHEET,
};
use ssc_testkit::TRADING_PL;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn build(mode: RefMode) -> Compiled {
    let opts = CompileOptions {
        ref_mode: mode,
        ..CompileOptions::default()
    };
    compile(TRADING_PL, &opts).unwrap()
}

fn formula(wb: &WorkbookGrid, sheet: &str, addr: &str) -> String {
    let (col, row) = ssc_core::formula::parse_address(addr).unwrap();
    match wb.sheet(sheet).unwrap().get(row, col) {
        Some(Cell::Formula(t)) => t.clone(),
        other => panic!("{sheet}!{addr} holds {other:?}"),
    }
}

fn label(wb: &WorkbookGrid, sheet: &str, row: u32, col: u32) -> String {
    match wb.sheet(sheet).unwrap().get(row, col) {
        Some(Cell::Label(t)) => t.clone(),
        other => panic!("{sheet} ({row},{col}) holds {other:?}"),
    }
}

const ACCOUNT_VALUES: &[(&str, &str)] = &[
    ("CostOfGoodsSold", "114290.00"),
    ("TotalExpenses", "52823.00"),
    ("GrossProfit", "73556.00"),
    ("NetProfit", "20733.00"),
    ("TotalAppropriations", "11800.00"),
    ("UnappropriatedProfitsCarriedToNextYear", "24219.00"),
];

#[test]
fn values_match_the_account() {
    let c = build(RefMode::Address);
    let by_spec = evaluate_spec(&c.spec, 2).unwrap();
    let by_grid = evaluate_grid(&c.workbook, 2).unwrap();
    let by_name = evaluate_grid(&build(RefMode::Name).workbook, 2).unwrap();
    for (id, want) in ACCOUNT_VALUES {
        assert_eq!(by_spec.get(id).unwrap().to_string(), *want, "{id}");
        assert_eq!(by_grid.get(id).unwrap().to_string(), *want, "{id}");
        assert_eq!(by_name.get(id).unwrap().to_string(), *want, "{id}");
    }
    assert_eq!(by_spec, by_grid);
    assert_eq!(by_spec, by_name);
}

#[test]
fn values_are_exact_sums_of_the_inputs() {
    let c = build(RefMode::Address);
    let v = ssc_testkit::naive_eval(&c.spec);
    let c = |pounds: i128| pounds * 100;
    let cogs = c(40360) + c(72360) + c(1570);
    let expenses = c(18310) + c(4515) + c(1390) + c(3212) + c(1896) + c(5000) + c(9000) + c(9500);
    let gross = c(135486) - cogs + c(52360);
    let net = gross - expenses;
    let approp = c(10000) + c(1000) + c(800);
    assert_eq!(v["CostOfGoodsSold"], cogs);
    assert_eq!(v["TotalExpenses"], expenses);
    assert_eq!(v["GrossProfit"], gross);
    assert_eq!(v["NetProfit"], net);
    assert_eq!(v["TotalAppropriations"], approp);
    assert_eq!(
        v["UnappropriatedProfitsCarriedToNextYear"],
        net + c(15286) - approp
    );
}

#[test]
fn address_mode_coordinates() {
    let wb = build(RefMode::Address).workbook;
    let w = WORKINGS_SHEET;
    let expected = [
        ("B6", "=C7+C16-C17"),
        ("C7", "=D8-D15"),
        ("D8", "=E9-E10+E14"),
        ("E9", "=Input!B5"),
        ("E10", "=SUM(F11:F13)"),
        ("F11", "=Input!B6"),
        ("F12", "=Input!B8"),
        ("F13", "=Input!B9"),
        ("E14", "=Input!B7"),
        ("D15", "=SUM(Expenses)"),
        ("C16", "=Input!B23"),
        ("C17", "=SUM(Appropriations)"),
    ];
    for (addr, text) in expected {
        assert_eq!(formula(&wb, w, addr), text, "{addr}");
    }
    assert_eq!(label(&wb, w, 15, 1), "    Total expenses *");
    assert_eq!(label(&wb, w, 17, 1), "  Less Total appropriations *");
    let starred = wb
        .sheet(w)
        .unwrap()
        .cells
        .values()
        .filter(|c| matches!(c, Cell::Label(t) if t.ends_with(" *")))
        .count();
    assert_eq!(starred, 2);

    assert_eq!(wb.names["Expenses"].to_string(), "Input!C11:C18");
    assert_eq!(wb.names["Appropriations"].to_string(), "Input!C20:C22");
    assert_eq!(wb.names.len(), 2);

    let out = OUTPUT_SHEET;
    for (addr, text) in [
        ("C3", "=Workings!C7"),
        ("C4", "=Workings!C16"),
        ("C5", "=Workings!C17"),
        ("C6", "=Workings!B6"),
        ("C11", "=Workings!D8"),
        ("C12", "=Workings!D15"),
        ("C13", "=Workings!C7"),
    ] {
        assert_eq!(formula(&wb, out, addr), text, "{addr}");
    }
}

#[test]
fn input_sheet_extents() {
    let wb = build(RefMode::Address).workbook;
    let input = wb.sheet(INPUT_SHEET).unwrap();
    assert_eq!(label(&wb, INPUT_SHEET, 5, 1), "Sales");
    assert_eq!(label(&wb, INPUT_SHEET, 10, 1), "Expenses");
    assert_eq!(label(&wb, INPUT_SHEET, 19, 1), "Appropriations");
    for row in 11..=18 {
        assert!(matches!(input.get(row, 3), Some(Cell::Number(_))), "C{row}");
    }
    for row in 20..=22 {
        assert!(matches!(input.get(row, 3), Some(Cell::Number(_))), "C{row}");
    }
    assert_eq!(
        input.get(23, 2),
        Some(&Cell::Number("15286.00".parse().unwrap()))
    );
    assert!(!input.cells.values().any(|c| matches!(c, Cell::Formula(_))));
}

#[test]
fn name_mode_names_and_formulas() {
    let wb = build(RefMode::Name).workbook;
    for name in [
        "SalesIn",
        "OpeningStockIn",
        "PurchasesIn",
        "CarriageInwardsIn",
        "ClosingStockIn",
        "ExpensesIn",
        "AppropriationsIn",
        "UnappropriatedProfitsFromLastYearIn",
        "NetProfit",
        "GrossProfit",
        "TotalExpenses",
        "TotalAppropriations",
        "UnappropriatedProfitsCarriedToNextYear",
    ] {
        assert!(wb.names.contains_key(name), "missing name {name}");
    }
    assert_eq!(wb.names["SalesIn"].to_string(), "Input!B5");
    assert_eq!(wb.names["ExpensesIn"].to_string(), "Input!C11:C18");
    assert_eq!(wb.names["NetProfit"].to_string(), "Workings!C7");
    assert!(matches!(
        wb.names["AppropriationsIn"],
        NameTarget::Range(..)
    ));

    let w = WORKINGS_SHEET;
    assert_eq!(
        formula(&wb, w, "B6"),
        "=NetProfit+UnappropriatedProfitsFromLastYear-TotalAppropriations"
    );
    assert_eq!(formula(&wb, w, "C7"), "=GrossProfit-TotalExpenses");
    assert_eq!(formula(&wb, w, "D8"), "=Sales-CostOfGoodsSold+ClosingStock");
    assert_eq!(formula(&wb, w, "E9"), "=SalesIn");
    assert_eq!(
        formula(&wb, w, "E10"),
        "=SUM(OpeningStock; Purchases; CarriageInwards)"
    );
    assert_eq!(formula(&wb, w, "D15"), "=SUM(ExpensesIn)");
    assert_eq!(formula(&wb, w, "C17"), "=SUM(AppropriationsIn)");
    assert_eq!(
        formula(&wb, OUTPUT_SHEET, "C4"),
        "=UnappropriatedProfitsFromLastYear"
    );
    assert_eq!(
        formula(&wb, OUTPUT_SHEET, "C6"),
        "=UnappropriatedProfitsCarriedToNextYear"
    );
}

#[test]
fn grid_json_matches_goldens() {
    for (mode, file) in [
        (RefMode::Address, "golden/trading_pl.grid.json"),
        (RefMode::Name, "golden/trading_pl.name.grid.json"),
    ] {
        let golden = std::fs::read_to_string(fixture_dir().join(file)).unwrap();
        let mut text = serialize_grid_json(&build(mode).workbook);
        text.push('\n');
        assert_eq!(text, golden, "{file}");
    }
}

#[test]
fn emitted_workbooks_audit_clean() {
    for mode in [RefMode::Address, RefMode::Name] {
        assert_eq!(audit(&build(mode).workbook).unwrap(), vec![]);
    }
}

#[test]
fn second_formula_on_a_row_is_flagged() {
    let mut wb = build(RefMode::Address).workbook;
    let sheet = wb.sheet_mut(WORKINGS_SHEET).unwrap();
    let moved = sheet.cells.remove(&(10, 5)).unwrap();
    sheet.cells.insert((9, 6), moved);
    let codes: Vec<_> = audit(&wb).unwrap().into_iter().map(|v| v.code).collect();
    assert!(codes.contains(&ViolationCode::OneFuncPerRow), "{codes:?}");
}

#[test]
fn formula_planted_in_input_sheet() {
    let mut wb = build(RefMode::Address).workbook;
    wb.sheet_mut(INPUT_SHEET)
        .unwrap()
        .cells
        .insert((6, 2), Cell::Formula("=B5".into()));
    let violations = audit(&wb).unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].code, ViolationCode::InputHasFormula);
    assert_eq!(violations[0].address.to_string(), "Input!B6");
}
