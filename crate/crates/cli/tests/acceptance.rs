//! Acceptance checks. Prints one line per criterion and exits non-zero if
//! any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ssc_core::parser::parse_expr_with;
use ssc_core::{
    audit, build_graph, compile_spec, evaluate_grid, evaluate_spec, parse_csv, parse_grid_json,
    pretty_expr, resolve_to_forest, serialize_csv, serialize_grid_json, Cell, CompileOptions,
    ModelSpec, NodeKind, RefMode, ResolutionMode, StructureForest, StructureNode, WorkbookGrid,
    INPUT_SHEET, OUTPUT_SHEET, WORKINGS_SHEET,
};
use ssc_testkit::{generate_model, mutation_set, naive_eval, to_cents};

/// Allowed difference between expected and computed values, in hundredths.
/// Expected values below are in hundredths too.
const VALUE_TOLERANCE_CENTS: i128 = 0;
const EVAL_TIME_LIMIT: Duration = Duration::from_secs(1);
const CORPUS_SIZE: u64 = 500;
const CORPUS_TIME_LIMIT: Duration = Duration::from_secs(60);

type Check = Result<String, String>;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ssc(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_ssc"))
        .args(args)
        .env("SSC_COLOR", "0")
        .output()
        .map_err(|e| format!("cannot run ssc: {e}"))
}

fn compile_grid(mode: RefMode) -> Result<WorkbookGrid, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = fixtures().join("trading_pl.ssm");
    let mode_arg = match mode {
        RefMode::Address => "address",
        RefMode::Name => "name",
    };
    let o = ssc(&[
        "compile",
        model.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--ref-mode",
        mode_arg,
    ])?;
    ensure(o.status.success(), || {
        String::from_utf8_lossy(&o.stderr).into_owned()
    })?;
    let text = std::fs::read_to_string(dir.path().join("trading_pl.grid.json"))
        .map_err(|e| e.to_string())?;
    parse_grid_json(&text).map_err(|e| e.to_string())
}

fn cell(wb: &WorkbookGrid, sheet: &str, addr: &str) -> Option<Cell> {
    let (col, row) = ssc_core::formula::parse_address(addr)?;
    wb.sheet(sheet)?.get(row, col).cloned()
}

fn criterion_1() -> Check {
    let expected = [
        ("CostOfGoodsSold", 11_429_000),
        ("TotalExpenses", 5_282_300),
        ("GrossProfit", 7_355_600),
        ("NetProfit", 2_073_300),
        ("TotalAppropriations", 1_180_000),
        ("UnappropriatedProfitsCarriedToNextYear", 2_421_900),
    ];
    let model = fixtures().join("trading_pl.ssm");
    let start = Instant::now();
    let o = ssc(&["eval", model.to_str().unwrap()])?;
    let elapsed = start.elapsed();
    ensure(o.status.success(), || "eval failed".into())?;
    let text = String::from_utf8_lossy(&o.stdout);
    let values: BTreeMap<&str, &str> = text.lines().filter_map(|l| l.split_once(" = ")).collect();
    for (id, cents) in expected {
        let got = values.get(id).ok_or_else(|| format!("{id} missing"))?;
        let d: ssc_core::Decimal = got.parse().map_err(|_| format!("{id} = {got}"))?;
        ensure(
            (to_cents(&d) - cents).abs() <= VALUE_TOLERANCE_CENTS,
            || format!("{id} = {got}, want {}.{:02}", cents / 100, cents % 100),
        )?;
    }
    ensure(elapsed < EVAL_TIME_LIMIT, || {
        format!("eval took {elapsed:?}")
    })?;
    Ok(format!("6 values exact, eval {elapsed:.0?}"))
}

fn criterion_2() -> Check {
    let wb = compile_grid(RefMode::Address)?;
    let formulas = [
        (WORKINGS_SHEET, "B6", "=C7+C16-C17"),
        (WORKINGS_SHEET, "E9", "=Input!B5"),
        (WORKINGS_SHEET, "E10", "=SUM(F11:F13)"),
        (WORKINGS_SHEET, "D15", "=SUM(Expenses)"),
        (OUTPUT_SHEET, "C3", "=Workings!C7"),
        (OUTPUT_SHEET, "C4", "=Workings!C16"),
        (OUTPUT_SHEET, "C5", "=Workings!C17"),
        (OUTPUT_SHEET, "C6", "=Workings!B6"),
    ];
    for (sheet, addr, text) in formulas {
        let got = cell(&wb, sheet, addr);
        ensure(got == Some(Cell::Formula(text.into())), || {
            format!("{sheet}!{addr} = {got:?}, want {text}")
        })?;
    }
    let starred: Vec<String> = wb
        .sheet(WORKINGS_SHEET)
        .unwrap()
        .cells
        .values()
        .filter_map(|c| match c {
            Cell::Label(t) if t.ends_with(" *") => Some(t.trim().to_string()),
            _ => None,
        })
        .collect();
    ensure(
        starred == ["Total expenses *", "Less Total appropriations *"],
        || format!("asterisked labels {starred:?}"),
    )?;
    for (name, extent) in [
        ("Expenses", "Input!C11:C18"),
        ("Appropriations", "Input!C20:C22"),
    ] {
        let got = wb.names.get(name).map(|t| t.to_string());
        ensure(got.as_deref() == Some(extent), || {
            format!("{name} -> {got:?}")
        })?;
    }
    let golden = std::fs::read_to_string(fixtures().join("golden/trading_pl.grid.json"))
        .map_err(|e| e.to_string())?;
    ensure(serialize_grid_json(&wb) + "\n" == golden, || {
        "differs from golden".into()
    })?;
    Ok("coordinates, asterisks, extents and golden bytes match".into())
}

fn criterion_3() -> Check {
    let wb = compile_grid(RefMode::Name)?;
    let wanted = [
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
    ];
    let missing: Vec<&str> = wanted
        .iter()
        .copied()
        .filter(|n| !wb.names.contains_key(*n))
        .collect();
    ensure(missing.is_empty(), || format!("missing names {missing:?}"))?;
    let root = cell(&wb, WORKINGS_SHEET, "B6");
    let want = "=NetProfit+UnappropriatedProfitsFromLastYear-TotalAppropriations";
    ensure(root == Some(Cell::Formula(want.into())), || {
        format!("B6 = {root:?}")
    })?;
    let golden = std::fs::read_to_string(fixtures().join("golden/trading_pl.name.grid.json"))
        .map_err(|e| e.to_string())?;
    ensure(serialize_grid_json(&wb) + "\n" == golden, || {
        "differs from golden".into()
    })?;
    Ok(format!(
        "{} names present, golden bytes match",
        wanted.len()
    ))
}

fn shape(n: &StructureNode) -> String {
    let mut s = match n.kind {
        NodeKind::ModuleRef => format!("@{}", n.module.as_deref().unwrap_or("?")),
        NodeKind::Iteration => format!("{}*", n.id),
        _ => n.id.to_string(),
    };
    if !n.children.is_empty() {
        let kids: Vec<String> = n.children.iter().map(shape).collect();
        s = format!("{s}({})", kids.join(","));
    }
    s
}

fn is_tree(f: &StructureForest) -> bool {
    fn walk(n: &StructureNode, depth: usize, keys: &mut Vec<usize>) -> bool {
        keys.push(n.key);
        n.depth == depth
            && !(n.kind.is_terminal() && !n.children.is_empty())
            && n.children.iter().all(|c| walk(c, depth + 1, keys))
    }
    let mut keys = Vec::new();
    let ok = f
        .modules
        .iter()
        .flat_map(|m| &m.roots)
        .all(|r| walk(r, 0, &mut keys));
    ok && keys == (0..keys.len()).collect::<Vec<_>>()
}

fn criterion_4() -> Check {
    let src = std::fs::read_to_string(fixtures().join("shared_precedents.ssm"))
        .map_err(|e| e.to_string())?;
    let spec = ssc_core::load(&src).map_err(|e| e.to_string())?;
    let g = build_graph(&spec);
    let cases = [
        (
            ResolutionMode::Figure7Compat,
            vec![("Main", "A(B(@D),C(@D,G(H*)))"), ("D", "D(E,F(G(H*)))")],
        ),
        (
            ResolutionMode::Strict,
            vec![
                ("Main", "A(B(@D),C(@D,@G))"),
                ("D", "D(E,F(@G))"),
                ("G", "G(H*)"),
            ],
        ),
    ];
    for (mode, want) in cases {
        let f = resolve_to_forest(&g, &spec, mode).map_err(|e| e.to_string())?;
        let got: Vec<(String, String)> = f
            .modules
            .iter()
            .map(|m| {
                let roots: Vec<String> = m.roots.iter().map(shape).collect();
                (m.name.clone(), roots.join(" "))
            })
            .collect();
        let want: Vec<(String, String)> = want
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        ensure(got == want, || format!("{mode:?}: {got:?}"))?;
        ensure(is_tree(&f), || format!("{mode:?}: not a tree"))?;
    }
    Ok("Figure7Compat 2 modules, Strict 3 modules, both trees".into())
}

struct Corpus {
    specs: Vec<ModelSpec>,
    address: Vec<WorkbookGrid>,
    name: Vec<WorkbookGrid>,
}

fn build_corpus() -> Result<Corpus, String> {
    let mut corpus = Corpus {
        specs: Vec::new(),
        address: Vec::new(),
        name: Vec::new(),
    };
    for seed in 0..CORPUS_SIZE {
        let spec = generate_model(seed);
        for (mode, out) in [
            (RefMode::Address, &mut corpus.address),
            (RefMode::Name, &mut corpus.name),
        ] {
            let opts = CompileOptions {
                ref_mode: mode,
                ..CompileOptions::default()
            };
            let c = compile_spec(spec.clone(), &opts).map_err(|e| format!("seed {seed}: {e}"))?;
            out.push(c.workbook);
        }
        corpus.specs.push(spec);
    }
    Ok(corpus)
}

fn criterion_5(corpus: &Corpus, build_time: Duration) -> Check {
    let start = Instant::now();
    let mut discrepancies = Vec::new();
    for (seed, spec) in corpus.specs.iter().enumerate() {
        let by_spec = evaluate_spec(spec, 2).map_err(|e| format!("seed {seed}: {e}"))?;
        let by_address = evaluate_grid(&corpus.address[seed], 2).map_err(|e| e.to_string())?;
        let by_name = evaluate_grid(&corpus.name[seed], 2).map_err(|e| e.to_string())?;
        if by_spec != by_address || by_spec != by_name {
            discrepancies.push(seed);
            continue;
        }
        for (id, cents) in naive_eval(spec) {
            let got = by_spec.get(&id).map(to_cents);
            if got.is_none_or(|g| (g - cents).abs() > VALUE_TOLERANCE_CENTS) {
                discrepancies.push(seed);
                break;
            }
        }
    }
    let elapsed = build_time + start.elapsed();
    ensure(discrepancies.is_empty(), || {
        format!("discrepancies at seeds {discrepancies:?}")
    })?;
    ensure(elapsed < CORPUS_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    let max_nodes = corpus
        .specs
        .iter()
        .map(|s| s.input_section.len() + s.functions.len())
        .max()
        .unwrap_or(0);
    ensure(max_nodes <= 12, || format!("a model has {max_nodes} nodes"))?;
    Ok(format!(
        "{} models, 0 discrepancies, {elapsed:.1?}",
        corpus.specs.len()
    ))
}

fn criterion_6(corpus: &Corpus) -> Check {
    let mut rules = BTreeSet::new();
    let mut mutations = 0;
    for (seed, wb) in corpus.address.iter().chain(&corpus.name).enumerate() {
        let found = audit(wb).map_err(|e| e.to_string())?;
        ensure(found.is_empty(), || format!("workbook {seed}: {found:?}"))?;
        for m in mutation_set(wb) {
            let found = audit(&m.workbook).map_err(|e| e.to_string())?;
            let hit = found
                .iter()
                .any(|v| v.address.sheet == m.sheet && v.address.row == m.row);
            ensure(hit, || {
                format!(
                    "workbook {seed}: {} not flagged at {}!row {}",
                    m.name, m.sheet, m.row
                )
            })?;
            rules.insert(m.rule);
            mutations += 1;
        }
    }
    ensure(rules == (1..=6).collect(), || {
        format!("rules exercised {rules:?}")
    })?;
    Ok(format!(
        "{} clean workbooks, {mutations} mutations all flagged, rules 1-6 covered",
        corpus.address.len() + corpus.name.len()
    ))
}

fn criterion_7(corpus: &Corpus) -> Check {
    let mut exprs = 0;
    for (seed, spec) in corpus.specs.iter().enumerate() {
        let ranges: BTreeSet<String> = spec.ranges().map(|r| r.id.to_string()).collect();
        for f in &spec.functions {
            let text = pretty_expr(&f.body);
            let back = parse_expr_with(&text, &|id, _| ranges.contains(id))
                .map_err(|e| format!("seed {seed} {text}: {e}"))?;
            ensure(back == f.body, || {
                format!("seed {seed}: {text} re-parses differently")
            })?;
            exprs += 1;
        }
    }
    let mut sheets = 0;
    for wb in corpus.address.iter().chain(&corpus.name) {
        let text = serialize_grid_json(wb);
        let back = parse_grid_json(&text).map_err(|e| e.to_string())?;
        ensure(&back == wb, || {
            format!("grid-JSON of {:?} changed", wb.model)
        })?;
        for sheet in [INPUT_SHEET, WORKINGS_SHEET, OUTPUT_SHEET] {
            let csv = serialize_csv(wb, sheet).map_err(|e| e.to_string())?;
            let cells = parse_csv(&csv).map_err(|e| e.to_string())?;
            ensure(cells == wb.sheet(sheet).unwrap().cells, || {
                format!("CSV of {:?} sheet {sheet} changed", wb.model)
            })?;
            sheets += 1;
        }
    }
    Ok(format!(
        "{exprs} expressions, {} grid-JSON documents, {sheets} CSV sheets round-trip",
        corpus.address.len() + corpus.name.len()
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let corpus = build_corpus();
    let build_time = start.elapsed();
    let corpus_check = |f: &dyn Fn(&Corpus) -> Check| match &corpus {
        Ok(c) => f(c),
        Err(e) => Err(format!("corpus: {e}")),
    };
    let results = [
        ("golden values", criterion_1()),
        ("golden layout", criterion_2()),
        ("golden naming", criterion_3()),
        ("module extraction", criterion_4()),
        (
            "oracle equivalence",
            corpus_check(&|c| criterion_5(c, build_time)),
        ),
        ("structural invariants", corpus_check(&criterion_6)),
        ("round-trips", corpus_check(&criterion_7)),
    ];
    let mut failed = 0;
    for (i, (name, result)) in results.iter().enumerate() {
        match result {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
