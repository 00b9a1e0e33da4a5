use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn ssc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssc"))
        .args(args)
        .env("SSC_COLOR", "0")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries {
            let e = e.unwrap();
            out.push(e.file_name().to_string_lossy().into_owned());
            if e.path().is_dir() {
                for inner in listing(&e.path()) {
                    out.push(format!("{}/{inner}", e.file_name().to_string_lossy()));
                }
            }
        }
    }
    out.sort();
    out
}

#[test]
fn compile_matches_goldens() {
    let model = fixtures().join("trading_pl.ssm");
    for (mode, golden) in [
        ("address", "golden/trading_pl.grid.json"),
        ("name", "golden/trading_pl.name.grid.json"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = ssc(&[
            "compile",
            path(&model),
            "--out",
            path(dir.path()),
            "--ref-mode",
            mode,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let written = fs::read_to_string(dir.path().join("trading_pl.grid.json")).unwrap();
        let want = fs::read_to_string(fixtures().join(golden)).unwrap();
        assert_eq!(written, want, "{mode}");
        let text = stdout(&o);
        assert!(text.contains("1 modules, 12 workings rows"), "{text}");
    }
}

#[test]
fn compile_both_formats_and_is_deterministic() {
    let model = fixtures().join("trading_pl.ssm");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = ssc(&[
            "compile",
            path(&model),
            "--out",
            path(dir.path()),
            "--format",
            "both",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = listing(a.path());
    assert_eq!(
        files,
        [
            "trading_pl",
            "trading_pl.grid.json",
            "trading_pl/Input.csv",
            "trading_pl/Output.csv",
            "trading_pl/Workings.csv",
        ]
    );
    for f in &files {
        let pa = a.path().join(f);
        if pa.is_file() {
            assert_eq!(
                fs::read(&pa).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
    let workings = fs::read_to_string(a.path().join("trading_pl/Workings.csv")).unwrap();
    assert!(workings.contains(",=SUM(F11:F13)"), "{workings}");
}

#[test]
fn failed_compile_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    let o = ssc(&[
        "compile",
        path(&fixtures().join("cycle.ssm")),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    // A file sitting where the CSV directory should go: the JSON must not
    // be left behind either.
    fs::create_dir(&out).unwrap();
    fs::write(out.join("trading_pl"), "occupied").unwrap();
    let model = fixtures().join("trading_pl.ssm");
    let o = ssc(&[
        "compile",
        path(&model),
        "--out",
        path(&out),
        "--format",
        "both",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(listing(&out), ["trading_pl"]);
}

#[test]
fn eval_prints_the_carried_forward_profit() {
    let o = ssc(&["eval", path(&fixtures().join("trading_pl.ssm"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text
        .lines()
        .any(|l| l == "UnappropriatedProfitsCarriedToNextYear = 24219.00"));
    assert!(text.lines().any(|l| l == "Expenses[7] = 9500.00"));

    let o = ssc(&[
        "eval",
        path(&fixtures().join("trading_pl.ssm")),
        "--pretty",
        "--report",
    ]);
    let text = stdout(&o);
    assert!(text.contains("NetProfit = 20,733.00"), "{text}");
    assert!(text.contains("Total expenses *"), "{text}");

    let o = ssc(&[
        "eval",
        path(&fixtures().join("trading_pl.ssm")),
        "--scale",
        "0",
    ]);
    assert!(stdout(&o).contains("GrossProfit = 73556\n"));
}

#[test]
fn check_reports_cycles_and_parse_errors() {
    let cycle = fixtures().join("cycle.ssm");
    let o = ssc(&["check", path(&cycle)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("A -> B -> A"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ssm");
    fs::write(&bad, "model \"m\"\nfunc f \"F\" = 1,000\n").unwrap();
    let o = ssc(&["check", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with(&format!("{}:2:", path(&bad))), "{err}");
    assert!(err.contains(": error: "), "{err}");

    let undeclared = dir.path().join("undeclared.ssm");
    fs::write(&undeclared, "model \"m\"\nfunc f \"F\" = X+1\n").unwrap();
    let o = ssc(&["check", path(&undeclared)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("UNDECLARED_REF"), "{}", stderr(&o));

    let o = ssc(&["check", path(&fixtures().join("trading_pl.ssm"))]);
    assert!(o.status.success());
}

#[test]
fn tree_shows_modules() {
    let shared = fixtures().join("shared_precedents.ssm");
    let strict = stdout(&ssc(&["tree", path(&shared)]));
    assert_eq!(strict.lines().filter(|l| l.starts_with('[')).count(), 3);
    let loose = stdout(&ssc(&["tree", path(&shared), "--resolution", "figure7"]));
    assert_eq!(loose.lines().filter(|l| l.starts_with('[')).count(), 2);
}

#[test]
fn audit_exit_codes() {
    let golden = fixtures().join("golden/trading_pl.grid.json");
    let o = ssc(&["audit", path(&golden)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = ssc(&[
        "audit",
        path(&fixtures().join("trading_pl.ssm")),
        "--ref-mode",
        "name",
    ]);
    assert_eq!(o.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(&golden).unwrap();
    let planted = text.replace(
        r#"{"row":6,"col":2,"kind":"number","value":40360.00,"origin":"in:OpeningStock"}"#,
        r#"{"row":6,"col":2,"kind":"formula","text":"=B5"}"#,
    );
    assert_ne!(planted, text);
    let mutated = dir.path().join("m.grid.json");
    fs::write(&mutated, planted).unwrap();
    let o = ssc(&["audit", path(&mutated), "--format", "json"]);
    assert_eq!(o.status.code(), Some(3));
    let list: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(list[0]["code"], "INPUT_HAS_FORMULA");
    assert_eq!(list[0]["address"], "Input!B6");
    assert_eq!(list[0]["rule"], 3);

    let broken = dir.path().join("broken.grid.json");
    fs::write(&broken, "{\"model\":").unwrap();
    assert_eq!(ssc(&["audit", path(&broken)]).status.code(), Some(1));
}

#[test]
fn colour_follows_the_environment() {
    let cycle = fixtures().join("cycle.ssm");
    let o = Command::new(env!("CARGO_BIN_EXE_ssc"))
        .args(["check", path(&cycle)])
        .env("SSC_COLOR", "1")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("\x1b["));
    assert!(!stderr(&ssc(&["check", path(&cycle)])).contains("\x1b["));
}

#[test]
fn bad_flags_are_rejected_before_work() {
    let o = ssc(&["compile", path(&fixtures().join("trading_pl.ssm"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = ssc(&["eval", "missing.ssm", "--scale", "99"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--scale"));
    let o = ssc(&["eval", "missing.ssm"]);
    assert_eq!(o.status.code(), Some(1));
}
