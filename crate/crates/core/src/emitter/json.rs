//! Canonical grid-JSON: fixed key order, cells sorted by position, one cell
//! per line, numbers written at their stored scale.

use std::fmt::Write as _;

use serde_json::Value;

use super::{Cell, NameTarget, Origin, RefMode, Sheet, WorkbookGrid};
use crate::formula::parse_address;
use crate::layout::CellAddress;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("grid-JSON: {0}")]
pub struct GridJsonError(pub String);

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn serialize_grid_json(wb: &WorkbookGrid) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "{{\"model\":{},\"refMode\":{},\"sheets\":[",
        quoted(&wb.model),
        quoted(wb.ref_mode.as_str())
    );
    for (i, sheet) in wb.sheets.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(out, "{{\"name\":{},\"cells\":[", quoted(&sheet.name));
        for (j, (&(row, col), cell)) in sheet.cells.iter().enumerate() {
            out.push_str(if j == 0 { "\n" } else { ",\n" });
            let _ = write!(out, "{{\"row\":{row},\"col\":{col},");
            match cell {
                Cell::Label(t) => {
                    let _ = write!(out, "\"kind\":\"label\",\"text\":{}", quoted(t));
                }
                Cell::Formula(t) => {
                    let _ = write!(out, "\"kind\":\"formula\",\"text\":{}", quoted(t));
                }
                Cell::Number(v) => {
                    let _ = write!(out, "\"kind\":\"number\",\"value\":{v}");
                }
            }
            if let Some(origin) = sheet.origins.get(&(row, col)) {
                let _ = write!(out, ",\"origin\":{}", quoted(&origin.to_string()));
            }
            out.push('}');
        }
        if !sheet.cells.is_empty() {
            out.push('\n');
        }
        out.push_str("]}");
    }
    if !wb.sheets.is_empty() {
        out.push('\n');
    }
    out.push_str("],\"names\":{");
    for (i, (name, target)) in wb.names.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(out, "{}:{}", quoted(name), quoted(&target.to_string()));
    }
    if !wb.names.is_empty() {
        out.push('\n');
    }
    out.push_str("}}");
    out
}

fn err<T>(msg: impl Into<String>) -> Result<T, GridJsonError> {
    Err(GridJsonError(msg.into()))
}

fn field<'v>(obj: &'v Value, key: &str, ctx: &str) -> Result<&'v Value, GridJsonError> {
    obj.get(key)
        .ok_or_else(|| GridJsonError(format!("{ctx}: missing \"{key}\"")))
}

fn str_field<'v>(obj: &'v Value, key: &str, ctx: &str) -> Result<&'v str, GridJsonError> {
    field(obj, key, ctx)?
        .as_str()
        .ok_or_else(|| GridJsonError(format!("{ctx}: \"{key}\" must be a string")))
}

fn u32_field(obj: &Value, key: &str, ctx: &str) -> Result<u32, GridJsonError> {
    field(obj, key, ctx)?
        .as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| GridJsonError(format!("{ctx}: \"{key}\" must be a positive integer")))
}

pub fn parse_grid_json(text: &str) -> Result<WorkbookGrid, GridJsonError> {
    let root: Value = serde_json::from_str(text).map_err(|e| GridJsonError(e.to_string()))?;
    if !root.is_object() {
        return err("top level must be an object");
    }
    let ref_mode = match str_field(&root, "refMode", "workbook")? {
        "Address" => RefMode::Address,
        "Name" => RefMode::Name,
        other => return err(format!("unknown refMode {other:?}")),
    };
    let mut wb = WorkbookGrid {
        model: str_field(&root, "model", "workbook")?.to_string(),
        ref_mode,
        ..WorkbookGrid::default()
    };
    let Some(sheets) = field(&root, "sheets", "workbook")?.as_array() else {
        return err("\"sheets\" must be an array");
    };
    for s in sheets {
        let name = str_field(s, "name", "sheet")?;
        if wb.sheet(name).is_some() {
            return err(format!("duplicate sheet {name:?}"));
        }
        let mut sheet = Sheet::new(name);
        let ctx = format!("sheet {name:?}");
        let Some(cells) = field(s, "cells", &ctx)?.as_array() else {
            return err(format!("{ctx}: \"cells\" must be an array"));
        };
        for c in cells {
            let row = u32_field(c, "row", &ctx)?;
            let col = u32_field(c, "col", &ctx)?;
            let at = format!("{ctx} row {row} col {col}");
            let cell = match str_field(c, "kind", &at)? {
                "label" => Cell::Label(str_field(c, "text", &at)?.to_string()),
                "formula" => {
                    let text = str_field(c, "text", &at)?;
                    if !text.starts_with('=') {
                        return err(format!("{at}: formula text must start with '='"));
                    }
                    Cell::Formula(text.to_string())
                }
                "number" => {
                    let Value::Number(n) = field(c, "value", &at)? else {
                        return err(format!("{at}: \"value\" must be a number"));
                    };
                    let value = n
                        .to_string()
                        .parse()
                        .map_err(|e| GridJsonError(format!("{at}: {e}")))?;
                    Cell::Number(value)
                }
                other => return err(format!("{at}: unknown kind {other:?}")),
            };
            if sheet.cells.insert((row, col), cell).is_some() {
                return err(format!("{at}: duplicate cell"));
            }
            if let Some(origin) = c.get("origin") {
                let origin: Origin = origin
                    .as_str()
                    .ok_or_else(|| GridJsonError(format!("{at}: \"origin\" must be a string")))?
                    .parse()
                    .map_err(|e: String| GridJsonError(format!("{at}: {e}")))?;
                sheet.origins.insert((row, col), origin);
            }
        }
        wb.sheets.push(sheet);
    }
    let Some(names) = field(&root, "names", "workbook")?.as_object() else {
        return err("\"names\" must be an object");
    };
    for (name, target) in names {
        let Some(text) = target.as_str() else {
            return err(format!("name {name:?}: target must be a string"));
        };
        let target = parse_name_target(text)
            .ok_or_else(|| GridJsonError(format!("name {name:?}: bad target {text:?}")))?;
        wb.names.insert(name.clone(), target);
    }
    Ok(wb)
}

/// `Input!C11:C18` or `Workings!C7`.
pub(crate) fn parse_name_target(text: &str) -> Option<NameTarget> {
    let (sheet, rest) = text.split_once('!')?;
    if sheet.is_empty() {
        return None;
    }
    let addr = |a: &str| parse_address(a).map(|(col, row)| CellAddress::new(sheet, row, col));
    match rest.split_once(':') {
        Some((a, b)) => Some(NameTarget::Range(addr(a)?, addr(b)?)),
        None => Some(NameTarget::Cell(addr(rest)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_workbook() {
        let wb = WorkbookGrid::default();
        let text = serialize_grid_json(&wb);
        assert_eq!(
            text,
            r#"{"model":"","refMode":"Address","sheets":[],"names":{}}"#
        );
        assert_eq!(parse_grid_json(&text).unwrap(), wb);
    }

    #[test]
    fn cells_names_and_origins_round_trip() {
        let mut sheet = Sheet::new("Input");
        sheet
            .cells
            .insert((5, 1), Cell::Label("Sales \"net\"".into()));
        sheet
            .cells
            .insert((5, 2), Cell::Number("135486.00".parse().unwrap()));
        sheet.origins.insert((5, 2), Origin::Input("Sales".into()));
        let mut wb = WorkbookGrid {
            model: "T Howe Ltd".into(),
            ref_mode: RefMode::Name,
            sheets: vec![sheet, Sheet::new("Output")],
            ..WorkbookGrid::default()
        };
        wb.names.insert(
            "ExpensesIn".into(),
            NameTarget::Range(
                CellAddress::new("Input", 11, 3),
                CellAddress::new("Input", 18, 3),
            ),
        );
        let text = serialize_grid_json(&wb);
        assert!(text.contains(r#""value":135486.00,"origin":"in:Sales""#));
        assert!(text.contains(r#""ExpensesIn":"Input!C11:C18""#));
        let back = parse_grid_json(&text).unwrap();
        assert_eq!(back, wb);
        assert_eq!(serialize_grid_json(&back), text);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(parse_grid_json("[]").is_err());
        assert!(
            parse_grid_json(r#"{"model":"","refMode":"Cells","sheets":[],"names":{}}"#).is_err()
        );
        let bad_row = r#"{"model":"","refMode":"Address","sheets":[{"name":"S","cells":[{"row":0,"col":1,"kind":"label","text":"x"}]}],"names":{}}"#;
        assert!(parse_grid_json(bad_row).is_err());
        let bad_formula = r#"{"model":"","refMode":"Address","sheets":[{"name":"S","cells":[{"row":1,"col":1,"kind":"formula","text":"B5"}]}],"names":{}}"#;
        assert!(parse_grid_json(bad_formula).is_err());
    }
}
