//! One CSV file per sheet. Quoted fields are always labels, so a label that
//! would otherwise read back as a number or formula is quoted.

use std::collections::BTreeMap;

use super::{Cell, WorkbookGrid};
use crate::decimal::Decimal;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CsvError {
    #[error("no sheet named {0:?}")]
    UnknownSheet(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

impl CsvError {
    pub fn code(&self) -> &'static str {
        match self {
            CsvError::UnknownSheet(_) => "UNKNOWN_SHEET",
            CsvError::Malformed { .. } => "MALFORMED_CSV",
        }
    }
}

pub fn serialize_csv(wb: &WorkbookGrid, sheet: &str) -> Result<String, CsvError> {
    let sheet = wb
        .sheet(sheet)
        .ok_or_else(|| CsvError::UnknownSheet(sheet.to_string()))?;
    let (rows, cols) = sheet.extent();
    let mut out = String::new();
    for row in 1..=rows {
        for col in 1..=cols {
            if col > 1 {
                out.push(',');
            }
            match sheet.get(row, col) {
                None => {}
                Some(Cell::Number(v)) => out.push_str(&v.to_string()),
                Some(Cell::Formula(t)) => push_field(&mut out, t, false),
                Some(Cell::Label(t)) => push_field(&mut out, t, label_needs_quotes(t)),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn label_needs_quotes(text: &str) -> bool {
    text.is_empty() || text.starts_with('=') || text.parse::<Decimal>().is_ok()
}

fn push_field(out: &mut String, text: &str, force: bool) {
    if force || text.contains([',', '"', '\r', '\n']) {
        out.push('"');
        out.push_str(&text.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(text);
    }
}

/// Reads a sheet written by [`serialize_csv`] back into a cell map.
pub fn parse_csv(text: &str) -> Result<BTreeMap<(u32, u32), Cell>, CsvError> {
    let mut cells = BTreeMap::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut row, mut col, mut line) = (0usize, 1u32, 1u32, 1usize);
    while i < chars.len() {
        let cell = if chars[i] == '"' {
            let mut value = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => {
                        return Err(CsvError::Malformed {
                            line,
                            message: "unterminated quoted field".into(),
                        })
                    }
                    Some('"') if chars.get(i + 1) == Some(&'"') => {
                        value.push('"');
                        i += 2;
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(&c) => {
                        if c == '\n' {
                            line += 1;
                        }
                        value.push(c);
                        i += 1;
                    }
                }
            }
            Some(Cell::Label(value))
        } else {
            let start = i;
            while i < chars.len() && !matches!(chars[i], ',' | '\n' | '\r') {
                if chars[i] == '"' {
                    return Err(CsvError::Malformed {
                        line,
                        message: "quote inside an unquoted field".into(),
                    });
                }
                i += 1;
            }
            let raw: String = chars[start..i].iter().collect();
            if raw.is_empty() {
                None
            } else if raw.starts_with('=') {
                Some(Cell::Formula(raw))
            } else if let Ok(v) = raw.parse::<Decimal>() {
                Some(Cell::Number(v))
            } else {
                Some(Cell::Label(raw))
            }
        };
        if let Some(cell) = cell {
            cells.insert((row, col), cell);
        }
        match chars.get(i) {
            Some(',') => {
                col += 1;
                i += 1;
            }
            Some('\r') if chars.get(i + 1) == Some(&'\n') => {
                row += 1;
                col = 1;
                line += 1;
                i += 2;
            }
            Some('\n') => {
                row += 1;
                col = 1;
                line += 1;
                i += 1;
            }
            None => {}
            Some(_) => {
                return Err(CsvError::Malformed {
                    line,
                    message: "expected ',' or end of line after a field".into(),
                })
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::Sheet;

    fn workbook(cells: Vec<((u32, u32), Cell)>) -> WorkbookGrid {
        let mut sheet = Sheet::new("S");
        sheet.cells.extend(cells);
        WorkbookGrid {
            sheets: vec![sheet],
            ..WorkbookGrid::default()
        }
    }

    #[test]
    fn quoting_rules() {
        let wb = workbook(vec![
            ((1, 1), Cell::Label("Rent, rates".into())),
            ((1, 2), Cell::Label("say \"hi\"".into())),
            ((2, 1), Cell::Label("2024".into())),
            ((2, 2), Cell::Label("=not a formula".into())),
            ((2, 3), Cell::Formula("=B5+1".into())),
            ((3, 2), Cell::Number("-4.50".parse().unwrap())),
        ]);
        let text = serialize_csv(&wb, "S").unwrap();
        assert_eq!(
            text,
            "\"Rent, rates\",\"say \"\"hi\"\"\",\n\"2024\",\"=not a formula\",=B5+1\n,-4.50,\n"
        );
        assert_eq!(parse_csv(&text).unwrap(), wb.sheets[0].cells);
    }

    #[test]
    fn unknown_sheet() {
        let wb = workbook(vec![]);
        assert_eq!(
            serialize_csv(&wb, "Nope"),
            Err(CsvError::UnknownSheet("Nope".into()))
        );
        assert_eq!(serialize_csv(&wb, "S").unwrap(), "");
    }

    #[test]
    fn crlf_accepted_on_import() {
        let cells = parse_csv("a,1\r\n,=A1\r\n").unwrap();
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[&(2, 2)], Cell::Formula("=A1".into()));
    }
}
