//! Cell formula language of emitted workbooks: the model expression grammar
//! with identifiers replaced by cell addresses (`B5`, `Input!B5`), ranges
//! (`F11:F13`) and names (`SalesIn`).

use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::layout::{column_letters, column_number};
use crate::lexer::{tokenize, Cursor, ParseError, Tok};
use crate::model::{BinOp, CmpOp};
use crate::parser::{comparison, signed_number};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coord {
    pub sheet: Option<String>,
    pub row: u32,
    pub col: u32,
}

impl Coord {
    pub fn resolve_sheet<'a>(&'a self, current: &'a str) -> &'a str {
        self.sheet.as_deref().unwrap_or(current)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellRef {
    Cell(Coord),
    /// Both ends on the same sheet; `start` carries the sheet qualifier.
    Range(Coord, Coord),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaOption {
    pub op: CmpOp,
    pub left: Formula,
    pub right: Formula,
    pub value: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Number(Decimal),
    Ref(CellRef),
    Binary {
        op: BinOp,
        left: Box<Formula>,
        right: Box<Formula>,
    },
    Sum(Vec<Formula>),
    Select(Vec<FormulaOption>),
}

impl Formula {
    pub fn binary(op: BinOp, left: Formula, right: Formula) -> Formula {
        Formula::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Every reference, left to right.
    pub fn refs(&self) -> Vec<&CellRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a CellRef>) {
        match self {
            Formula::Number(_) => {}
            Formula::Ref(r) => out.push(r),
            Formula::Binary { left, right, .. } => {
                left.collect_refs(out);
                right.collect_refs(out);
            }
            Formula::Sum(args) => args.iter().for_each(|a| a.collect_refs(out)),
            Formula::Select(options) => {
                for o in options {
                    o.left.collect_refs(out);
                    o.right.collect_refs(out);
                    o.value.collect_refs(out);
                }
            }
        }
    }

    /// References that appear as direct `SUM` arguments.
    pub fn sum_args(&self) -> Vec<&CellRef> {
        let mut out = Vec::new();
        self.collect_sum_args(&mut out);
        out
    }

    fn collect_sum_args<'a>(&'a self, out: &mut Vec<&'a CellRef>) {
        match self {
            Formula::Number(_) | Formula::Ref(_) => {}
            Formula::Binary { left, right, .. } => {
                left.collect_sum_args(out);
                right.collect_sum_args(out);
            }
            Formula::Sum(args) => {
                for a in args {
                    if let Formula::Ref(r) = a {
                        out.push(r);
                    }
                }
            }
            Formula::Select(options) => {
                for o in options {
                    o.left.collect_sum_args(out);
                    o.right.collect_sum_args(out);
                    o.value.collect_sum_args(out);
                }
            }
        }
    }
}

/// Splits `B5` into (column, row). Upper-case letters only.
pub fn parse_address(text: &str) -> Option<(u32, u32)> {
    let split = text.find(|c: char| c.is_ascii_digit())?;
    let (letters, digits) = text.split_at(split);
    let col = column_number(letters)?;
    if digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let row: u32 = digits.parse().ok()?;
    Some((col, row))
}

/// True when `text` would be read as a cell address rather than a name.
pub fn looks_like_address(text: &str) -> bool {
    parse_address(text).is_some()
}

/// Parses cell text of the form `=<expr>`.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let body = text.strip_prefix('=').ok_or_else(|| {
        ParseError::new(
            crate::lexer::SourceSpan::new(1, 1, 1),
            "formula must start with '='",
        )
    })?;
    let mut tokens = tokenize(body, false)?;
    // Report columns relative to the full cell text, '=' included.
    for t in &mut tokens {
        if t.span.line == 1 {
            t.span.column += 1;
        }
    }
    let mut cur = Cursor::new(tokens);
    let f = sum_expr(&mut cur)?;
    if cur.peek_tok() != &Tok::Eof {
        return Err(cur.unexpected("an operator or end of formula"));
    }
    Ok(f)
}

fn sum_expr(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let mut lhs = term(cur)?;
    loop {
        let op = match cur.peek_tok() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            _ => return Ok(lhs),
        };
        cur.bump();
        lhs = Formula::binary(op, lhs, term(cur)?);
    }
}

fn term(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let mut lhs = primary(cur)?;
    loop {
        let op = match cur.peek_tok() {
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return Ok(lhs),
        };
        cur.bump();
        lhs = Formula::binary(op, lhs, primary(cur)?);
    }
}

fn primary(cur: &mut Cursor) -> Result<Formula, ParseError> {
    match cur.peek_tok().clone() {
        Tok::Number(_) | Tok::Minus => Ok(Formula::Number(signed_number(cur)?)),
        Tok::LParen => {
            cur.bump();
            let f = sum_expr(cur)?;
            cur.expect(&Tok::RParen, "')'")?;
            Ok(f)
        }
        Tok::Ident(name) if name.eq_ignore_ascii_case("SUM") && cur.peek_nth(1) == &Tok::LParen => {
            cur.bump();
            cur.bump();
            let mut args = vec![Formula::Ref(reference(cur)?)];
            while cur.eat(&Tok::Semi) {
                args.push(Formula::Ref(reference(cur)?));
            }
            cur.expect(&Tok::RParen, "';' or ')'")?;
            Ok(Formula::Sum(args))
        }
        Tok::Ident(name)
            if name.eq_ignore_ascii_case("SELECT") && cur.peek_nth(1) == &Tok::LParen =>
        {
            cur.bump();
            cur.bump();
            let mut options = vec![option(cur)?];
            while cur.eat(&Tok::Semi) {
                options.push(option(cur)?);
            }
            cur.expect(&Tok::RParen, "';' or ')'")?;
            Ok(Formula::Select(options))
        }
        Tok::Ident(_) => Ok(Formula::Ref(reference(cur)?)),
        _ => Err(cur.unexpected("a number, reference, SUM, SELECT or '('")),
    }
}

fn option(cur: &mut Cursor) -> Result<FormulaOption, ParseError> {
    let left = sum_expr(cur)?;
    let op = comparison(cur)?;
    let right = sum_expr(cur)?;
    cur.expect(&Tok::Arrow, "'->'")?;
    let value = sum_expr(cur)?;
    Ok(FormulaOption {
        op,
        left,
        right,
        value,
    })
}

fn reference(cur: &mut Cursor) -> Result<CellRef, ParseError> {
    let first = cur.peek().clone();
    let Tok::Ident(text) = &first.tok else {
        return Err(cur.unexpected("a cell reference or name"));
    };
    cur.bump();
    let (sheet, addr_text, addr_span) = if cur.peek_tok() == &Tok::Bang {
        cur.bump();
        let t = cur.peek().clone();
        match &t.tok {
            Tok::Ident(a) => {
                cur.bump();
                (Some(text.clone()), a.clone(), t.span)
            }
            _ => return Err(cur.unexpected("a cell address after '!'")),
        }
    } else {
        (None, text.clone(), first.span)
    };
    let Some((col, row)) = parse_address(&addr_text) else {
        if sheet.is_some() {
            return Err(ParseError::new(
                addr_span,
                format!("`{addr_text}` is not a cell address"),
            ));
        }
        return Ok(CellRef::Name(addr_text));
    };
    let start = Coord { sheet, row, col };
    if cur.eat(&Tok::Colon) {
        let t = cur.peek().clone();
        let end = match &t.tok {
            Tok::Ident(a) => parse_address(a),
            _ => None,
        };
        let Some((col, row)) = end else {
            return Err(cur.unexpected("a cell address after ':'"));
        };
        cur.bump();
        return Ok(CellRef::Range(
            start,
            Coord {
                sheet: None,
                row,
                col,
            },
        ));
    }
    Ok(CellRef::Cell(start))
}

pub fn render_ref(r: &CellRef) -> String {
    fn coord(c: &Coord) -> String {
        let local = format!("{}{}", column_letters(c.col), c.row);
        match &c.sheet {
            Some(s) => format!("{s}!{local}"),
            None => local,
        }
    }
    match r {
        CellRef::Cell(c) => coord(c),
        CellRef::Range(a, b) => format!("{}:{}{}", coord(a), column_letters(b.col), b.row),
        CellRef::Name(n) => n.clone(),
    }
}

/// Cell text for a formula, `=` included, with minimal parentheses.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::from("=");
    write_formula(&mut out, f);
    out
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::Number(v) => out.push_str(&v.to_string()),
        Formula::Ref(r) => out.push_str(&render_ref(r)),
        Formula::Binary { op, left, right } => {
            let prec = op.precedence();
            operand(out, left, precedence(left) < prec);
            out.push_str(op.symbol());
            operand(out, right, precedence(right) <= prec);
        }
        Formula::Sum(args) => {
            out.push_str("SUM(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_formula(out, a);
            }
            out.push(')');
        }
        Formula::Select(options) => {
            out.push_str("SELECT(");
            for (i, o) in options.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_formula(out, &o.left);
                out.push_str(o.op.symbol());
                write_formula(out, &o.right);
                let _ = write!(out, " -> ");
                write_formula(out, &o.value);
            }
            out.push(')');
        }
    }
}

fn operand(out: &mut String, f: &Formula, parens: bool) {
    if parens {
        out.push('(');
    }
    write_formula(out, f);
    if parens {
        out.push(')');
    }
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Binary { op, .. } => op.precedence(),
        _ => u8::MAX,
    }
}
