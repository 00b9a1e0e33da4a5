//! Parser for `.ssm` model files and for model-level formula expressions.
//!
//! ```text
//! model "T Howe Ltd"
//! input Sales "Sales" = 135486.00
//! input Purchases "Purchases" caption "Add Purchases" = 72360.00
//! input Rate "VAT rate" = 0.20 constant
//! range Expenses "Expenses" {
//!   "Salaries" = 18310.00
//! }
//! func GrossProfit "Gross Profit" = Sales-CostOfGoodsSold+ClosingStock
//! output "Net profit" {
//!   "Gross Profit" -> GrossProfit
//! }
//! ```
//!
//! One declaration per line; `#` starts a comment; LF or CRLF line endings.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::lexer::{tokenize, Cursor, ParseError, Tok};
use crate::model::{
    is_keyword, BinOp, CmpOp, Expr, FunctionDef, Guard, Ident, InputDecl, InputItem, InputRange,
    ModelSpec, OutputBlock, OutputRow, RangeMember, SelectOption,
};

pub fn parse_model(source: &str) -> Result<ModelSpec, ParseError> {
    let mut cur = Cursor::new(tokenize(source, true)?);
    cur.skip_newlines();
    match cur.peek_tok() {
        Tok::Ident(kw) if kw == "model" => {
            cur.bump();
        }
        _ => return Err(cur.unexpected("'model'")),
    }
    let title = expect_str(&mut cur, "model title")?;
    end_of_line(&mut cur)?;

    let mut spec = ModelSpec::new(title);
    loop {
        cur.skip_newlines();
        let keyword = match cur.peek_tok() {
            Tok::Eof => break,
            Tok::Ident(kw) => kw.clone(),
            _ => return Err(cur.unexpected("a declaration")),
        };
        match keyword.as_str() {
            "input" => {
                cur.bump();
                let id = expect_ident(&mut cur)?;
                let label = expect_str(&mut cur, "input label")?;
                let caption = caption(&mut cur)?;
                cur.expect(&Tok::Eq, "'='")?;
                let value = signed_number(&mut cur)?;
                let constant = match cur.peek_tok() {
                    Tok::Ident(kw) if kw == "constant" => {
                        cur.bump();
                        true
                    }
                    _ => false,
                };
                end_of_line(&mut cur)?;
                spec.input_section.push(InputDecl::Scalar(InputItem {
                    id,
                    label,
                    caption,
                    value,
                    constant,
                }));
            }
            "range" => {
                cur.bump();
                let id = expect_ident(&mut cur)?;
                let label = expect_str(&mut cur, "range label")?;
                cur.expect(&Tok::LBrace, "'{'")?;
                let mut members = Vec::new();
                loop {
                    cur.skip_newlines();
                    if cur.eat(&Tok::RBrace) {
                        break;
                    }
                    let label = expect_str(&mut cur, "member label or '}'")?;
                    cur.expect(&Tok::Eq, "'='")?;
                    let value = signed_number(&mut cur)?;
                    members.push(RangeMember { label, value });
                }
                end_of_line(&mut cur)?;
                spec.input_section
                    .push(InputDecl::Range(InputRange { id, label, members }));
            }
            "func" => {
                cur.bump();
                let id = expect_ident(&mut cur)?;
                let label = expect_str(&mut cur, "function label")?;
                let caption = caption(&mut cur)?;
                cur.expect(&Tok::Eq, "'='")?;
                let body = parse_sum_expr(&mut cur)?;
                end_of_line(&mut cur)?;
                spec.functions.push(FunctionDef {
                    id,
                    label,
                    caption,
                    body,
                });
            }
            "output" => {
                cur.bump();
                let title = expect_str(&mut cur, "output title")?;
                cur.expect(&Tok::LBrace, "'{'")?;
                let mut rows = Vec::new();
                loop {
                    cur.skip_newlines();
                    if cur.eat(&Tok::RBrace) {
                        break;
                    }
                    let label = expect_str(&mut cur, "row label or '}'")?;
                    cur.expect(&Tok::Arrow, "'->'")?;
                    let target = expect_ident(&mut cur)?;
                    rows.push(OutputRow { label, target });
                }
                end_of_line(&mut cur)?;
                spec.outputs.push(OutputBlock { title, rows });
            }
            _ => return Err(cur.unexpected("'input', 'range', 'func' or 'output'")),
        }
    }

    let ranges: HashSet<String> = spec.ranges().map(|r| r.id.to_string()).collect();
    for f in &mut spec.functions {
        classify_sum_args(&mut f.body, &|id, _| ranges.contains(id));
    }
    Ok(spec)
}

/// Parses a formula without a symbol table. A lone `SUM` argument is read
/// as a range reference (a range is only ever referenced whole); arguments
/// of a multi-item list are read as scalar references. Use
/// [`parse_expr_with`] when the declared ranges are known.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    parse_expr_with(source, &|_, arity| arity == 1)
}

/// Parses a formula, asking `is_range(id, sum_arity)` how to classify each
/// `SUM` argument.
pub fn parse_expr_with(
    source: &str,
    is_range: &dyn Fn(&str, usize) -> bool,
) -> Result<Expr, ParseError> {
    let mut cur = Cursor::new(tokenize(source, false)?);
    if cur.peek_tok() == &Tok::Eof {
        return Err(cur.unexpected("an expression"));
    }
    let mut e = parse_sum_expr(&mut cur)?;
    if cur.peek_tok() != &Tok::Eof {
        return Err(cur.unexpected("an operator or end of formula"));
    }
    classify_sum_args(&mut e, is_range);
    Ok(e)
}

fn classify_sum_args(e: &mut Expr, is_range: &dyn Fn(&str, usize) -> bool) {
    match e {
        Expr::Literal(_) | Expr::Ref(_) | Expr::RangeRef(_) => {}
        Expr::Binary { left, right, .. } => {
            classify_sum_args(left, is_range);
            classify_sum_args(right, is_range);
        }
        Expr::Aggregate { args, .. } => {
            let arity = args.len();
            for a in args.iter_mut() {
                if let Expr::Ref(id) | Expr::RangeRef(id) = a {
                    *a = if is_range(id.as_str(), arity) {
                        Expr::RangeRef(id.clone())
                    } else {
                        Expr::Ref(id.clone())
                    };
                }
            }
        }
        Expr::Select(options) => {
            for opt in options {
                classify_sum_args(&mut opt.guard.left, is_range);
                classify_sum_args(&mut opt.guard.right, is_range);
                classify_sum_args(&mut opt.value, is_range);
            }
        }
    }
}

pub(crate) fn parse_sum_expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = parse_term(cur)?;
    loop {
        let op = match cur.peek_tok() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            _ => return Ok(lhs),
        };
        cur.bump();
        let rhs = parse_term(cur)?;
        lhs = Expr::binary(op, lhs, rhs);
    }
}

fn parse_term(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut lhs = parse_primary(cur)?;
    loop {
        let op = match cur.peek_tok() {
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return Ok(lhs),
        };
        cur.bump();
        let rhs = parse_primary(cur)?;
        lhs = Expr::binary(op, lhs, rhs);
    }
}

fn parse_primary(cur: &mut Cursor) -> Result<Expr, ParseError> {
    match cur.peek_tok().clone() {
        Tok::Number(_) | Tok::Minus => Ok(Expr::Literal(signed_number(cur)?)),
        Tok::LParen => {
            cur.bump();
            let e = parse_sum_expr(cur)?;
            cur.expect(&Tok::RParen, "')'")?;
            Ok(e)
        }
        Tok::Ident(name) if name.eq_ignore_ascii_case("SUM") => {
            cur.bump();
            cur.expect(&Tok::LParen, "'(' after SUM")?;
            let mut args = vec![Expr::Ref(expect_ident(cur)?)];
            while cur.eat(&Tok::Semi) {
                args.push(Expr::Ref(expect_ident(cur)?));
            }
            cur.expect(&Tok::RParen, "';' or ')'")?;
            Ok(Expr::sum(args))
        }
        Tok::Ident(name) if name.eq_ignore_ascii_case("SELECT") => {
            cur.bump();
            cur.expect(&Tok::LParen, "'(' after SELECT")?;
            let mut options = vec![parse_option(cur)?];
            while cur.eat(&Tok::Semi) {
                options.push(parse_option(cur)?);
            }
            cur.expect(&Tok::RParen, "';' or ')'")?;
            Ok(Expr::Select(options))
        }
        Tok::Ident(_) => Ok(Expr::Ref(expect_ident(cur)?)),
        _ => Err(cur.unexpected("a number, identifier, SUM, SELECT or '('")),
    }
}

fn parse_option(cur: &mut Cursor) -> Result<SelectOption, ParseError> {
    let left = parse_sum_expr(cur)?;
    let op = comparison(cur)?;
    let right = parse_sum_expr(cur)?;
    cur.expect(&Tok::Arrow, "'->'")?;
    let value = parse_sum_expr(cur)?;
    Ok(SelectOption {
        guard: Guard { op, left, right },
        value,
    })
}

pub(crate) fn comparison(cur: &mut Cursor) -> Result<CmpOp, ParseError> {
    let op = match cur.peek_tok() {
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        Tok::Eq => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        _ => return Err(cur.unexpected("a comparison operator")),
    };
    cur.bump();
    Ok(op)
}

pub(crate) fn signed_number(cur: &mut Cursor) -> Result<Decimal, ParseError> {
    let negative = cur.eat(&Tok::Minus);
    let tok = cur.peek().clone();
    match &tok.tok {
        Tok::Number(text) => {
            cur.bump();
            let value: Decimal = text
                .parse()
                .map_err(|e| ParseError::new(tok.span, format!("bad number `{text}`: {e}")))?;
            Ok(if negative { value.neg() } else { value })
        }
        _ => Err(cur.unexpected("a number")),
    }
}

fn expect_ident(cur: &mut Cursor) -> Result<Ident, ParseError> {
    let tok = cur.peek().clone();
    match &tok.tok {
        Tok::Ident(name) if !is_keyword(name) => {
            cur.bump();
            Ok(Ident::new(name.clone()))
        }
        Tok::Ident(name) => Err(ParseError::new(
            tok.span,
            format!("`{name}` is reserved and cannot be used as an identifier"),
        )),
        _ => Err(cur.unexpected("an identifier")),
    }
}

fn expect_str(cur: &mut Cursor, what: &str) -> Result<String, ParseError> {
    match cur.peek_tok().clone() {
        Tok::Str(s) => {
            cur.bump();
            Ok(s)
        }
        _ => Err(cur.unexpected(what)),
    }
}

fn caption(cur: &mut Cursor) -> Result<Option<String>, ParseError> {
    match cur.peek_tok() {
        Tok::Ident(kw) if kw == "caption" => {
            cur.bump();
            Ok(Some(expect_str(cur, "caption text")?))
        }
        _ => Ok(None),
    }
}

fn end_of_line(cur: &mut Cursor) -> Result<(), ParseError> {
    match cur.peek_tok() {
        Tok::Newline => {
            cur.bump();
            Ok(())
        }
        Tok::Eof => Ok(()),
        _ => Err(cur.unexpected("end of line")),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Writes `spec` back out as `.ssm` source. `parse_model` of the result
/// yields an equal model.
pub fn serialize_model(spec: &ModelSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", quote(&spec.title));
    for decl in &spec.input_section {
        match decl {
            InputDecl::Scalar(item) => {
                let _ = write!(out, "input {} {}", item.id, quote(&item.label));
                if let Some(c) = &item.caption {
                    let _ = write!(out, " caption {}", quote(c));
                }
                let _ = write!(out, " = {}", item.value);
                if item.constant {
                    out.push_str(" constant");
                }
                out.push('\n');
            }
            InputDecl::Range(range) => {
                let _ = writeln!(out, "range {} {} {{", range.id, quote(&range.label));
                for m in &range.members {
                    let _ = writeln!(out, "  {} = {}", quote(&m.label), m.value);
                }
                out.push_str("}\n");
            }
        }
    }
    for f in &spec.functions {
        let _ = write!(out, "func {} {}", f.id, quote(&f.label));
        if let Some(c) = &f.caption {
            let _ = write!(out, " caption {}", quote(c));
        }
        let _ = writeln!(out, " = {}", crate::model::pretty_expr(&f.body));
    }
    for block in &spec.outputs {
        let _ = writeln!(out, "output {} {{", quote(&block.title));
        for row in &block.rows {
            let _ = writeln!(out, "  {} -> {}", quote(&row.label), row.target);
        }
        out.push_str("}\n");
    }
    out
}
