//! Domain types shared by every compiler stage: the declarative model, the
//! formula AST and model-level validation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::decimal::Decimal;

/// A model identifier (`Sales`, `NetProfit`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(String);

impl Ident {
    pub fn new(s: impl Into<String>) -> Self {
        Ident(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `[A-Za-z_][A-Za-z0-9_]*`, excluding the formula keywords.
    pub fn is_valid(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !is_keyword(s)
    }
}

pub(crate) fn is_keyword(s: &str) -> bool {
    s.eq_ignore_ascii_case("SUM") || s.eq_ignore_ascii_case("SELECT")
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident(s.to_string())
    }
}

impl std::borrow::Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub title: String,
    /// Scalar inputs and ranges, interleaved in declaration order. The input
    /// sheet is laid out in exactly this order.
    pub input_section: Vec<InputDecl>,
    pub functions: Vec<FunctionDef>,
    pub outputs: Vec<OutputBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputDecl {
    Scalar(InputItem),
    Range(InputRange),
}

impl InputDecl {
    pub fn id(&self) -> &Ident {
        match self {
            InputDecl::Scalar(i) => &i.id,
            InputDecl::Range(r) => &r.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputItem {
    pub id: Ident,
    pub label: String,
    /// Label used for the row in the workings section, when it differs from
    /// the input-sheet label (`Add Purchases` vs `Purchases`).
    pub caption: Option<String>,
    pub value: Decimal,
    pub constant: bool,
}

impl InputItem {
    pub fn workings_label(&self) -> &str {
        self.caption.as_deref().unwrap_or(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeMember {
    pub label: String,
    pub value: Decimal,
}

/// A set of related inputs that is only ever referenced as a whole.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputRange {
    pub id: Ident,
    pub label: String,
    pub members: Vec<RangeMember>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub id: Ident,
    pub label: String,
    pub caption: Option<String>,
    pub body: Expr,
}

impl FunctionDef {
    pub fn workings_label(&self) -> &str {
        self.caption.as_deref().unwrap_or(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputRow {
    pub label: String,
    pub target: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputBlock {
    pub title: String,
    pub rows: Vec<OutputRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
        }
    }

    pub fn holds(self, lhs: &Decimal, rhs: &Decimal) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateKind {
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub op: CmpOp,
    pub left: Expr,
    pub right: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectOption {
    pub guard: Guard,
    pub value: Expr,
}

/// Formula AST. `RangeRef` is only meaningful as an `Aggregate` argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Literal(Decimal),
    Ref(Ident),
    RangeRef(Ident),
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Aggregate {
        kind: AggregateKind,
        args: Vec<Expr>,
    },
    Select(Vec<SelectOption>),
}

impl Expr {
    pub fn binary(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn reference(id: &str) -> Expr {
        Expr::Ref(Ident::new(id))
    }

    pub fn sum(args: Vec<Expr>) -> Expr {
        Expr::Aggregate {
            kind: AggregateKind::Sum,
            args,
        }
    }

    /// Visits every `Ref`/`RangeRef` in source (left-to-right) order.
    pub fn visit_refs<'a>(&'a self, f: &mut impl FnMut(&'a Ident, bool)) {
        match self {
            Expr::Literal(_) => {}
            Expr::Ref(id) => f(id, false),
            Expr::RangeRef(id) => f(id, true),
            Expr::Binary { left, right, .. } => {
                left.visit_refs(f);
                right.visit_refs(f);
            }
            Expr::Aggregate { args, .. } => args.iter().for_each(|a| a.visit_refs(f)),
            Expr::Select(options) => {
                for opt in options {
                    opt.guard.left.visit_refs(f);
                    opt.guard.right.visit_refs(f);
                    opt.value.visit_refs(f);
                }
            }
        }
    }

    /// Distinct referenced identifiers in first-occurrence order.
    pub fn distinct_refs(&self) -> Vec<&Ident> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.visit_refs(&mut |id, _| {
            if seen.insert(id) {
                out.push(id);
            }
        });
        out
    }

    /// True if any `SUM` argument is a range reference.
    pub fn aggregates_range(&self) -> bool {
        let mut found = false;
        self.visit_refs(&mut |_, is_range| found |= is_range);
        found
    }

    pub fn is_select(&self) -> bool {
        matches!(self, Expr::Select(_))
    }
}

/// Canonical text of an expression: parentheses only where precedence or
/// left-associativity requires them, `SUM(a; b)` argument lists.
pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Literal(v) => out.push_str(&v.to_string()),
        Expr::Ref(id) | Expr::RangeRef(id) => out.push_str(id.as_str()),
        Expr::Binary { op, left, right } => {
            let prec = op.precedence();
            write_operand(out, left, binary_prec(left) < prec);
            out.push_str(op.symbol());
            write_operand(out, right, binary_prec(right) <= prec);
        }
        Expr::Aggregate { args, .. } => {
            out.push_str("SUM(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
        Expr::Select(options) => {
            out.push_str("SELECT(");
            for (i, opt) in options.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_expr(out, &opt.guard.left);
                out.push_str(opt.guard.op.symbol());
                write_expr(out, &opt.guard.right);
                out.push_str(" -> ");
                write_expr(out, &opt.value);
            }
            out.push(')');
        }
    }
}

fn write_operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn binary_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        _ => u8::MAX,
    }
}

/// A declaration looked up by identifier.
#[derive(Debug, Clone, Copy)]
pub enum Decl<'a> {
    Input(&'a InputItem),
    Range(&'a InputRange),
    Function(&'a FunctionDef),
}

impl ModelSpec {
    pub fn new(title: impl Into<String>) -> Self {
        ModelSpec {
            title: title.into(),
            input_section: Vec::new(),
            functions: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn inputs(&self) -> impl Iterator<Item = &InputItem> {
        self.input_section.iter().filter_map(|d| match d {
            InputDecl::Scalar(i) => Some(i),
            InputDecl::Range(_) => None,
        })
    }

    pub fn ranges(&self) -> impl Iterator<Item = &InputRange> {
        self.input_section.iter().filter_map(|d| match d {
            InputDecl::Range(r) => Some(r),
            InputDecl::Scalar(_) => None,
        })
    }

    pub fn function(&self, id: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.id.as_str() == id)
    }

    pub fn lookup(&self, id: &str) -> Option<Decl<'_>> {
        for decl in &self.input_section {
            match decl {
                InputDecl::Scalar(i) if i.id.as_str() == id => return Some(Decl::Input(i)),
                InputDecl::Range(r) if r.id.as_str() == id => return Some(Decl::Range(r)),
                _ => {}
            }
        }
        self.function(id).map(Decl::Function)
    }

    /// Every declared identifier in declaration order: inputs and ranges
    /// first, then functions.
    pub fn declared_ids(&self) -> impl Iterator<Item = &Ident> {
        self.input_section
            .iter()
            .map(InputDecl::id)
            .chain(self.functions.iter().map(|f| &f.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticCode {
    DuplicateId,
    InvalidId,
    EmptyLabel,
    EmptyRange,
    UndeclaredRef,
    SelfReference,
    LiteralOnlyFunction,
    RangeOutsideAggregate,
    RefKindMismatch,
    BadAggregate,
    EmptySelect,
    OutputBadTarget,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::DuplicateId => "DUPLICATE_ID",
            DiagnosticCode::InvalidId => "INVALID_ID",
            DiagnosticCode::EmptyLabel => "EMPTY_LABEL",
            DiagnosticCode::EmptyRange => "EMPTY_RANGE",
            DiagnosticCode::UndeclaredRef => "UNDECLARED_REF",
            DiagnosticCode::SelfReference => "SELF_REFERENCE",
            DiagnosticCode::LiteralOnlyFunction => "LITERAL_ONLY_FUNCTION",
            DiagnosticCode::RangeOutsideAggregate => "RANGE_OUTSIDE_AGGREGATE",
            DiagnosticCode::RefKindMismatch => "REF_KIND_MISMATCH",
            DiagnosticCode::BadAggregate => "BAD_AGGREGATE",
            DiagnosticCode::EmptySelect => "EMPTY_SELECT",
            DiagnosticCode::OutputBadTarget => "OUTPUT_BAD_TARGET",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// Declaration path, e.g. `func NetProfit` or `output "Net profit" row 2`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}

/// Checks every `ModelSpec` invariant. An empty result means the model is
/// well-formed (cycles longer than a self-reference are the structurer's job).
pub fn validate_model(spec: &ModelSpec) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |code, location: &str, message: String| {
        diags.push(Diagnostic {
            code,
            location: location.to_string(),
            message,
        })
    };

    let mut kinds: HashMap<&str, bool> = HashMap::new(); // id -> is_range
    let mut seen = HashSet::new();
    let mut check_decl =
        |kind: &str,
         id: &Ident,
         label: &str,
         push: &mut dyn FnMut(DiagnosticCode, &str, String)| {
            let loc = format!("{kind} {id}");
            if !seen.insert(id.as_str().to_string()) {
                push(
                    DiagnosticCode::DuplicateId,
                    &loc,
                    format!("identifier `{id}` is declared more than once"),
                );
            }
            if !Ident::is_valid(id.as_str()) {
                push(
                    DiagnosticCode::InvalidId,
                    &loc,
                    format!("`{id}` is not a valid identifier"),
                );
            }
            if label.trim().is_empty() {
                push(DiagnosticCode::EmptyLabel, &loc, "label is empty".into());
            }
        };

    for decl in &spec.input_section {
        match decl {
            InputDecl::Scalar(item) => {
                check_decl("input", &item.id, &item.label, &mut push);
                kinds.entry(item.id.as_str()).or_insert(false);
            }
            InputDecl::Range(range) => {
                check_decl("range", &range.id, &range.label, &mut push);
                kinds.entry(range.id.as_str()).or_insert(true);
                let loc = format!("range {}", range.id);
                if range.members.is_empty() {
                    push(
                        DiagnosticCode::EmptyRange,
                        &loc,
                        "a range needs at least one member".into(),
                    );
                }
                if range.members.iter().any(|m| m.label.trim().is_empty()) {
                    push(
                        DiagnosticCode::EmptyLabel,
                        &loc,
                        "range member label is empty".into(),
                    );
                }
            }
        }
    }
    let functions: HashSet<&str> = spec.functions.iter().map(|f| f.id.as_str()).collect();
    for func in &spec.functions {
        check_decl("func", &func.id, &func.label, &mut push);
    }

    let is_declared = |id: &str| kinds.contains_key(id) || functions.contains(id);
    let mut used_inputs = HashSet::new();
    for func in &spec.functions {
        let loc = format!("func {}", func.id);
        if func.body.distinct_refs().is_empty() {
            push(
                DiagnosticCode::LiteralOnlyFunction,
                &loc,
                "a function must reference at least one model element".into(),
            );
        }
        let mut reported = BTreeSet::new();
        check_expr(&func.body, false, &mut |problem| match problem {
            ExprProblem::Ref(id, is_range_ref, in_aggregate) => {
                if id == &func.id {
                    if reported.insert((DiagnosticCode::SelfReference, id.clone())) {
                        push(
                            DiagnosticCode::SelfReference,
                            &loc,
                            format!("`{id}` refers to itself"),
                        );
                    }
                    return;
                }
                if !is_declared(id.as_str()) {
                    if reported.insert((DiagnosticCode::UndeclaredRef, id.clone())) {
                        push(
                            DiagnosticCode::UndeclaredRef,
                            &loc,
                            format!("reference to undeclared identifier `{id}`"),
                        );
                    }
                    return;
                }
                let target_is_range = kinds.get(id.as_str()).copied().unwrap_or(false);
                if kinds.get(id.as_str()) == Some(&false) {
                    used_inputs.insert(id.as_str().to_string());
                }
                if is_range_ref && !in_aggregate {
                    push(
                        DiagnosticCode::RangeOutsideAggregate,
                        &loc,
                        format!("range `{id}` can only be used inside SUM"),
                    );
                } else if !is_range_ref && target_is_range {
                    let code = if in_aggregate {
                        DiagnosticCode::RefKindMismatch
                    } else {
                        DiagnosticCode::RangeOutsideAggregate
                    };
                    push(
                        code,
                        &loc,
                        format!("range `{id}` can only be used inside SUM"),
                    );
                } else if is_range_ref && !target_is_range {
                    push(
                        DiagnosticCode::RefKindMismatch,
                        &loc,
                        format!("`{id}` is not a range"),
                    );
                }
            }
            ExprProblem::BadAggregate(msg) => push(DiagnosticCode::BadAggregate, &loc, msg),
            ExprProblem::EmptySelect => push(
                DiagnosticCode::EmptySelect,
                &loc,
                "SELECT needs at least one option".into(),
            ),
        });
    }

    for block in &spec.outputs {
        for (i, row) in block.rows.iter().enumerate() {
            let loc = format!("output \"{}\" row {}", block.title, i + 1);
            let target = row.target.as_str();
            if functions.contains(target) {
                continue;
            }
            match kinds.get(target) {
                None => push(
                    DiagnosticCode::UndeclaredRef,
                    &loc,
                    format!("reference to undeclared identifier `{target}`"),
                ),
                Some(true) => push(
                    DiagnosticCode::OutputBadTarget,
                    &loc,
                    format!("output rows cannot show range `{target}`"),
                ),
                Some(false) if !used_inputs.contains(target) => push(
                    DiagnosticCode::OutputBadTarget,
                    &loc,
                    format!(
                        "input `{target}` is not used by any function, so it has no workings row"
                    ),
                ),
                Some(false) => {}
            }
        }
    }
    diags
}

enum ExprProblem<'a> {
    /// (id, written as range ref, inside an aggregate)
    Ref(&'a Ident, bool, bool),
    BadAggregate(String),
    EmptySelect,
}

fn check_expr<'a>(e: &'a Expr, in_aggregate: bool, f: &mut impl FnMut(ExprProblem<'a>)) {
    match e {
        Expr::Literal(_) => {}
        Expr::Ref(id) => f(ExprProblem::Ref(id, false, in_aggregate)),
        Expr::RangeRef(id) => f(ExprProblem::Ref(id, true, in_aggregate)),
        Expr::Binary { left, right, .. } => {
            check_expr(left, false, f);
            check_expr(right, false, f);
        }
        Expr::Aggregate { args, .. } => {
            if args.is_empty() {
                f(ExprProblem::BadAggregate(
                    "SUM needs at least one argument".into(),
                ));
            }
            for a in args {
                match a {
                    Expr::Ref(_) | Expr::RangeRef(_) => check_expr(a, true, f),
                    _ => f(ExprProblem::BadAggregate(
                        "SUM arguments must be identifiers".into(),
                    )),
                }
            }
        }
        Expr::Select(options) => {
            if options.is_empty() {
                f(ExprProblem::EmptySelect);
            }
            for opt in options {
                check_expr(&opt.guard.left, false, f);
                check_expr(&opt.guard.right, false, f);
                check_expr(&opt.value, false, f);
            }
        }
    }
}
