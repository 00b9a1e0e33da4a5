//! Values of a model, computed either from the model itself or by
//! interpreting the formulas of an emitted workbook.
//!
//! Every intermediate result is brought to the configured scale: addition
//! and subtraction are exact there, multiplication and division round half
//! to even.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::decimal::{Decimal, DecimalError};
use crate::emitter::{Cell, NameTarget, Origin, WorkbookGrid};
use crate::formula::{parse_formula, CellRef, Formula};
use crate::layout::column_letters;
use crate::model::{BinOp, Expr, Ident, ModelSpec};
use crate::structurer::{build_graph, detect_cycles, topo_order, GraphNodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueKey {
    pub id: Ident,
    /// Member index for range members.
    pub member: Option<usize>,
}

impl ValueKey {
    pub fn id(id: impl Into<Ident>) -> Self {
        ValueKey {
            id: id.into(),
            member: None,
        }
    }

    pub fn member(id: impl Into<Ident>, index: usize) -> Self {
        ValueKey {
            id: id.into(),
            member: Some(index),
        }
    }
}

impl fmt::Display for ValueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.member {
            Some(i) => write!(f, "{}[{i}]", self.id),
            None => write!(f, "{}", self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueMap {
    pub scale: u32,
    pub values: BTreeMap<ValueKey, Decimal>,
}

impl ValueMap {
    pub fn new(scale: u32) -> Self {
        ValueMap {
            scale,
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, id: &str) -> Option<&Decimal> {
        self.values.get(&ValueKey::id(id))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("dependency cycle: {}", .0.iter().map(|c| c.join(" -> ")).collect::<Vec<_>>().join("; "))]
    Cycle(Vec<Vec<String>>),
    #[error("{at}: {true_guards} guards hold; exactly one must")]
    SelectAmbiguous { at: String, true_guards: usize },
    #[error("{at}: division by zero")]
    DivideByZero { at: String },
    #[error("{at}: value exceeds the decimal range")]
    Overflow { at: String },
    #[error("{at}: cannot resolve `{reference}`")]
    UnresolvedRef { at: String, reference: String },
    #[error("{at}: `{reference}` does not hold a number")]
    NotANumber { at: String, reference: String },
    #[error("{at}: unreadable formula: {message}")]
    BadFormula { at: String, message: String },
    #[error("cells for {origin} disagree: {first} vs {second}")]
    OriginConflict {
        origin: String,
        first: Decimal,
        second: Decimal,
    },
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::Cycle(_) => "CYCLE",
            EvalError::SelectAmbiguous { .. } => "SELECT_AMBIGUOUS",
            EvalError::DivideByZero { .. } => "DIVIDE_BY_ZERO",
            EvalError::Overflow { .. } => "OVERFLOW",
            EvalError::UnresolvedRef { .. } => "UNRESOLVED_REF",
            EvalError::NotANumber { .. } => "NOT_A_NUMBER",
            EvalError::BadFormula { .. } => "BAD_FORMULA",
            EvalError::OriginConflict { .. } => "ORIGIN_CONFLICT",
        }
    }
}

fn decimal_error(at: &str, e: DecimalError) -> EvalError {
    match e {
        DecimalError::DivideByZero => EvalError::DivideByZero { at: at.to_string() },
        _ => EvalError::Overflow { at: at.to_string() },
    }
}

fn apply(op: BinOp, a: &Decimal, b: &Decimal, scale: u32, at: &str) -> Result<Decimal, EvalError> {
    let result = match op {
        BinOp::Add => a.checked_add(b).and_then(|v| v.rescale(scale)),
        BinOp::Sub => a.checked_sub(b).and_then(|v| v.rescale(scale)),
        BinOp::Mul => a.checked_mul(b, scale),
        BinOp::Div => a.checked_div(b, scale),
    };
    result.map_err(|e| decimal_error(at, e))
}

fn at_scale(v: &Decimal, scale: u32, at: &str) -> Result<Decimal, EvalError> {
    v.rescale(scale).map_err(|e| decimal_error(at, e))
}

fn sum(
    values: impl IntoIterator<Item = Decimal>,
    scale: u32,
    at: &str,
) -> Result<Decimal, EvalError> {
    values
        .into_iter()
        .try_fold(Decimal::ZERO, |acc, v| acc.checked_add(&v))
        .and_then(|v| v.rescale(scale))
        .map_err(|e| decimal_error(at, e))
}

/// Index of the single option whose guard holds.
fn select_option(guards: &[bool], at: &str) -> Result<usize, EvalError> {
    let true_guards = guards.iter().filter(|g| **g).count();
    if true_guards != 1 {
        return Err(EvalError::SelectAmbiguous {
            at: at.to_string(),
            true_guards,
        });
    }
    Ok(guards.iter().position(|g| *g).expect("one guard holds"))
}

/// Evaluates every function in topological order (declaration order breaks
/// ties).
pub fn evaluate_spec(spec: &ModelSpec, scale: u32) -> Result<ValueMap, EvalError> {
    let graph = build_graph(spec);
    let Some(order) = topo_order(&graph) else {
        let cycles = detect_cycles(&graph)
            .into_iter()
            .map(|c| c.iter().map(|id| id.to_string()).collect())
            .collect();
        return Err(EvalError::Cycle(cycles));
    };
    let mut map = ValueMap::new(scale);
    let mut ranges: HashMap<&Ident, Vec<Decimal>> = HashMap::new();
    for item in spec.inputs() {
        let v = at_scale(&item.value, scale, item.id.as_str())?;
        map.values.insert(ValueKey::id(item.id.clone()), v);
    }
    for range in spec.ranges() {
        let mut members = Vec::with_capacity(range.members.len());
        for (i, m) in range.members.iter().enumerate() {
            let v = at_scale(&m.value, scale, range.id.as_str())?;
            map.values.insert(ValueKey::member(range.id.clone(), i), v);
            members.push(v);
        }
        ranges.insert(&range.id, members);
    }
    for id in order {
        if graph.node(id.as_str()).map(|n| n.kind) != Some(GraphNodeKind::Function) {
            continue;
        }
        let f = spec
            .function(id.as_str())
            .expect("function nodes are declared");
        let ctx = SpecContext {
            map: &map,
            ranges: &ranges,
            scale,
            at: id.as_str(),
        };
        let v = ctx.eval(&f.body)?;
        map.values.insert(ValueKey::id(id.clone()), v);
    }
    Ok(map)
}

struct SpecContext<'a> {
    map: &'a ValueMap,
    ranges: &'a HashMap<&'a Ident, Vec<Decimal>>,
    scale: u32,
    at: &'a str,
}

impl SpecContext<'_> {
    fn unresolved(&self, id: &Ident) -> EvalError {
        EvalError::UnresolvedRef {
            at: self.at.to_string(),
            reference: id.to_string(),
        }
    }

    fn eval(&self, e: &Expr) -> Result<Decimal, EvalError> {
        match e {
            Expr::Literal(v) => at_scale(v, self.scale, self.at),
            Expr::Ref(id) => self
                .map
                .get(id.as_str())
                .copied()
                .ok_or_else(|| self.unresolved(id)),
            Expr::RangeRef(id) => Err(EvalError::NotANumber {
                at: self.at.to_string(),
                reference: id.to_string(),
            }),
            Expr::Binary { op, left, right } => apply(
                *op,
                &self.eval(left)?,
                &self.eval(right)?,
                self.scale,
                self.at,
            ),
            Expr::Aggregate { args, .. } => {
                let mut values = Vec::new();
                for a in args {
                    match a {
                        Expr::RangeRef(id) => values.extend(
                            self.ranges
                                .get(id)
                                .ok_or_else(|| self.unresolved(id))?
                                .iter()
                                .copied(),
                        ),
                        other => values.push(self.eval(other)?),
                    }
                }
                sum(values, self.scale, self.at)
            }
            Expr::Select(options) => {
                let guards = options
                    .iter()
                    .map(|o| {
                        Ok(o.guard
                            .op
                            .holds(&self.eval(&o.guard.left)?, &self.eval(&o.guard.right)?))
                    })
                    .collect::<Result<Vec<_>, EvalError>>()?;
                self.eval(&options[select_option(&guards, self.at)?].value)
            }
        }
    }
}

type Addr = (usize, u32, u32);

fn addr_text(wb: &WorkbookGrid, (s, row, col): Addr) -> String {
    format!("{}!{}{}", wb.sheets[s].name, column_letters(col), row)
}

enum Resolved {
    Cell(Addr),
    /// Non-empty cells of a rectangle.
    Range(Vec<Addr>),
}

/// Interprets every formula of `wb` and reads values back through the
/// origins recorded on cells.
pub fn evaluate_grid(wb: &WorkbookGrid, scale: u32) -> Result<ValueMap, EvalError> {
    let sheet_index: HashMap<&str, usize> = wb
        .sheets
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();

    let resolve = |r: &CellRef, current: usize, at: &str| -> Result<Resolved, EvalError> {
        let unresolved = || EvalError::UnresolvedRef {
            at: at.to_string(),
            reference: crate::formula::render_ref(r),
        };
        let sheet_of = |name: Option<&str>| match name {
            None => Some(current),
            Some(n) => sheet_index.get(n).copied(),
        };
        let rect = |s: usize, a: (u32, u32), b: (u32, u32)| {
            let (r0, r1) = (a.0.min(b.0), a.0.max(b.0));
            let (c0, c1) = (a.1.min(b.1), a.1.max(b.1));
            let cells = wb.sheets[s]
                .cells
                .range((r0, 0)..=(r1, u32::MAX))
                .filter(|(&(_, c), _)| c >= c0 && c <= c1)
                .map(|(&(r, c), _)| (s, r, c))
                .collect();
            Resolved::Range(cells)
        };
        match r {
            CellRef::Cell(c) => {
                let s = sheet_of(c.sheet.as_deref()).ok_or_else(unresolved)?;
                Ok(Resolved::Cell((s, c.row, c.col)))
            }
            CellRef::Range(a, b) => {
                let s = sheet_of(a.sheet.as_deref()).ok_or_else(unresolved)?;
                Ok(rect(s, (a.row, a.col), (b.row, b.col)))
            }
            CellRef::Name(n) => match wb.names.get(n).ok_or_else(unresolved)? {
                NameTarget::Cell(a) => {
                    let s = sheet_of(Some(&a.sheet)).ok_or_else(unresolved)?;
                    Ok(Resolved::Cell((s, a.row, a.col)))
                }
                NameTarget::Range(a, b) => {
                    let s = sheet_of(Some(&a.sheet)).ok_or_else(unresolved)?;
                    Ok(rect(s, (a.row, a.col), (b.row, b.col)))
                }
            },
        }
    };

    // Parse every formula and collect its precedent cells.
    let mut formulas: BTreeMap<Addr, Formula> = BTreeMap::new();
    let mut values: HashMap<Addr, Decimal> = HashMap::new();
    for (s, sheet) in wb.sheets.iter().enumerate() {
        for (&(row, col), cell) in &sheet.cells {
            let addr = (s, row, col);
            match cell {
                Cell::Number(v) => {
                    values.insert(addr, at_scale(v, scale, &addr_text(wb, addr))?);
                }
                Cell::Formula(text) => {
                    let f = parse_formula(text).map_err(|e| EvalError::BadFormula {
                        at: addr_text(wb, addr),
                        message: e.to_string(),
                    })?;
                    formulas.insert(addr, f);
                }
                Cell::Label(_) => {}
            }
        }
    }
    let mut precedents: BTreeMap<Addr, BTreeSet<Addr>> = BTreeMap::new();
    for (&addr, f) in &formulas {
        let at = addr_text(wb, addr);
        let mut deps = BTreeSet::new();
        for r in f.refs() {
            match resolve(r, addr.0, &at)? {
                Resolved::Cell(a) => {
                    deps.insert(a);
                }
                Resolved::Range(cells) => deps.extend(cells),
            }
        }
        deps.retain(|d| formulas.contains_key(d));
        precedents.insert(addr, deps);
    }

    // Kahn over formula cells, in address order for determinism.
    let mut dependents: HashMap<Addr, Vec<Addr>> = HashMap::new();
    let mut indegree: BTreeMap<Addr, usize> = BTreeMap::new();
    for (&addr, deps) in &precedents {
        indegree.insert(addr, deps.len());
        for d in deps {
            dependents.entry(*d).or_default().push(addr);
        }
    }
    let mut ready: BTreeSet<Addr> = indegree
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(&a, _)| a)
        .collect();
    let mut order = Vec::with_capacity(formulas.len());
    while let Some(addr) = ready.pop_first() {
        order.push(addr);
        for d in dependents.get(&addr).into_iter().flatten() {
            let n = indegree.get_mut(d).expect("dependent is a formula");
            *n -= 1;
            if *n == 0 {
                ready.insert(*d);
            }
        }
    }
    if order.len() < formulas.len() {
        let stuck: BTreeSet<Addr> = order.iter().copied().collect();
        let cells = formulas
            .keys()
            .filter(|a| !stuck.contains(a))
            .map(|&a| addr_text(wb, a))
            .collect();
        return Err(EvalError::Cycle(vec![cells]));
    }

    for addr in order {
        let at = addr_text(wb, addr);
        let ctx = GridContext {
            wb,
            values: &values,
            resolve: &resolve,
            current: addr.0,
            scale,
            at: &at,
        };
        let v = ctx.eval(&formulas[&addr])?;
        values.insert(addr, v);
    }

    let mut map = ValueMap::new(scale);
    let mut seen: HashMap<ValueKey, Decimal> = HashMap::new();
    for (s, sheet) in wb.sheets.iter().enumerate() {
        for (&(row, col), origin) in &sheet.origins {
            let Some(&v) = values.get(&(s, row, col)) else {
                continue;
            };
            let key = match origin {
                Origin::Function(id) | Origin::Input(id) => ValueKey::id(id.clone()),
                Origin::Member(id, i) => ValueKey::member(id.clone(), *i),
            };
            if let Some(&first) = seen.get(&key) {
                if first != v {
                    return Err(EvalError::OriginConflict {
                        origin: origin.to_string(),
                        first,
                        second: v,
                    });
                }
                continue;
            }
            seen.insert(key.clone(), v);
            map.values.insert(key, v);
        }
    }
    Ok(map)
}

struct GridContext<'a, R> {
    wb: &'a WorkbookGrid,
    values: &'a HashMap<Addr, Decimal>,
    resolve: &'a R,
    current: usize,
    scale: u32,
    at: &'a str,
}

impl<R> GridContext<'_, R>
where
    R: Fn(&CellRef, usize, &str) -> Result<Resolved, EvalError>,
{
    fn cell_value(&self, addr: Addr, r: &CellRef) -> Result<Decimal, EvalError> {
        match self.values.get(&addr) {
            Some(v) => Ok(*v),
            None if self.wb.sheets[addr.0].cells.contains_key(&(addr.1, addr.2)) => {
                Err(EvalError::NotANumber {
                    at: self.at.to_string(),
                    reference: crate::formula::render_ref(r),
                })
            }
            None => Err(EvalError::UnresolvedRef {
                at: self.at.to_string(),
                reference: crate::formula::render_ref(r),
            }),
        }
    }

    fn eval(&self, f: &Formula) -> Result<Decimal, EvalError> {
        match f {
            Formula::Number(v) => at_scale(v, self.scale, self.at),
            Formula::Ref(r) => match (self.resolve)(r, self.current, self.at)? {
                Resolved::Cell(a) => self.cell_value(a, r),
                Resolved::Range(_) => Err(EvalError::NotANumber {
                    at: self.at.to_string(),
                    reference: crate::formula::render_ref(r),
                }),
            },
            Formula::Binary { op, left, right } => apply(
                *op,
                &self.eval(left)?,
                &self.eval(right)?,
                self.scale,
                self.at,
            ),
            Formula::Sum(args) => {
                let mut values = Vec::new();
                for a in args {
                    match a {
                        Formula::Ref(r) => match (self.resolve)(r, self.current, self.at)? {
                            Resolved::Cell(addr) => values.push(self.cell_value(addr, r)?),
                            Resolved::Range(cells) => {
                                for addr in cells {
                                    values.push(self.cell_value(addr, r)?);
                                }
                            }
                        },
                        other => values.push(self.eval(other)?),
                    }
                }
                sum(values, self.scale, self.at)
            }
            Formula::Select(options) => {
                let guards = options
                    .iter()
                    .map(|o| Ok(o.op.holds(&self.eval(&o.left)?, &self.eval(&o.right)?)))
                    .collect::<Result<Vec<_>, EvalError>>()?;
                self.eval(&options[select_option(&guards, self.at)?].value)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueDiff {
    pub key: ValueKey,
    pub a: Decimal,
    pub b: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error(
    "value maps have different keys (only in first: {only_in_a:?}; only in second: {only_in_b:?})"
)]
pub struct KeyMismatch {
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
}

impl KeyMismatch {
    pub fn code(&self) -> &'static str {
        "KEY_MISMATCH"
    }
}

/// Entries whose values differ, sorted by key.
pub fn diff_values(a: &ValueMap, b: &ValueMap) -> Result<Vec<ValueDiff>, KeyMismatch> {
    let only = |x: &ValueMap, y: &ValueMap| -> Vec<String> {
        x.values
            .keys()
            .filter(|k| !y.values.contains_key(k))
            .map(|k| k.to_string())
            .collect()
    };
    let (only_in_a, only_in_b) = (only(a, b), only(b, a));
    if !only_in_a.is_empty() || !only_in_b.is_empty() {
        return Err(KeyMismatch {
            only_in_a,
            only_in_b,
        });
    }
    Ok(a.values
        .iter()
        .filter_map(|(k, va)| {
            let vb = b.values[k];
            (*va != vb).then(|| ValueDiff {
                key: k.clone(),
                a: *va,
                b: vb,
            })
        })
        .collect())
}
