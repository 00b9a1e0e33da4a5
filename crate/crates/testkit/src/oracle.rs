//! Reference implementations that share no code with the library's
//! evaluator and structurer.

use std::collections::{BTreeMap, BTreeSet};

use ssc_core::model::{BinOp, CmpOp, Decl, Expr, ModelSpec};
use ssc_core::Decimal;

/// Decimal text to hundredths, half-even on any further digits.
pub fn to_cents(value: &Decimal) -> i128 {
    let text = value.to_string();
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let mut frac = frac.to_string();
    while frac.len() < 2 {
        frac.push('0');
    }
    let scaled: i128 = format!("{int}{frac}").parse().expect("decimal digits");
    let extra = frac.len() as u32 - 2;
    let cents = div_half_even(scaled, 10i128.pow(extra));
    if negative {
        -cents
    } else {
        cents
    }
}

/// `a / b` rounded half to even.
pub fn div_half_even(a: i128, b: i128) -> i128 {
    let (q, r) = (a / b, a % b);
    let twice = 2 * r.abs();
    let away = if (a < 0) != (b < 0) { -1 } else { 1 };
    if twice > b.abs() || (twice == b.abs() && q % 2 != 0) {
        q + away
    } else {
        q
    }
}

/// Evaluates every function by recursive substitution, without memoising
/// and without ordering, in hundredths.
pub fn naive_eval(spec: &ModelSpec) -> BTreeMap<String, i128> {
    spec.functions
        .iter()
        .map(|f| (f.id.to_string(), eval(spec, &f.body)))
        .collect()
}

fn value_of(spec: &ModelSpec, id: &str) -> i128 {
    match spec.lookup(id) {
        Some(Decl::Input(item)) => to_cents(&item.value),
        Some(Decl::Function(f)) => eval(spec, &f.body),
        Some(Decl::Range(_)) => panic!("range `{id}` used as a scalar"),
        None => panic!("undeclared `{id}`"),
    }
}

fn eval(spec: &ModelSpec, e: &Expr) -> i128 {
    match e {
        Expr::Literal(v) => to_cents(v),
        Expr::Ref(id) => value_of(spec, id.as_str()),
        Expr::RangeRef(id) => panic!("range `{id}` outside SUM"),
        Expr::Binary { op, left, right } => {
            let (a, b) = (eval(spec, left), eval(spec, right));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => div_half_even(a * b, 100),
                BinOp::Div => {
                    assert!(b != 0, "division by zero");
                    div_half_even(a * 100, b)
                }
            }
        }
        Expr::Aggregate { args, .. } => args
            .iter()
            .map(|a| match a {
                Expr::RangeRef(id) => match spec.lookup(id.as_str()) {
                    Some(Decl::Range(r)) => r.members.iter().map(|m| to_cents(&m.value)).sum(),
                    _ => panic!("`{id}` is not a range"),
                },
                other => eval(spec, other),
            })
            .sum(),
        Expr::Select(options) => {
            let chosen: Vec<&Expr> = options
                .iter()
                .filter(|o| {
                    let (l, r) = (eval(spec, &o.guard.left), eval(spec, &o.guard.right));
                    match o.guard.op {
                        CmpOp::Lt => l < r,
                        CmpOp::Le => l <= r,
                        CmpOp::Gt => l > r,
                        CmpOp::Ge => l >= r,
                        CmpOp::Eq => l == r,
                        CmpOp::Ne => l != r,
                    }
                })
                .map(|o| &o.value)
                .collect();
            assert_eq!(chosen.len(), 1, "exactly one guard must hold");
            eval(spec, chosen[0])
        }
    }
}

/// Functions that can reach themselves by following references.
pub fn cyclic_functions(spec: &ModelSpec) -> BTreeSet<String> {
    let refs = |id: &str| -> Vec<String> {
        spec.function(id)
            .map(|f| {
                f.body
                    .distinct_refs()
                    .into_iter()
                    .filter(|r| spec.function(r.as_str()).is_some())
                    .map(|r| r.to_string())
                    .collect()
            })
            .unwrap_or_default()
    };
    let mut out = BTreeSet::new();
    for f in &spec.functions {
        let start = f.id.to_string();
        let mut stack = refs(&start);
        let mut seen = BTreeSet::new();
        while let Some(next) = stack.pop() {
            if next == start {
                out.insert(start.clone());
                break;
            }
            if seen.insert(next.clone()) {
                stack.extend(refs(&next));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_even() {
        assert_eq!(div_half_even(25, 10), 2);
        assert_eq!(div_half_even(35, 10), 4);
        assert_eq!(div_half_even(-25, 10), -2);
        assert_eq!(div_half_even(-26, 10), -3);
        assert_eq!(div_half_even(7, -2), -4);
    }

    #[test]
    fn cents() {
        assert_eq!(to_cents(&"135486.00".parse().unwrap()), 13548600);
        assert_eq!(to_cents(&"-0.125".parse().unwrap()), -12);
        assert_eq!(to_cents(&"7".parse().unwrap()), 700);
    }
}
