//! Seeded random models.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ssc_core::model::{
    AggregateKind, BinOp, CmpOp, Expr, FunctionDef, Guard, Ident, InputDecl, InputItem, InputRange,
    ModelSpec, OutputBlock, OutputRow, RangeMember, SelectOption,
};
use ssc_core::Decimal;

const WORDS: &[&str] = &[
    "Sales", "Rent", "Wages", "Stock", "Freight", "Interest", "Tax", "Fees", "Margin", "Cost",
    "Revenue", "Bonus", "Profit", "Reserve", "Discount", "Carriage",
];

/// Acyclic model with at most 12 nodes (inputs, ranges and functions),
/// integer inputs in [-100, 100], multiplication only by small integer
/// literals and division only by nonzero integer literals.
pub fn generate_model(seed: u64) -> ModelSpec {
    let mut rng = StdRng::seed_from_u64(seed);
    let total = rng.random_range(2..=12usize);
    let n_inputs = rng.random_range(1..=(total - 1).min(5));
    let has_range = total - n_inputs >= 2 && rng.random_bool(0.4);
    let n_functions = total - n_inputs - usize::from(has_range);

    let mut spec = ModelSpec::new(format!("Generated {seed}"));
    let mut scalars: Vec<Ident> = Vec::new();
    for k in 0..n_inputs {
        let id = Ident::new(format!("i{k}"));
        let label = format!("{} {k}", WORDS[rng.random_range(0..WORDS.len())]);
        let caption = rng.random_bool(0.2).then(|| format!("Add {label}"));
        spec.input_section.push(InputDecl::Scalar(InputItem {
            id: id.clone(),
            label,
            caption,
            value: Decimal::from_int(rng.random_range(-100..=100)),
            constant: rng.random_bool(0.1),
        }));
        scalars.push(id);
    }
    let range = has_range.then(|| {
        let id = Ident::new("r0");
        let members = (0..rng.random_range(1..=4))
            .map(|j| RangeMember {
                label: format!("Item {j}"),
                value: Decimal::from_int(rng.random_range(-100..=100)),
            })
            .collect();
        spec.input_section.push(InputDecl::Range(InputRange {
            id: id.clone(),
            label: "Expenses".into(),
            members,
        }));
        id
    });

    for k in 0..n_functions {
        let id = Ident::new(format!("f{k}"));
        let label = format!("{} total {k}", WORDS[rng.random_range(0..WORDS.len())]);
        let caption = rng.random_bool(0.2).then(|| format!("Less {label}"));
        let mut g = ExprGen {
            rng: &mut rng,
            scalars: &scalars,
            range: range.as_ref(),
        };
        let body = g.expr(0);
        spec.functions.push(FunctionDef {
            id: id.clone(),
            label,
            caption,
            body,
        });
        scalars.push(id);
    }

    let functions: Vec<Ident> = spec.functions.iter().map(|f| f.id.clone()).collect();
    let blocks = if rng.random_bool(0.3) { 2 } else { 1 };
    for b in 0..blocks {
        let rows = (0..rng.random_range(1..=3))
            .map(|j| OutputRow {
                label: format!("Result {b}.{j}"),
                target: functions[rng.random_range(0..functions.len())].clone(),
            })
            .collect();
        spec.outputs.push(OutputBlock {
            title: format!("Summary {b}"),
            rows,
        });
    }
    spec
}

struct ExprGen<'a> {
    rng: &'a mut StdRng,
    scalars: &'a [Ident],
    range: Option<&'a Ident>,
}

impl ExprGen<'_> {
    fn reference(&mut self) -> Expr {
        Expr::Ref(self.scalars[self.rng.random_range(0..self.scalars.len())].clone())
    }

    fn literal(&mut self, nonzero: bool) -> Expr {
        loop {
            let v = self.rng.random_range(-3..=7i64);
            if !nonzero || v != 0 {
                return Expr::Literal(Decimal::from_int(v));
            }
        }
    }

    fn expr(&mut self, depth: usize) -> Expr {
        if depth >= 2 {
            return self.reference();
        }
        let roll = self.rng.random_range(0..100);
        match roll {
            0..35 => self.reference(),
            35..60 => {
                let op = if self.rng.random_bool(0.5) {
                    BinOp::Add
                } else {
                    BinOp::Sub
                };
                Expr::binary(op, self.expr(depth + 1), self.expr(depth + 1))
            }
            60..70 => {
                let lit = self.literal(false);
                Expr::binary(BinOp::Mul, self.expr(depth + 1), lit)
            }
            70..80 => {
                let lit = self.literal(true);
                Expr::binary(BinOp::Div, self.expr(depth + 1), lit)
            }
            80..90 if self.scalars.len() >= 2 => {
                let want = self.rng.random_range(2..=3).min(self.scalars.len());
                let mut picked: Vec<Ident> = Vec::new();
                while picked.len() < want {
                    let id = &self.scalars[self.rng.random_range(0..self.scalars.len())];
                    if !picked.contains(id) {
                        picked.push(id.clone());
                    }
                }
                Expr::Aggregate {
                    kind: AggregateKind::Sum,
                    args: picked.into_iter().map(Expr::Ref).collect(),
                }
            }
            90..95 if self.range.is_some() => Expr::Aggregate {
                kind: AggregateKind::Sum,
                args: vec![Expr::RangeRef(self.range.cloned().expect("checked"))],
            },
            95..100 => {
                let test = self.reference();
                let (a, b) = (self.expr(depth + 1), self.expr(depth + 1));
                let zero = Expr::Literal(Decimal::ZERO);
                Expr::Select(vec![
                    SelectOption {
                        guard: Guard {
                            op: CmpOp::Ge,
                            left: test.clone(),
                            right: zero.clone(),
                        },
                        value: a,
                    },
                    SelectOption {
                        guard: Guard {
                            op: CmpOp::Lt,
                            left: test,
                            right: zero,
                        },
                        value: b,
                    },
                ])
            }
            _ => self.reference(),
        }
    }
}

/// Model whose functions may reference each other in any direction, so it
/// may contain cycles. Every function also reads one input.
pub fn generate_graph_model(seed: u64) -> ModelSpec {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(2..=8usize);
    let mut spec = ModelSpec::new(format!("Graph {seed}"));
    spec.input_section.push(InputDecl::Scalar(InputItem {
        id: Ident::new("x"),
        label: "X".into(),
        caption: None,
        value: Decimal::from_int(1),
        constant: false,
    }));
    for k in 0..n {
        let mut body = Expr::reference("x");
        for _ in 0..rng.random_range(0..=2) {
            let j = rng.random_range(0..n);
            if j != k {
                body = Expr::binary(BinOp::Add, body, Expr::Ref(Ident::new(format!("f{j}"))));
            }
        }
        spec.functions.push(FunctionDef {
            id: Ident::new(format!("f{k}")),
            label: format!("F{k}"),
            caption: None,
            body,
        });
    }
    spec
}
