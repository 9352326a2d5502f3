//! Test helpers: a direct tree-walking evaluator used as an oracle for the
//! expander, and a generator of random well-formed linear models.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use syntagm_aml::ast::{BinOp, CmpOp, ConstraintItem, DeclKind, Expr, ExprKind, Iterator as It, ModelAst};
use syntagm_aml::instantiate::{flat_name, DataEnvironment, Value};

#[derive(Debug, Clone)]
enum V {
    Num(f64),
    Str(String),
    Tuple(Vec<Value>),
    Bool(bool),
}

/// Evaluates model expressions without any folding: every dvar is looked up
/// in a concrete point and arithmetic happens on plain `f64`s.
pub struct Reference<'a> {
    env: &'a DataEnvironment,
    point: &'a HashMap<String, f64>,
    dvars: HashSet<String>,
    fields: HashMap<String, usize>,
    locals: Vec<(String, Value)>,
}

impl<'a> Reference<'a> {
    pub fn new(model: &ModelAst, env: &'a DataEnvironment, point: &'a HashMap<String, f64>) -> Self {
        let mut dvars = HashSet::new();
        let mut fields = HashMap::new();
        for d in model.declarations() {
            match &d.kind {
                DeclKind::Dvar { .. } => {
                    dvars.insert(d.name.name.clone());
                }
                DeclKind::Tuple { fields: fs } => {
                    for (k, f) in fs.iter().enumerate() {
                        fields.insert(f.name.name.clone(), k);
                    }
                }
                _ => {}
            }
        }
        Reference { env, point, dvars, fields, locals: Vec::new() }
    }

    pub fn objective(&mut self, model: &ModelAst) -> f64 {
        self.num(&model.objective().unwrap().expr)
    }

    /// `lhs - rhs` of every constraint instance, in expansion order.
    pub fn constraint_values(&mut self, model: &ModelAst) -> Vec<f64> {
        let mut out = Vec::new();
        for item in model.constraints() {
            self.item(item, &mut out);
        }
        out
    }

    fn item(&mut self, item: &ConstraintItem, out: &mut Vec<f64>) {
        match item {
            ConstraintItem::Constraint { expr, .. } => {
                let ExprKind::Compare { first, rest } = &expr.kind else { panic!("not a relation") };
                out.push(self.num(first) - self.num(&rest[0].1));
            }
            ConstraintItem::Forall { iterators, filter, body, .. } => {
                self.each(iterators, filter.as_ref(), &mut |me| {
                    for b in body {
                        me.item(b, out);
                    }
                });
            }
        }
    }

    fn each(&mut self, its: &[It], filter: Option<&Expr>, f: &mut dyn FnMut(&mut Self)) {
        if its.is_empty() {
            if filter.is_none_or(|c| self.truth(c)) {
                f(self);
            }
            return;
        }
        for v in self.domain(&its[0].domain) {
            self.locals.push((its[0].name.name.clone(), v));
            self.each(&its[1..], filter, f);
            self.locals.pop();
        }
    }

    fn domain(&mut self, e: &Expr) -> Vec<Value> {
        match &e.kind {
            ExprKind::Name(n) => self.env.domain(n).unwrap().elements().to_vec(),
            ExprKind::Range(lo, hi) => {
                let (lo, hi) = (self.num(lo) as i64, self.num(hi) as i64);
                (lo..=hi).map(Value::Int).collect()
            }
            ExprKind::Paren(inner) => self.domain(inner),
            other => panic!("domain {other:?}"),
        }
    }

    fn num(&mut self, e: &Expr) -> f64 {
        match self.eval(e) {
            V::Num(x) => x,
            V::Bool(b) => b as u8 as f64,
            other => panic!("expected a number, got {other:?}"),
        }
    }

    fn truth(&mut self, e: &Expr) -> bool {
        match self.eval(e) {
            V::Bool(b) => b,
            V::Num(x) => x != 0.0,
            other => panic!("expected a condition, got {other:?}"),
        }
    }

    fn value(&mut self, e: &Expr) -> Value {
        match self.eval(e) {
            V::Num(x) if x.fract() == 0.0 => Value::Int(x as i64),
            V::Num(x) => Value::Float(x),
            V::Str(s) => Value::Str(s),
            V::Tuple(t) => Value::Tuple(t),
            V::Bool(b) => Value::Int(b as i64),
        }
    }

    fn lift(v: &Value) -> V {
        match v {
            Value::Int(i) => V::Num(*i as f64),
            Value::Float(f) => V::Num(*f),
            Value::Str(s) => V::Str(s.clone()),
            Value::Tuple(t) => V::Tuple(t.clone()),
        }
    }

    fn eval(&mut self, e: &Expr) -> V {
        match &e.kind {
            ExprKind::Int(i) => V::Num(*i as f64),
            ExprKind::Float(f) => V::Num(*f),
            ExprKind::Str(s) => V::Str(s.clone()),
            ExprKind::Name(n) => {
                if let Some((_, v)) = self.locals.iter().rev().find(|(k, _)| k == n) {
                    return Self::lift(v);
                }
                if self.dvars.contains(n) {
                    return V::Num(self.point[n]);
                }
                Self::lift(self.env.scalar(n).unwrap_or_else(|| panic!("no scalar {n}")))
            }
            ExprKind::Index { base, indices } => {
                let idx: Vec<Value> = indices.iter().map(|i| self.value(i)).collect();
                if self.dvars.contains(&base.name) {
                    let key = flat_name(&base.name, &idx);
                    V::Num(*self.point.get(&key).unwrap_or_else(|| panic!("no variable {key}")))
                } else {
                    Self::lift(self.env.array(&base.name).unwrap().get(&idx).unwrap())
                }
            }
            ExprKind::Field { base, field } => match self.eval(base) {
                V::Tuple(t) => Self::lift(&t[self.fields[&field.name]]),
                other => panic!("field of {other:?}"),
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let (a, b) = (self.num(lhs), self.num(rhs));
                V::Num(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                })
            }
            ExprKind::Neg(x) => V::Num(-self.num(x)),
            ExprKind::Paren(x) => self.eval(x),
            ExprKind::Sum { iterators, filter, body } => {
                let mut total = 0.0;
                self.each(iterators, filter.as_deref(), &mut |me| total += me.num(body));
                V::Num(total)
            }
            ExprKind::Compare { first, rest } => {
                let mut left = self.eval(first);
                for (op, r) in rest {
                    let right = self.eval(r);
                    let ok = match (&left, &right) {
                        (V::Num(a), V::Num(b)) => match op {
                            CmpOp::Le => a <= b,
                            CmpOp::Ge => a >= b,
                            CmpOp::Eq => a == b,
                            CmpOp::Lt => a < b,
                            CmpOp::Gt => a > b,
                            CmpOp::Ne => a != b,
                        },
                        (V::Str(a), V::Str(b)) => match op {
                            CmpOp::Eq => a == b,
                            CmpOp::Ne => a != b,
                            _ => panic!("string order"),
                        },
                        _ => panic!("cannot compare"),
                    };
                    if !ok {
                        return V::Bool(false);
                    }
                    left = right;
                }
                V::Bool(true)
            }
            ExprKind::And(a, b) => V::Bool(self.truth(a) && self.truth(b)),
            ExprKind::Call { func, args } => {
                let xs: Vec<f64> = match func.name.as_str() {
                    "card" => return V::Num(self.domain(&args[0]).len() as f64),
                    _ => args.iter().map(|a| self.num(a)).collect(),
                };
                V::Num(match func.name.as_str() {
                    "abs" => xs[0].abs(),
                    "floor" => xs[0].floor(),
                    "ceil" => xs[0].ceil(),
                    "round" => xs[0].round(),
                    "min" => xs.iter().copied().fold(f64::INFINITY, f64::min),
                    "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    other => panic!("function {other}"),
                })
            }
            other => panic!("unexpected expression {other:?}"),
        }
    }
}

// ---- random linear models ----

/// A generated model together with its data and facts known by construction.
#[derive(Debug, Clone)]
pub struct GenModel {
    pub model: String,
    pub data_assignments: Vec<String>,
    /// Row count implied by the forall domains.
    pub expected_rows: usize,
    pub n_i: usize,
    pub n_j: usize,
    pub n_comments: usize,
}

impl GenModel {
    pub fn data(&self) -> String {
        self.data_assignments.join("\n") + "\n"
    }
}

#[derive(Debug, Clone, Copy)]
struct Scope {
    i: bool,
    j: bool,
}

fn literal() -> BoxedStrategy<String> {
    prop_oneof![
        (0i64..10).prop_map(|v| v.to_string()),
        (1i64..40).prop_map(|v| format!("{}.5", v / 4)),
    ]
    .boxed()
}

/// Constant expressions: literals, parameters and arithmetic over them.
fn constant(scope: Scope, depth: u32) -> BoxedStrategy<String> {
    let mut leaves = vec![literal(), Just("s".to_string()).boxed()];
    if scope.i {
        leaves.push(Just("p[i]".to_string()).boxed());
    }
    if scope.i && scope.j {
        leaves.push(Just("q[i][j]".to_string()).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves).boxed();
    if depth == 0 {
        return leaf;
    }
    let sub = constant(scope, depth - 1);
    prop_oneof![
        3 => leaf,
        1 => (sub.clone(), sub.clone(), prop_oneof![Just("+"), Just("-"), Just("*")])
            .prop_map(|(a, b, op)| format!("{a} {op} {b}")),
        1 => sub.clone().prop_map(|a| format!("({a})")),
        1 => sub.clone().prop_map(|a| format!("-{a}")),
        1 => (sub.clone(), 1i64..5).prop_map(|(a, k)| format!("({a}) / {k}")),
        1 => sub.clone().prop_map(|a| format!("abs({a})")),
        1 => (sub.clone(), sub).prop_map(|(a, b)| format!("max({a}, {b})")),
    ]
    .boxed()
}

fn variable(scope: Scope, n_i: usize, n_j: usize) -> BoxedStrategy<String> {
    let mut vs = vec![
        Just("z".to_string()).boxed(),
        (1..=n_i).prop_map(|k| format!("x[{k}]")).boxed(),
        ((1..=n_i), (1..=n_j)).prop_map(|(a, b)| format!("y[{a}][{b}]")).boxed(),
    ];
    if scope.i {
        vs.push(Just("x[i]".to_string()).boxed());
    }
    if scope.i && scope.j {
        vs.push(Just("y[i][j]".to_string()).boxed());
    }
    proptest::strategy::Union::new(vs).boxed()
}

/// Expressions affine in the decision variables.
fn linear(scope: Scope, n_i: usize, n_j: usize, depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        2 => variable(scope, n_i, n_j),
        1 => constant(scope, 1),
        2 => (constant(scope, 1), variable(scope, n_i, n_j)).prop_map(|(c, v)| format!("{c} * {v}")),
    ]
    .boxed();
    if depth == 0 {
        return leaf;
    }
    let sub = linear(scope, n_i, n_j, depth - 1);
    let mut options: Vec<(u32, BoxedStrategy<String>)> = vec![
        (3, leaf),
        (2, (sub.clone(), sub.clone(), prop_oneof![Just("+"), Just("-")]).prop_map(|(a, b, op)| format!("{a} {op} {b}")).boxed()),
        (1, sub.clone().prop_map(|a| format!("({a})")).boxed()),
        (1, sub.clone().prop_map(|a| format!("-({a})")).boxed()),
        (1, (constant(scope, 1), sub.clone()).prop_map(|(c, a)| format!("({c}) * ({a})")).boxed()),
        (1, (sub.clone(), 1i64..5).prop_map(|(a, k)| format!("({a}) / {k}")).boxed()),
    ];
    if !scope.j {
        let inner = linear(Scope { i: scope.i, j: true }, n_i, n_j, depth - 1);
        options.push((2, inner.prop_map(|b| format!("sum (j in J) ({b})")).boxed()));
    }
    if !scope.i {
        let inner = linear(Scope { i: true, j: scope.j }, n_i, n_j, depth - 1);
        options.push((
            1,
            (inner, 1..=n_i as i64).prop_map(|(b, k)| format!("sum (i in I : i >= {k}) ({b})")).boxed(),
        ));
    }
    proptest::strategy::Union::new_weighted(options).boxed()
}

fn relation() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("<="), Just(">="), Just("==")]
}

fn number_list(n: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(-20i64..20, n).prop_map(|v| format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
}

pub fn gen_model() -> impl Strategy<Value = GenModel> {
    (1usize..4, 1usize..4).prop_flat_map(|(n_i, n_j)| {
        let none = Scope { i: false, j: false };
        let over_i = Scope { i: true, j: false };
        let over_ij = Scope { i: true, j: true };
        let objective = linear(none, n_i, n_j, 2);
        let scalar_rows = proptest::collection::vec((linear(none, n_i, n_j, 2), relation(), linear(none, n_i, n_j, 1)), 0..3);
        let i_rows = proptest::collection::vec((linear(over_i, n_i, n_j, 2), relation(), linear(over_i, n_i, n_j, 1)), 0..3);
        let ij_rows = proptest::collection::vec((linear(over_ij, n_i, n_j, 1), relation(), constant(over_ij, 1)), 0..2);
        let sense = prop_oneof![Just("minimize"), Just("maximize")];
        let p = number_list(n_i);
        let q = proptest::collection::vec(number_list(n_j), n_i).prop_map(|rows| format!("[{}]", rows.join(", ")));
        let s = -9i64..10;
        let comments = proptest::collection::vec(proptest::option::of("[a-z ]{1,12}"), 8);
        (Just((n_i, n_j)), objective, scalar_rows, i_rows, ij_rows, sense, p, q, s, comments)
    })
    .prop_map(|((n_i, n_j), objective, scalar_rows, i_rows, ij_rows, sense, p, q, s, comments)| {
        let mut lines = vec![
            "int nI = ...;".to_string(),
            "int nJ = ...;".to_string(),
            "range I = 1..nI;".to_string(),
            "range J = 1..nJ;".to_string(),
            "float p[I] = ...;".to_string(),
            "float q[I][J] = ...;".to_string(),
            "float s = ...;".to_string(),
            "dvar float x[I];".to_string(),
            "dvar float+ y[I][J];".to_string(),
            "dvar float z in -100..100;".to_string(),
            format!("{sense} obj: {objective} + 0 * z + sum (i in I) 0 * x[i] + sum (i in I, j in J) 0 * y[i][j] + 0 * s + sum (i in I) 0 * p[i] + sum (i in I, j in J) 0 * q[i][j];"),
            "subject to {".to_string(),
        ];
        let mut k = 0;
        let mut expected_rows = 0;
        for (a, op, b) in scalar_rows {
            k += 1;
            lines.push(format!("  r{k}: {a} {op} {b};"));
            expected_rows += 1;
        }
        for (a, op, b) in i_rows {
            k += 1;
            lines.push(format!("  forall (i in I) r{k}: {a} {op} {b};"));
            expected_rows += n_i;
        }
        for (a, op, b) in ij_rows {
            k += 1;
            lines.push(format!("  forall (i in I, j in J) {{\n    r{k}: {a} {op} {b};\n  }}"));
            expected_rows += n_i * n_j;
        }
        lines.push("}".to_string());

        // sprinkle comments before the first lines, alternating line and block style
        let mut n_comments = 0;
        let mut out = Vec::new();
        for (idx, line) in lines.into_iter().enumerate() {
            if let Some(Some(c)) = comments.get(idx) {
                n_comments += 1;
                out.push(if idx % 2 == 0 { format!("// note {c}") } else { format!("/* note {c} */") });
            }
            out.push(line);
        }
        GenModel {
            model: out.join("\n") + "\n",
            data_assignments: vec![
                format!("nI = {n_i};"),
                format!("nJ = {n_j};"),
                format!("p = {p};"),
                format!("q = {q};"),
                format!("s = {s};"),
            ],
            expected_rows,
            n_i,
            n_j,
            n_comments,
        }
    })
}
