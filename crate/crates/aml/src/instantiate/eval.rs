//! Expression evaluation over bound data: constants fold to numbers and
//! decision-variable terms accumulate into sparse linear forms.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use super::env::{Binding, DataEnvironment};
use super::value::{Domain, Value};
use crate::ast::*;
use crate::diag::{Code, Diagnostic, SourceFile};
use crate::semantics::{ExprType, TypedModel};
use crate::span::Span;

pub(crate) type EResult<T> = Result<T, Diagnostic>;

/// `constant + sum_j terms[j] * x_j`
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Lin {
    pub terms: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl Lin {
    pub fn constant(c: f64) -> Lin {
        Lin { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(j: usize) -> Lin {
        Lin { terms: BTreeMap::from([(j, 1.0)]), constant: 0.0 }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_scaled(&mut self, other: &Lin, k: f64) {
        self.constant += k * other.constant;
        for (&j, &c) in &other.terms {
            *self.terms.entry(j).or_insert(0.0) += k * c;
        }
    }

    pub fn scale(mut self, k: f64) -> Lin {
        self.constant *= k;
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self
    }

    /// Terms with zero coefficients removed, in column order.
    pub fn coeffs(&self) -> Vec<(usize, f64)> {
        self.terms.iter().filter(|(_, &c)| c != 0.0).map(|(&j, &c)| (j, c)).collect()
    }
}

pub(crate) enum Val {
    Num(Lin),
    Str(String),
    Tuple(Vec<Value>),
    Bool(bool),
}

/// Where the flat columns of one decision variable start, and its index sets.
#[derive(Debug, Clone)]
pub(crate) struct VarLayout {
    pub offset: usize,
    pub dims: Vec<Domain>,
}

pub(crate) struct Evaluator<'a> {
    pub typed: &'a TypedModel,
    pub env: &'a DataEnvironment,
    pub vars: &'a HashMap<String, VarLayout>,
    pub locals: Vec<(String, Value)>,
}

pub(crate) fn model_diag(code: Code, span: Span, args: &[(&str, &str)]) -> Diagnostic {
    Diagnostic::at(code, span, args).in_file(SourceFile::Model)
}

fn internal(span: Span, what: &str) -> Diagnostic {
    model_diag(Code::Unsupported, span, &[("construct", what)])
}

impl<'a> Evaluator<'a> {
    pub fn new(typed: &'a TypedModel, env: &'a DataEnvironment, vars: &'a HashMap<String, VarLayout>) -> Self {
        Evaluator { typed, env, vars, locals: Vec::new() }
    }

    fn local(&self, name: &str) -> Option<&Value> {
        self.locals.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn integral(&self, e: &Expr) -> bool {
        matches!(self.typed.type_of(e), Some(ExprType::Num { integral: true, .. }))
    }

    pub fn num(&mut self, e: &Expr) -> EResult<Lin> {
        match self.eval(e)? {
            Val::Num(l) => Ok(l),
            _ => Err(internal(e.span, "A non-numeric value in arithmetic")),
        }
    }

    pub fn const_num(&mut self, e: &Expr) -> EResult<f64> {
        let l = self.num(e)?;
        if l.is_constant() {
            Ok(l.constant)
        } else {
            Err(model_diag(Code::DvarInDeclaration, e.span, &[("name", &crate::printer::expr(e))]))
        }
    }

    pub fn const_int(&mut self, e: &Expr) -> EResult<i64> {
        let v = self.const_num(e)?;
        if v.fract() != 0.0 || !v.is_finite() {
            return Err(model_diag(Code::RangeNonInteger, e.span, &[]));
        }
        Ok(v as i64)
    }

    pub fn truth(&mut self, e: &Expr) -> EResult<bool> {
        match self.eval(e)? {
            Val::Bool(b) => Ok(b),
            _ => Err(model_diag(Code::FilterNotBoolean, e.span, &[("found", "a value")])),
        }
    }

    /// Evaluates an index or element expression to a concrete value.
    pub fn value(&mut self, e: &Expr) -> EResult<Value> {
        let integral = self.integral(e);
        match self.eval(e)? {
            Val::Num(l) if l.is_constant() => {
                let c = l.constant;
                Ok(if integral && c.fract() == 0.0 { Value::Int(c as i64) } else { Value::Float(c) })
            }
            Val::Num(_) => Err(model_diag(Code::VariableIndex, e.span, &[])),
            Val::Str(s) => Ok(Value::Str(s)),
            Val::Tuple(t) => Ok(Value::Tuple(t)),
            Val::Bool(_) => Err(internal(e.span, "A comparison used as a value")),
        }
    }

    fn from_value(v: &Value) -> Val {
        match v {
            Value::Int(i) => Val::Num(Lin::constant(*i as f64)),
            Value::Float(f) => Val::Num(Lin::constant(*f)),
            Value::Str(s) => Val::Str(s.clone()),
            Value::Tuple(t) => Val::Tuple(t.clone()),
        }
    }

    pub fn domain(&mut self, e: &Expr) -> EResult<Cow<'a, Domain>> {
        match &e.kind {
            ExprKind::Range(lo, hi) => {
                let lo = self.const_int(lo)?;
                let hi = self.const_int(hi)?;
                Ok(Cow::Owned(Domain::range(lo, hi)))
            }
            ExprKind::Name(n) => match self.env.get(n) {
                Some(Binding::Domain(d)) => Ok(Cow::Borrowed(d)),
                _ => Err(model_diag(Code::BadIteratorDomain, e.span, &[("name", n)])),
            },
            _ => Err(model_diag(Code::BadIteratorDomain, e.span, &[("name", &crate::printer::expr(e))])),
        }
    }

    /// Runs `f` once per binding of `its` (in nesting order) that passes `filter`.
    pub fn for_each(
        &mut self,
        its: &[Iterator],
        filter: Option<&Expr>,
        f: &mut dyn FnMut(&mut Self) -> EResult<()>,
    ) -> EResult<()> {
        let Some((first, rest)) = its.split_first() else {
            if let Some(c) = filter {
                if !self.truth(c)? {
                    return Ok(());
                }
            }
            return f(self);
        };
        let dom = self.domain(&first.domain)?;
        for v in dom.elements() {
            self.locals.push((first.name.name.clone(), v.clone()));
            let r = self.for_each(rest, filter, f);
            self.locals.pop();
            r?;
        }
        Ok(())
    }

    /// Row-major offset of `indices` within `dims`.
    fn offset(&mut self, name: &str, dims: &[Domain], indices: &[Expr]) -> EResult<usize> {
        let texts = self.typed.symbols.get(name).map(|s| s.index_domains.clone()).unwrap_or_default();
        let mut off = 0usize;
        for (k, (dim, idx)) in dims.iter().zip(indices).enumerate() {
            let v = self.value(idx)?;
            let Some(p) = dim.position(&v) else {
                let value = v.to_string();
                return Err(match dim.bounds() {
                    Some((lo, hi)) => model_diag(
                        Code::IndexOutOfRange,
                        idx.span,
                        &[("value", &value), ("lo", &lo.to_string()), ("hi", &hi.to_string()), ("name", name)],
                    ),
                    None => {
                        let domain = texts.get(k).map_or("?", |t| t.text.as_str());
                        model_diag(Code::UnknownSetElement, idx.span, &[("value", &value), ("domain", domain), ("name", name)])
                    }
                });
            };
            off = off * dim.len() + p;
        }
        Ok(off)
    }

    pub fn eval(&mut self, e: &Expr) -> EResult<Val> {
        use ExprKind::*;
        match &e.kind {
            Int(v) => Ok(Val::Num(Lin::constant(*v as f64))),
            Float(v) => Ok(Val::Num(Lin::constant(*v))),
            Str(s) => Ok(Val::Str(s.clone())),
            Name(n) => {
                if let Some(v) = self.local(n) {
                    return Ok(Self::from_value(v));
                }
                if let Some(layout) = self.vars.get(n) {
                    return Ok(Val::Num(Lin::var(layout.offset)));
                }
                match self.env.get(n) {
                    Some(Binding::Scalar(v)) => Ok(Self::from_value(v)),
                    _ => Err(internal(e.span, &format!("Using '{n}' as a value"))),
                }
            }
            Index { base, indices } => {
                let name = &base.name;
                if let Some(layout) = self.vars.get(name) {
                    let off = self.offset(name, &layout.dims, indices)?;
                    return Ok(Val::Num(Lin::var(layout.offset + off)));
                }
                match self.env.get(name) {
                    Some(Binding::Array(arr)) => {
                        let off = self.offset(name, &arr.dims, indices)?;
                        Ok(Self::from_value(&arr.values[off]))
                    }
                    _ => Err(model_diag(Code::NotIndexable, base.span, &[("name", name)])),
                }
            }
            Field { base, field } => {
                let Some(ExprType::Tuple(t)) = self.typed.type_of(base).cloned() else {
                    return Err(internal(e.span, "Field access on a non-tuple"));
                };
                let pos = self
                    .typed
                    .symbols
                    .get(&t)
                    .and_then(|s| s.fields.iter().position(|(n, _)| *n == field.name))
                    .ok_or_else(|| internal(field.span, "An unknown tuple field"))?;
                match self.eval(base)? {
                    Val::Tuple(items) => items.get(pos).map(Self::from_value).ok_or_else(|| internal(field.span, "A short tuple")),
                    _ => Err(internal(e.span, "Field access on a non-tuple")),
                }
            }
            Binary { op, lhs, rhs } => {
                let a = self.num(lhs)?;
                let b = self.num(rhs)?;
                let out = match op {
                    BinOp::Add => {
                        let mut a = a;
                        a.add_scaled(&b, 1.0);
                        a
                    }
                    BinOp::Sub => {
                        let mut a = a;
                        a.add_scaled(&b, -1.0);
                        a
                    }
                    BinOp::Mul if a.is_constant() => b.scale(a.constant),
                    BinOp::Mul if b.is_constant() => a.scale(b.constant),
                    BinOp::Mul => return Err(model_diag(Code::Nonlinear, e.span, &[])),
                    BinOp::Div if !b.is_constant() => return Err(model_diag(Code::DivisionByVariable, rhs.span, &[])),
                    BinOp::Div if b.constant == 0.0 => return Err(model_diag(Code::DivisionByZero, rhs.span, &[])),
                    BinOp::Div => a.scale(1.0 / b.constant),
                };
                Ok(Val::Num(out))
            }
            Neg(inner) => Ok(Val::Num(self.num(inner)?.scale(-1.0))),
            Paren(inner) => self.eval(inner),
            Sum { iterators, filter, body } => {
                let mut acc = Lin::default();
                self.for_each(iterators, filter.as_deref(), &mut |ev| {
                    let term = ev.num(body)?;
                    acc.add_scaled(&term, 1.0);
                    Ok(())
                })?;
                Ok(Val::Num(acc))
            }
            Compare { first, rest } => {
                let mut lhs = self.eval(first)?;
                for (op, r) in rest {
                    let rhs = self.eval(r)?;
                    if !compare(*op, &lhs, &rhs).ok_or_else(|| internal(e.span, "A comparison of incompatible values"))? {
                        return Ok(Val::Bool(false));
                    }
                    lhs = rhs;
                }
                Ok(Val::Bool(true))
            }
            And(l, r) => Ok(Val::Bool(self.truth(l)? && self.truth(r)?)),
            Call { func, args } => self.call(e, func, args),
            Range(..) | ArrayLit(_) | SetLit(_) | TupleLit(_) => Err(internal(e.span, "A literal inside an expression")),
        }
    }

    fn call(&mut self, e: &Expr, func: &Ident, args: &[Expr]) -> EResult<Val> {
        if func.name == "card" {
            let d = self.domain(&args[0])?;
            return Ok(Val::Num(Lin::constant(d.len() as f64)));
        }
        let mut xs = Vec::with_capacity(args.len());
        for a in args {
            let l = self.num(a)?;
            if !l.is_constant() {
                return Err(model_diag(Code::Nonlinear, e.span, &[]));
            }
            xs.push(l.constant);
        }
        let v = match func.name.as_str() {
            "abs" => xs[0].abs(),
            "floor" => xs[0].floor(),
            "ceil" => xs[0].ceil(),
            "round" => xs[0].round(),
            "min" => xs.iter().copied().fold(f64::INFINITY, f64::min),
            "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            other => return Err(model_diag(Code::Unsupported, func.span, &[("construct", &format!("Function '{other}'"))])),
        };
        Ok(Val::Num(Lin::constant(v)))
    }
}

fn compare(op: CmpOp, a: &Val, b: &Val) -> Option<bool> {
    use std::cmp::Ordering;
    let ord = match (a, b) {
        (Val::Num(x), Val::Num(y)) if x.is_constant() && y.is_constant() => x.constant.partial_cmp(&y.constant)?,
        (Val::Str(x), Val::Str(y)) => x.cmp(y),
        (Val::Tuple(x), Val::Tuple(y)) => {
            return match op {
                CmpOp::Eq => Some(x == y),
                CmpOp::Ne => Some(x != y),
                _ => None,
            }
        }
        _ => return None,
    };
    Some(match op {
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ne => ord != Ordering::Equal,
    })
}
