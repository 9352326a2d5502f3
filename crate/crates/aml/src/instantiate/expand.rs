//! Unrolling of `forall` blocks and sums into a flat linear programme.

use std::collections::HashMap;

use syntagm_solver::{FlatModel, Relation, Row, Sense, VarKind, Variable};

use super::env::DataEnvironment;
use super::eval::{model_diag, EResult, Evaluator, Lin, VarLayout};
use super::value::{Domain, Value};
use crate::ast::*;
use crate::diag::{sort_by_line, Code, Diagnostic};
use crate::semantics::TypedModel;
use crate::span::Span;

/// Source-level identity of one flat variable or row.
#[derive(Debug, Clone, PartialEq)]
pub struct NameEntry {
    /// Flat name, e.g. `x[1,A2]`.
    pub flat: String,
    /// Declared variable name or constraint label.
    pub source: String,
    pub indices: Vec<Value>,
    pub span: Span,
}

/// Two-way mapping between flat positions and source names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NameMap {
    pub variables: Vec<NameEntry>,
    pub constraints: Vec<NameEntry>,
    var_by_name: HashMap<String, usize>,
    row_by_name: HashMap<String, usize>,
}

impl NameMap {
    pub fn variable_position(&self, flat: &str) -> Option<usize> {
        self.var_by_name.get(flat).copied()
    }

    pub fn constraint_position(&self, flat: &str) -> Option<usize> {
        self.row_by_name.get(flat).copied()
    }

    fn push_var(&mut self, e: NameEntry) {
        self.var_by_name.insert(e.flat.clone(), self.variables.len());
        self.variables.push(e);
    }

    fn push_row(&mut self, e: NameEntry) {
        self.row_by_name.insert(e.flat.clone(), self.constraints.len());
        self.constraints.push(e);
    }
}

/// `name` or `name[v1,v2,...]`.
pub fn flat_name(base: &str, indices: &[Value]) -> String {
    if indices.is_empty() {
        base.to_string()
    } else {
        let parts: Vec<String> = indices.iter().map(Value::name_text).collect();
        format!("{base}[{}]", parts.join(","))
    }
}

/// Expansion stops collecting after this many diagnostics.
const MAX_DIAGNOSTICS: usize = 25;

/// Expands `typed` over `env` into a flat model.
pub fn expand(typed: &TypedModel, env: &DataEnvironment) -> Result<(FlatModel, NameMap), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut names = NameMap::default();
    let sense = match typed.ast.objective().map(|o| o.sense) {
        Some(ObjSense::Maximize) => Sense::Maximize,
        _ => Sense::Minimize,
    };
    let mut flat = FlatModel::new(sense);

    let layouts = match variables(typed, env, &mut flat, &mut names) {
        Ok(l) => l,
        Err(d) => return Err(d),
    };

    let mut ev = Evaluator::new(typed, env, &layouts);
    if let Some(obj) = typed.ast.objective() {
        match ev.num(&obj.expr) {
            Ok(lin) => {
                flat.objective.coeffs = lin.coeffs();
                flat.objective.constant = lin.constant;
                if let Some(l) = &obj.label {
                    flat.objective.name = l.name.clone();
                }
            }
            Err(d) => diags.push(d),
        }
    }

    let mut rows = RowSink { flat: &mut flat, names: &mut names, seen: HashMap::new() };
    for item in typed.ast.constraints() {
        if diags.len() >= MAX_DIAGNOSTICS {
            break;
        }
        if let Err(d) = constraint_item(&mut ev, item, None, &mut Vec::new(), &mut rows) {
            diags.push(d);
        }
    }

    if diags.is_empty() {
        Ok((flat, names))
    } else {
        sort_by_line(&mut diags);
        Err(diags)
    }
}

fn variables(
    typed: &TypedModel,
    env: &DataEnvironment,
    flat: &mut FlatModel,
    names: &mut NameMap,
) -> Result<HashMap<String, VarLayout>, Vec<Diagnostic>> {
    let mut layouts = HashMap::new();
    let mut diags = Vec::new();
    for d in typed.ast.declarations() {
        let DeclKind::Dvar { ty, indices, bounds } = &d.kind else { continue };
        let name = &d.name.name;
        let mut ev = Evaluator::new(typed, env, &layouts);
        let resolved: EResult<(Vec<Domain>, Option<(f64, f64)>)> = (|| {
            let mut dims = Vec::new();
            for ix in indices {
                dims.push(ev.domain(ix)?.into_owned());
            }
            let b = match bounds {
                Some((lo, hi)) => Some((ev.const_num(lo)?, ev.const_num(hi)?)),
                None => None,
            };
            Ok((dims, b))
        })();
        let (dims, explicit) = match resolved {
            Ok(r) => r,
            Err(e) => {
                diags.push(e);
                continue;
            }
        };
        let (kind, mut lo, mut hi) = match ty {
            ScalarType::Float => (VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY),
            ScalarType::FloatPlus => (VarKind::Continuous, 0.0, f64::INFINITY),
            ScalarType::Int => (VarKind::Integer, f64::NEG_INFINITY, f64::INFINITY),
            ScalarType::IntPlus => (VarKind::Integer, 0.0, f64::INFINITY),
            _ => (VarKind::Binary, 0.0, 1.0),
        };
        let mut kind = kind;
        if let Some((l, h)) = explicit {
            lo = lo.max(l);
            hi = hi.min(h);
            if kind == VarKind::Binary && (lo, hi) != (0.0, 1.0) {
                kind = VarKind::Integer;
            }
        }
        if lo > hi {
            diags.push(model_diag(
                Code::DvarBoundsEmpty,
                d.name.span,
                &[("name", name), ("lo", &format!("{lo}")), ("hi", &format!("{hi}"))],
            ));
            continue;
        }
        let offset = flat.variables.len();
        for combo in cartesian(&dims) {
            let flat_name = flat_name(name, &combo);
            flat.add_variable(Variable::new(flat_name.clone(), kind, lo, hi));
            names.push_var(NameEntry { flat: flat_name, source: name.clone(), indices: combo, span: d.name.span });
        }
        layouts.insert(name.clone(), VarLayout { offset, dims });
    }
    if diags.is_empty() {
        Ok(layouts)
    } else {
        Err(diags)
    }
}

/// All index combinations in row-major order; one empty combination for no dimensions.
fn cartesian(dims: &[Domain]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in dims {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for prefix in &out {
            for v in d.elements() {
                let mut c = prefix.clone();
                c.push(v.clone());
                next.push(c);
            }
        }
        out = next;
    }
    out
}

struct RowSink<'m> {
    flat: &'m mut FlatModel,
    names: &'m mut NameMap,
    seen: HashMap<String, usize>,
}

impl RowSink<'_> {
    fn push(&mut self, label: &str, indices: Vec<Value>, span: Span, lin: Lin, relation: Relation) {
        let mut name = flat_name(label, &indices);
        let n = self.seen.entry(name.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            name = format!("{name}#{n}");
        }
        self.flat.add_row(Row::new(name.clone(), lin.coeffs(), relation, -lin.constant));
        self.names.push_row(NameEntry { flat: name, source: label.to_string(), indices, span });
    }
}

fn constraint_item(
    ev: &mut Evaluator<'_>,
    item: &ConstraintItem,
    inherited: Option<&str>,
    indices: &mut Vec<Value>,
    rows: &mut RowSink<'_>,
) -> EResult<()> {
    match item {
        ConstraintItem::Constraint { label, expr, span } => {
            let label = label.as_ref().map(|l| l.name.as_str()).or(inherited).unwrap_or("c");
            let ExprKind::Compare { first, rest } = &expr.kind else {
                return Err(model_diag(Code::NotAConstraint, expr.span, &[("label", label)]));
            };
            let [(op, rhs)] = rest.as_slice() else {
                return Err(model_diag(Code::ChainedComparison, expr.span, &[]));
            };
            let relation = match op {
                CmpOp::Le => Relation::Le,
                CmpOp::Ge => Relation::Ge,
                CmpOp::Eq => Relation::Eq,
                CmpOp::Lt | CmpOp::Gt => return Err(model_diag(Code::StrictInequality, expr.span, &[("op", op.symbol())])),
                CmpOp::Ne => return Err(model_diag(Code::BadRelation, expr.span, &[("op", op.symbol())])),
            };
            let mut lin = ev.num(first)?;
            let r = ev.num(rhs)?;
            lin.add_scaled(&r, -1.0);
            rows.push(label, indices.clone(), *span, lin, relation);
            Ok(())
        }
        ConstraintItem::Forall { label, iterators, filter, body, .. } => {
            let own = label.as_ref().map(|l| l.name.as_str()).or(inherited);
            let unlabelled = body.iter().filter(|b| matches!(b, ConstraintItem::Constraint { label: None, .. })).count();
            let names: Vec<Option<String>> = {
                let mut k = 0;
                body.iter()
                    .map(|b| match (b, own) {
                        (ConstraintItem::Constraint { label: None, .. }, Some(l)) if unlabelled > 1 => {
                            k += 1;
                            Some(format!("{l}_{k}"))
                        }
                        _ => own.map(str::to_string),
                    })
                    .collect()
            };
            let depth = indices.len();
            let iter_names: Vec<&str> = iterators.iter().map(|i| i.name.name.as_str()).collect();
            let result = ev.for_each(iterators, filter.as_ref(), &mut |ev| {
                indices.truncate(depth);
                for n in &iter_names {
                    let v = ev.locals.iter().rev().find(|(m, _)| m == n).map(|(_, v)| v.clone()).expect("iterator bound");
                    indices.push(v);
                }
                for (b, name) in body.iter().zip(&names) {
                    constraint_item(ev, b, name.as_deref(), indices, rows)?;
                }
                Ok(())
            });
            indices.truncate(depth);
            result
        }
    }
}
