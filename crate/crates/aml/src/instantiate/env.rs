//! Binding data to a typed model.

use std::collections::{BTreeMap, HashMap};

use super::eval::Evaluator;
use super::value::{Domain, Value};
use crate::ast::*;
use crate::diag::{sort_by_line, Code, Diagnostic, SourceFile};
use crate::semantics::{ElemTy, TypedModel};
use crate::span::Span;

/// A parameter array in row-major order over its index sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayValue {
    pub dims: Vec<Domain>,
    pub values: Vec<Value>,
}

impl ArrayValue {
    pub fn shape(&self) -> Vec<usize> {
        self.dims.iter().map(Domain::len).collect()
    }

    /// Element at the given index values, if every value belongs to its index set.
    pub fn get(&self, index: &[Value]) -> Option<&Value> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut off = 0;
        for (d, v) in self.dims.iter().zip(index) {
            off = off * d.len() + d.position(v)?;
        }
        self.values.get(off)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Scalar(Value),
    Array(ArrayValue),
    /// Sets and ranges.
    Domain(Domain),
}

/// Concrete values for every parameter, set and range of a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataEnvironment {
    bindings: BTreeMap<String, Binding>,
    /// Non-blocking findings, e.g. empty ranges.
    pub warnings: Vec<Diagnostic>,
}

impl DataEnvironment {
    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.bindings.get(name)
    }

    pub fn scalar(&self, name: &str) -> Option<&Value> {
        match self.bindings.get(name)? {
            Binding::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn array(&self, name: &str) -> Option<&ArrayValue> {
        match self.bindings.get(name)? {
            Binding::Array(a) => Some(a),
            _ => None,
        }
    }

    pub fn domain(&self, name: &str) -> Option<&Domain> {
        match self.bindings.get(name)? {
            Binding::Domain(d) => Some(d),
            _ => None,
        }
    }

    pub fn names(&self) -> impl std::iter::Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

/// Literal source of a binding: the data file, or a literal initializer in the model.
struct Source<'v> {
    value: DataValueRef<'v>,
    file: SourceFile,
}

enum DataValueRef<'v> {
    Borrowed(&'v DataValue),
    Owned(DataValue),
}

impl DataValueRef<'_> {
    fn get(&self) -> &DataValue {
        match self {
            DataValueRef::Borrowed(v) => v,
            DataValueRef::Owned(v) => v,
        }
    }
}

/// Converts a literal-only model expression into a data literal.
pub(crate) fn literal_of(e: &Expr) -> Option<DataValue> {
    let literal = match &e.kind {
        ExprKind::Int(v) => DataLiteral::Int(*v),
        ExprKind::Float(v) => DataLiteral::Float(*v),
        ExprKind::Str(s) => DataLiteral::Str(s.clone()),
        ExprKind::Neg(inner) => match inner.kind {
            ExprKind::Int(v) => DataLiteral::Int(-v),
            ExprKind::Float(v) => DataLiteral::Float(-v),
            _ => return None,
        },
        ExprKind::Range(lo, hi) => match (literal_of(lo)?.literal, literal_of(hi)?.literal) {
            (DataLiteral::Int(a), DataLiteral::Int(b)) => DataLiteral::Range(a, b),
            _ => return None,
        },
        ExprKind::ArrayLit(v) => DataLiteral::Array(v.iter().map(literal_of).collect::<Option<_>>()?),
        ExprKind::SetLit(v) => DataLiteral::Set(v.iter().map(literal_of).collect::<Option<_>>()?),
        ExprKind::TupleLit(v) => DataLiteral::Tuple(v.iter().map(literal_of).collect::<Option<_>>()?),
        _ => return None,
    };
    Some(DataValue { literal, span: e.span })
}

fn describe(v: &DataValue) -> &'static str {
    match v.literal {
        DataLiteral::Int(_) | DataLiteral::Float(_) | DataLiteral::Str(_) => "a scalar",
        DataLiteral::Array(_) => "an array",
        DataLiteral::Set(_) => "a set",
        DataLiteral::Tuple(_) => "a tuple",
        DataLiteral::Range(..) => "a range",
    }
}

fn shape_text(dims: &[usize]) -> String {
    if dims.is_empty() {
        "scalar".into()
    } else {
        dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
    }
}

struct Binder<'a> {
    typed: &'a TypedModel,
    data: &'a DataAst,
    env: DataEnvironment,
    diags: Vec<Diagnostic>,
}

/// Binds `data` to `typed`, checking element types and array shapes against
/// the concrete index sets.
pub fn bind_data(typed: &TypedModel, data: &DataAst) -> Result<DataEnvironment, Vec<Diagnostic>> {
    let mut b = Binder { typed, data, env: DataEnvironment::default(), diags: Vec::new() };
    for d in typed.ast.declarations() {
        b.declaration(d);
    }
    let Binder { mut env, mut diags, .. } = b;
    sort_by_line(&mut diags);
    if diags.iter().any(Diagnostic::is_error) {
        diags.extend(env.warnings);
        sort_by_line(&mut diags);
        return Err(diags);
    }
    env.warnings.extend(diags);
    sort_by_line(&mut env.warnings);
    Ok(env)
}

impl<'a> Binder<'a> {
    fn diag(&mut self, code: Code, span: Span, file: SourceFile, args: &[(&str, &str)]) {
        self.diags.push(Diagnostic::at(code, span, args).in_file(file));
    }

    fn source(&self, name: &str, init: &Init) -> Option<Source<'a>> {
        match init {
            Init::Value(e) => literal_of(e).map(|v| Source { value: DataValueRef::Owned(v), file: SourceFile::Model }),
            _ => self.data.get(name).map(|a| Source { value: DataValueRef::Borrowed(&a.value), file: SourceFile::Data }),
        }
    }

    fn with_eval<T>(&mut self, f: impl FnOnce(&mut Evaluator<'_>) -> Result<T, Diagnostic>) -> Option<T> {
        let vars = HashMap::new();
        let mut ev = Evaluator::new(self.typed, &self.env, &vars);
        match f(&mut ev) {
            Ok(v) => Some(v),
            Err(d) => {
                self.diags.push(d);
                None
            }
        }
    }

    fn declaration(&mut self, d: &Declaration) {
        let name = d.name.name.as_str();
        match &d.kind {
            DeclKind::Tuple { .. } | DeclKind::Dvar { .. } => {}
            DeclKind::Range { init } => {
                let Init::Value(Expr { kind: ExprKind::Range(lo, hi), .. }) = init else { return };
                let Some((lo, hi)) = self.with_eval(|ev| Ok((ev.const_int(lo)?, ev.const_int(hi)?))) else { return };
                if hi < lo {
                    self.diag(Code::RangeEmpty, d.name.span, SourceFile::Model, &[("name", name), ("lo", &lo.to_string()), ("hi", &hi.to_string())]);
                }
                self.env.bindings.insert(name.to_string(), Binding::Domain(Domain::range(lo, hi)));
            }
            DeclKind::Set { elem, init } => {
                let Some(src) = self.source(name, init) else { return };
                let elem = match elem {
                    SetElemType::Int => ElemTy::Int,
                    SetElemType::Float => ElemTy::Float,
                    SetElemType::String => ElemTy::Str,
                    SetElemType::Tuple(t) => ElemTy::Tuple(t.name.clone()),
                };
                if let Some(dom) = self.set_value(name, &elem, src.value.get(), src.file) {
                    self.env.bindings.insert(name.to_string(), Binding::Domain(dom));
                }
            }
            DeclKind::Param { ty, indices, init } => {
                if indices.is_empty() {
                    let value = match init {
                        Init::Value(e) if literal_of(e).is_none() => {
                            let computed = self.with_eval(|ev| ev.value(e));
                            computed.and_then(|v| self.coerce_computed(name, *ty, v, e.span))
                        }
                        _ => {
                            let Some(src) = self.source(name, init) else { return };
                            self.scalar(name, *ty, src.value.get(), src.file)
                        }
                    };
                    if let Some(v) = value {
                        self.env.bindings.insert(name.to_string(), Binding::Scalar(v));
                    }
                } else {
                    let mut dims = Vec::with_capacity(indices.len());
                    for ix in indices {
                        match self.with_eval(|ev| ev.domain(ix).map(|c| c.into_owned())) {
                            Some(dom) => dims.push(dom),
                            None => return,
                        }
                    }
                    let Some(src) = self.source(name, init) else { return };
                    if let Some(arr) = self.array(name, *ty, dims, src.value.get(), src.file) {
                        self.env.bindings.insert(name.to_string(), Binding::Array(arr));
                    }
                }
            }
        }
    }

    fn coerce_computed(&mut self, name: &str, ty: ScalarType, v: Value, span: Span) -> Option<Value> {
        let v = match (ty, v) {
            (ScalarType::Float | ScalarType::FloatPlus, Value::Int(i)) => Value::Float(i as f64),
            (_, v) => v,
        };
        if ty.is_nonnegative() && v.as_f64().is_some_and(|x| x < 0.0) {
            self.diag(Code::DataNegative, span, SourceFile::Model, &[("name", name), ("value", &v.to_string())]);
            return None;
        }
        Some(v)
    }

    /// Checks one scalar literal against a declared scalar type.
    fn scalar(&mut self, name: &str, ty: ScalarType, v: &DataValue, file: SourceFile) -> Option<Value> {
        let value = match (&v.literal, ty) {
            (DataLiteral::Int(i), ScalarType::Int | ScalarType::IntPlus) => Value::Int(*i),
            (DataLiteral::Int(i), ScalarType::Boolean) if *i == 0 || *i == 1 => Value::Int(*i),
            (DataLiteral::Int(i), ScalarType::Float | ScalarType::FloatPlus) => Value::Float(*i as f64),
            (DataLiteral::Float(f), ScalarType::Float | ScalarType::FloatPlus) => Value::Float(*f),
            (DataLiteral::Str(s), ScalarType::String) => Value::Str(s.clone()),
            (DataLiteral::Int(_) | DataLiteral::Float(_) | DataLiteral::Str(_), _) => {
                let value = crate::printer::data_value(v);
                self.diag(Code::DataType, v.span, file, &[("value", &value), ("name", name), ("expected", ty.keyword())]);
                return None;
            }
            _ => {
                let found = describe(v);
                self.diag(Code::DataDimension, v.span, file, &[("name", name), ("expected", "a scalar"), ("found", found)]);
                return None;
            }
        };
        if ty.is_nonnegative() && value.as_f64().is_some_and(|x| x < 0.0) {
            self.diag(Code::DataNegative, v.span, file, &[("name", name), ("value", &value.to_string())]);
            return None;
        }
        Some(value)
    }

    fn elem_value(&mut self, set: &str, elem: &ElemTy, v: &DataValue, file: SourceFile) -> Option<Value> {
        let found = match &v.literal {
            DataLiteral::Int(i) => match elem {
                ElemTy::Int => return Some(Value::Int(*i)),
                ElemTy::Float => return Some(Value::Float(*i as f64)),
                _ => "int",
            },
            DataLiteral::Float(f) => match elem {
                ElemTy::Float => return Some(Value::Float(*f)),
                _ => "float",
            },
            DataLiteral::Str(s) => match elem {
                ElemTy::Str => return Some(Value::Str(s.clone())),
                _ => "string",
            },
            DataLiteral::Tuple(items) => match elem {
                ElemTy::Tuple(t) => return self.tuple_value(t, items, v.span, file),
                _ => "tuple",
            },
            _ => describe(v),
        };
        let expected = elem.to_string();
        let value = crate::printer::data_value(v);
        self.diag(Code::SetElementType, v.span, file, &[("name", set), ("expected", &expected), ("found", found), ("value", &value)]);
        None
    }

    fn tuple_value(&mut self, tuple: &str, items: &[DataValue], span: Span, file: SourceFile) -> Option<Value> {
        let fields = self.typed.symbols.get(tuple).map(|s| s.fields.clone()).unwrap_or_default();
        if fields.len() != items.len() {
            let (e, f) = (fields.len().to_string(), items.len().to_string());
            self.diag(Code::TupleArity, span, file, &[("tuple", tuple), ("expected", &e), ("found", &f)]);
            return None;
        }
        let mut out = Vec::with_capacity(items.len());
        for ((fname, fty), item) in fields.iter().zip(items) {
            let v = match (&item.literal, fty) {
                (DataLiteral::Int(i), ScalarType::Int | ScalarType::IntPlus | ScalarType::Boolean) => Some(Value::Int(*i)),
                (DataLiteral::Int(i), ScalarType::Float | ScalarType::FloatPlus) => Some(Value::Float(*i as f64)),
                (DataLiteral::Float(f), ScalarType::Float | ScalarType::FloatPlus) => Some(Value::Float(*f)),
                (DataLiteral::Str(s), ScalarType::String) => Some(Value::Str(s.clone())),
                _ => None,
            };
            match v {
                Some(v) => out.push(v),
                None => {
                    let value = crate::printer::data_value(item);
                    self.diag(
                        Code::TupleFieldType,
                        item.span,
                        file,
                        &[("field", fname), ("tuple", tuple), ("expected", fty.keyword()), ("value", &value)],
                    );
                    return None;
                }
            }
        }
        Some(Value::Tuple(out))
    }

    fn set_value(&mut self, name: &str, elem: &ElemTy, v: &DataValue, file: SourceFile) -> Option<Domain> {
        match &v.literal {
            DataLiteral::Set(items) => {
                let mut values: Vec<Value> = Vec::with_capacity(items.len());
                let mut ok = true;
                for item in items {
                    match self.elem_value(name, elem, item, file) {
                        Some(val) => {
                            if values.contains(&val) {
                                let shown = val.to_string();
                                self.diag(Code::SetDuplicateElement, item.span, file, &[("name", name), ("value", &shown)]);
                                ok = false;
                            }
                            values.push(val);
                        }
                        None => ok = false,
                    }
                }
                ok.then(|| Domain::set(values))
            }
            DataLiteral::Range(lo, hi) if matches!(elem, ElemTy::Int) => Some(Domain::set((*lo..=*hi).map(Value::Int).collect())),
            _ => {
                let found = describe(v);
                self.diag(Code::DataDimension, v.span, file, &[("name", name), ("expected", "a set literal"), ("found", found)]);
                None
            }
        }
    }

    fn array(&mut self, name: &str, ty: ScalarType, dims: Vec<Domain>, v: &DataValue, file: SourceFile) -> Option<ArrayValue> {
        let declared: Vec<usize> = dims.iter().map(Domain::len).collect();
        if !matches!(v.literal, DataLiteral::Array(_)) {
            let expected = format!("an array of shape {}", shape_text(&declared));
            self.diag(Code::DataDimension, v.span, file, &[("name", name), ("expected", &expected), ("found", describe(v))]);
            return None;
        }
        if !v.is_rectangular() {
            self.diag(Code::DataRagged, v.span, file, &[("name", name)]);
            return None;
        }
        let found = v.shape();
        if found != declared {
            let (d, f) = (shape_text(&declared), shape_text(&found));
            self.diag(Code::ShapeMismatch, v.span, file, &[("name", name), ("declared", &d), ("found", &f)]);
            return None;
        }
        let mut leaves = Vec::with_capacity(declared.iter().product());
        collect_leaves(v, &mut leaves);
        let mut values = Vec::with_capacity(leaves.len());
        let mut ok = true;
        for leaf in leaves {
            match self.scalar(name, ty, leaf, file) {
                Some(x) => values.push(x),
                None => ok = false,
            }
        }
        ok.then_some(ArrayValue { dims, values })
    }
}

fn collect_leaves<'v>(v: &'v DataValue, out: &mut Vec<&'v DataValue>) {
    match &v.literal {
        DataLiteral::Array(items) => items.iter().for_each(|i| collect_leaves(i, out)),
        _ => out.push(v),
    }
}
