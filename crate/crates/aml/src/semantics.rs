//! Type checking of a model against its data file.
//!
//! The analyzer walks the model once, in source order, so a symbol is only
//! visible after its declaration. It collects every problem it finds rather
//! than stopping at the first one.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::ast::*;
use crate::diag::{has_errors, sort_by_line, Code, Diagnostic, SourceFile};
use crate::printer;
use crate::span::Span;

/// Element type of a set, range or tuple field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElemTy {
    Int,
    Float,
    Str,
    Tuple(String),
}

impl fmt::Display for ElemTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElemTy::Int => f.write_str("int"),
            ElemTy::Float => f.write_str("float"),
            ElemTy::Str => f.write_str("string"),
            ElemTy::Tuple(t) => write!(f, "tuple {t}"),
        }
    }
}

/// Inferred type of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprType {
    /// `var` is true when the value depends on decision variables.
    Num { integral: bool, var: bool },
    Str,
    Tuple(String),
    /// Result of a comparison or `&&`.
    Cond { var: bool },
    /// A set or range used as a value.
    Domain(ElemTy),
    /// Produced after an error, to avoid cascades.
    Unknown,
}

impl ExprType {
    pub const INT: ExprType = ExprType::Num { integral: true, var: false };
    pub const FLOAT: ExprType = ExprType::Num { integral: false, var: false };

    pub fn has_var(&self) -> bool {
        matches!(self, ExprType::Num { var: true, .. } | ExprType::Cond { var: true })
    }

    fn is_unknown(&self) -> bool {
        matches!(self, ExprType::Unknown)
    }

    fn from_scalar(ty: ScalarType, var: bool) -> ExprType {
        match ty {
            ScalarType::String => ExprType::Str,
            ScalarType::Float | ScalarType::FloatPlus => ExprType::Num { integral: false, var },
            _ => ExprType::Num { integral: true, var },
        }
    }

    fn from_elem(e: &ElemTy) -> ExprType {
        match e {
            ElemTy::Int => ExprType::INT,
            ElemTy::Float => ExprType::FLOAT,
            ElemTy::Str => ExprType::Str,
            ElemTy::Tuple(t) => ExprType::Tuple(t.clone()),
        }
    }
}

impl fmt::Display for ExprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprType::Num { integral: true, .. } => f.write_str("int"),
            ExprType::Num { integral: false, .. } => f.write_str("float"),
            ExprType::Str => f.write_str("string"),
            ExprType::Tuple(t) => write!(f, "tuple {t}"),
            ExprType::Cond { .. } => f.write_str("a comparison"),
            ExprType::Domain(e) => write!(f, "a set of {e}"),
            ExprType::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Parameter,
    Range,
    Set,
    TupleType,
    Dvar,
}

/// Index set of one array dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexDomain {
    pub elem: ElemTy,
    /// Declared range/set name, or `None` for an inline `lo..hi`.
    pub name: Option<String>,
    /// Source text, e.g. `Aircraft` or `1..3`.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolInfo {
    pub name: String,
    pub kind: SymbolKind,
    /// Declared scalar type of parameters and decision variables.
    pub scalar: Option<ScalarType>,
    /// Element type of sets and ranges.
    pub elem: Option<ElemTy>,
    pub index_domains: Vec<IndexDomain>,
    pub span: Span,
    /// True when the value is expected from the data file.
    pub external: bool,
    /// Fields of a tuple type, in declaration order.
    pub fields: Vec<(String, ScalarType)>,
}

impl SymbolInfo {
    pub fn dimensionality(&self) -> usize {
        self.index_domains.len()
    }
}

/// Declared names in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTable {
    entries: BTreeMap<String, SymbolInfo>,
    order: Vec<String>,
}

impl SymbolTable {
    pub fn get(&self, name: &str) -> Option<&SymbolInfo> {
        self.entries.get(name)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl std::iter::Iterator<Item = &SymbolInfo> {
        self.order.iter().map(|n| &self.entries[n])
    }

    fn insert(&mut self, info: SymbolInfo) {
        self.order.push(info.name.clone());
        self.entries.insert(info.name.clone(), info);
    }
}

/// A model that passed analysis.
#[derive(Debug, Clone)]
pub struct TypedModel {
    pub ast: ModelAst,
    pub symbols: SymbolTable,
    pub types: HashMap<ExprId, ExprType>,
    /// Warnings found during analysis.
    pub warnings: Vec<Diagnostic>,
}

impl TypedModel {
    pub fn type_of(&self, e: &Expr) -> Option<&ExprType> {
        self.types.get(&e.id)
    }
}

/// Checks `model` against `data`.
///
/// Returns the typed model when no error was found; otherwise every
/// diagnostic found (warnings included), ordered by line.
pub fn analyze(model: &ModelAst, data: &DataAst) -> Result<TypedModel, Vec<Diagnostic>> {
    let mut a = Analyzer::new(data);
    a.run(model);
    let Analyzer { symbols, types, diags, .. } = a;
    let mut diags = dedup(diags);
    sort_by_line(&mut diags);
    if has_errors(&diags) {
        Err(diags)
    } else {
        Ok(TypedModel { ast: model.clone(), symbols, types, warnings: diags })
    }
}

fn dedup(diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    let mut seen = HashSet::new();
    diags.into_iter().filter(|d| seen.insert((d.code, d.line(), d.message.clone()))).collect()
}

/// True for trees made only of literals, which the binder treats like data.
pub(crate) fn is_literal_tree(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Str(_) => true,
        ExprKind::Neg(inner) => matches!(inner.kind, ExprKind::Int(_) | ExprKind::Float(_)),
        ExprKind::Range(lo, hi) => is_literal_tree(lo) && is_literal_tree(hi),
        ExprKind::ArrayLit(v) | ExprKind::SetLit(v) | ExprKind::TupleLit(v) => v.iter().all(is_literal_tree),
        _ => false,
    }
}

fn is_zero_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(0) => true,
        ExprKind::Float(v) => *v == 0.0,
        ExprKind::Neg(inner) | ExprKind::Paren(inner) => is_zero_literal(inner),
        _ => false,
    }
}

const FUNCTIONS: &[&str] = &["abs", "min", "max", "floor", "ceil", "round", "card"];

struct Analyzer<'d> {
    data: &'d DataAst,
    symbols: SymbolTable,
    types: HashMap<ExprId, ExprType>,
    diags: Vec<Diagnostic>,
    used: HashSet<String>,
    /// Names whose undeclared uses are already explained by SEM-RANGE-IN-DAT.
    suppressed: HashSet<String>,
    /// Iterators currently in scope, innermost last.
    scope: Vec<(String, ElemTy)>,
    labels: HashMap<String, Span>,
}

impl<'d> Analyzer<'d> {
    fn new(data: &'d DataAst) -> Self {
        Analyzer {
            data,
            symbols: SymbolTable::default(),
            types: HashMap::new(),
            diags: Vec::new(),
            used: HashSet::new(),
            suppressed: HashSet::new(),
            scope: Vec::new(),
            labels: HashMap::new(),
        }
    }

    fn emit(&mut self, code: Code, span: Span, args: &[(&str, &str)]) {
        self.diags.push(Diagnostic::at(code, span, args).in_file(SourceFile::Model));
    }

    fn emit_data(&mut self, code: Code, span: Span, args: &[(&str, &str)]) {
        self.diags.push(Diagnostic::at(code, span, args).in_file(SourceFile::Data));
    }

    fn run(&mut self, model: &ModelAst) {
        self.scan_data_ranges(model);

        let mut first_objective: Option<Span> = None;
        let mut first_block: Option<Span> = None;
        for item in &model.items {
            match item {
                Item::Decl(d) => self.declaration(d),
                Item::Objective(o) => {
                    if let Some(first) = first_objective {
                        let line = first.line.to_string();
                        self.emit(Code::MultipleObjectives, o.span, &[("first", &line)]);
                    } else {
                        first_objective = Some(o.span);
                    }
                    self.objective(o);
                }
                Item::SubjectTo(b) => {
                    if let Some(first) = first_block {
                        let line = first.line.to_string();
                        self.emit(Code::MultipleSubjectTo, b.span, &[("first", &line)]);
                    } else {
                        first_block = Some(b.span);
                    }
                    for c in &b.items {
                        self.constraint_item(c, false);
                    }
                }
            }
        }
        if first_objective.is_none() {
            self.diags.push(Diagnostic::new(Code::NoObjective, None, &[]).in_file(SourceFile::Model));
        }
        self.check_data_names();
        self.unused_warnings();
    }

    /// Ranges given in the data file are reported once, without a line, and
    /// later uses of the name are not reported again as undeclared.
    fn scan_data_ranges(&mut self, model: &ModelAst) {
        let declared: HashSet<&str> = model.declarations().map(|d| d.name.name.as_str()).collect();
        for a in &self.data.assignments {
            let name = a.name.name.as_str();
            let declared_range = model
                .declarations()
                .any(|d| d.name.name == name && matches!(d.kind, DeclKind::Range { .. }));
            let range_literal = matches!(a.value.literal, DataLiteral::Range(..));
            if declared_range || (range_literal && !declared.contains(name)) {
                self.diags.push(Diagnostic::new(Code::RangeInData, None, &[("name", name)]).in_file(SourceFile::Data));
                self.suppressed.insert(name.to_string());
            }
        }
    }

    fn check_data_names(&mut self) {
        let data = self.data;
        for a in &data.assignments {
            let name = &a.name.name;
            if self.suppressed.contains(name) {
                continue;
            }
            match self.symbols.get(name) {
                None => self.emit_data(Code::ExtraData, a.name.span, &[("name", name)]),
                Some(sym) => match sym.kind {
                    SymbolKind::Dvar => self.emit_data(Code::DataForDvar, a.name.span, &[("name", name)]),
                    SymbolKind::TupleType => self.emit_data(Code::ExtraData, a.name.span, &[("name", name)]),
                    SymbolKind::Parameter | SymbolKind::Set if !sym.external => {
                        self.emit_data(Code::InitAndData, a.name.span, &[("name", name)])
                    }
                    _ => {}
                },
            }
        }
        let missing: Vec<(String, Span)> = self
            .symbols
            .iter()
            .filter(|s| matches!(s.kind, SymbolKind::Parameter | SymbolKind::Set) && s.external)
            .filter(|s| data.get(&s.name).is_none())
            .map(|s| (s.name.clone(), s.span))
            .collect();
        for (name, span) in missing {
            self.emit(Code::MissingData, span, &[("name", &name)]);
        }
    }

    fn unused_warnings(&mut self) {
        let unused: Vec<(Code, String, Span)> = self
            .symbols
            .iter()
            .filter(|s| !self.used.contains(&s.name))
            .filter_map(|s| match s.kind {
                SymbolKind::Parameter => Some((Code::UnusedParameter, s.name.clone(), s.span)),
                SymbolKind::Dvar => Some((Code::UnusedVariable, s.name.clone(), s.span)),
                _ => None,
            })
            .collect();
        for (code, name, span) in unused {
            self.emit(code, span, &[("name", &name)]);
        }
    }

    // ----- declarations -----

    fn declare(&mut self, info: SymbolInfo) -> bool {
        if let Some(prev) = self.symbols.get(&info.name) {
            let first = prev.span.line.to_string();
            self.emit(Code::DuplicateDecl, info.span, &[("name", &info.name), ("first", &first)]);
            return false;
        }
        self.symbols.insert(info);
        true
    }

    fn symbol(name: &Ident, kind: SymbolKind) -> SymbolInfo {
        SymbolInfo {
            name: name.name.clone(),
            kind,
            scalar: None,
            elem: None,
            index_domains: Vec::new(),
            span: name.span,
            external: false,
            fields: Vec::new(),
        }
    }

    fn declaration(&mut self, d: &Declaration) {
        match &d.kind {
            DeclKind::Tuple { fields } => {
                let mut info = Self::symbol(&d.name, SymbolKind::TupleType);
                for f in fields {
                    if info.fields.iter().any(|(n, _)| *n == f.name.name) {
                        self.emit(Code::DuplicateTupleField, f.name.span, &[("tuple", &d.name.name), ("field", &f.name.name)]);
                    } else {
                        info.fields.push((f.name.name.clone(), f.ty));
                    }
                }
                self.declare(info);
            }
            DeclKind::Range { init } => {
                let mut info = Self::symbol(&d.name, SymbolKind::Range);
                info.elem = Some(ElemTy::Int);
                match init {
                    Init::Value(e) => match &e.kind {
                        ExprKind::Range(lo, hi) => self.range_bounds(lo, hi),
                        _ => {
                            let t = self.infer(e);
                            if !t.is_unknown() {
                                self.emit(Code::TypeMismatch, e.span, &[("expected", "a range lo..hi"), ("found", &t.to_string())]);
                            }
                        }
                    },
                    Init::External | Init::Implicit => {
                        info.external = true;
                        if !self.suppressed.contains(&d.name.name) {
                            self.emit(Code::RangeExternal, d.name.span, &[("name", &d.name.name)]);
                        }
                    }
                }
                self.declare(info);
            }
            DeclKind::Set { elem, init } => {
                let mut info = Self::symbol(&d.name, SymbolKind::Set);
                let elem_ty = match elem {
                    SetElemType::Int => Some(ElemTy::Int),
                    SetElemType::Float => Some(ElemTy::Float),
                    SetElemType::String => Some(ElemTy::Str),
                    SetElemType::Tuple(t) => match self.symbols.get(&t.name) {
                        Some(s) if s.kind == SymbolKind::TupleType => {
                            self.used.insert(t.name.clone());
                            Some(ElemTy::Tuple(t.name.clone()))
                        }
                        _ => {
                            self.emit(Code::UnknownTupleType, t.span, &[("name", &t.name)]);
                            None
                        }
                    },
                };
                info.elem = elem_ty;
                match init {
                    Init::Value(e) => {
                        if !is_literal_tree(e) {
                            self.emit(Code::Unsupported, e.span, &[("construct", "A computed set initializer")]);
                        } else if !matches!(e.kind, ExprKind::SetLit(_) | ExprKind::Range(..)) {
                            self.emit(Code::TypeMismatch, e.span, &[("expected", "a set literal {...}"), ("found", &printer::expr(e))]);
                        }
                    }
                    _ => info.external = true,
                }
                self.declare(info);
            }
            DeclKind::Param { ty, indices, init } => {
                let mut info = Self::symbol(&d.name, SymbolKind::Parameter);
                info.scalar = Some(*ty);
                info.index_domains = self.index_domains(indices, &d.name.name);
                match init {
                    Init::Value(e) => self.param_initializer(&d.name.name, *ty, !indices.is_empty(), e),
                    _ => info.external = true,
                }
                self.declare(info);
            }
            DeclKind::Dvar { ty, indices, bounds } => {
                let mut info = Self::symbol(&d.name, SymbolKind::Dvar);
                info.scalar = Some(*ty);
                info.index_domains = self.index_domains(indices, &d.name.name);
                if let Some((lo, hi)) = bounds {
                    for b in [lo, hi] {
                        let t = self.infer(b);
                        match t {
                            ExprType::Num { var: false, .. } | ExprType::Unknown => {}
                            ExprType::Num { var: true, .. } => {
                                self.emit(Code::DvarBoundsNonConstant, b.span, &[("name", &d.name.name)])
                            }
                            other => self.emit(Code::TypeMismatch, b.span, &[("expected", "float"), ("found", &other.to_string())]),
                        }
                    }
                }
                self.declare(info);
            }
        }
    }

    fn range_bounds(&mut self, lo: &Expr, hi: &Expr) {
        let mut nonint = false;
        for b in [lo, hi] {
            match self.infer(b) {
                ExprType::Num { var: true, .. } => self.emit(Code::RangeNonConstant, b.span, &[]),
                ExprType::Num { integral: true, .. } | ExprType::Unknown => {}
                _ => nonint = true,
            }
        }
        if nonint {
            self.emit(Code::RangeNonInteger, lo.span, &[]);
        }
    }

    fn param_initializer(&mut self, name: &str, ty: ScalarType, indexed: bool, e: &Expr) {
        if is_literal_tree(e) {
            return;
        }
        if indexed {
            self.emit(Code::Unsupported, e.span, &[("construct", "A computed array initializer")]);
            return;
        }
        let t = self.infer(e);
        let ok = match (&t, ty) {
            (ExprType::Unknown, _) => true,
            (ExprType::Num { var: true, .. }, _) => {
                self.emit(Code::DvarInDeclaration, e.span, &[("name", name)]);
                true
            }
            (ExprType::Str, ScalarType::String) => true,
            (ExprType::Num { integral, .. }, t) if t != ScalarType::String => {
                *integral || matches!(t, ScalarType::Float | ScalarType::FloatPlus)
            }
            _ => false,
        };
        if !ok {
            self.emit(Code::TypeMismatch, e.span, &[("expected", ty.keyword()), ("found", &t.to_string())]);
        }
    }

    fn index_domains(&mut self, indices: &[Expr], array: &str) -> Vec<IndexDomain> {
        let mut out = Vec::new();
        for e in indices {
            let text = printer::expr(e);
            match &e.kind {
                ExprKind::Range(lo, hi) => {
                    self.range_bounds(lo, hi);
                    out.push(IndexDomain { elem: ElemTy::Int, name: None, text });
                }
                ExprKind::Name(n) => match self.symbols.get(n).cloned() {
                    Some(s) if matches!(s.kind, SymbolKind::Range | SymbolKind::Set) => {
                        self.used.insert(n.clone());
                        // an unknown tuple element type was already reported
                        let elem = s.elem.clone().unwrap_or(ElemTy::Int);
                        out.push(IndexDomain { elem, name: Some(n.clone()), text });
                    }
                    Some(_) => {
                        self.used.insert(n.clone());
                        self.emit(Code::ArrayIndexNotDomain, e.span, &[("name", n), ("array", array)]);
                        out.push(IndexDomain { elem: ElemTy::Int, name: None, text });
                    }
                    None => {
                        self.undeclared(n, e.span);
                        out.push(IndexDomain { elem: ElemTy::Int, name: None, text });
                    }
                },
                _ => {
                    self.emit(Code::ArrayIndexNotDomain, e.span, &[("name", &text), ("array", array)]);
                    out.push(IndexDomain { elem: ElemTy::Int, name: None, text });
                }
            }
        }
        out
    }

    fn undeclared(&mut self, name: &str, span: Span) {
        if !self.suppressed.contains(name) {
            self.emit(Code::Undeclared, span, &[("name", name)]);
        }
    }

    // ----- objective and constraints -----

    fn objective(&mut self, o: &Objective) {
        if o.label.is_none() {
            self.emit(Code::ObjectiveUnlabelled, o.span, &[]);
        }
        match self.infer(&o.expr) {
            ExprType::Num { .. } | ExprType::Unknown => {}
            ExprType::Str => self.emit(Code::StringArithmetic, o.expr.span, &[]),
            other => self.emit(Code::ObjectiveNotNumeric, o.expr.span, &[("found", &other.to_string())]),
        }
    }

    fn label(&mut self, label: &Ident) {
        if self.labels.contains_key(&label.name) {
            self.emit(Code::DuplicateLabel, label.span, &[("label", &label.name)]);
        } else {
            self.labels.insert(label.name.clone(), label.span);
        }
    }

    fn constraint_item(&mut self, c: &ConstraintItem, inside_labelled: bool) {
        match c {
            ConstraintItem::Constraint { label, expr, span } => {
                match label {
                    Some(l) => self.label(l),
                    None if !inside_labelled => self.emit(Code::UnlabelledConstraint, *span, &[]),
                    None => {}
                }
                let name = label.as_ref().map_or("<unlabelled>", |l| l.name.as_str()).to_string();
                self.constraint_expr(expr, &name);
            }
            ConstraintItem::Forall { label, iterators, filter, body, .. } => {
                if let Some(l) = label {
                    self.label(l);
                }
                let depth = self.scope.len();
                self.iterators(iterators);
                if let Some(f) = filter {
                    self.filter(f);
                }
                for b in body {
                    self.constraint_item(b, inside_labelled || label.is_some());
                }
                self.scope.truncate(depth);
            }
        }
    }

    fn constraint_expr(&mut self, e: &Expr, label: &str) {
        let ExprKind::Compare { first, rest } = &e.kind else {
            let _ = self.infer(e);
            self.emit(Code::NotAConstraint, e.span, &[("label", label)]);
            return;
        };
        if rest.len() > 1 {
            self.emit(Code::ChainedComparison, e.span, &[]);
        }
        for (op, _) in rest {
            match op {
                CmpOp::Lt | CmpOp::Gt => self.emit(Code::StrictInequality, e.span, &[("op", op.symbol())]),
                CmpOp::Ne => self.emit(Code::BadRelation, e.span, &[("op", op.symbol())]),
                _ => {}
            }
        }
        let mut any_var = false;
        let mut all_known = true;
        for side in std::iter::once(first.as_ref()).chain(rest.iter().map(|(_, e)| e)) {
            let t = self.infer(side);
            match &t {
                ExprType::Num { var, .. } => any_var |= *var,
                ExprType::Unknown => all_known = false,
                ExprType::Str => {
                    self.emit(Code::StringArithmetic, side.span, &[]);
                    all_known = false;
                }
                other => {
                    self.emit(Code::TypeMismatch, side.span, &[("expected", "a numeric expression"), ("found", &other.to_string())]);
                    all_known = false;
                }
            }
        }
        self.types.insert(e.id, ExprType::Cond { var: any_var });
        if !any_var && all_known {
            self.emit(Code::ConstantConstraint, e.span, &[("label", label)]);
        }
    }

    fn iterators(&mut self, its: &[Iterator]) {
        let start = self.scope.len();
        for it in its {
            let name = &it.name.name;
            if self.scope[start..].iter().any(|(n, _)| n == name) {
                self.emit(Code::DuplicateIterator, it.name.span, &[("name", name)]);
            } else if self.symbols.get(name).is_some() || self.scope.iter().any(|(n, _)| n == name) {
                self.emit(Code::IndexShadows, it.name.span, &[("name", name)]);
            }
            let elem = self.iteration_domain(&it.domain);
            self.scope.push((name.clone(), elem));
        }
    }

    fn iteration_domain(&mut self, d: &Expr) -> ElemTy {
        match &d.kind {
            ExprKind::Range(lo, hi) => {
                self.range_bounds(lo, hi);
                self.types.insert(d.id, ExprType::Domain(ElemTy::Int));
                ElemTy::Int
            }
            ExprKind::Name(n) => match self.symbols.get(n).cloned() {
                Some(s) if matches!(s.kind, SymbolKind::Range | SymbolKind::Set) => {
                    self.used.insert(n.clone());
                    let elem = s.elem.unwrap_or(ElemTy::Int);
                    self.types.insert(d.id, ExprType::Domain(elem.clone()));
                    elem
                }
                Some(_) => {
                    self.used.insert(n.clone());
                    self.emit(Code::BadIteratorDomain, d.span, &[("name", n)]);
                    ElemTy::Int
                }
                None => {
                    self.undeclared(n, d.span);
                    ElemTy::Int
                }
            },
            _ => {
                let text = printer::expr(d);
                self.emit(Code::BadIteratorDomain, d.span, &[("name", &text)]);
                ElemTy::Int
            }
        }
    }

    fn filter(&mut self, f: &Expr) {
        match self.infer(f) {
            ExprType::Cond { var: false } | ExprType::Unknown => {}
            ExprType::Cond { var: true } => self.emit(Code::FilterUsesVariable, f.span, &[]),
            other => self.emit(Code::FilterNotBoolean, f.span, &[("found", &other.to_string())]),
        }
    }

    // ----- expressions -----

    fn infer(&mut self, e: &Expr) -> ExprType {
        let t = self.infer_inner(e);
        self.types.insert(e.id, t.clone());
        t
    }

    fn lookup_iterator(&self, name: &str) -> Option<ElemTy> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone())
    }

    fn numeric(&mut self, t: ExprType, span: Span) -> Option<(bool, bool)> {
        match t {
            ExprType::Num { integral, var } => Some((integral, var)),
            ExprType::Unknown => None,
            ExprType::Str => {
                self.emit(Code::StringArithmetic, span, &[]);
                None
            }
            other => {
                self.emit(Code::TypeMismatch, span, &[("expected", "a numeric expression"), ("found", &other.to_string())]);
                None
            }
        }
    }

    fn infer_inner(&mut self, e: &Expr) -> ExprType {
        use ExprKind::*;
        match &e.kind {
            Int(_) => ExprType::INT,
            Float(_) => ExprType::FLOAT,
            Str(_) => ExprType::Str,
            Name(n) => {
                if let Some(elem) = self.lookup_iterator(n) {
                    return ExprType::from_elem(&elem);
                }
                let Some(sym) = self.symbols.get(n).cloned() else {
                    self.undeclared(n, e.span);
                    return ExprType::Unknown;
                };
                self.used.insert(n.clone());
                match sym.kind {
                    SymbolKind::Parameter | SymbolKind::Dvar if sym.dimensionality() > 0 => {
                        let expected = sym.dimensionality().to_string();
                        self.emit(Code::MissingIndex, e.span, &[("name", n), ("expected", &expected)]);
                        ExprType::Unknown
                    }
                    SymbolKind::Parameter => ExprType::from_scalar(sym.scalar.unwrap_or(ScalarType::Float), false),
                    SymbolKind::Dvar => {
                        ExprType::from_scalar(sym.scalar.unwrap_or(ScalarType::Float), true)
                    }
                    SymbolKind::Range | SymbolKind::Set => ExprType::Domain(sym.elem.unwrap_or(ElemTy::Int)),
                    SymbolKind::TupleType => {
                        self.emit(Code::TypeMismatch, e.span, &[("expected", "a value"), ("found", &format!("tuple type {n}"))]);
                        ExprType::Unknown
                    }
                }
            }
            Index { base, indices } => self.index(e, base, indices),
            Field { base, field } => {
                let bt = self.infer(base);
                match bt {
                    ExprType::Tuple(t) => {
                        let fields = self.symbols.get(&t).map(|s| s.fields.clone()).unwrap_or_default();
                        match fields.iter().find(|(n, _)| *n == field.name) {
                            Some((_, ty)) => ExprType::from_scalar(*ty, false),
                            None => {
                                let list = fields.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(", ");
                                self.emit(Code::UnknownField, field.span, &[("tuple", &t), ("field", &field.name), ("fields", &list)]);
                                ExprType::Unknown
                            }
                        }
                    }
                    ExprType::Unknown => ExprType::Unknown,
                    other => {
                        self.emit(Code::FieldOnNonTuple, field.span, &[("field", &field.name), ("ty", &other.to_string())]);
                        ExprType::Unknown
                    }
                }
            }
            Binary { op, lhs, rhs } => {
                let lt = self.infer(lhs);
                let rt = self.infer(rhs);
                let l = self.numeric(lt, lhs.span);
                let r = self.numeric(rt, rhs.span);
                let (Some((li, lv)), Some((ri, rv))) = (l, r) else {
                    return ExprType::Unknown;
                };
                match op {
                    BinOp::Mul if lv && rv => {
                        self.emit(Code::Nonlinear, e.span, &[]);
                        return ExprType::Unknown;
                    }
                    BinOp::Div if rv => {
                        self.emit(Code::DivisionByVariable, rhs.span, &[]);
                        return ExprType::Unknown;
                    }
                    BinOp::Div if is_zero_literal(rhs) => {
                        self.emit(Code::DivisionByZero, rhs.span, &[]);
                        return ExprType::Unknown;
                    }
                    _ => {}
                }
                let integral = li && ri && *op != BinOp::Div;
                ExprType::Num { integral, var: lv || rv }
            }
            Neg(inner) => {
                let t = self.infer(inner);
                match self.numeric(t, inner.span) {
                    Some((integral, var)) => ExprType::Num { integral, var },
                    None => ExprType::Unknown,
                }
            }
            Paren(inner) => self.infer(inner),
            Sum { iterators, filter, body } => {
                let depth = self.scope.len();
                self.iterators(iterators);
                if let Some(f) = filter {
                    self.filter(f);
                }
                let t = self.infer(body);
                let out = match self.numeric(t, body.span) {
                    Some((integral, var)) => ExprType::Num { integral, var },
                    None => ExprType::Unknown,
                };
                self.scope.truncate(depth);
                out
            }
            Compare { first, rest } => {
                if rest.len() > 1 {
                    self.emit(Code::ChainedComparison, e.span, &[]);
                }
                let mut var = false;
                let mut prev = self.infer(first);
                for (op, rhs) in rest {
                    let rt = self.infer(rhs);
                    var |= prev.has_var() || rt.has_var();
                    let compatible = match (&prev, &rt) {
                        (ExprType::Unknown, _) | (_, ExprType::Unknown) => true,
                        (ExprType::Num { .. }, ExprType::Num { .. }) => true,
                        (ExprType::Str, ExprType::Str) | (ExprType::Tuple(_), ExprType::Tuple(_)) => {
                            if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                                prev == rt
                            } else {
                                self.emit(Code::BadRelation, e.span, &[("op", op.symbol())]);
                                true
                            }
                        }
                        _ => false,
                    };
                    if !compatible {
                        self.emit(Code::TypeMismatch, rhs.span, &[("expected", &prev.to_string()), ("found", &rt.to_string())]);
                    }
                    prev = rt;
                }
                ExprType::Cond { var }
            }
            And(l, r) => {
                let mut var = false;
                for side in [l, r] {
                    match self.infer(side) {
                        ExprType::Cond { var: v } => var |= v,
                        ExprType::Unknown => {}
                        other => self.emit(Code::FilterNotBoolean, side.span, &[("found", &other.to_string())]),
                    }
                }
                ExprType::Cond { var }
            }
            Call { func, args } => self.call(e, func, args),
            Range(..) => {
                self.emit(Code::Unsupported, e.span, &[("construct", "A range outside an iterator or declaration")]);
                ExprType::Unknown
            }
            ArrayLit(_) | SetLit(_) | TupleLit(_) => {
                self.emit(Code::Unsupported, e.span, &[("construct", "A literal array, set or tuple inside an expression")]);
                ExprType::Unknown
            }
        }
    }

    fn index(&mut self, e: &Expr, base: &Ident, indices: &[Expr]) -> ExprType {
        let name = &base.name;
        self.used.insert(name.clone());
        let idx_types: Vec<ExprType> = indices.iter().map(|i| self.infer(i)).collect();
        for (i, t) in indices.iter().zip(&idx_types) {
            if t.has_var() {
                self.emit(Code::VariableIndex, i.span, &[]);
                return ExprType::Unknown;
            }
        }
        if self.lookup_iterator(name).is_some() {
            self.emit(Code::NotIndexable, base.span, &[("name", name)]);
            return ExprType::Unknown;
        }
        let Some(sym) = self.symbols.get(name).cloned() else {
            self.undeclared(name, base.span);
            return ExprType::Unknown;
        };
        if !matches!(sym.kind, SymbolKind::Parameter | SymbolKind::Dvar) || sym.dimensionality() == 0 {
            self.emit(Code::NotIndexable, base.span, &[("name", name)]);
            return ExprType::Unknown;
        }
        if sym.dimensionality() != indices.len() {
            let expected = sym.dimensionality().to_string();
            let found = indices.len().to_string();
            let example = format!("{name}{}", (0..sym.dimensionality()).map(|k| format!("[i{}]", k + 1)).collect::<String>());
            self.emit(Code::IndexArity, e.span, &[("name", name), ("expected", &expected), ("found", &found), ("example", &example)]);
            return ExprType::Unknown;
        }
        for (pos, ((idx, t), dom)) in indices.iter().zip(&idx_types).zip(&sym.index_domains).enumerate() {
            let ok = match (&dom.elem, t) {
                (_, ExprType::Unknown) => true,
                (ElemTy::Int, ExprType::Num { integral: true, .. }) => true,
                (ElemTy::Float, ExprType::Num { .. }) => true,
                (ElemTy::Str, ExprType::Str) => true,
                (ElemTy::Tuple(a), ExprType::Tuple(b)) => a == b,
                (ElemTy::Int, ExprType::Tuple(_)) => {
                    let value = printer::expr(idx);
                    self.emit(Code::ListTupleIndex, idx.span, &[("name", name), ("value", &value)]);
                    continue;
                }
                _ => false,
            };
            if !ok {
                let position = (pos + 1).to_string();
                let expected = dom.elem.to_string();
                let found = t.to_string();
                self.emit(
                    Code::IndexDomain,
                    idx.span,
                    &[("position", &position), ("name", name), ("domain", &dom.text), ("expected", &expected), ("found", &found)],
                );
            }
        }
        let var = sym.kind == SymbolKind::Dvar;
        ExprType::from_scalar(sym.scalar.unwrap_or(ScalarType::Float), var)
    }

    fn call(&mut self, e: &Expr, func: &Ident, args: &[Expr]) -> ExprType {
        if !FUNCTIONS.contains(&func.name.as_str()) {
            self.emit(Code::Unsupported, func.span, &[("construct", &format!("Function '{}'", func.name))]);
            for a in args {
                self.infer(a);
            }
            return ExprType::Unknown;
        }
        let arity_ok = match func.name.as_str() {
            "min" | "max" => !args.is_empty(),
            _ => args.len() == 1,
        };
        if !arity_ok {
            self.emit(Code::Unsupported, e.span, &[("construct", &format!("Calling '{}' with {} argument(s)", func.name, args.len()))]);
            for a in args {
                self.infer(a);
            }
            return ExprType::Unknown;
        }
        if func.name == "card" {
            return match self.infer(&args[0]) {
                ExprType::Domain(_) => ExprType::INT,
                ExprType::Unknown => ExprType::Unknown,
                other => {
                    self.emit(Code::TypeMismatch, args[0].span, &[("expected", "a set or range"), ("found", &other.to_string())]);
                    ExprType::Unknown
                }
            };
        }
        let mut integral = true;
        for a in args {
            let t = self.infer(a);
            match self.numeric(t, a.span) {
                Some((_, true)) => {
                    self.emit(Code::Nonlinear, e.span, &[]);
                    return ExprType::Unknown;
                }
                Some((i, false)) => integral &= i,
                None => return ExprType::Unknown,
            }
        }
        let integral = integral || matches!(func.name.as_str(), "floor" | "ceil" | "round");
        ExprType::Num { integral, var: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_data_source, parse_model_source};

    fn check(model: &str, data: &str) -> Result<TypedModel, Vec<Diagnostic>> {
        analyze(&parse_model_source(model).unwrap(), &parse_data_source(data).unwrap())
    }

    fn codes(model: &str, data: &str) -> Vec<Code> {
        match check(model, data) {
            Ok(t) => t.warnings.iter().map(|d| d.code).collect(),
            Err(d) => d.iter().map(|d| d.code).collect(),
        }
    }

    #[test]
    fn minimal_model_is_clean() {
        let t = check("float a; float b; dvar float x; minimize z: a*x; subject to { c1: b*x >= 0; }", "a = 10; b = 5;").unwrap();
        assert!(t.warnings.is_empty(), "{:?}", t.warnings);
        assert_eq!(t.symbols.len(), 3);
        let obj = t.ast.objective().unwrap();
        assert_eq!(t.type_of(&obj.expr), Some(&ExprType::Num { integral: false, var: true }));
    }

    #[test]
    fn fractional_range_bound() {
        let errs = check("range T = 1..2.5;\ndvar float x[T];\nminimize z: sum (t in T) x[t];", "").unwrap_err();
        assert_eq!(errs[0].code, Code::RangeNonInteger);
        assert_eq!(errs[0].message, "Range bounds must be integer-valued.");
    }

    #[test]
    fn chained_comparison_remedy() {
        let src = "{string} A = ...; float E[A]; float L[A]; dvar float t[A];\nminimize z: sum (i in A) t[i];\nsubject to {\n  forall (i in A) tw: E[i] <= t[i] <= L[i];\n}";
        let errs = check(src, "A = {\"a\"}; E = [1]; L = [2];").unwrap_err();
        let d = errs.iter().find(|d| d.code == Code::ChainedComparison).unwrap();
        assert_eq!(d.remedy, "Split into two constraints: a <= b; b <= c;");
        assert_eq!(d.line(), Some(4));
    }

    #[test]
    fn undeclared_symbol() {
        let errs = check("dvar float x;\nminimize cost: price * x;", "").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].message, "Undeclared symbol 'price'.");
    }

    #[test]
    fn range_in_data() {
        let src = "int N = ...;\ndvar float x[T];\nminimize z: sum (t in T) x[t];";
        let errs = check(src, "N = 3;\nT = 1..3;").unwrap_err();
        assert_eq!(errs.iter().filter(|d| d.is_error()).count(), 1, "{errs:?}");
        let d = &errs.iter().find(|d| d.is_error()).unwrap();
        assert_eq!(d.code, Code::RangeInData);
        assert_eq!(d.remedy, "Declare it in the model (e.g., 'range T = 1..N;') and remove it from the .dat.");
    }

    #[test]
    fn list_parameter_indexed_by_tuple() {
        let src = "tuple Job { int id; int dur; }\n{Job} Jobs = ...;\nrange R = 1..3;\nint sTime[R] = ...;\ndvar float x[Jobs];\nminimize z: sum (j in Jobs) sTime[j] * x[j];";
        let errs = check(src, "Jobs = {<1, 2>}; sTime = [1, 2, 3];").unwrap_err();
        assert_eq!(errs[0].code, Code::ListTupleIndex);
        assert!(errs[0].message.contains("requires integer indices, got tuple"), "{}", errs[0].message);
    }

    #[test]
    fn all_errors_are_reported_in_line_order() {
        let src = "dvar float x;\nminimize z: a * x;\nsubject to {\n  c: x * x <= 1;\n  c: b >= x;\n}";
        assert_eq!(codes(src, ""), vec![Code::Undeclared, Code::Nonlinear, Code::DuplicateLabel, Code::Undeclared]);
    }

    #[test]
    fn warnings_do_not_block() {
        let t = check("float unused = 1; dvar float x; minimize x;", "").unwrap();
        let c: Vec<Code> = t.warnings.iter().map(|d| d.code).collect();
        assert_eq!(c, vec![Code::UnusedParameter, Code::ObjectiveUnlabelled]);
    }

    #[test]
    fn data_name_checks() {
        let src = "float a = 1;\nfloat b;\ndvar float x;\nminimize z: a * b * x;";
        let c = codes(src, "a = 2; c = 3; x = 1;");
        assert_eq!(c, vec![Code::MissingData, Code::InitAndData, Code::ExtraData, Code::DataForDvar]);
    }
}
