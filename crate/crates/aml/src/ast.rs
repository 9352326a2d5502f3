//! Syntax trees for `.mod` and `.dat` files.

use crate::lexer::Comment;
use crate::span::Span;

/// Per-model unique expression id, used to key inferred types.
pub type ExprId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        Ident { name: name.into(), span }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    Int,
    IntPlus,
    Float,
    FloatPlus,
    Boolean,
    String,
}

impl ScalarType {
    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Int => "int",
            ScalarType::IntPlus => "int+",
            ScalarType::Float => "float",
            ScalarType::FloatPlus => "float+",
            ScalarType::Boolean => "boolean",
            ScalarType::String => "string",
        }
    }

    pub fn is_nonnegative(self) -> bool {
        matches!(self, ScalarType::IntPlus | ScalarType::FloatPlus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetElemType {
    Int,
    Float,
    String,
    Tuple(Ident),
}

/// Right-hand side of a parameter, range or set declaration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// No initializer at all: the value comes from the data file.
    Implicit,
    /// `= ...`
    External,
    Value(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleField {
    pub ty: ScalarType,
    pub name: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeclKind {
    Param { ty: ScalarType, indices: Vec<Expr>, init: Init },
    Range { init: Init },
    Set { elem: SetElemType, init: Init },
    Tuple { fields: Vec<TupleField> },
    Dvar { ty: ScalarType, indices: Vec<Expr>, bounds: Option<(Expr, Expr)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub name: Ident,
    pub kind: DeclKind,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub label: Option<Ident>,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterator {
    pub name: Ident,
    pub domain: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintItem {
    Constraint { label: Option<Ident>, expr: Expr, span: Span },
    Forall {
        label: Option<Ident>,
        iterators: Vec<Iterator>,
        filter: Option<Expr>,
        /// `true` for `forall (...) { ... }`, `false` for a single body item.
        braced: bool,
        body: Vec<ConstraintItem>,
        span: Span,
    },
}

impl ConstraintItem {
    pub fn span(&self) -> Span {
        match self {
            ConstraintItem::Constraint { span, .. } | ConstraintItem::Forall { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    /// `subject to` (false) or `constraints` (true).
    pub constraints_keyword: bool,
    pub items: Vec<ConstraintItem>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Decl(Declaration),
    Objective(Objective),
    SubjectTo(ConstraintBlock),
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::Decl(d) => d.span,
            Item::Objective(o) => o.span,
            Item::SubjectTo(b) => b.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelAst {
    /// Top-level statements in source order.
    pub items: Vec<Item>,
    pub comments: Vec<Comment>,
}

impl ModelAst {
    pub fn declarations(&self) -> impl std::iter::Iterator<Item = &Declaration> {
        self.items.iter().filter_map(|i| match i {
            Item::Decl(d) => Some(d),
            _ => None,
        })
    }

    pub fn objectives(&self) -> impl std::iter::Iterator<Item = &Objective> {
        self.items.iter().filter_map(|i| match i {
            Item::Objective(o) => Some(o),
            _ => None,
        })
    }

    /// The first objective, if any.
    pub fn objective(&self) -> Option<&Objective> {
        self.objectives().next()
    }

    pub fn constraint_blocks(&self) -> impl std::iter::Iterator<Item = &ConstraintBlock> {
        self.items.iter().filter_map(|i| match i {
            Item::SubjectTo(b) => Some(b),
            _ => None,
        })
    }

    /// All top-level constraint items across every `subject to` block.
    pub fn constraints(&self) -> impl std::iter::Iterator<Item = &ConstraintItem> {
        self.constraint_blocks().flat_map(|b| b.items.iter())
    }

    /// Copy with every span and expression id zeroed, for structural comparison.
    pub fn erase_positions(&self) -> ModelAst {
        let mut m = self.clone();
        let mut v = Eraser;
        for item in &mut m.items {
            v.item(item);
        }
        for c in &mut m.comments {
            c.span = Span::default();
        }
        m
    }

    /// Equality ignoring spans, ids and comment positions.
    pub fn structurally_eq(&self, other: &ModelAst) -> bool {
        self.erase_positions() == other.erase_positions()
    }
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
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Ge,
    Eq,
    Lt,
    Gt,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Name(String),
    /// `a[i][j]` and `a[i, j]` both produce a single node with two indices.
    Index { base: Ident, indices: Vec<Expr> },
    Field { base: Box<Expr>, field: Ident },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Neg(Box<Expr>),
    Sum { iterators: Vec<Iterator>, filter: Option<Box<Expr>>, body: Box<Expr> },
    /// `a op1 b op2 c ...`; a plain comparison has one element in `rest`.
    Compare { first: Box<Expr>, rest: Vec<(CmpOp, Expr)> },
    And(Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
    Call { func: Ident, args: Vec<Expr> },
    /// `lo..hi`, valid as an iteration domain, index set or range initializer.
    Range(Box<Expr>, Box<Expr>),
    ArrayLit(Vec<Expr>),
    SetLit(Vec<Expr>),
    TupleLit(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(id: ExprId, kind: ExprKind, span: Span) -> Self {
        Expr { id, kind, span }
    }

    /// Number of operands in a comparison chain (0 when not a comparison).
    pub fn chain_len(&self) -> usize {
        match &self.kind {
            ExprKind::Compare { rest, .. } => rest.len() + 1,
            _ => 0,
        }
    }

    /// Calls `f` on every direct child expression.
    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Expr)) {
        use ExprKind::*;
        match &self.kind {
            Int(_) | Float(_) | Str(_) | Name(_) => {}
            Index { indices, .. } => indices.iter().for_each(f),
            Field { base, .. } => f(base),
            Binary { lhs, rhs, .. } | And(lhs, rhs) | Range(lhs, rhs) => {
                f(lhs);
                f(rhs);
            }
            Neg(e) | Paren(e) => f(e),
            Sum { iterators, filter, body } => {
                for it in iterators {
                    f(&it.domain);
                }
                if let Some(c) = filter {
                    f(c);
                }
                f(body);
            }
            Compare { first, rest } => {
                f(first);
                for (_, e) in rest {
                    f(e);
                }
            }
            Call { args, .. } => args.iter().for_each(f),
            ArrayLit(v) | SetLit(v) | TupleLit(v) => v.iter().for_each(f),
        }
    }
}

struct Eraser;

impl Eraser {
    fn ident(&mut self, i: &mut Ident) {
        i.span = Span::default();
    }

    fn item(&mut self, item: &mut Item) {
        match item {
            Item::Decl(d) => {
                d.span = Span::default();
                self.ident(&mut d.name);
                match &mut d.kind {
                    DeclKind::Param { indices, init, .. } => {
                        indices.iter_mut().for_each(|e| self.expr(e));
                        self.init(init);
                    }
                    DeclKind::Range { init } => self.init(init),
                    DeclKind::Set { elem, init } => {
                        if let SetElemType::Tuple(t) = elem {
                            self.ident(t);
                        }
                        self.init(init);
                    }
                    DeclKind::Tuple { fields } => fields.iter_mut().for_each(|f| self.ident(&mut f.name)),
                    DeclKind::Dvar { indices, bounds, .. } => {
                        indices.iter_mut().for_each(|e| self.expr(e));
                        if let Some((lo, hi)) = bounds {
                            self.expr(lo);
                            self.expr(hi);
                        }
                    }
                }
            }
            Item::Objective(o) => {
                o.span = Span::default();
                if let Some(l) = &mut o.label {
                    self.ident(l);
                }
                self.expr(&mut o.expr);
            }
            Item::SubjectTo(b) => {
                b.span = Span::default();
                b.items.iter_mut().for_each(|c| self.constraint(c));
            }
        }
    }

    fn init(&mut self, init: &mut Init) {
        if let Init::Value(e) = init {
            self.expr(e);
        }
    }

    fn constraint(&mut self, c: &mut ConstraintItem) {
        match c {
            ConstraintItem::Constraint { label, expr, span } => {
                *span = Span::default();
                if let Some(l) = label {
                    self.ident(l);
                }
                self.expr(expr);
            }
            ConstraintItem::Forall { label, iterators, filter, body, span, .. } => {
                *span = Span::default();
                if let Some(l) = label {
                    self.ident(l);
                }
                self.iterators(iterators);
                if let Some(f) = filter {
                    self.expr(f);
                }
                body.iter_mut().for_each(|c| self.constraint(c));
            }
        }
    }

    fn iterators(&mut self, its: &mut [Iterator]) {
        for it in its {
            self.ident(&mut it.name);
            self.expr(&mut it.domain);
        }
    }

    fn expr(&mut self, e: &mut Expr) {
        use ExprKind::*;
        e.id = 0;
        e.span = Span::default();
        match &mut e.kind {
            Int(_) | Float(_) | Str(_) | Name(_) => {}
            Index { base, indices } => {
                self.ident(base);
                indices.iter_mut().for_each(|x| self.expr(x));
            }
            Field { base, field } => {
                self.expr(base);
                self.ident(field);
            }
            Binary { lhs, rhs, .. } | And(lhs, rhs) | Range(lhs, rhs) => {
                self.expr(lhs);
                self.expr(rhs);
            }
            Neg(x) | Paren(x) => self.expr(x),
            Sum { iterators, filter, body } => {
                self.iterators(iterators);
                if let Some(f) = filter {
                    self.expr(f);
                }
                self.expr(body);
            }
            Compare { first, rest } => {
                self.expr(first);
                rest.iter_mut().for_each(|(_, x)| self.expr(x));
            }
            Call { func, args } => {
                self.ident(func);
                args.iter_mut().for_each(|x| self.expr(x));
            }
            ArrayLit(v) | SetLit(v) | TupleLit(v) => v.iter_mut().for_each(|x| self.expr(x)),
        }
    }
}

/// A literal value in a `.dat` file.
#[derive(Debug, Clone, PartialEq)]
pub enum DataLiteral {
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<DataValue>),
    Set(Vec<DataValue>),
    Tuple(Vec<DataValue>),
    Range(i64, i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataValue {
    pub literal: DataLiteral,
    pub span: Span,
}

impl DataValue {
    /// Array extents along the first-element spine, e.g. `[[1,2],[3,4]]` gives `[2, 2]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut dims = Vec::new();
        let mut cur = self;
        while let DataLiteral::Array(items) = &cur.literal {
            dims.push(items.len());
            match items.first() {
                Some(first) => cur = first,
                None => break,
            }
        }
        dims
    }

    /// True when every nested array at the same depth has the same length.
    pub fn is_rectangular(&self) -> bool {
        fn check(v: &DataValue, shape: &[usize]) -> bool {
            match (&v.literal, shape.split_first()) {
                (DataLiteral::Array(items), Some((&n, rest))) => {
                    items.len() == n && items.iter().all(|it| check(it, rest))
                }
                (DataLiteral::Array(_), None) => false,
                (_, Some(_)) => false,
                (_, None) => true,
            }
        }
        check(self, &self.shape())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub name: Ident,
    pub value: DataValue,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataAst {
    pub assignments: Vec<Assignment>,
    pub comments: Vec<Comment>,
}

impl DataAst {
    pub fn get(&self, name: &str) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.name.name == name)
    }
}
