//! Canonical pretty printer for model and data syntax trees.
//!
//! Output re-parses to a structurally equal tree. Comments are re-emitted on
//! their own lines ahead of the first statement that follows them in the
//! original source.

use std::fmt::Write;

use crate::ast::*;
use crate::lexer::Comment;

const INDENT: &str = "  ";

struct Printer<'a> {
    out: String,
    comments: &'a [Comment],
    next_comment: usize,
}

impl<'a> Printer<'a> {
    fn flush_comments_before(&mut self, line: u32, depth: usize) {
        while let Some(c) = self.comments.get(self.next_comment) {
            if c.span.line >= line {
                break;
            }
            self.line(depth, &c.text);
            self.next_comment += 1;
        }
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn item(&mut self, item: &Item) {
        self.flush_comments_before(item.span().line, 0);
        match item {
            Item::Decl(d) => {
                let text = decl(d);
                self.line(0, &text);
            }
            Item::Objective(o) => {
                let sense = match o.sense {
                    ObjSense::Minimize => "minimize",
                    ObjSense::Maximize => "maximize",
                };
                let text = match &o.label {
                    Some(l) => format!("{sense} {}: {};", l.name, expr(&o.expr)),
                    None => format!("{sense} {};", expr(&o.expr)),
                };
                self.line(0, &text);
            }
            Item::SubjectTo(b) => {
                self.line(0, if b.constraints_keyword { "constraints {" } else { "subject to {" });
                for c in &b.items {
                    self.constraint(c, 1);
                }
                self.line(0, "}");
            }
        }
    }

    fn constraint(&mut self, c: &ConstraintItem, depth: usize) {
        self.flush_comments_before(c.span().line, depth);
        match c {
            ConstraintItem::Constraint { label, expr: e, .. } => {
                let text = match label {
                    Some(l) => format!("{}: {};", l.name, expr(e)),
                    None => format!("{};", expr(e)),
                };
                self.line(depth, &text);
            }
            ConstraintItem::Forall { label, iterators, filter, braced, body, .. } => {
                let mut head = String::new();
                if let Some(l) = label {
                    write!(head, "{}: ", l.name).unwrap();
                }
                write!(head, "forall {}", iterator_list(iterators, filter.as_ref())).unwrap();
                if *braced {
                    head.push_str(" {");
                    self.line(depth, &head);
                    for b in body {
                        self.constraint(b, depth + 1);
                    }
                    self.line(depth, "}");
                } else {
                    match body.as_slice() {
                        [ConstraintItem::Constraint { label, expr: e, .. }] => {
                            match label {
                                Some(l) => write!(head, " {}: {};", l.name, expr(e)).unwrap(),
                                None => write!(head, " {};", expr(e)).unwrap(),
                            }
                            self.line(depth, &head);
                        }
                        _ => {
                            self.line(depth, &head);
                            for b in body {
                                self.constraint(b, depth + 1);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn init_text(init: &Init) -> String {
    match init {
        Init::Implicit => String::new(),
        Init::External => " = ...".into(),
        Init::Value(e) => format!(" = {}", expr(e)),
    }
}

fn index_suffix(indices: &[Expr]) -> String {
    indices.iter().map(|e| format!("[{}]", expr(e))).collect()
}

fn decl(d: &Declaration) -> String {
    let name = &d.name.name;
    match &d.kind {
        DeclKind::Param { ty, indices, init } => {
            format!("{} {name}{}{};", ty.keyword(), index_suffix(indices), init_text(init))
        }
        DeclKind::Range { init } => format!("range {name}{};", init_text(init)),
        DeclKind::Set { elem, init } => {
            let elem = match elem {
                SetElemType::Int => "int",
                SetElemType::Float => "float",
                SetElemType::String => "string",
                SetElemType::Tuple(t) => t.name.as_str(),
            };
            format!("{{{elem}}} {name}{};", init_text(init))
        }
        DeclKind::Tuple { fields } => {
            let body: Vec<String> = fields.iter().map(|f| format!("{} {};", f.ty.keyword(), f.name.name)).collect();
            format!("tuple {name} {{ {} }}", body.join(" "))
        }
        DeclKind::Dvar { ty, indices, bounds } => {
            let b = match bounds {
                Some((lo, hi)) => format!(" in {}..{}", expr_prec(lo, PREC_ADD), expr_prec(hi, PREC_ADD)),
                None => String::new(),
            };
            format!("dvar {} {name}{}{b};", ty.keyword(), index_suffix(indices))
        }
    }
}

fn iterator_list(its: &[Iterator], filter: Option<&Expr>) -> String {
    let mut s = String::from("(");
    for (k, it) in its.iter().enumerate() {
        if k > 0 {
            s.push_str(", ");
        }
        write!(s, "{} in {}", it.name.name, expr_prec(&it.domain, PREC_RANGE)).unwrap();
    }
    if let Some(f) = filter {
        write!(s, " : {}", expr(f)).unwrap();
    }
    s.push(')');
    s
}

const PREC_AND: u8 = 1;
const PREC_CMP: u8 = 2;
const PREC_RANGE: u8 = 3;
const PREC_ADD: u8 = 4;
const PREC_MUL: u8 = 5;
const PREC_UNARY: u8 = 6;
const PREC_ATOM: u8 = 7;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::And(..) => PREC_AND,
        ExprKind::Compare { .. } => PREC_CMP,
        ExprKind::Range(..) => PREC_RANGE,
        ExprKind::Binary { op: BinOp::Add | BinOp::Sub, .. } => PREC_ADD,
        ExprKind::Binary { .. } => PREC_MUL,
        // a sum's body extends to the right, so it binds like a prefix operator
        ExprKind::Neg(_) | ExprKind::Sum { .. } => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

/// Prints `e`, parenthesizing it if it binds more loosely than `min`.
fn expr_prec(e: &Expr, min: u8) -> String {
    let s = expr(e);
    if precedence(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn float_text(v: f64) -> String {
    format!("{v:?}")
}

fn string_literal(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn join(items: &[Expr], min: u8) -> String {
    items.iter().map(|e| expr_prec(e, min)).collect::<Vec<_>>().join(", ")
}

fn ends_with_sum(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Sum { .. } => true,
        ExprKind::Neg(inner) => ends_with_sum(inner),
        ExprKind::Binary { rhs, .. } => precedence(rhs) > precedence(e) && ends_with_sum(rhs),
        _ => false,
    }
}

/// Source text for a single expression.
pub fn expr(e: &Expr) -> String {
    use ExprKind::*;
    match &e.kind {
        Int(v) => v.to_string(),
        Float(v) => float_text(*v),
        Str(s) => string_literal(s),
        Name(n) => n.clone(),
        Index { base, indices } => format!("{}{}", base.name, indices.iter().map(|i| format!("[{}]", expr_prec(i, PREC_ADD))).collect::<String>()),
        Field { base, field } => format!("{}.{}", expr_prec(base, PREC_ATOM), field.name),
        Binary { op, lhs, rhs } => {
            let p = precedence(e);
            // left-associative: the right operand needs strictly tighter binding
            // a trailing sum on the left would swallow a following '*' or '/'
            let l = if p == PREC_MUL && precedence(lhs) >= p && ends_with_sum(lhs) {
                format!("({})", expr(lhs))
            } else {
                expr_prec(lhs, p)
            };
            format!("{} {} {}", l, op.symbol(), expr_prec(rhs, p + 1))
        }
        Neg(inner) => format!("-{}", expr_prec(inner, PREC_UNARY)),
        Sum { iterators, filter, body } => {
            format!("sum {} {}", iterator_list(iterators, filter.as_deref()), expr_prec(body, PREC_MUL))
        }
        Compare { first, rest } => {
            let mut s = expr_prec(first, PREC_RANGE);
            for (op, rhs) in rest {
                write!(s, " {} {}", op.symbol(), expr_prec(rhs, PREC_RANGE)).unwrap();
            }
            s
        }
        And(l, r) => format!("{} && {}", expr_prec(l, PREC_AND), expr_prec(r, PREC_CMP)),
        Paren(inner) => format!("({})", expr(inner)),
        Call { func, args } => format!("{}({})", func.name, args.iter().map(expr).collect::<Vec<_>>().join(", ")),
        Range(lo, hi) => format!("{}..{}", expr_prec(lo, PREC_ADD), expr_prec(hi, PREC_ADD)),
        ArrayLit(v) => format!("[{}]", join(v, PREC_ADD)),
        SetLit(v) => format!("{{{}}}", join(v, PREC_ADD)),
        TupleLit(v) => format!("<{}>", join(v, PREC_ADD)),
    }
}

/// Canonical source text for a model, comments included.
pub fn print_model(m: &ModelAst) -> String {
    let mut p = Printer { out: String::new(), comments: &m.comments, next_comment: 0 };
    for item in &m.items {
        p.item(item);
    }
    p.flush_comments_before(u32::MAX, 0);
    p.out
}

/// Source text for a single data literal.
pub fn data_value(v: &DataValue) -> String {
    fn list(items: &[DataValue]) -> String {
        items.iter().map(data_value).collect::<Vec<_>>().join(", ")
    }
    match &v.literal {
        DataLiteral::Int(i) => i.to_string(),
        DataLiteral::Float(f) => float_text(*f),
        DataLiteral::Str(s) => string_literal(s),
        DataLiteral::Array(items) => format!("[{}]", list(items)),
        DataLiteral::Set(items) => format!("{{{}}}", list(items)),
        DataLiteral::Tuple(items) => format!("<{}>", list(items)),
        DataLiteral::Range(lo, hi) => format!("{lo}..{hi}"),
    }
}

/// Canonical source text for a data file, comments included.
pub fn print_data(d: &DataAst) -> String {
    let mut p = Printer { out: String::new(), comments: &d.comments, next_comment: 0 };
    for a in &d.assignments {
        p.flush_comments_before(a.span.line, 0);
        let text = format!("{} = {};", a.name.name, data_value(&a.value));
        p.line(0, &text);
    }
    p.flush_comments_before(u32::MAX, 0);
    p.out
}
