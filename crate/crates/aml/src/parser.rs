//! Recursive-descent parsers for model and data files.
//!
//! Both parsers stop at the first syntax error. Semantic problems (chained
//! comparisons, missing labels, duplicate objectives, ...) are accepted here
//! and reported later by the analyzer so they can carry a line number and a
//! specific remedy.

use crate::ast::*;
use crate::diag::{Code, Diagnostic, SourceFile};
use crate::lexer::{tokenize, Lexed, SourceKind, Token, TokenKind};
use crate::span::Span;

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    next_id: ExprId,
    kind: SourceKind,
}

impl<'a> Parser<'a> {
    fn new(lexed: &'a Lexed) -> Self {
        Parser { tokens: &lexed.tokens, pos: 0, next_id: 1, kind: lexed.source }
    }

    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos].kind
    }

    fn peek_at(&self, k: usize) -> &TokenKind {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, k: &TokenKind) -> bool {
        self.peek() == k
    }

    fn eat(&mut self, k: &TokenKind) -> bool {
        if self.at(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn id(&mut self) -> ExprId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn mk(&mut self, kind: ExprKind, start: Span) -> Expr {
        let id = self.id();
        Expr::new(id, kind, start.to(self.prev_span()))
    }

    /// Syntax error at the current token; at end of input the previous token is blamed.
    fn error(&self, hint: &str) -> Diagnostic {
        let mut tok = &self.tokens[self.pos];
        if tok.kind == TokenKind::Eof && self.pos > 0 {
            tok = &self.tokens[self.pos - 1];
        }
        let kind = tok.kind.class_name();
        let value = tok.kind.to_string();
        match self.kind {
            SourceKind::Model => Diagnostic::at(Code::ModelSyntax, tok.span, &[("kind", kind), ("value", &value), ("hint", hint)])
                .in_file(SourceFile::Model),
            SourceKind::Data => {
                Diagnostic::at(Code::DataSyntax, tok.span, &[("kind", kind), ("value", &value)]).in_file(SourceFile::Data)
            }
        }
    }

    fn expect(&mut self, k: &TokenKind, hint: &str) -> PResult<Span> {
        if self.at(k) {
            Ok(self.bump().span)
        } else {
            Err(self.error(hint))
        }
    }

    fn ident(&mut self, hint: &str) -> PResult<Ident> {
        match self.peek().clone() {
            TokenKind::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident::new(name, span))
            }
            _ => Err(self.error(hint)),
        }
    }

    fn labelled(&self) -> bool {
        matches!(self.peek(), TokenKind::Ident(_)) && matches!(self.peek_at(1), TokenKind::Colon)
    }

    // ----- model -----

    fn model(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        while !self.at(&TokenKind::Eof) {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> PResult<Item> {
        use TokenKind::*;
        let start = self.span();
        match self.peek() {
            KwTuple => self.tuple_decl().map(Item::Decl),
            LBrace => self.set_decl().map(Item::Decl),
            KwRange => self.range_decl().map(Item::Decl),
            KwInt | KwIntPlus | KwFloat | KwFloatPlus | KwBoolean | KwString => self.param_decl().map(Item::Decl),
            KwDvar => self.dvar_decl().map(Item::Decl),
            KwMinimize | KwMaximize => {
                let sense = if self.bump().kind == KwMinimize { ObjSense::Minimize } else { ObjSense::Maximize };
                let label = if self.labelled() {
                    let l = self.ident("expected a label")?;
                    self.bump();
                    Some(l)
                } else {
                    None
                };
                let expr = self.expr()?;
                self.expect(&Semi, "expected ';' after the objective")?;
                Ok(Item::Objective(Objective { sense, label, expr, span: start.to(self.prev_span()) }))
            }
            KwSubject | KwConstraints => {
                let constraints_keyword = self.bump().kind == KwConstraints;
                if !constraints_keyword {
                    self.expect(&KwTo, "write 'subject to {'")?;
                }
                self.expect(&LBrace, "the constraint block opens with '{'")?;
                let mut items = Vec::new();
                while !self.at(&RBrace) {
                    if self.at(&Eof) {
                        return Err(self.error("the constraint block is missing its closing '}'"));
                    }
                    items.push(self.constraint_item()?);
                }
                self.bump();
                Ok(Item::SubjectTo(ConstraintBlock { constraints_keyword, items, span: start }))
            }
            _ => Err(self.error("expected a declaration, an objective or a 'subject to' block")),
        }
    }

    fn scalar_type(&mut self) -> Option<ScalarType> {
        use TokenKind::*;
        let ty = match self.peek() {
            KwInt => ScalarType::Int,
            KwIntPlus => ScalarType::IntPlus,
            KwFloat => ScalarType::Float,
            KwFloatPlus => ScalarType::FloatPlus,
            KwBoolean => ScalarType::Boolean,
            KwString => ScalarType::String,
            _ => return None,
        };
        self.bump();
        Some(ty)
    }

    fn tuple_decl(&mut self) -> PResult<Declaration> {
        let start = self.bump().span;
        let name = self.ident("expected the tuple type name")?;
        self.expect(&TokenKind::LBrace, "tuple fields are listed in '{ ... }'")?;
        let mut fields = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let Some(ty) = self.scalar_type() else {
                return Err(self.error("each tuple field needs a type: int, float, boolean or string"));
            };
            let fname = self.ident("expected a field name")?;
            self.expect(&TokenKind::Semi, "expected ';' after the tuple field")?;
            fields.push(TupleField { ty, name: fname });
        }
        self.bump();
        Ok(Declaration { name, kind: DeclKind::Tuple { fields }, span: start.to(self.prev_span()) })
    }

    fn init(&mut self, allow_range: bool) -> PResult<Init> {
        if !self.eat(&TokenKind::Assign) {
            return Ok(Init::Implicit);
        }
        if self.eat(&TokenKind::Ellipsis) {
            return Ok(Init::External);
        }
        let e = if allow_range { self.domain()? } else { self.expr()? };
        Ok(Init::Value(e))
    }

    fn set_decl(&mut self) -> PResult<Declaration> {
        use TokenKind::*;
        let start = self.bump().span;
        let elem = match self.peek().clone() {
            KwInt => SetElemType::Int,
            KwFloat => SetElemType::Float,
            KwString => SetElemType::String,
            Ident(n) => SetElemType::Tuple(crate::ast::Ident::new(n, self.span())),
            _ => return Err(self.error("set element types are int, float, string or a tuple type")),
        };
        self.bump();
        self.expect(&RBrace, "expected '}' after the set element type")?;
        let name = self.ident("expected the set name")?;
        let init = self.init(true)?;
        self.expect(&Semi, "expected ';' after the declaration")?;
        Ok(Declaration { name, kind: DeclKind::Set { elem, init }, span: start.to(self.prev_span()) })
    }

    fn range_decl(&mut self) -> PResult<Declaration> {
        let start = self.bump().span;
        let name = self.ident("expected the range name")?;
        let init = self.init(true)?;
        self.expect(&TokenKind::Semi, "expected ';' after the range declaration")?;
        Ok(Declaration { name, kind: DeclKind::Range { init }, span: start.to(self.prev_span()) })
    }

    fn index_sets(&mut self) -> PResult<Vec<Expr>> {
        let mut indices = Vec::new();
        while self.eat(&TokenKind::LBracket) {
            loop {
                indices.push(self.domain()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(&TokenKind::RBracket, "expected ']' after the index set")?;
        }
        Ok(indices)
    }

    fn param_decl(&mut self) -> PResult<Declaration> {
        let start = self.span();
        let ty = self.scalar_type().expect("caller checked the type keyword");
        let name = self.ident("expected the parameter name")?;
        let indices = self.index_sets()?;
        let init = self.init(false)?;
        self.expect(&TokenKind::Semi, "expected ';' after the declaration")?;
        Ok(Declaration { name, kind: DeclKind::Param { ty, indices, init }, span: start.to(self.prev_span()) })
    }

    fn dvar_decl(&mut self) -> PResult<Declaration> {
        let start = self.bump().span;
        let ty = match self.scalar_type() {
            Some(ScalarType::String) | None => {
                return Err(self.error("decision variables are float, float+, int, int+ or boolean"));
            }
            Some(t) => t,
        };
        let name = self.ident("expected the variable name")?;
        let indices = self.index_sets()?;
        let bounds = if self.eat(&TokenKind::KwIn) {
            let lo = self.additive()?;
            self.expect(&TokenKind::DotDot, "variable bounds are written 'in lo..hi'")?;
            let hi = self.additive()?;
            Some((lo, hi))
        } else {
            None
        };
        self.expect(&TokenKind::Semi, "expected ';' after the declaration")?;
        Ok(Declaration { name, kind: DeclKind::Dvar { ty, indices, bounds }, span: start.to(self.prev_span()) })
    }

    fn constraint_item(&mut self) -> PResult<ConstraintItem> {
        let start = self.span();
        let label = if self.labelled() {
            let l = self.ident("expected a label")?;
            self.bump();
            Some(l)
        } else {
            None
        };
        if self.at(&TokenKind::KwForall) {
            return self.forall(label, start);
        }
        let expr = self.expr()?;
        if self.at(&TokenKind::Assign) {
            let span = self.span();
            return Err(Diagnostic::at(Code::AssignInConstraint, span, &[]).in_file(SourceFile::Model));
        }
        self.expect(&TokenKind::Semi, "expected ';' after the constraint")?;
        Ok(ConstraintItem::Constraint { label, expr, span: start.to(self.prev_span()) })
    }

    fn forall(&mut self, label: Option<Ident>, start: Span) -> PResult<ConstraintItem> {
        self.bump();
        let (iterators, filter) = self.iterator_list()?;
        let header = start.to(self.prev_span());
        let (braced, body) = if self.eat(&TokenKind::LBrace) {
            let mut body = Vec::new();
            while !self.at(&TokenKind::RBrace) {
                if self.at(&TokenKind::Eof) {
                    return Err(self.error("the forall block is missing its closing '}'"));
                }
                body.push(self.constraint_item()?);
            }
            self.bump();
            (true, body)
        } else {
            (false, vec![self.constraint_item()?])
        };
        Ok(ConstraintItem::Forall { label, iterators, filter, braced, body, span: header })
    }

    fn iterator_list(&mut self) -> PResult<(Vec<Iterator>, Option<Expr>)> {
        self.expect(&TokenKind::LParen, "iterators are written '(i in I)'")?;
        let mut iterators = Vec::new();
        loop {
            let name = self.ident("expected an index name")?;
            self.expect(&TokenKind::KwIn, "iterators are written 'i in I'")?;
            let domain = self.domain()?;
            iterators.push(Iterator { name, domain });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        let filter = if self.eat(&TokenKind::Colon) { Some(self.expr()?) } else { None };
        self.expect(&TokenKind::RParen, "expected ')' to close the iterator list")?;
        Ok((iterators, filter))
    }

    // ----- expressions -----

    /// `additive ('..' additive)?`
    fn domain(&mut self) -> PResult<Expr> {
        let start = self.span();
        let lo = self.additive()?;
        if self.eat(&TokenKind::DotDot) {
            let hi = self.additive()?;
            return Ok(self.mk(ExprKind::Range(Box::new(lo), Box::new(hi)), start));
        }
        Ok(lo)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.comparison()?;
        while self.eat(&TokenKind::AndAnd) {
            let rhs = self.comparison()?;
            lhs = self.mk(ExprKind::And(Box::new(lhs), Box::new(rhs)), start);
        }
        Ok(lhs)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            TokenKind::Le => CmpOp::Le,
            TokenKind::Ge => CmpOp::Ge,
            TokenKind::EqEq => CmpOp::Eq,
            TokenKind::Lt => CmpOp::Lt,
            TokenKind::Gt => CmpOp::Gt,
            TokenKind::NotEq => CmpOp::Ne,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let start = self.span();
        let first = self.additive()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            self.bump();
            rest.push((op, self.additive()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(self.mk(ExprKind::Compare { first: Box::new(first), rest }, start))
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = self.mk(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, start);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let start = self.span();
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = self.mk(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, start);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.eat(&TokenKind::Minus) {
            let inner = self.unary()?;
            return Ok(self.mk(ExprKind::Neg(Box::new(inner)), start));
        }
        let mut e = self.primary()?;
        while self.eat(&TokenKind::Dot) {
            let field = self.ident("expected a field name after '.'")?;
            e = self.mk(ExprKind::Field { base: Box::new(e), field }, start);
        }
        Ok(e)
    }

    fn list(&mut self, close: &TokenKind, hint: &str) -> PResult<Vec<Expr>> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.additive()?);
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(close, hint)?;
        Ok(items)
    }

    fn primary(&mut self) -> PResult<Expr> {
        use TokenKind::*;
        let start = self.span();
        match self.peek().clone() {
            Int(v) => {
                self.bump();
                Ok(self.mk(ExprKind::Int(v), start))
            }
            Float(v) => {
                self.bump();
                Ok(self.mk(ExprKind::Float(v), start))
            }
            Str(s) => {
                self.bump();
                Ok(self.mk(ExprKind::Str(s), start))
            }
            Ident(name) => {
                self.bump();
                if self.at(&LBracket) {
                    let base = crate::ast::Ident::new(name, start);
                    let mut indices = Vec::new();
                    while self.eat(&LBracket) {
                        loop {
                            indices.push(self.additive()?);
                            if !self.eat(&Comma) {
                                break;
                            }
                        }
                        self.expect(&RBracket, "expected ']' after the index")?;
                    }
                    Ok(self.mk(ExprKind::Index { base, indices }, start))
                } else if self.eat(&LParen) {
                    let func = crate::ast::Ident::new(name, start);
                    let mut args = Vec::new();
                    if !self.eat(&RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Comma) {
                                break;
                            }
                        }
                        self.expect(&RParen, "expected ')' after the function arguments")?;
                    }
                    Ok(self.mk(ExprKind::Call { func, args }, start))
                } else {
                    Ok(self.mk(ExprKind::Name(name), start))
                }
            }
            LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&RParen, "expected ')'")?;
                Ok(self.mk(ExprKind::Paren(Box::new(inner)), start))
            }
            KwSum => {
                self.bump();
                let (iterators, filter) = self.iterator_list()?;
                let body = self.term()?;
                Ok(self.mk(ExprKind::Sum { iterators, filter: filter.map(Box::new), body: Box::new(body) }, start))
            }
            LBracket => {
                self.bump();
                let items = self.list(&RBracket, "expected ']' to close the array literal")?;
                Ok(self.mk(ExprKind::ArrayLit(items), start))
            }
            LBrace => {
                self.bump();
                let items = self.list(&RBrace, "expected '}' to close the set literal")?;
                Ok(self.mk(ExprKind::SetLit(items), start))
            }
            Lt => {
                self.bump();
                let items = self.list(&Gt, "expected '>' to close the tuple literal")?;
                Ok(self.mk(ExprKind::TupleLit(items), start))
            }
            _ => Err(self.error("expected an expression")),
        }
    }

    // ----- data -----

    fn data(&mut self) -> PResult<Vec<Assignment>> {
        let mut out = Vec::new();
        while !self.at(&TokenKind::Eof) {
            let start = self.span();
            let name = self.ident("")?;
            self.expect(&TokenKind::Assign, "")?;
            let value = self.data_value()?;
            self.expect(&TokenKind::Semi, "")?;
            out.push(Assignment { name, value, span: start.to(self.prev_span()) });
        }
        Ok(out)
    }

    fn data_list(&mut self, close: &TokenKind) -> PResult<Vec<DataValue>> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.data_value()?);
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.expect(close, "")?;
        Ok(items)
    }

    fn data_value(&mut self) -> PResult<DataValue> {
        use TokenKind::*;
        let start = self.span();
        let negative = self.eat(&Minus);
        let literal = match self.peek().clone() {
            Int(v) => {
                self.bump();
                let v = if negative { -v } else { v };
                if !negative && self.eat(&DotDot) {
                    let hi_neg = self.eat(&Minus);
                    match self.peek().clone() {
                        Int(hi) => {
                            self.bump();
                            DataLiteral::Range(v, if hi_neg { -hi } else { hi })
                        }
                        _ => return Err(self.error("")),
                    }
                } else {
                    DataLiteral::Int(v)
                }
            }
            Float(v) => {
                self.bump();
                DataLiteral::Float(if negative { -v } else { v })
            }
            _ if negative => return Err(self.error("")),
            Str(s) => {
                self.bump();
                DataLiteral::Str(s)
            }
            LBracket => {
                self.bump();
                DataLiteral::Array(self.data_list(&RBracket)?)
            }
            LBrace => {
                self.bump();
                DataLiteral::Set(self.data_list(&RBrace)?)
            }
            Lt => {
                self.bump();
                DataLiteral::Tuple(self.data_list(&Gt)?)
            }
            _ => return Err(self.error("")),
        };
        Ok(DataValue { literal, span: start.to(self.prev_span()) })
    }
}

/// Parses a token stream produced by `tokenize(_, SourceKind::Model)`.
pub fn parse_model(lexed: &Lexed) -> Result<ModelAst, Diagnostic> {
    let mut p = Parser::new(lexed);
    let items = p.model()?;
    Ok(ModelAst { items, comments: lexed.comments.clone() })
}

/// Parses a token stream produced by `tokenize(_, SourceKind::Data)`.
///
/// Beyond syntax, this rejects a name assigned twice and non-rectangular
/// array literals, since both are properties of the data file alone.
pub fn parse_data(lexed: &Lexed) -> Result<DataAst, Diagnostic> {
    let mut p = Parser::new(lexed);
    let assignments = p.data()?;
    for (i, a) in assignments.iter().enumerate() {
        if let Some(first) = assignments[..i].iter().find(|b| b.name.name == a.name.name) {
            let first_line = first.name.span.line.to_string();
            return Err(Diagnostic::at(Code::DataDuplicate, a.name.span, &[("name", &a.name.name), ("first", &first_line)])
                .in_file(SourceFile::Data));
        }
        if !a.value.is_rectangular() {
            return Err(Diagnostic::at(Code::DataRagged, a.value.span, &[("name", &a.name.name)]).in_file(SourceFile::Data));
        }
    }
    Ok(DataAst { assignments, comments: lexed.comments.clone() })
}

/// Tokenizes and parses model source text.
pub fn parse_model_source(source: &str) -> Result<ModelAst, Diagnostic> {
    parse_model(&tokenize(source, SourceKind::Model)?)
}

/// Tokenizes and parses data source text.
pub fn parse_data_source(source: &str) -> Result<DataAst, Diagnostic> {
    parse_data(&tokenize(source, SourceKind::Data)?)
}
