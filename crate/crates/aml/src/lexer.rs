//! Tokenizer shared by `.mod` and `.dat` files.
//!
//! Comments are stripped from the token stream and returned alongside it so
//! the pretty printer can put them back.

use std::fmt;

use crate::diag::{Code, Diagnostic, SourceFile};
use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Model,
    Data,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    // keywords (model files only)
    KwInt,
    KwIntPlus,
    KwFloat,
    KwFloatPlus,
    KwBoolean,
    KwString,
    KwRange,
    KwDvar,
    KwTuple,
    KwMinimize,
    KwMaximize,
    KwSubject,
    KwTo,
    KwConstraints,
    KwForall,
    KwSum,
    KwIn,
    // punctuation
    Semi,
    Colon,
    Comma,
    Dot,
    DotDot,
    Ellipsis,
    Assign,
    EqEq,
    NotEq,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    AndAnd,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Eof,
}

impl TokenKind {
    /// Upper-case token class used in syntax error messages.
    pub fn class_name(&self) -> &'static str {
        use TokenKind::*;
        match self {
            Ident(_) => "NAME",
            Int(_) | Float(_) => "NUMBER",
            Str(_) => "STRING",
            KwInt => "INT",
            KwIntPlus => "INTPLUS",
            KwFloat => "FLOAT",
            KwFloatPlus => "FLOATPLUS",
            KwBoolean => "BOOLEAN",
            KwString => "STRINGTYPE",
            KwRange => "RANGE",
            KwDvar => "DVAR",
            KwTuple => "TUPLE",
            KwMinimize => "MINIMIZE",
            KwMaximize => "MAXIMIZE",
            KwSubject => "SUBJECT",
            KwTo => "TO",
            KwConstraints => "CONSTRAINTS",
            KwForall => "FORALL",
            KwSum => "SUM",
            KwIn => "IN",
            Semi => "SEMI",
            Colon => "COLON",
            Comma => "COMMA",
            Dot => "DOT",
            DotDot => "DOTDOT",
            Ellipsis => "ELLIPSIS",
            Assign => "EQUALS",
            EqEq => "EQ",
            NotEq => "NE",
            Le => "LE",
            Ge => "GE",
            Lt => "LT",
            Gt => "GT",
            Plus => "PLUS",
            Minus => "MINUS",
            Star => "TIMES",
            Slash => "DIVIDE",
            AndAnd => "AND",
            LParen => "LPAREN",
            RParen => "RPAREN",
            LBracket => "LBRACKET",
            RBracket => "RBRACKET",
            LBrace => "LBRACE",
            RBrace => "RBRACE",
            Eof => "EOF",
        }
    }

    fn keyword(word: &str) -> Option<TokenKind> {
        use TokenKind::*;
        Some(match word {
            "int" => KwInt,
            "float" => KwFloat,
            "boolean" => KwBoolean,
            "string" => KwString,
            "range" => KwRange,
            "dvar" => KwDvar,
            "tuple" => KwTuple,
            "minimize" => KwMinimize,
            "maximize" => KwMaximize,
            "subject" => KwSubject,
            "to" => KwTo,
            "constraints" => KwConstraints,
            "forall" => KwForall,
            "sum" => KwSum,
            "in" => KwIn,
            _ => return None,
        })
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        match self {
            Ident(s) => f.write_str(s),
            Int(v) => write!(f, "{v}"),
            Float(v) => write!(f, "{v:?}"),
            Str(s) => write!(f, "{s}"),
            KwInt => f.write_str("int"),
            KwIntPlus => f.write_str("int+"),
            KwFloat => f.write_str("float"),
            KwFloatPlus => f.write_str("float+"),
            KwBoolean => f.write_str("boolean"),
            KwString => f.write_str("string"),
            KwRange => f.write_str("range"),
            KwDvar => f.write_str("dvar"),
            KwTuple => f.write_str("tuple"),
            KwMinimize => f.write_str("minimize"),
            KwMaximize => f.write_str("maximize"),
            KwSubject => f.write_str("subject"),
            KwTo => f.write_str("to"),
            KwConstraints => f.write_str("constraints"),
            KwForall => f.write_str("forall"),
            KwSum => f.write_str("sum"),
            KwIn => f.write_str("in"),
            Semi => f.write_str(";"),
            Colon => f.write_str(":"),
            Comma => f.write_str(","),
            Dot => f.write_str("."),
            DotDot => f.write_str(".."),
            Ellipsis => f.write_str("..."),
            Assign => f.write_str("="),
            EqEq => f.write_str("=="),
            NotEq => f.write_str("!="),
            Le => f.write_str("<="),
            Ge => f.write_str(">="),
            Lt => f.write_str("<"),
            Gt => f.write_str(">"),
            Plus => f.write_str("+"),
            Minus => f.write_str("-"),
            Star => f.write_str("*"),
            Slash => f.write_str("/"),
            AndAnd => f.write_str("&&"),
            LParen => f.write_str("("),
            RParen => f.write_str(")"),
            LBracket => f.write_str("["),
            RBracket => f.write_str("]"),
            LBrace => f.write_str("{"),
            RBrace => f.write_str("}"),
            Eof => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// A source comment including its delimiters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub span: Span,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexed {
    pub source: SourceKind,
    /// Always terminated by an [`TokenKind::Eof`] token.
    pub tokens: Vec<Token>,
    pub comments: Vec<Comment>,
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    kind: SourceKind,
    _src: &'a str,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, code: Code, span: Span, args: &[(&str, &str)]) -> Diagnostic {
        let file = match self.kind {
            SourceKind::Model => SourceFile::Model,
            SourceKind::Data => SourceFile::Data,
        };
        Diagnostic::at(code, span, args).in_file(file)
    }
}

/// Splits `source` into tokens.
///
/// Keywords are recognized only for [`SourceKind::Model`]; in data files every
/// word is a `NAME`.
pub fn tokenize(source: &str, kind: SourceKind) -> Result<Lexed, Diagnostic> {
    let mut cur = Cursor { chars: source.chars().collect(), pos: 0, line: 1, col: 1, kind, _src: source };
    let mut tokens = Vec::new();
    let mut comments = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, col, start) = (cur.line, cur.col, cur.pos);
        let here = |len: usize| Span::new(line, col, len as u32);

        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('/') {
            while let Some(ch) = cur.peek() {
                if ch == '\n' {
                    break;
                }
                cur.bump();
            }
            let text: String = cur.chars[start..cur.pos].iter().collect();
            let text = text.trim_end().to_string();
            comments.push(Comment { span: here(text.chars().count()), text });
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            cur.bump();
            cur.bump();
            let mut closed = false;
            while let Some(ch) = cur.bump() {
                if ch == '*' && cur.peek() == Some('/') {
                    cur.bump();
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err(cur.error(Code::UnterminatedComment, here(2), &[]));
            }
            let text: String = cur.chars[start..cur.pos].iter().collect();
            comments.push(Comment { span: here(cur.pos - start), text });
            continue;
        }

        let kind_tok = if c.is_ascii_alphabetic() || c == '_' {
            while cur.peek().is_some_and(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                cur.bump();
            }
            let word: String = cur.chars[start..cur.pos].iter().collect();
            let kw = if kind == SourceKind::Model { TokenKind::keyword(&word) } else { None };
            match kw {
                Some(TokenKind::KwInt) if cur.peek() == Some('+') => {
                    cur.bump();
                    TokenKind::KwIntPlus
                }
                Some(TokenKind::KwFloat) if cur.peek() == Some('+') => {
                    cur.bump();
                    TokenKind::KwFloatPlus
                }
                Some(k) => k,
                None => TokenKind::Ident(word),
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur, here)?
        } else if c == '"' {
            cur.bump();
            let mut value = String::new();
            loop {
                match cur.peek() {
                    None | Some('\n') => return Err(cur.error(Code::UnterminatedString, here(cur.pos - start), &[])),
                    Some('"') => {
                        cur.bump();
                        break;
                    }
                    Some('\\') => {
                        cur.bump();
                        match cur.bump() {
                            Some('n') => value.push('\n'),
                            Some('t') => value.push('\t'),
                            Some(other @ ('"' | '\\')) => value.push(other),
                            Some(other) => {
                                value.push('\\');
                                value.push(other);
                            }
                            None => return Err(cur.error(Code::UnterminatedString, here(cur.pos - start), &[])),
                        }
                    }
                    Some(ch) => {
                        value.push(ch);
                        cur.bump();
                    }
                }
            }
            TokenKind::Str(value)
        } else {
            let two = cur.peek_at(1);
            let three = cur.peek_at(2);
            let (tok, len) = match (c, two, three) {
                ('.', Some('.'), Some('.')) => (TokenKind::Ellipsis, 3),
                ('.', Some('.'), _) => (TokenKind::DotDot, 2),
                ('.', _, _) => (TokenKind::Dot, 1),
                ('=', Some('='), _) => (TokenKind::EqEq, 2),
                ('=', _, _) => (TokenKind::Assign, 1),
                ('!', Some('='), _) => (TokenKind::NotEq, 2),
                ('<', Some('='), _) => (TokenKind::Le, 2),
                ('>', Some('='), _) => (TokenKind::Ge, 2),
                ('<', _, _) => (TokenKind::Lt, 1),
                ('>', _, _) => (TokenKind::Gt, 1),
                ('&', Some('&'), _) => (TokenKind::AndAnd, 2),
                (';', _, _) => (TokenKind::Semi, 1),
                (':', _, _) => (TokenKind::Colon, 1),
                (',', _, _) => (TokenKind::Comma, 1),
                ('+', _, _) => (TokenKind::Plus, 1),
                ('-', _, _) => (TokenKind::Minus, 1),
                ('*', _, _) => (TokenKind::Star, 1),
                ('/', _, _) => (TokenKind::Slash, 1),
                ('(', _, _) => (TokenKind::LParen, 1),
                (')', _, _) => (TokenKind::RParen, 1),
                ('[', _, _) => (TokenKind::LBracket, 1),
                (']', _, _) => (TokenKind::RBracket, 1),
                ('{', _, _) => (TokenKind::LBrace, 1),
                ('}', _, _) => (TokenKind::RBrace, 1),
                _ => {
                    let ch = c.to_string();
                    return Err(cur.error(Code::IllegalChar, here(1), &[("ch", &ch)]));
                }
            };
            for _ in 0..len {
                cur.bump();
            }
            tok
        };
        let len = (cur.pos - start) as u32;
        tokens.push(Token { kind: kind_tok, span: Span::new(line, col, len) });
    }
    tokens.push(Token { kind: TokenKind::Eof, span: Span::new(cur.line, cur.col, 0) });
    Ok(Lexed { source: kind, tokens, comments })
}

fn lex_number(cur: &mut Cursor<'_>, here: impl Fn(usize) -> Span) -> Result<TokenKind, Diagnostic> {
    let start = cur.pos;
    let mut is_float = false;
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    // a '.' followed by another '.' belongs to a range operator
    if cur.peek() == Some('.') && cur.peek_at(1) != Some('.') {
        is_float = true;
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        is_float = true;
        cur.bump();
        if matches!(cur.peek(), Some('+' | '-')) {
            cur.bump();
        }
        let digits_start = cur.pos;
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
        if cur.pos == digits_start {
            while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                cur.bump();
            }
            let text: String = cur.chars[start..cur.pos].iter().collect();
            return Err(cur.error(Code::BadNumber, here(cur.pos - start), &[("text", &text)]));
        }
    }
    // digits running straight into letters, e.g. `3x`
    if cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
        while cur.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            cur.bump();
        }
        let text: String = cur.chars[start..cur.pos].iter().collect();
        return Err(cur.error(Code::BadNumber, here(cur.pos - start), &[("text", &text)]));
    }
    let text: String = cur.chars[start..cur.pos].iter().collect();
    if is_float {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(TokenKind::Float)
            .ok_or_else(|| cur.error(Code::BadNumber, here(cur.pos - start), &[("text", &text)]))
    } else {
        text.parse::<i64>()
            .map(TokenKind::Int)
            .map_err(|_| cur.error(Code::BadNumber, here(cur.pos - start), &[("text", &text)]))
    }
}
