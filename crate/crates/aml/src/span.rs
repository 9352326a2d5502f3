use serde::Serialize;

/// 1-based source position plus length in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl Span {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        Span { line, column, length }
    }

    /// Span starting at `self` and covering through the end of `end` when on the same line.
    pub fn to(self, end: Span) -> Span {
        if end.line == self.line && end.column >= self.column {
            Span { length: end.column + end.length - self.column, ..self }
        } else {
            self
        }
    }
}
