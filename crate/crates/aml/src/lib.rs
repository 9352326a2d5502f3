//! Front end for a small OPL-style algebraic modelling language: `.mod`
//! model files and `.dat` data files compile to a [`FlatModel`] that the
//! embedded solver can optimize.

pub mod ast;
pub mod compile;
pub mod diag;
pub mod instantiate;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod semantics;
pub mod span;

pub use compile::{compile, Compilation, Stage};
pub use diag::{diagnostic_catalog, Code, Diagnostic, DiagnosticRecord, Severity, SourceFile};
pub use syntagm_solver::FlatModel;

/// Reference for the modelling language, included verbatim in prompts.
pub const GRAMMAR_REFERENCE: &str = include_str!("../grammar.md");
