//! The full model+data pipeline: tokenize, parse, analyze, bind, expand.

use syntagm_solver::FlatModel;

use crate::ast::{DataAst, ModelAst};
use crate::diag::{sort_by_line, Diagnostic};
use crate::instantiate::{bind_data, expand, DataEnvironment, NameMap};
use crate::parser::{parse_data_source, parse_model_source};
use crate::semantics::{analyze, TypedModel};

/// Furthest pipeline stage that completed without errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    None,
    Parsed,
    Analyzed,
    Bound,
    Expanded,
}

/// Everything produced by one compile, including partial results on failure.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub model: Option<ModelAst>,
    pub data: Option<DataAst>,
    pub typed: Option<TypedModel>,
    pub env: Option<DataEnvironment>,
    pub flat: Option<FlatModel>,
    pub names: Option<NameMap>,
    /// Errors and warnings from every stage that ran.
    pub diagnostics: Vec<Diagnostic>,
    pub stage: Stage,
}

impl Compilation {
    /// True when the model expanded with no error diagnostics.
    pub fn succeeded(&self) -> bool {
        self.stage == Stage::Expanded
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| !d.is_error())
    }

    /// One rendered diagnostic per line, errors first.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for d in self.errors().chain(self.warnings()) {
            out.push_str(&d.to_string());
            out.push('\n');
        }
        out
    }
}

/// Compiles model and data source text.
///
/// Syntax errors in both files are reported together; later stages run only
/// when every earlier one succeeded.
pub fn compile(model_src: &str, data_src: &str) -> Compilation {
    let mut c = Compilation {
        model: None,
        data: None,
        typed: None,
        env: None,
        flat: None,
        names: None,
        diagnostics: Vec::new(),
        stage: Stage::None,
    };
    match parse_model_source(model_src) {
        Ok(m) => c.model = Some(m),
        Err(d) => c.diagnostics.push(d),
    }
    match parse_data_source(data_src) {
        Ok(d) => c.data = Some(d),
        Err(d) => c.diagnostics.push(d),
    }
    let (Some(model), Some(data)) = (&c.model, &c.data) else {
        return c;
    };
    c.stage = Stage::Parsed;

    let typed = match analyze(model, data) {
        Ok(t) => t,
        Err(diags) => {
            c.diagnostics = diags;
            return c;
        }
    };
    c.diagnostics.extend(typed.warnings.iter().cloned());
    c.stage = Stage::Analyzed;

    let env = match bind_data(&typed, data) {
        Ok(env) => env,
        Err(diags) => {
            c.diagnostics.extend(diags);
            sort_by_line(&mut c.diagnostics);
            c.typed = Some(typed);
            return c;
        }
    };
    c.diagnostics.extend(env.warnings.iter().cloned());
    c.stage = Stage::Bound;

    match expand(&typed, &env) {
        Ok((flat, names)) => {
            c.flat = Some(flat);
            c.names = Some(names);
            c.stage = Stage::Expanded;
        }
        Err(diags) => c.diagnostics.extend(diags),
    }
    sort_by_line(&mut c.diagnostics);
    c.typed = Some(typed);
    c.env = Some(env);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Code;

    #[test]
    fn minimal_example_compiles() {
        let c = compile(
            "// minimal example\nfloat a;\nfloat b;\ndvar float x;\nminimize z: a*x;\nsubject to {\n  c1: b*x >= 0;\n}\n",
            "a = 10;\n b = 5;",
        );
        assert!(c.succeeded(), "{}", c.report());
        let flat = c.flat.unwrap();
        assert_eq!(flat.objective.coeffs, vec![(0, 10.0)]);
        assert_eq!(flat.rows[0].coeffs, vec![(0, 5.0)]);
    }

    #[test]
    fn both_syntax_errors_reported() {
        let c = compile("float a\n", "demand");
        assert_eq!(c.stage, Stage::None);
        let codes: Vec<Code> = c.diagnostics.iter().map(|d| d.code).collect();
        assert_eq!(codes, vec![Code::ModelSyntax, Code::DataSyntax]);
    }

    #[test]
    fn bind_failure_keeps_typed_model() {
        let c = compile("int n = ...;\ndvar float x;\nminimize z: n * x;", "n = 1.5;");
        assert_eq!(c.stage, Stage::Analyzed);
        assert!(c.typed.is_some());
        assert_eq!(c.errors().next().unwrap().code, Code::DataType);
    }
}
