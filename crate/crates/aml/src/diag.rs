//! Coded, line-anchored compiler diagnostics.
//!
//! Every diagnostic the toolchain emits carries a [`Code`] from the fixed
//! catalog below. Each code owns a message template and a remedy template;
//! placeholders of the form `{key}` are filled in at the emission site, so
//! the catalog doubles as documentation of every message the compiler can
//! produce.

use std::fmt;

use serde::Serialize;

use crate::span::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

macro_rules! catalog {
    ($( $variant:ident => $id:literal, $sev:ident, $msg:literal, $remedy:literal; )*) => {
        /// Stable diagnostic identifier.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Code {
            $($variant),*
        }

        impl Code {
            pub const ALL: &'static [Code] = &[$(Code::$variant),*];

            pub fn id(self) -> &'static str {
                match self { $(Code::$variant => $id),* }
            }

            pub fn severity(self) -> Severity {
                match self { $(Code::$variant => Severity::$sev),* }
            }

            pub fn message_template(self) -> &'static str {
                match self { $(Code::$variant => $msg),* }
            }

            pub fn remedy_template(self) -> &'static str {
                match self { $(Code::$variant => $remedy),* }
            }
        }
    };
}

catalog! {
    // lexical
    IllegalChar => "LEX-ILLEGAL-CHAR", Error,
        "Illegal character '{ch}'.",
        "Remove the character; only ASCII operators, identifiers, numbers and quoted strings are allowed outside comments.";
    UnterminatedString => "LEX-UNTERMINATED-STRING", Error,
        "Unterminated string literal.",
        "Close the string with a double quote on the same line.";
    UnterminatedComment => "LEX-UNTERMINATED-COMMENT", Error,
        "Unterminated block comment.",
        "Close the comment with '*/'.";
    BadNumber => "LEX-BAD-NUMBER", Error,
        "Malformed numeric literal '{text}'.",
        "Write numbers as 12, 1.5 or 2.5e-3; integers must fit in 64 bits.";

    // syntax
    ModelSyntax => "SYN-MODEL", Error,
        "Syntax error in .mod file at or near token {kind}, value '{value}'.",
        "Check the statement against the grammar reference; {hint}.";
    DataSyntax => "SYN-DATA", Error,
        "Syntax error in .dat file at or near token {kind}, value '{value}'.",
        "Each .dat entry must have the form 'name = value;' using literal values only; check for a missing '=' or ';' near this token.";
    AssignInConstraint => "SYN-ASSIGN-IN-CONSTRAINT", Error,
        "'=' is not a relational operator.",
        "Write equality constraints with '==', e.g. 'balance: x + y == 10;'.";

    // declarations
    Undeclared => "SEM-UNDECLARED", Error,
        "Undeclared symbol '{name}'.",
        "Declare '{name}' in the model before it is used, or correct the spelling.";
    DuplicateDecl => "SEM-DUPLICATE-DECL", Error,
        "Symbol '{name}' is declared more than once (first declared on line {first}).",
        "Keep a single declaration of '{name}' and rename or delete the other.";
    IndexShadows => "SEM-INDEX-SHADOWS", Error,
        "Index '{name}' shadows another symbol with the same name.",
        "Rename the index, e.g. 'forall ({name}2 in ...)'.";
    UnknownTupleType => "SEM-UNKNOWN-TUPLE-TYPE", Error,
        "Unknown tuple type '{name}'.",
        "Declare it first with 'tuple {name} {{ int a; float b; }}' or fix the spelling.";
    DuplicateTupleField => "SEM-DUPLICATE-TUPLE-FIELD", Error,
        "Tuple type '{tuple}' declares field '{field}' more than once.",
        "Give every field of '{tuple}' a distinct name.";
    UnknownField => "SEM-UNKNOWN-FIELD", Error,
        "Tuple type '{tuple}' has no field '{field}'.",
        "Use one of the declared fields: {fields}.";
    FieldOnNonTuple => "SEM-FIELD-ON-NON-TUPLE", Error,
        "Field access '.{field}' on a value of type {ty}, which is not a tuple.",
        "Only tuple-valued expressions (e.g. an index ranging over a tuple set) have fields.";

    // ranges
    RangeNonInteger => "SEM-RANGE-NONINT", Error,
        "Range bounds must be integer-valued.",
        "Use integer expressions for both bounds, e.g. 'range T = 1..N;' with 'int N'.";
    RangeInData => "SEM-RANGE-IN-DAT", Error,
        "Range '{name}' was supplied in the data file, but ranges used for indexing must be declared with explicit bounds in the model file.",
        "Declare it in the model (e.g., 'range {name} = 1..N;') and remove it from the .dat.";
    RangeExternal => "SEM-RANGE-EXTERNAL", Error,
        "Range '{name}' has no bounds in the model file.",
        "Declare explicit bounds in the model, e.g. 'int N = ...; range {name} = 1..N;', and supply N in the .dat.";
    RangeEmpty => "SEM-RANGE-EMPTY", Warning,
        "Range '{name}' is empty ({lo}..{hi}).",
        "Check the bounds; everything indexed by '{name}' will have no elements.";
    RangeNonConstant => "SEM-RANGE-NONCONST", Error,
        "Range bounds must not depend on decision variables.",
        "Use parameters or literals for range bounds.";

    // types
    TypeMismatch => "SEM-TYPE-MISMATCH", Error,
        "Type mismatch: expected {expected}, found {found}.",
        "Change the expression or the declaration so that both have type {expected}.";
    StringArithmetic => "SEM-STRING-ARITH", Error,
        "String values cannot be used in arithmetic.",
        "Use a numeric parameter here; strings are only valid as set elements and indices.";
    SetElementType => "SEM-SET-ELEM-TYPE", Error,
        "Set '{name}' has element type {expected} but contains {found} element {value}.",
        "Make every element of '{name}' a {expected}, or change the set declaration.";
    SetDuplicateElement => "SEM-SET-DUP-ELEM", Error,
        "Set '{name}' contains the element {value} more than once.",
        "Remove the duplicate element; set elements must be distinct.";
    TupleArity => "SEM-TUPLE-ARITY", Error,
        "Tuple type '{tuple}' has {expected} fields but a literal provides {found}.",
        "Write every '{tuple}' literal as <v1, ..., v{expected}> in field declaration order.";
    TupleFieldType => "SEM-TUPLE-FIELD-TYPE", Error,
        "Field '{field}' of tuple type '{tuple}' expects {expected}, got {value}.",
        "Supply a {expected} value for '{field}'.";

    // indexing
    IndexArity => "SEM-INDEX-ARITY", Error,
        "'{name}' is declared with {expected} index(es) but is used with {found}.",
        "Index '{name}' with exactly {expected} subscript(s), e.g. {example}.";
    IndexDomain => "SEM-INDEX-DOMAIN", Error,
        "Index {position} of '{name}' must be an element of '{domain}' ({expected}), got {found}.",
        "Use an index that ranges over '{domain}'.";
    ListTupleIndex => "SEM-LIST-TUPLE-INDEX", Error,
        "List parameter '{name}' requires integer indices, got tuple: {value}.",
        "Index '{name}' with an integer from its range, or declare it over the tuple set instead (e.g. 'float {name}[Pairs];').";
    NotIndexable => "SEM-NOT-INDEXABLE", Error,
        "'{name}' is not an array and cannot be indexed.",
        "Remove the subscript, or declare '{name}' with index sets, e.g. 'float {name}[I];'.";
    MissingIndex => "SEM-MISSING-INDEX", Error,
        "Array '{name}' is used without indices.",
        "Subscript '{name}' with {expected} index(es), or wrap it in a sum, e.g. 'sum (i in I) {name}[i]'.";
    VariableIndex => "SEM-VAR-INDEX", Error,
        "Decision variables cannot be used as array indices.",
        "Index with iterators, parameters or literals only.";
    IndexOutOfRange => "SEM-INDEX-OUT-OF-RANGE", Error,
        "Index {value} is outside the range {lo}..{hi} of '{name}'.",
        "Keep indices of '{name}' within {lo}..{hi}; check loop bounds and offsets such as t-1.";
    UnknownSetElement => "SEM-UNKNOWN-SET-ELEMENT", Error,
        "{value} is not an element of '{domain}', used to index '{name}'.",
        "Only elements of '{domain}' can index '{name}'; check spelling and the set contents in the .dat.";
    BadIteratorDomain => "SEM-BAD-ITER-DOMAIN", Error,
        "'{name}' cannot be iterated over; expected a range or a set.",
        "Iterate over a range ('i in 1..n') or a declared set ('i in S').";
    ArrayIndexNotDomain => "SEM-ARRAY-INDEX-NOT-DOMAIN", Error,
        "Index set '{name}' of '{array}' is not a range or a set.",
        "Declare arrays over ranges or sets, e.g. 'range I = 1..n; float {array}[I];'.";

    // data
    MissingData => "SEM-MISSING-DATA", Error,
        "No value supplied for '{name}'.",
        "Add '{name} = ...;' with a literal value to the .dat file, or initialize it in the model.";
    ExtraData => "SEM-EXTRA-DATA", Error,
        "The .dat file assigns '{name}', which is not declared as external data in the model.",
        "Remove '{name}' from the .dat, or declare it in the model as '... {name} = ...;'.";
    DataDuplicate => "SEM-DATA-DUP", Error,
        "'{name}' is assigned more than once in the .dat file (first on line {first}).",
        "Keep exactly one assignment of '{name}'.";
    ShapeMismatch => "SEM-SHAPE-MISMATCH", Error,
        "Array '{name}' is declared with shape {declared} but its data has shape {found}.",
        "Supply exactly {declared} values, one per element of the index sets, in declaration order.";
    DataRagged => "SEM-DATA-RAGGED", Error,
        "Array literal for '{name}' is not rectangular.",
        "Give every row the same number of entries and nest brackets to the same depth.";
    DataType => "SEM-DATA-TYPE", Error,
        "Value {value} for '{name}' does not match its declared type {expected}.",
        "Supply a {expected} literal for '{name}'.";
    DataDimension => "SEM-DATA-DIM", Error,
        "'{name}' expects {expected} but the data provides {found}.",
        "Match the literal to the declaration: scalars take a single value, arrays take nested [...] lists, sets take {{...}}.";
    DataNegative => "SEM-DATA-NEGATIVE", Error,
        "'{name}' is declared non-negative but receives {value}.",
        "Supply a value >= 0, or drop the '+' from the declared type.";
    DataForDvar => "SEM-DATA-FOR-DVAR", Error,
        "The .dat file assigns decision variable '{name}'.",
        "Remove '{name}' from the .dat; decision variables are determined by the solver.";
    InitAndData => "SEM-INIT-AND-DATA", Error,
        "'{name}' is initialized in the model and also assigned in the .dat file.",
        "Either keep the model initializer or change it to '= ...' and keep the .dat value.";

    // objective
    NoObjective => "SEM-NO-OBJECTIVE", Error,
        "The model has no objective.",
        "Add exactly one labelled objective, e.g. 'minimize cost: sum (i in I) c[i]*x[i];'.";
    MultipleObjectives => "SEM-MULTI-OBJECTIVE", Error,
        "The model declares more than one objective (first on line {first}).",
        "Keep a single minimize/maximize statement; combine goals into one weighted expression.";
    ObjectiveNotNumeric => "SEM-OBJ-NOT-NUMERIC", Error,
        "The objective must be a numeric expression, found {found}.",
        "Remove comparisons from the objective; constraints belong in 'subject to'.";
    ObjectiveUnlabelled => "SEM-OBJ-UNLABELLED", Warning,
        "The objective has no label.",
        "Label it, e.g. 'minimize totalCost: ...;'.";

    // constraints
    ChainedComparison => "SEM-CHAINED-CMP", Error,
        "Chained comparisons (e.g., a <= b <= c) are not supported.",
        "Split into two constraints: a <= b; b <= c;";
    NotAConstraint => "SEM-NOT-A-CONSTRAINT", Error,
        "Constraint '{label}' is not a comparison.",
        "Write constraints as 'lhs <= rhs', 'lhs >= rhs' or 'lhs == rhs'.";
    StrictInequality => "SEM-STRICT-INEQ", Error,
        "Strict inequality '{op}' is not supported in constraints.",
        "Use '<=' or '>='; for integer quantities add or subtract 1 on the right-hand side.";
    BadRelation => "SEM-BAD-RELATION", Error,
        "Relation '{op}' is not supported in constraints.",
        "Use '<=', '>=' or '=='; model disequalities with binary variables.";
    DuplicateLabel => "SEM-DUP-LABEL", Error,
        "Constraint label '{label}' is used more than once.",
        "Give each constraint (or forall family) its own label.";
    UnlabelledConstraint => "SEM-UNLABELLED-CONSTRAINT", Error,
        "Constraint has no label.",
        "Prefix it with a label, e.g. 'capacity: x + y <= 10;' or 'forall (i in I) demand: ...;'.";
    ConstantConstraint => "SEM-CONST-CONSTRAINT", Warning,
        "Constraint '{label}' contains no decision variables.",
        "Check whether a decision variable is missing; constant constraints are either redundant or make the model infeasible.";
    MultipleSubjectTo => "SEM-MULTI-SUBJECT-TO", Error,
        "Only one 'subject to' block is allowed (first on line {first}).",
        "Move all constraints into a single 'subject to {{ ... }}' block.";

    // linearity and arithmetic
    Nonlinear => "SEM-NONLINEAR", Error,
        "Product of decision-variable expressions is not linear.",
        "Only linear models are supported; linearize the product (e.g. with a binary variable and big-M constraints).";
    DivisionByVariable => "SEM-DIV-BY-DVAR", Error,
        "Division by an expression containing decision variables is not linear.",
        "Multiply both sides of the constraint by the divisor instead.";
    DivisionByZero => "SEM-DIV-ZERO", Error,
        "Division by zero.",
        "Check the divisor; it evaluates to 0 for the given data.";

    // iterators and filters
    FilterNotBoolean => "SEM-FILTER-NOT-BOOL", Error,
        "Filter condition must be a comparison, found {found}.",
        "Write the filter as a condition, e.g. 'forall (i in I, j in I : i < j)'.";
    FilterUsesVariable => "SEM-FILTER-DVAR", Error,
        "Filter conditions cannot depend on decision variables.",
        "Filters select index combinations from data; move the condition into a constraint.";
    DuplicateIterator => "SEM-DUP-ITERATOR", Error,
        "Index '{name}' is bound twice in the same iterator list.",
        "Use distinct index names, e.g. 'forall (i in I, j in I)'.";

    // decision variables
    DvarBoundsNonConstant => "SEM-DVAR-BOUNDS-NONCONST", Error,
        "Bounds of decision variable '{name}' must be constant.",
        "Use literals or parameters in 'dvar float {name} in lo..hi;'.";
    DvarBoundsEmpty => "SEM-DVAR-BOUNDS-EMPTY", Error,
        "Decision variable '{name}' has an empty domain ({lo}..{hi}).",
        "Make the lower bound no greater than the upper bound.";
    DvarInDeclaration => "SEM-DVAR-IN-DECL", Error,
        "Initializer of '{name}' refers to a decision variable.",
        "Parameters must be computable from data; move the relation into a constraint.";
    Unsupported => "SEM-UNSUPPORTED", Error,
        "{construct} is not supported.",
        "Restate it with the supported constructs listed in the grammar reference (scalar or array parameters, typed sets, tuple sets, ranges).";

    // warnings
    UnusedParameter => "SEM-UNUSED-PARAM", Warning,
        "Parameter '{name}' is declared but never used.",
        "Remove it, or reference it where the model needs it.";
    UnusedVariable => "SEM-UNUSED-DVAR", Warning,
        "Decision variable '{name}' is declared but never used.",
        "Remove it, or add it to the objective or constraints.";

    // generation loop
    BadResponse => "GEN-BAD-RESPONSE", Error,
        "response did not contain a valid model/data object ({detail}).",
        "Return ONLY a JSON object with string keys \"model\" and \"data\".";
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl Code {
    pub fn from_id(id: &str) -> Option<Code> {
        Code::ALL.iter().copied().find(|c| c.id() == id)
    }
}

/// One catalog row: `(code, message template, remedy template)`.
pub fn diagnostic_catalog() -> Vec<(Code, &'static str, &'static str)> {
    Code::ALL.iter().map(|&c| (c, c.message_template(), c.remedy_template())).collect()
}

/// Fills `{key}` placeholders; `{{` and `}}` render as literal braces.
fn fill(template: &str, args: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") {
            out.push('{');
            rest = &tail[2..];
        } else if tail.starts_with("}}") {
            out.push('}');
            rest = &tail[2..];
        } else if tail.starts_with('{') {
            let end = tail.find('}').unwrap_or(tail.len() - 1);
            let key = &tail[1..end];
            match args.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => out.push_str(v),
                None => {
                    debug_assert!(false, "missing diagnostic argument '{key}' for template {template:?}");
                    out.push_str(&tail[..=end]);
                }
            }
            rest = &tail[end + 1..];
        } else {
            out.push('}');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    out
}

/// Which input a diagnostic's line number refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFile {
    Model,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub span: Option<Span>,
    pub file: Option<SourceFile>,
    pub message: String,
    pub remedy: String,
}

impl Diagnostic {
    pub fn new(code: Code, span: Option<Span>, args: &[(&str, &str)]) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            span,
            file: None,
            message: fill(code.message_template(), args),
            remedy: fill(code.remedy_template(), args),
        }
    }

    pub fn at(code: Code, span: Span, args: &[(&str, &str)]) -> Self {
        Self::new(code, Some(span), args)
    }

    pub fn in_file(mut self, file: SourceFile) -> Self {
        self.file = Some(file);
        self
    }

    pub fn line(&self) -> Option<u32> {
        self.span.map(|s| s.line)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Structured form handed to the orchestrator and written to logs.
    pub fn record(&self) -> DiagnosticRecord {
        DiagnosticRecord {
            code: self.code.id().to_string(),
            severity: self.severity,
            file: self.file,
            line: self.line(),
            column: self.span.map(|s| s.column),
            message: self.message.clone(),
            remedy: self.remedy.clone(),
        }
    }
}

/// `Semantic Error (Line N): message remedy`, or without the line part when
/// the location is unknown.
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "Semantic Error",
            Severity::Warning => "Semantic Warning",
        };
        match self.line() {
            Some(line) => write!(f, "{kind} (Line {line}): {}", self.message)?,
            None => write!(f, "{kind}: {}", self.message)?,
        }
        if !self.remedy.is_empty() {
            write!(f, " {}", self.remedy)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagnosticRecord {
    pub code: String,
    pub severity: Severity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<SourceFile>,
    pub line: Option<u32>,
    pub column: Option<u32>,
    pub message: String,
    pub remedy: String,
}

/// Sorts diagnostics by line: model-file locations first, then data-file
/// locations, then unlocated ones. Emission order is kept within a line.
pub fn sort_by_line(diags: &mut [Diagnostic]) {
    diags.sort_by_key(|d| {
        let group = match (d.span, d.file) {
            (None, _) => 2,
            (Some(_), Some(SourceFile::Data)) => 1,
            (Some(_), _) => 0,
        };
        (group, d.line().unwrap_or(0), d.span.map_or(0, |s| s.column))
    });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
