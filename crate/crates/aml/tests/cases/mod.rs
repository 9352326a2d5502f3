//! One minimal model/data pair per catalogued code. Shared between the
//! catalog tests and the acceptance target.

use syntagm_aml::Code;

pub const OBJ: &str = "dvar float x;\nminimize z: x;\n";

pub fn case(code: &str) -> (String, String) {
    let (m, d): (String, &str) = match code {
        "LEX-ILLEGAL-CHAR" => ("dvar float x;\nminimize z: x $ 1;\n".into(), ""),
        "LEX-UNTERMINATED-STRING" => (SET_MODEL.into(), "S = {\"abc};\n"),
        "LEX-UNTERMINATED-COMMENT" => ("dvar float x;\nminimize z: x; /* oops\n".into(), ""),
        "LEX-BAD-NUMBER" => (A_MODEL.into(), "a = 1e;\n"),
        "SYN-MODEL" => ("dvar float x\nminimize z: x;\n".into(), ""),
        "SYN-DATA" => ("float demand = ...;\ndvar float x;\nminimize z: demand * x;\n".into(), "demand\n"),
        "SYN-ASSIGN-IN-CONSTRAINT" => (format!("{OBJ}subject to {{ c: x = 1; }}\n"), ""),
        "SEM-UNDECLARED" => ("dvar float x;\nminimize z: price * x;\n".into(), ""),
        "SEM-DUPLICATE-DECL" => (format!("dvar float x;\n{OBJ}"), ""),
        "SEM-INDEX-SHADOWS" => (
            "float b = 2;\ndvar float x[1..2];\nminimize z: b * x[1];\n\
             subject to { forall (b in 1..2) c: x[b] >= 0; }\n"
                .into(),
            "",
        ),
        "SEM-UNKNOWN-TUPLE-TYPE" => (format!("{{Arc}} A = ...;\n{OBJ}"), "A = {};\n"),
        "SEM-DUPLICATE-TUPLE-FIELD" => (format!("tuple P {{ int a; int a; }}\n{OBJ}"), ""),
        "SEM-UNKNOWN-FIELD" => (
            "tuple P { int a; }\n{P} S = ...;\ndvar float x;\nminimize z: sum (p in S) p.b * x;\n"
                .into(),
            "S = {<1>};\n",
        ),
        "SEM-FIELD-ON-NON-TUPLE" => (
            "dvar float x;\nminimize z: sum (i in 1..2) i.a * x;\n".into(),
            "",
        ),
        "SEM-RANGE-NONINT" => (
            "range T = 1..2.5;\ndvar float x[T];\nminimize z: sum (t in T) x[t];\n".into(),
            "",
        ),
        "SEM-RANGE-IN-DAT" => (
            "int N = ...;\ndvar float x[T];\nminimize z: sum (t in T) N * x[t];\n".into(),
            "N = 3;\nT = 1..3;\n",
        ),
        "SEM-RANGE-EXTERNAL" => (
            "range T = ...;\ndvar float x[T];\nminimize z: sum (t in T) x[t];\n".into(),
            "",
        ),
        "SEM-RANGE-EMPTY" => (
            "range T = 3..1;\ndvar float x[T];\ndvar float y;\nminimize z: y + sum (t in T) x[t];\n"
                .into(),
            "",
        ),
        "SEM-RANGE-NONCONST" => ("dvar int n;\nrange T = 1..n;\nminimize z: n;\n".into(), ""),
        "SEM-TYPE-MISMATCH" => (
            "string s = \"a\";\nint n = s;\ndvar float x;\nminimize z: n * x;\n".into(),
            "",
        ),
        "SEM-STRING-ARITH" => (
            "string s = \"a\";\ndvar float x;\nminimize z: s * x;\n".into(),
            "",
        ),
        "SEM-SET-ELEM-TYPE" => (
            "{int} S = ...;\ndvar float x[S];\nminimize z: sum (s in S) x[s];\n".into(),
            "S = {\"a\"};\n",
        ),
        "SEM-SET-DUP-ELEM" => (
            "{int} S = ...;\ndvar float x[S];\nminimize z: sum (s in S) x[s];\n".into(),
            "S = {1, 1};\n",
        ),
        "SEM-TUPLE-ARITY" => (TUPLE_MODEL.into(), "S = {<1>};\n"),
        "SEM-TUPLE-FIELD-TYPE" => (TUPLE_MODEL.into(), "S = {<1, \"b\">};\n"),
        "SEM-INDEX-ARITY" => ("dvar float x[1..2];\nminimize z: x[1][1];\n".into(), ""),
        "SEM-INDEX-DOMAIN" => (
            "{string} S = {\"a\"};\ndvar float x[S];\nminimize z: x[1];\n".into(),
            "",
        ),
        "SEM-LIST-TUPLE-INDEX" => (
            "tuple Job { int id; }\n{Job} Jobs = ...;\nfloat d[1..2] = ...;\ndvar float x[Jobs];\n\
             minimize z: sum (j in Jobs) d[j] * x[j];\n"
                .into(),
            "Jobs = {<1>};\nd = [1, 2];\n",
        ),
        "SEM-NOT-INDEXABLE" => ("dvar float x;\nminimize z: x[1];\n".into(), ""),
        "SEM-MISSING-INDEX" => ("dvar float x[1..2];\nminimize z: x;\n".into(), ""),
        "SEM-VAR-INDEX" => (
            "float c[1..2] = [1, 2];\ndvar int k;\nminimize z: c[k];\n".into(),
            "",
        ),
        "SEM-INDEX-OUT-OF-RANGE" => ("dvar float x[1..2];\nminimize z: x[3];\n".into(), ""),
        "SEM-UNKNOWN-SET-ELEMENT" => (
            "{string} S = {\"a\"};\ndvar float x[S];\nminimize z: x[\"b\"];\n".into(),
            "",
        ),
        "SEM-BAD-ITER-DOMAIN" => (
            "float n = 2;\ndvar float x;\nminimize z: x + sum (i in n) i;\n".into(),
            "",
        ),
        "SEM-ARRAY-INDEX-NOT-DOMAIN" => (
            "int n = 2;\ndvar float x[n];\nminimize z: x[1];\n".into(),
            "",
        ),
        "SEM-MISSING-DATA" => (A_MODEL.into(), ""),
        "SEM-EXTRA-DATA" => (OBJ.into(), "q = 1;\n"),
        "SEM-DATA-DUP" => (A_MODEL.into(), "a = 1;\na = 2;\n"),
        "SEM-SHAPE-MISMATCH" => (MATRIX_MODEL.into(), "m = [[1, 2]];\n"),
        "SEM-DATA-RAGGED" => (MATRIX_MODEL.into(), "m = [[1, 2], [3]];\n"),
        "SEM-DATA-TYPE" => (INT_MODEL.into(), "n = 1.5;\n"),
        "SEM-DATA-DIM" => (INT_MODEL.into(), "n = [1];\n"),
        "SEM-DATA-NEGATIVE" => (
            "float+ p = ...;\ndvar float x;\nminimize z: p * x;\n".into(),
            "p = -1;\n",
        ),
        "SEM-DATA-FOR-DVAR" => (OBJ.into(), "x = 1;\n"),
        "SEM-INIT-AND-DATA" => (
            "float a = 1;\ndvar float x;\nminimize z: a * x;\n".into(),
            "a = 2;\n",
        ),
        "SEM-NO-OBJECTIVE" => ("dvar float x;\nsubject to { c: x >= 0; }\n".into(), ""),
        "SEM-MULTI-OBJECTIVE" => (format!("{OBJ}maximize w: x;\n"), ""),
        "SEM-OBJ-NOT-NUMERIC" => ("dvar float x;\nminimize z: x >= 1;\n".into(), ""),
        "SEM-OBJ-UNLABELLED" => (
            "dvar float x;\nminimize x;\nsubject to { c: x >= 0; }\n".into(),
            "",
        ),
        "SEM-CHAINED-CMP" => (format!("{OBJ}subject to {{ c: 0 <= x <= 1; }}\n"), ""),
        "SEM-NOT-A-CONSTRAINT" => (format!("{OBJ}subject to {{ c: x + 1; }}\n"), ""),
        "SEM-STRICT-INEQ" => (format!("{OBJ}subject to {{ c: x < 1; }}\n"), ""),
        "SEM-BAD-RELATION" => (format!("{OBJ}subject to {{ c: x != 1; }}\n"), ""),
        "SEM-DUP-LABEL" => (format!("{OBJ}subject to {{ c: x >= 0; c: x <= 1; }}\n"), ""),
        "SEM-UNLABELLED-CONSTRAINT" => (format!("{OBJ}subject to {{ x >= 0; }}\n"), ""),
        "SEM-CONST-CONSTRAINT" => (
            format!("float a = 1;\n{OBJ}subject to {{ c: a >= 0; d: x >= 0; }}\n"),
            "",
        ),
        "SEM-MULTI-SUBJECT-TO" => (
            format!("{OBJ}subject to {{ c: x >= 0; }}\nsubject to {{ d: x <= 1; }}\n"),
            "",
        ),
        "SEM-NONLINEAR" => ("dvar float x;\nminimize z: x * x;\n".into(), ""),
        "SEM-DIV-BY-DVAR" => ("dvar float x;\nminimize z: 1 / x;\n".into(), ""),
        "SEM-DIV-ZERO" => ("dvar float x;\nminimize z: x / 0;\n".into(), ""),
        "SEM-FILTER-NOT-BOOL" => (
            "dvar float x[1..2];\nminimize z: sum (i in 1..2 : i + 1) x[i];\n".into(),
            "",
        ),
        "SEM-FILTER-DVAR" => (
            "dvar float x[1..2];\nminimize z: sum (i in 1..2 : x[i] >= 1) x[i];\n".into(),
            "",
        ),
        "SEM-DUP-ITERATOR" => (
            "dvar float x[1..2];\nminimize z: sum (i in 1..2, i in 1..2) x[i];\n".into(),
            "",
        ),
        "SEM-DVAR-BOUNDS-NONCONST" => (
            "dvar float y;\ndvar float x in 0..y;\nminimize z: x + y;\n".into(),
            "",
        ),
        "SEM-DVAR-BOUNDS-EMPTY" => ("dvar float x in 3..1;\nminimize z: x;\n".into(), ""),
        "SEM-DVAR-IN-DECL" => (
            "dvar float x;\nfloat a = x;\nminimize z: a * x;\n".into(),
            "",
        ),
        "SEM-UNSUPPORTED" => ("dvar float x;\nminimize z: foo(x);\n".into(), ""),
        "SEM-UNUSED-PARAM" => (format!("float a = 1;\n{OBJ}"), ""),
        "SEM-UNUSED-DVAR" => (format!("dvar float y;\n{OBJ}"), ""),
        other => panic!("no fixture for {other}"),
    };
    (m, d.to_string())
}

const TUPLE_MODEL: &str = "tuple P { int a; int b; }\n{P} S = ...;\ndvar float x[S];\n\
                           minimize z: sum (p in S) x[p];\n";
const MATRIX_MODEL: &str = "float m[1..2][1..2] = ...;\ndvar float x;\nminimize z: m[1][1] * x;\n";
const A_MODEL: &str = "float a = ...;\ndvar float x;\nminimize z: a * x;\n";
const SET_MODEL: &str = "{string} S = ...;\ndvar float x[S];\nminimize z: sum (s in S) x[s];\n";
const INT_MODEL: &str = "int n = ...;\ndvar float x;\nminimize z: n * x;\n";

/// Raised by the orchestrator when a reply has no usable model, never by a
/// model/data pair.
pub const GENERATION_ONLY: &[Code] = &[Code::BadResponse];
