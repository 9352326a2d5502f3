//! CPLEX LP text export.
//!
//! Sections are always written in the order objective, `Subject To`,
//! `Bounds`, `Generals`, `Binaries`, `End`; the two integrality sections
//! are omitted when empty.

use std::collections::HashSet;
use std::fmt::Write;

use crate::model::{FlatModel, Sense, VarKind};

const LINE_WIDTH: usize = 200;

/// Maps a source-level name such as `x[1,A2]` onto the LP name alphabet.
///
/// Brackets become parentheses, tuple angle brackets become braces and
/// any other character outside the LP alphabet becomes `_`. Names that
/// would read as a number are prefixed with `_`.
pub fn lp_name(raw: &str) -> String {
    let mut out: String = raw
        .chars()
        .map(|c| match c {
            '[' => '(',
            ']' => ')',
            '<' => '{',
            '>' => '}',
            c if c.is_ascii_alphanumeric() => c,
            '!' | '"' | '#' | '$' | '%' | '&' | '(' | ')' | '/' | ',' | '.' | ';' | '?' | '@' | '_' | '`' | '\''
            | '{' | '}' | '|' | '~' => c,
            _ => '_',
        })
        .collect();
    let bytes = out.as_bytes();
    let numeric_start = match bytes.first() {
        None => true,
        Some(b) if b.is_ascii_digit() || *b == b'.' => true,
        Some(b'e' | b'E') => bytes.get(1).is_some_and(|c| c.is_ascii_digit() || *c == b'e' || *c == b'E'),
        _ => false,
    };
    if numeric_start {
        out.insert(0, '_');
    }
    out
}

fn unique_names<'a>(raw: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    raw.map(|r| {
        let base = lp_name(r);
        let mut name = base.clone();
        let mut k = 1;
        while !seen.insert(name.clone()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        name
    })
    .collect()
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

struct LineWriter<'a> {
    out: &'a mut String,
    line_len: usize,
}

impl LineWriter<'_> {
    fn push(&mut self, token: &str) {
        if self.line_len + token.len() > LINE_WIDTH {
            self.out.push_str("\n  ");
            self.line_len = 2;
        }
        self.out.push_str(token);
        self.line_len += token.len();
    }
}

fn write_terms(w: &mut LineWriter<'_>, coeffs: &[(usize, f64)], names: &[String]) {
    let mut first = true;
    for &(j, a) in coeffs {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        let coeff = if mag == 1.0 { String::new() } else { format!("{} ", fmt_num(mag)) };
        let token = if first && a > 0.0 {
            format!(" {coeff}{}", names[j])
        } else {
            format!(" {sign} {coeff}{}", names[j])
        };
        w.push(&token);
        first = false;
    }
    if first {
        // empty expression; an explicit zero term keeps the line well formed
        match names.first() {
            Some(n) => w.push(&format!(" 0 {n}")),
            None => w.push(" 0"),
        }
    }
}

/// Renders `model` as CPLEX LP text.
pub fn write_lp(model: &FlatModel) -> String {
    let var_names = unique_names(model.variables.iter().map(|v| v.name.as_str()));
    let row_names = unique_names(model.rows.iter().map(|r| r.name.as_str()));
    let mut out = String::new();

    out.push_str(match model.objective.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    {
        let head = format!(" {}:", lp_name(&model.objective.name));
        out.push_str(&head);
        let mut w = LineWriter { line_len: head.len(), out: &mut out };
        write_terms(&mut w, &model.objective.coeffs, &var_names);
        let c = model.objective.constant;
        if c != 0.0 {
            w.push(&format!(" {} {}", if c < 0.0 { "-" } else { "+" }, fmt_num(c.abs())));
        }
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for (row, name) in model.rows.iter().zip(&row_names) {
        let head = format!(" {name}:");
        out.push_str(&head);
        let mut w = LineWriter { line_len: head.len(), out: &mut out };
        write_terms(&mut w, &row.coeffs, &var_names);
        w.push(&format!(" {} {}", row.relation.symbol(), fmt_num(row.rhs)));
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for (v, name) in model.variables.iter().zip(&var_names) {
        let (l, u) = (v.lower, v.upper);
        if v.kind == VarKind::Binary && l == 0.0 && u == 1.0 {
            continue;
        }
        let line = if l == f64::NEG_INFINITY && u == f64::INFINITY {
            format!(" {name} free")
        } else if l == u {
            format!(" {name} = {}", fmt_num(l))
        } else if u == f64::INFINITY {
            if l == 0.0 {
                continue;
            }
            format!(" {name} >= {}", fmt_num(l))
        } else {
            format!(" {} <= {name} <= {}", fmt_num(l), fmt_num(u))
        };
        let _ = writeln!(out, "{line}");
    }

    let section = |out: &mut String, title: &str, kind: VarKind| {
        let members: Vec<&String> =
            model.variables.iter().zip(&var_names).filter(|(v, _)| v.kind == kind).map(|(_, n)| n).collect();
        if members.is_empty() {
            return;
        }
        out.push_str(title);
        out.push('\n');
        let mut w = LineWriter { out, line_len: 0 };
        for n in members {
            w.push(&format!(" {n}"));
        }
        w.out.push('\n');
    };
    section(&mut out, "Generals", VarKind::Integer);
    section(&mut out, "Binaries", VarKind::Binary);
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, Row, Variable};

    #[test]
    fn skeleton_for_single_variable() {
        let mut m = FlatModel::new(Sense::Minimize);
        let x = m.add_variable(Variable::continuous("x", 0.0, f64::INFINITY));
        m.objective.coeffs = vec![(x, 1.0)];
        m.add_row(Row::new("c1", vec![(x, 1.0)], Relation::Ge, 0.0));
        let lp = write_lp(&m);
        assert_eq!(lp, "Minimize\n obj: x\nSubject To\n c1: x >= 0\nBounds\nEnd\n");
    }

    #[test]
    fn sections_in_fixed_order() {
        let mut m = FlatModel::new(Sense::Maximize);
        let a = m.add_variable(Variable::binary("b[1]"));
        let k = m.add_variable(Variable::integer("k", -2.0, 5.0));
        let f = m.add_variable(Variable::continuous("f", f64::NEG_INFINITY, f64::INFINITY));
        m.objective.coeffs = vec![(a, 3.0), (k, -1.0), (f, 0.5)];
        m.objective.constant = -2.0;
        m.add_row(Row::new("lim[1,A]", vec![(a, 1.0), (k, 2.0), (f, -1.0)], Relation::Le, 4.0));
        let lp = write_lp(&m);
        let order: Vec<usize> = ["Maximize", "Subject To", "Bounds", "Generals", "Binaries", "End"]
            .iter()
            .map(|s| lp.find(s).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{lp}");
        assert!(lp.contains(" obj: 3 b(1) - k + 0.5 f - 2\n"));
        assert!(lp.contains(" lim(1,A): b(1) + 2 k - f <= 4\n"));
        assert!(lp.contains(" -2 <= k <= 5\n"));
        assert!(lp.contains(" f free\n"));
        assert!(lp.contains("Binaries\n b(1)\n"));
    }

    #[test]
    fn names_are_sanitized_and_unique() {
        assert_eq!(lp_name("x[1,\"A 2\"]"), "x(1,\"A_2\")");
        assert_eq!(lp_name("e1"), "_e1");
        assert_eq!(lp_name("flow[<1,2>]"), "flow({1,2})");
        assert_eq!(unique_names(["a b", "a_b"].into_iter()), vec!["a_b".to_string(), "a_b_1".to_string()]);
    }
}
