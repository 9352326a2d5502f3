//! Invariants of the front end and the expander, checked on the knowledge
//! base and on randomly generated linear models.

mod common;

use std::collections::HashMap;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syntagm_aml::lexer::{tokenize, SourceKind, TokenKind};
use syntagm_aml::parser::{parse_data_source, parse_model_source};
use syntagm_aml::printer::print_model;
use syntagm_aml::{compile, Code, Compilation};
use syntagm_solver::{solve, FlatModel, SolveOptions, SolveStatus};

use common::{gen_model, Reference};

fn knowledge_base() -> Vec<(String, String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../knowledge_base");
    let mut out = Vec::new();
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "mod") {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            let m = std::fs::read_to_string(&p).unwrap();
            let d = std::fs::read_to_string(p.with_extension("dat")).unwrap();
            out.push((stem, m, d));
        }
    }
    out.sort();
    out
}

fn comment_texts(src: &str) -> Vec<String> {
    let mut v: Vec<String> = tokenize(src, SourceKind::Model).unwrap().comments.into_iter().map(|c| c.text).collect();
    v.sort();
    v
}

fn diagnostic_keys(c: &Compilation) -> Vec<(Code, Option<u32>, String)> {
    c.diagnostics.iter().map(|d| (d.code, d.line(), d.message.clone())).collect()
}

/// Value of each row's `coeffs . x - rhs` at a point.
fn row_values(flat: &FlatModel, x: &[f64]) -> Vec<f64> {
    flat.rows.iter().map(|r| r.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - r.rhs).collect()
}

fn objective_value(flat: &FlatModel, x: &[f64]) -> f64 {
    flat.objective.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + flat.objective.constant
}

/// Compares the folded flat model against direct evaluation of the source at `x`.
fn check_conservation(c: &Compilation, x: &[f64]) -> Result<(), String> {
    let flat = c.flat.as_ref().unwrap();
    let point: HashMap<String, f64> = flat.variables.iter().zip(x).map(|(v, &xv)| (v.name.clone(), xv)).collect();
    let model = c.model.as_ref().unwrap();
    let mut reference = Reference::new(model, c.env.as_ref().unwrap(), &point);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-7 * (1.0 + a.abs().max(b.abs()));
    let (want, got) = (reference.objective(model), objective_value(flat, x));
    if !close(want, got) {
        return Err(format!("objective {want} vs {got}"));
    }
    let want = reference.constraint_values(model);
    let got = row_values(flat, x);
    if want.len() != got.len() {
        return Err(format!("{} source rows vs {} flat rows", want.len(), got.len()));
    }
    for (k, (a, b)) in want.iter().zip(&got).enumerate() {
        if !close(*a, *b) {
            return Err(format!("row {} ({}): {a} vs {b}", k, flat.rows[k].name));
        }
    }
    Ok(())
}

fn random_point(flat: &FlatModel, rng: &mut impl Rng) -> Vec<f64> {
    flat.variables.iter().map(|_| rng.gen_range(-5.0..5.0_f64).round() / 2.0).collect()
}

// ---- knowledge base ----

#[test]
fn knowledge_base_comments_survive_printing() {
    for (name, m, _) in knowledge_base() {
        let printed = print_model(&parse_model_source(&m).unwrap());
        assert_eq!(comment_texts(&m), comment_texts(&printed), "{name}");
    }
}

#[test]
fn knowledge_base_expansion_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (name, m, d) in knowledge_base() {
        let c = compile(&m, &d);
        let flat = c.flat.as_ref().unwrap();
        let sol = solve(flat, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal, "{name}");
        // the optimum is a feasible point; the random ones exercise the identity elsewhere
        let optimum: Vec<f64> = flat.variables.iter().map(|v| sol.value_of(flat, &v.name).unwrap()).collect();
        check_conservation(&c, &optimum).unwrap_or_else(|e| panic!("{name}: {e}"));
        for _ in 0..5 {
            check_conservation(&c, &random_point(flat, &mut rng)).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

#[test]
fn knowledge_base_data_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, m, d) in knowledge_base() {
        let base = compile(&m, &d);
        let data = parse_data_source(&d).unwrap();
        let stmts: Vec<String> = data.assignments.iter().map(|a| format!("{} = {};", a.name.name, syntagm_aml::printer::data_value(&a.value))).collect();
        for _ in 0..4 {
            let mut shuffled = stmts.clone();
            shuffled.shuffle(&mut rng);
            let c = compile(&m, &shuffled.join("\n"));
            assert_eq!(base.flat, c.flat, "{name}");
        }
    }
}

/// Inserting a stray character before any token is reported on that token's line.
#[test]
fn knowledge_base_injected_character_is_reported_on_its_line() {
    for (name, m, _) in knowledge_base() {
        let lexed = tokenize(&m, SourceKind::Model).unwrap();
        let lines: Vec<&str> = m.lines().collect();
        for tok in lexed.tokens.iter().filter(|t| t.kind != TokenKind::Eof) {
            let (l, col) = (tok.span.line as usize - 1, tok.span.column as usize - 1);
            let mut broken = lines.clone();
            let line: String = {
                let chars: Vec<char> = lines[l].chars().collect();
                chars[..col].iter().chain(['$'].iter()).chain(chars[col..].iter()).collect()
            };
            broken[l] = &line;
            let c = compile(&broken.join("\n"), "");
            let d = &c.diagnostics[0];
            assert_eq!(d.code, Code::IllegalChar, "{name}");
            assert_eq!(d.line(), Some(tok.span.line), "{name}: {d}");
        }
    }
}

/// Replacing a token by a closing bracket is a syntax error on the same line.
#[test]
fn knowledge_base_replaced_token_is_reported_on_its_line() {
    for (name, m, d) in knowledge_base() {
        let lexed = tokenize(&m, SourceKind::Model).unwrap();
        let lines: Vec<&str> = m.lines().collect();
        for tok in lexed.tokens.iter().filter(|t| !matches!(t.kind, TokenKind::Eof | TokenKind::RBracket)) {
            let (l, col, len) = (tok.span.line as usize - 1, tok.span.column as usize - 1, tok.span.length as usize);
            let chars: Vec<char> = lines[l].chars().collect();
            let line: String = chars[..col].iter().chain([']'].iter()).chain(chars[col + len..].iter()).collect();
            let mut broken = lines.clone();
            broken[l] = &line;
            let c = compile(&broken.join("\n"), &d);
            let first = c.errors().next().unwrap_or_else(|| panic!("{name}: `{line}` compiled"));
            assert_eq!(first.line(), Some(tok.span.line), "{name}: `{line}` gave {first}");
        }
    }
}

// ---- generated models ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generated_models_round_trip(g in gen_model()) {
        let ast = parse_model_source(&g.model).unwrap();
        let printed = print_model(&ast);
        let again = parse_model_source(&printed).unwrap();
        prop_assert!(ast.structurally_eq(&again), "{}\n---\n{}", g.model, printed);
        prop_assert_eq!(print_model(&again), printed);
    }

    #[test]
    fn generated_comments_survive_printing(g in gen_model()) {
        let printed = print_model(&parse_model_source(&g.model).unwrap());
        let before = comment_texts(&g.model);
        prop_assert_eq!(before.len(), g.n_comments);
        prop_assert_eq!(before, comment_texts(&printed));
    }

    #[test]
    fn generated_models_compile_with_expected_cardinality(g in gen_model()) {
        let c = compile(&g.model, &g.data());
        prop_assert!(c.succeeded(), "{}\n{}", g.model, c.report());
        let flat = c.flat.as_ref().unwrap();
        prop_assert_eq!(flat.variables.len(), g.n_i + g.n_i * g.n_j + 1);
        prop_assert_eq!(flat.rows.len(), g.expected_rows);
        for r in &flat.rows {
            prop_assert!(r.coeffs.iter().all(|&(j, a)| j < flat.variables.len() && a.is_finite()));
            prop_assert!(r.rhs.is_finite());
        }
        // row names are unique, so the name map is invertible
        let names = c.names.as_ref().unwrap();
        for (k, r) in flat.rows.iter().enumerate() {
            prop_assert_eq!(names.constraint_position(&r.name), Some(k));
        }
        for (k, v) in flat.variables.iter().enumerate() {
            prop_assert_eq!(names.variable_position(&v.name), Some(k));
        }
    }

    #[test]
    fn generated_sums_have_at_most_domain_many_terms(n in 1usize..6, k in 1usize..6) {
        let m = format!("range I = 1..{n};\ndvar float x[I];\nminimize obj: sum (i in I : i >= {k}) x[i];\n\
                         subject to {{\n  forall (i in I) low: x[i] >= i;\n  total: sum (i in I) 2 * x[i] <= 100;\n}}\n");
        let c = compile(&m, "");
        let flat = c.flat.as_ref().unwrap();
        prop_assert_eq!(flat.objective.coeffs.len(), n.saturating_sub(k - 1).min(n));
        prop_assert_eq!(flat.rows.len(), n + 1);
        prop_assert!(flat.rows[n].coeffs.len() <= n);
    }

    #[test]
    fn generated_expansion_matches_direct_evaluation(g in gen_model(), seed in any::<u64>()) {
        let c = compile(&g.model, &g.data());
        prop_assert!(c.succeeded(), "{}", c.report());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..3 {
            let x = random_point(c.flat.as_ref().unwrap(), &mut rng);
            if let Err(e) = check_conservation(&c, &x) {
                prop_assert!(false, "{}\n{}", g.model, e);
            }
        }
    }

    #[test]
    fn generated_data_order_does_not_matter(g in gen_model(), seed in any::<u64>()) {
        let base = compile(&g.model, &g.data());
        let mut stmts = g.data_assignments.clone();
        stmts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let c = compile(&g.model, &stmts.join("\n"));
        prop_assert_eq!(base.flat, c.flat);
    }

    #[test]
    fn compilation_is_deterministic(g in gen_model(), cut in 0usize..400) {
        // a truncated model exercises the error paths as well
        let cut = g.model.char_indices().map(|(i, _)| i).nth(cut).unwrap_or(g.model.len());
        for m in [g.model.as_str(), &g.model[..cut]] {
            let a = compile(m, &g.data());
            let b = compile(m, &g.data());
            prop_assert_eq!(diagnostic_keys(&a), diagnostic_keys(&b));
            prop_assert_eq!(a.flat, b.flat);
        }
    }

    #[test]
    fn injected_character_in_generated_model_is_located(g in gen_model(), pick in any::<prop::sample::Index>()) {
        let lexed = tokenize(&g.model, SourceKind::Model).unwrap();
        let tok = &lexed.tokens[pick.index(lexed.tokens.len() - 1)];
        let mut lines: Vec<String> = g.model.lines().map(str::to_string).collect();
        let l = tok.span.line as usize - 1;
        let mut chars: Vec<char> = lines[l].chars().collect();
        chars.insert(tok.span.column as usize - 1, ';');
        lines[l] = chars.into_iter().collect();
        let c = compile(&lines.join("\n"), &g.data());
        // a stray ';' is never valid inside a statement; at a statement boundary it parses
        let first = c.errors().next().cloned();
        if let Some(first) = first {
            prop_assert_eq!(first.line(), Some(tok.span.line), "{}", first);
        } else {
            let prev_is_boundary = lexed.tokens.iter().take_while(|t| t.span != tok.span).last()
                .is_none_or(|t| matches!(t.kind, TokenKind::Semi | TokenKind::RBrace | TokenKind::LBrace));
            prop_assert!(prev_is_boundary, "stray ';' accepted at {:?}", tok.span);
        }
    }
}
