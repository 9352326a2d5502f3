//! Aircraft landing model: compiles, expands to the expected shape and
//! solves to zero penalty.

use syntagm_aml::{compile, Code};
use syntagm_solver::{solve, SolveOptions, SolveStatus};

const MODEL: &str = include_str!("../../../fixtures/alp/alp.mod");
const CHAINED: &str = include_str!("../../../fixtures/alp/alp_chained.mod");
const DATA: &str = include_str!("../../../fixtures/alp/alp.dat");

#[test]
fn alp_expands_and_solves() {
    let c = compile(MODEL, DATA);
    assert!(c.succeeded(), "{}", c.report());
    assert!(c.diagnostics.is_empty(), "{}", c.report());
    let flat = c.flat.as_ref().unwrap();
    assert_eq!(flat.variables.len(), 9);
    assert_eq!(flat.rows.len(), 12);
    let sep: Vec<&str> = flat
        .rows
        .iter()
        .map(|r| r.name.as_str())
        .filter(|n| n.starts_with("separation"))
        .collect();
    assert_eq!(sep, ["separation[A1,A2]", "separation[A1,A3]", "separation[A2,A3]"]);

    let sol = solve(flat, &SolveOptions::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.objective_value.unwrap().abs() <= 1e-6);
    // every aircraft lands on target
    for (name, target) in [("t[A1]", 4.0), ("t[A2]", 8.0), ("t[A3]", 14.0)] {
        assert!((sol.value_of(flat, name).unwrap() - target).abs() < 1e-6, "{name}");
    }
}

#[test]
fn chained_time_window_is_rejected_with_a_split_hint() {
    let c = compile(CHAINED, DATA);
    assert!(!c.succeeded());
    let errs: Vec<_> = c.errors().collect();
    assert_eq!(errs.len(), 1, "{}", c.report());
    assert_eq!(errs[0].code, Code::ChainedComparison);
    let line = CHAINED.lines().position(|l| l.contains("E[i] <= t[i] <= L[i]")).unwrap() + 1;
    assert_eq!(errs[0].line(), Some(line as u32));
    assert!(errs[0].remedy.contains("Split into two constraints"), "{}", errs[0].remedy);
}

#[test]
fn alp_data_binds_six_vectors_and_one_matrix() {
    let c = compile(MODEL, DATA);
    let env = c.env.as_ref().unwrap();
    let mut shapes: Vec<Vec<usize>> = env.names().filter_map(|n| env.array(n)).map(|a| a.shape()).collect();
    shapes.sort();
    assert_eq!(shapes, [vec![3], vec![3], vec![3], vec![3], vec![3], vec![3], vec![3, 3]]);
    assert_eq!(env.domain("Aircraft").unwrap().len(), 3);
}

#[test]
fn alp_lp_export_names_every_row() {
    let c = compile(MODEL, DATA);
    let lp = syntagm_solver::write_lp(c.flat.as_ref().unwrap());
    for entry in &c.names.as_ref().unwrap().constraints {
        assert!(lp.contains(&syntagm_solver::lp_name(&entry.flat)), "{}", entry.flat);
    }
}
