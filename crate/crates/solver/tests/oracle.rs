use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syntagm_solver::{solve, solve_lp, solve_milp, FlatModel, Relation, Row, Sense, SolveOptions, SolveStatus, Variable};

/// Random integer-data MILP over variables with domain `0..=max_value`.
fn random_milp(rng: &mut ChaCha8Rng, n: usize, max_value: i64) -> (FlatModel, Vec<Vec<i64>>, Vec<(Relation, i64)>, Vec<i64>) {
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let mut model = FlatModel::new(sense);
    for j in 0..n {
        if max_value == 1 {
            model.add_variable(Variable::binary(format!("b{j}")));
        } else {
            model.add_variable(Variable::integer(format!("z{j}"), 0.0, max_value as f64));
        }
    }
    let obj: Vec<i64> = (0..n).map(|_| rng.gen_range(-9..=9)).collect();
    model.objective.coeffs = obj.iter().enumerate().map(|(j, &c)| (j, c as f64)).collect();
    let m = rng.gen_range(1..=6);
    let mut a = Vec::new();
    let mut rel = Vec::new();
    for i in 0..m {
        let row: Vec<i64> = (0..n).map(|_| rng.gen_range(-9..=9)).collect();
        let relation = match rng.gen_range(0..5) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        let rhs = rng.gen_range(-10..=25);
        model.add_row(Row::new(
            format!("r{i}"),
            row.iter().enumerate().filter(|(_, &c)| c != 0).map(|(j, &c)| (j, c as f64)).collect(),
            relation,
            rhs as f64,
        ));
        a.push(row);
        rel.push((relation, rhs));
    }
    (model, a, rel, obj)
}

/// Exhaustive enumeration in exact integer arithmetic.
fn brute_force(sense: Sense, a: &[Vec<i64>], rel: &[(Relation, i64)], obj: &[i64], max_value: i64) -> Option<i64> {
    let n = obj.len();
    let base = (max_value + 1) as usize;
    let total = base.pow(n as u32);
    let mut best: Option<i64> = None;
    let mut x = vec![0i64; n];
    for code in 0..total {
        let mut c = code;
        for xi in x.iter_mut() {
            *xi = (c % base) as i64;
            c /= base;
        }
        let feasible = a.iter().zip(rel).all(|(row, &(r, rhs))| {
            let lhs: i64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            match r {
                Relation::Le => lhs <= rhs,
                Relation::Ge => lhs >= rhs,
                Relation::Eq => lhs == rhs,
            }
        });
        if !feasible {
            continue;
        }
        let value: i64 = obj.iter().zip(&x).map(|(p, q)| p * q).sum();
        best = Some(match (best, sense) {
            (None, _) => value,
            (Some(b), Sense::Minimize) => b.min(value),
            (Some(b), Sense::Maximize) => b.max(value),
        });
    }
    best
}

fn check_against_enumeration(seed: u64, instances: usize, max_vars: usize, max_value: i64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = SolveOptions::default();
    for k in 0..instances {
        let n = rng.gen_range(1..=max_vars);
        let (model, a, rel, obj) = random_milp(&mut rng, n, max_value);
        let expected = brute_force(model.objective.sense, &a, &rel, &obj, max_value);
        let got = solve_milp(&model, &opts);
        match expected {
            Some(v) => {
                assert_eq!(got.status, SolveStatus::Optimal, "instance {k}: {model:?}");
                assert_eq!(got.objective_value, Some(v as f64), "instance {k}: {model:?}");
            }
            None => assert_eq!(got.status, SolveStatus::Infeasible, "instance {k}: {model:?}"),
        }
    }
}

#[test]
fn binary_milps_match_enumeration() {
    check_against_enumeration(7, 60, 12, 1);
}

#[test]
fn small_integer_domains_match_enumeration() {
    check_against_enumeration(11, 40, 6, 3);
}

/// min c.x s.t. Ax >= b, x >= 0 and its dual max b.y s.t. A'y <= c, y >= 0,
/// with A, b, c > 0 so both are feasible and bounded.
#[test]
fn random_lp_duality_gap_closes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = SolveOptions::default();
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=8);
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.1..5.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(0.5..10.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..10.0)).collect();

        let mut primal = FlatModel::new(Sense::Minimize);
        for j in 0..n {
            primal.add_variable(Variable::continuous(format!("x{j}"), 0.0, f64::INFINITY));
        }
        primal.objective.coeffs = c.iter().copied().enumerate().collect();
        for i in 0..m {
            primal.add_row(Row::new(format!("p{i}"), a[i].iter().copied().enumerate().collect(), Relation::Ge, b[i]));
        }

        let mut dual = FlatModel::new(Sense::Maximize);
        for i in 0..m {
            dual.add_variable(Variable::continuous(format!("y{i}"), 0.0, f64::INFINITY));
        }
        dual.objective.coeffs = b.iter().copied().enumerate().collect();
        for j in 0..n {
            dual.add_row(Row::new(format!("d{j}"), (0..m).map(|i| (i, a[i][j])).collect(), Relation::Le, c[j]));
        }

        let p = solve_lp(&primal, &opts);
        let d = solve_lp(&dual, &opts);
        assert_eq!(p.status, SolveStatus::Optimal);
        assert_eq!(d.status, SolveStatus::Optimal);
        let (pv, dv) = (p.objective_value.unwrap(), d.objective_value.unwrap());
        assert!((pv - dv).abs() <= 1e-7 * 1f64.max(pv.abs()), "primal {pv} dual {dv}");
        assert!(primal.is_feasible(&p.assignment, opts.feasibility_tolerance));
        assert!(dual.is_feasible(&d.assignment, opts.feasibility_tolerance));
    }
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let opts = SolveOptions::default();
    for _ in 0..20 {
        let (model, ..) = random_milp(&mut rng, 8, 1);
        let first = solve(&model, &opts);
        let second = solve(&model, &opts);
        assert_eq!(first, second);
    }
}

#[test]
fn optimal_points_satisfy_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolveOptions::default();
    for _ in 0..40 {
        let (model, ..) = random_milp(&mut rng, 10, 1);
        let s = solve(&model, &opts);
        if s.is_optimal() {
            assert!(model.is_feasible(&s.assignment, opts.feasibility_tolerance));
            assert_eq!(s.objective_value, Some(model.objective_value(&s.assignment)));
        }
    }
}
