//! Best-first branch-and-bound over LP relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::model::{FlatModel, Sense};
use crate::simplex::{solve_lp, solve_with_bounds};
use crate::{Solution, SolveOptions, SolveStatus};

struct Node {
    /// relaxation value in minimization form
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    point: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Solves a mixed-integer model by best-first branch-and-bound.
///
/// Branching picks the most fractional integer variable, lowest index on
/// ties. Models without integer variables go straight to [`solve_lp`].
pub fn solve_milp(model: &FlatModel, opts: &SolveOptions) -> Solution {
    if !model.has_integers() {
        return solve_lp(model, opts);
    }
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(opts.time_limit_secs.min(1e9));
    let sign = match model.objective.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let integral: Vec<bool> = model.variables.iter().map(|v| v.kind.is_integral()).collect();

    let mut lower: Vec<f64> = Vec::with_capacity(model.variables.len());
    let mut upper: Vec<f64> = Vec::with_capacity(model.variables.len());
    for (v, &int) in model.variables.iter().zip(&integral) {
        if int {
            let tol = opts.integrality_tolerance;
            lower.push((v.lower - tol).ceil());
            upper.push((v.upper + tol).floor());
        } else {
            lower.push(v.lower);
            upper.push(v.upper);
        }
    }

    let root = solve_with_bounds(model, &lower, &upper, opts, deadline);
    match root.status {
        SolveStatus::Optimal => {}
        other => return Solution::without_point(other),
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: sign * root.objective_value.unwrap_or(0.0),
        seq,
        lower,
        upper,
        point: root.assignment,
    });

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut limit_hit = false;
    let mut numerical_trouble = false;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - prune_gap(*best) {
                continue;
            }
        }
        nodes += 1;
        if nodes > opts.node_limit || Instant::now() > deadline {
            limit_hit = true;
            break;
        }

        let branch_on = most_fractional(&node.point, &integral, opts.integrality_tolerance);
        let Some(j) = branch_on else {
            let mut x = node.point.clone();
            for (xi, &int) in x.iter_mut().zip(&integral) {
                if int {
                    *xi = xi.round();
                }
            }
            let value = sign * model.objective_value(&x);
            let better = incumbent.as_ref().map_or(true, |(best, _)| value < *best);
            if better && model.is_feasible(&x, opts.feasibility_tolerance.max(1e-9) * 10.0) {
                incumbent = Some((value, x));
            } else if better {
                numerical_trouble = true;
            }
            continue;
        };

        let value = node.point[j];
        for (lo, hi) in [(node.lower[j], value.floor()), (value.ceil(), node.upper[j])] {
            if lo > hi {
                continue;
            }
            let mut child_lower = node.lower.clone();
            let mut child_upper = node.upper.clone();
            child_lower[j] = lo;
            child_upper[j] = hi;
            let sol = solve_with_bounds(model, &child_lower, &child_upper, opts, deadline);
            match sol.status {
                SolveStatus::Optimal => {
                    let bound = sign * sol.objective_value.unwrap_or(0.0);
                    if incumbent.as_ref().map_or(true, |(best, _)| bound < best - prune_gap(*best)) {
                        seq += 1;
                        heap.push(Node { bound, seq, lower: child_lower, upper: child_upper, point: sol.assignment });
                    }
                }
                SolveStatus::Infeasible => {}
                SolveStatus::Unbounded => return Solution::without_point(SolveStatus::Unbounded),
                SolveStatus::NodeLimit => limit_hit = true,
                SolveStatus::NumericalFailure => numerical_trouble = true,
            }
        }
        if limit_hit {
            break;
        }
    }

    match incumbent {
        Some((value, x)) if !limit_hit => {
            Solution { status: SolveStatus::Optimal, objective_value: Some(sign * value), assignment: x }
        }
        Some((_, x)) => Solution { status: SolveStatus::NodeLimit, objective_value: None, assignment: x },
        None if limit_hit => Solution::without_point(SolveStatus::NodeLimit),
        None if numerical_trouble => Solution::without_point(SolveStatus::NumericalFailure),
        None => Solution::without_point(SolveStatus::Infeasible),
    }
}

fn prune_gap(best: f64) -> f64 {
    1e-9 * 1f64.max(best.abs())
}

fn most_fractional(x: &[f64], integral: &[bool], tol: f64) -> Option<usize> {
    let mut pick = None;
    let mut best = tol;
    for (j, (&xj, &int)) in x.iter().zip(integral).enumerate() {
        if !int {
            continue;
        }
        let frac = (xj - xj.round()).abs();
        if frac > best {
            best = frac;
            pick = Some(j);
        }
    }
    pick
}
