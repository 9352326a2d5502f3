//! Dense two-phase primal simplex.
//!
//! Columns are shifted or mirrored so that every working variable is
//! nonnegative, rows are sign-normalized so the right-hand side is
//! nonnegative, and phase one minimizes the sum of artificials. Pricing is
//! Dantzig's rule; after a run of degenerate pivots the solver falls back to
//! Bland's rule, which cannot cycle.

use std::time::{Duration, Instant};

use crate::model::{FlatModel, Relation};
use crate::{Solution, SolveOptions, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

/// Solves the continuous relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &FlatModel, opts: &SolveOptions) -> Solution {
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let deadline = Instant::now() + Duration::from_secs_f64(opts.time_limit_secs.min(1e9));
    solve_with_bounds(model, &lower, &upper, opts, deadline)
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// x = offset + y
    Shift { col: usize, offset: f64 },
    /// x = offset - y
    Mirror { col: usize, offset: f64 },
    /// x = y_pos - y_neg
    Split { pos: usize, neg: usize },
    Fixed(f64),
}

struct StdRow {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

/// Relaxation solve with overridden column bounds; shared with branch-and-bound.
pub(crate) fn solve_with_bounds(
    model: &FlatModel,
    lower: &[f64],
    upper: &[f64],
    opts: &SolveOptions,
    deadline: Instant,
) -> Solution {
    let n_orig = model.variables.len();
    let mut maps = Vec::with_capacity(n_orig);
    let mut ncols = 0usize;
    let mut bound_rows = Vec::new();
    for j in 0..n_orig {
        let (l, u) = (lower[j], upper[j]);
        if l > u + opts.feasibility_tolerance * 1f64.max(l.abs()) {
            return Solution::without_point(SolveStatus::Infeasible);
        }
        let map = if l.is_finite() && u.is_finite() && (u - l).abs() <= f64::EPSILON * 1f64.max(l.abs()) {
            ColumnMap::Fixed(l)
        } else if l.is_finite() {
            let col = ncols;
            ncols += 1;
            if u.is_finite() {
                bound_rows.push(StdRow { coeffs: vec![(col, 1.0)], relation: Relation::Le, rhs: u - l });
            }
            ColumnMap::Shift { col, offset: l }
        } else if u.is_finite() {
            let col = ncols;
            ncols += 1;
            ColumnMap::Mirror { col, offset: u }
        } else {
            let pos = ncols;
            ncols += 2;
            ColumnMap::Split { pos, neg: pos + 1 }
        };
        maps.push(map);
    }

    let translate = |coeffs: &[(usize, f64)], rhs: &mut f64| -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(coeffs.len());
        for &(j, a) in coeffs {
            match maps[j] {
                ColumnMap::Shift { col, offset } => {
                    *rhs -= a * offset;
                    out.push((col, a));
                }
                ColumnMap::Mirror { col, offset } => {
                    *rhs -= a * offset;
                    out.push((col, -a));
                }
                ColumnMap::Split { pos, neg } => {
                    out.push((pos, a));
                    out.push((neg, -a));
                }
                ColumnMap::Fixed(v) => *rhs -= a * v,
            }
        }
        out
    };

    let mut rows: Vec<StdRow> = Vec::with_capacity(model.rows.len() + bound_rows.len());
    for row in &model.rows {
        let mut rhs = row.rhs;
        let coeffs = translate(&row.coeffs, &mut rhs);
        rows.push(StdRow { coeffs, relation: row.relation, rhs });
    }
    rows.extend(bound_rows);

    // min c.y; the model constant and fixed/shift offsets do not affect the argmin
    let sign = match model.objective.sense {
        crate::Sense::Minimize => 1.0,
        crate::Sense::Maximize => -1.0,
    };
    let mut unused = 0.0;
    let mut cost = vec![0.0; ncols];
    for (col, c) in translate(&model.objective.coeffs, &mut unused) {
        cost[col] += sign * c;
    }

    let mut tab = match Tableau::build(&rows, ncols) {
        Some(t) => t,
        None => return Solution::without_point(SolveStatus::NumericalFailure),
    };
    let max_rhs = rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);

    // phase one
    if tab.first_artificial < tab.ncols {
        let mut phase1 = vec![0.0; tab.ncols];
        for c in phase1.iter_mut().skip(tab.first_artificial) {
            *c = 1.0;
        }
        let allowed = vec![true; tab.ncols];
        if let Err(status) = tab.optimize(&phase1, &allowed, deadline) {
            // phase one is bounded below by zero, so an unbounded ray is numerical breakdown
            let status = if status == SolveStatus::Unbounded { SolveStatus::NumericalFailure } else { status };
            return Solution::without_point(status);
        }
        let infeasibility: f64 = (0..tab.m)
            .filter(|&i| tab.basis[i] >= tab.first_artificial)
            .map(|i| tab.rhs(i))
            .sum();
        let threshold = opts.feasibility_tolerance * 1e3 * (1.0 + max_rhs);
        if infeasibility > threshold {
            return Solution::without_point(SolveStatus::Infeasible);
        }
        tab.drive_out_artificials();
    }

    let mut phase2 = vec![0.0; tab.ncols];
    phase2[..ncols].copy_from_slice(&cost);
    let allowed: Vec<bool> = (0..tab.ncols).map(|j| j < tab.first_artificial).collect();
    if let Err(status) = tab.optimize(&phase2, &allowed, deadline) {
        return Solution::without_point(status);
    }

    let mut y = vec![0.0; ncols];
    for i in 0..tab.m {
        let b = tab.basis[i];
        if b < ncols {
            y[b] = tab.rhs(i).max(0.0);
        }
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            ColumnMap::Shift { col, offset } => offset + y[col],
            ColumnMap::Mirror { col, offset } => offset - y[col],
            ColumnMap::Split { pos, neg } => y[pos] - y[neg],
            ColumnMap::Fixed(v) => v,
        })
        .collect();

    let tol = opts.feasibility_tolerance;
    let rows_ok = model.rows.iter().all(|r| r.violation(&x) <= tol * r.scale(&x));
    if !rows_ok {
        return Solution { status: SolveStatus::NumericalFailure, objective_value: None, assignment: x };
    }
    Solution { status: SolveStatus::Optimal, objective_value: Some(model.objective_value(&x)), assignment: x }
}

struct Tableau {
    m: usize,
    ncols: usize,
    first_artificial: usize,
    /// m rows of ncols coefficients followed by the right-hand side
    data: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn build(rows: &[StdRow], nstruct: usize) -> Option<Tableau> {
        let m = rows.len();
        let mut relations = Vec::with_capacity(m);
        let mut dense = Vec::with_capacity(m);
        for row in rows {
            let mut coeffs = vec![0.0; nstruct];
            for &(j, a) in &row.coeffs {
                coeffs[j] += a;
            }
            let (mut rel, mut rhs) = (row.relation, row.rhs);
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            if !rhs.is_finite() || coeffs.iter().any(|a| !a.is_finite()) {
                return None;
            }
            relations.push(rel);
            dense.push((coeffs, rhs));
        }
        let n_slack = relations.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = relations.iter().filter(|r| **r != Relation::Le).count();
        let first_slack = nstruct;
        let first_artificial = nstruct + n_slack;
        let ncols = first_artificial + n_art;

        let mut data = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (first_slack, first_artificial);
        for ((coeffs, rhs), rel) in dense.into_iter().zip(relations) {
            let mut row = coeffs;
            row.resize(ncols + 1, 0.0);
            row[ncols] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
            data.push(row);
        }
        Some(Tableau { m, ncols, first_artificial, data, basis })
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i][self.ncols]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.push(0.0);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(&self.data[i]) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, e: usize, d: &mut [f64]) {
        let p = self.data[r][e];
        for v in self.data[r].iter_mut() {
            *v /= p;
        }
        self.data[r][e] = 1.0;
        let pivot_row = self.data[r].clone();
        for (i, row) in self.data.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        let f = d[e];
        if f != 0.0 {
            for (v, pv) in d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            d[e] = 0.0;
        }
        self.basis[r] = e;
    }

    fn optimize(&mut self, cost: &[f64], allowed: &[bool], deadline: Instant) -> Result<(), SolveStatus> {
        let mut d = self.reduced_costs(cost);
        let max_iters = 200 * (self.m + self.ncols) + 1000;
        let mut degenerate = 0usize;
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        for iter in 0..max_iters {
            if iter % 64 == 63 && Instant::now() > deadline {
                return Err(SolveStatus::NodeLimit);
            }
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = -COST_TOL;
            for j in 0..self.ncols {
                if !allowed[j] || is_basic[j] || d[j] >= -COST_TOL {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if d[j] < best {
                    best = d[j];
                    entering = Some(j);
                }
            }
            let Some(e) = entering else { return Ok(()) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.data[i][e];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            let tie = (ratio - best_ratio).abs() <= 1e-12 * 1f64.max(best_ratio.abs());
                            if (tie && self.basis[i] < self.basis[r]) || (!tie && ratio < best_ratio) {
                                Some((i, ratio))
                            } else {
                                Some((r, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else { return Err(SolveStatus::Unbounded) };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            is_basic[self.basis[r]] = false;
            is_basic[e] = true;
            self.pivot(r, e, &mut d);
        }
        Err(SolveStatus::NumericalFailure)
    }

    /// Pivots basic artificials (all at zero after a feasible phase one) out of
    /// the basis, dropping rows that turn out to be linearly dependent.
    fn drive_out_artificials(&mut self) {
        let mut dummy = vec![0.0; self.ncols + 1];
        let mut i = 0;
        while i < self.m {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            let candidate = (0..self.first_artificial)
                .filter(|&j| !self.basis.contains(&j))
                .max_by(|&a, &b| self.data[i][a].abs().total_cmp(&self.data[i][b].abs()));
            match candidate {
                Some(j) if self.data[i][j].abs() > PIVOT_TOL => {
                    self.pivot(i, j, &mut dummy);
                    i += 1;
                }
                _ => {
                    self.data.remove(i);
                    self.basis.remove(i);
                    self.m -= 1;
                }
            }
        }
    }
}
