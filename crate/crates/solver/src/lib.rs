//! Embedded solver for flattened linear programmes.
//!
//! A [`FlatModel`] is the fully instantiated form of an algebraic model:
//! one column per concrete decision variable, one row per concrete
//! constraint. This crate solves such models with a dense two-phase
//! simplex ([`solve_lp`]) and a best-first branch-and-bound on top of it
//! ([`solve_milp`]), and writes them out in the CPLEX LP text format
//! ([`write_lp`]) so they can be handed to an external solver.

mod branch;
mod lp_format;
mod model;
mod simplex;

pub use branch::solve_milp;
pub use lp_format::{lp_name, write_lp};
pub use model::{FlatModel, Objective, Relation, Row, Sense, VarKind, Variable};
pub use simplex::solve_lp;

use serde::Serialize;

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node or time budget exhausted before optimality was proven.
    NodeLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NodeLimit => "nodeLimit",
            SolveStatus::NumericalFailure => "numericalFailure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Absolute feasibility tolerance, scaled by row magnitude when checking rows.
    pub feasibility_tolerance: f64,
    pub integrality_tolerance: f64,
    pub node_limit: usize,
    pub time_limit_secs: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feasibility_tolerance: 1e-9,
            integrality_tolerance: 1e-6,
            node_limit: 1_000_000,
            time_limit_secs: 60.0,
        }
    }
}

impl SolveOptions {
    /// Returns an error string naming the first option that is not strictly positive.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.feasibility_tolerance > 0.0) {
            return Err("feasibility tolerance must be positive".into());
        }
        if !(self.integrality_tolerance > 0.0) {
            return Err("integrality tolerance must be positive".into());
        }
        if self.node_limit == 0 {
            return Err("node limit must be positive".into());
        }
        if !(self.time_limit_secs > 0.0) {
            return Err("time limit must be positive".into());
        }
        Ok(())
    }
}

/// Result of [`solve`], [`solve_lp`] or [`solve_milp`].
///
/// `objective_value` is present exactly when the status is optimal. With
/// [`SolveStatus::NodeLimit`] the assignment holds the best incumbent, if
/// one was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective_value: Option<f64>,
    pub assignment: Vec<f64>,
}

impl Solution {
    pub(crate) fn without_point(status: SolveStatus) -> Self {
        Solution { status, objective_value: None, assignment: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Value of the named variable in the assignment.
    pub fn value_of(&self, model: &FlatModel, name: &str) -> Option<f64> {
        let idx = model.variables.iter().position(|v| v.name == name)?;
        self.assignment.get(idx).copied()
    }
}

/// Solves `model`, dispatching to branch-and-bound when any variable is integral.
pub fn solve(model: &FlatModel, opts: &SolveOptions) -> Solution {
    if model.has_integers() {
        solve_milp(model, opts)
    } else {
        solve_lp(model, opts)
    }
}
