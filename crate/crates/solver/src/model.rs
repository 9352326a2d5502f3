use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Self {
        Variable { name: name.into(), kind, lower, upper }
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self::new(name, VarKind::Continuous, lower, upper)
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn integer(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self::new(name, VarKind::Integer, lower, upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// One linear row: `sum(coeff * x[var]) relation rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    pub fn new(name: impl Into<String>, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Row { name: name.into(), coeffs, relation, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }

    /// Magnitude used to scale the feasibility tolerance for this row.
    pub fn scale(&self, x: &[f64]) -> f64 {
        let terms = self.coeffs.iter().map(|&(j, a)| (a * x[j]).abs()).fold(0.0, f64::max);
        1.0f64.max(self.rhs.abs()).max(terms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Objective {
    pub name: String,
    pub sense: Sense,
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

/// A fully instantiated linear programme.
///
/// Inequality rows play the role of `g_i(x) <= 0` and equality rows of
/// `h_j(x) = 0`; variable bounds are carried on the columns, not as rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatModel {
    pub variables: Vec<Variable>,
    pub objective: Objective,
    pub rows: Vec<Row>,
}

impl FlatModel {
    pub fn new(sense: Sense) -> Self {
        FlatModel {
            variables: Vec::new(),
            objective: Objective { name: "obj".into(), sense, coeffs: Vec::new(), constant: 0.0 },
            rows: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, var: Variable) -> usize {
        self.variables.push(var);
        self.variables.len() - 1
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.kind.is_integral())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.constant + self.objective.coeffs.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    /// True when `x` satisfies every row and bound within `tol` (row-scaled).
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.variables.len() {
            return false;
        }
        let bounds_ok = self.variables.iter().zip(x).all(|(v, &xi)| {
            let s = 1.0f64.max(xi.abs());
            xi >= v.lower - tol * s && xi <= v.upper + tol * s
        });
        bounds_ok && self.rows.iter().all(|r| r.violation(x) <= tol * r.scale(x))
    }

    /// Checks structural invariants: finite coefficients and in-range column references.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.variables.len();
        let check = |what: &str, coeffs: &[(usize, f64)]| -> Result<(), String> {
            for &(j, a) in coeffs {
                if j >= n {
                    return Err(format!("{what} references column {j} but only {n} variables exist"));
                }
                if !a.is_finite() {
                    return Err(format!("{what} has a non-finite coefficient on column {j}"));
                }
            }
            Ok(())
        };
        check("objective", &self.objective.coeffs)?;
        if !self.objective.constant.is_finite() {
            return Err("objective constant is not finite".into());
        }
        for row in &self.rows {
            check(&format!("row '{}'", row.name), &row.coeffs)?;
            if !row.rhs.is_finite() {
                return Err(format!("row '{}' has a non-finite right-hand side", row.name));
            }
        }
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() {
                return Err(format!("variable '{}' has a NaN bound", v.name));
            }
        }
        Ok(())
    }
}
