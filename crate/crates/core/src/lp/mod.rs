//! Bounded-variable linear programs and the solvers behind them.
//!
//! [`LpModel`] is a plain minimization LP with per-variable bounds and sparse
//! rows. Three backends implement [`LpBackend`]:
//!
//! * [`DenseSimplex`], a self-contained bounded-variable primal simplex on a
//!   dense tableau. It reports duals and is the reference implementation.
//! * [`HighsSimplex`], the HiGHS simplex solver, warm-started from the last
//!   basis when rows are appended. The cutting-plane engine uses it by default.
//! * [`SparseSimplex`], backed by the pure-Rust `microlp` sparse LU simplex.

mod dense;
pub mod format;
mod highs;
mod sparse;

pub use dense::DenseSimplex;
pub use highs::HighsSimplex;
pub use sparse::SparseSimplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Finite stand-in for an infinite structural bound.
pub const BIG_BOUND: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("no model loaded")]
    NotLoaded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    /// Signed amount by which `lhs` fails the row; nonpositive when satisfied.
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => lhs - rhs,
            Sense::Ge => rhs - lhs,
            Sense::Eq => (lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Row { coefs, sense, rhs }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.sense.violation(self.lhs(x), self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

/// `min cost·x  s.t.  rows, lower ≤ x ≤ upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cost: Vec<f64>,
    pub kinds: Vec<VarKind>,
    pub rows: Vec<Row>,
    pub row_names: Vec<String>,
    /// Constant added to the objective.
    pub offset: f64,
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(cost);
        self.kinds.push(VarKind::Continuous);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, row: Row) -> usize {
        self.row_names.push(name.into());
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&l, &u))| (l - v).max(v - u))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.kinds.len() != n || self.names.len() != n {
            return Err(LpError::Malformed("variable arrays differ in length".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(LpError::Malformed(format!(
                    "variable {} has bounds [{}, {}]",
                    self.names[j], self.lower[j], self.upper[j]
                )));
            }
            if !self.cost[j].is_finite() {
                return Err(LpError::Malformed(format!("variable {} has cost {}", self.names[j], self.cost[j])));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has rhs {}", row.rhs)));
            }
            for &(j, a) in &row.coefs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} has bad entry ({j}, {a})")));
                }
            }
        }
        Ok(())
    }

    /// Lower bound on the optimum implied by row multipliers `y`, after
    /// clipping each multiplier to its dual-feasible sign.
    pub fn dual_bound(&self, y: &[f64]) -> f64 {
        let mut reduced = self.cost.clone();
        let mut magnitude: Vec<f64> = self.cost.iter().map(|c| c.abs()).collect();
        let mut total = self.offset;
        for (row, &yi) in self.rows.iter().zip(y) {
            let yi = match row.sense {
                Sense::Le => yi.min(0.0),
                Sense::Ge => yi.max(0.0),
                Sense::Eq => yi,
            };
            total += yi * row.rhs;
            for &(j, a) in &row.coefs {
                reduced[j] -= yi * a;
                magnitude[j] += (yi * a).abs();
            }
        }
        for (j, d) in reduced.into_iter().enumerate() {
            let bound = if d > 0.0 { self.lower[j] } else { self.upper[j] };
            // cancellation residue against an open side
            if d == 0.0 || (bound.is_infinite() && d.abs() <= 1e-12 * magnitude[j]) {
                continue;
            }
            total += d * bound;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row multipliers, when the backend provides them.
    pub duals: Option<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
    /// Indices into the last `add_rows` batch that the backend could not
    /// take on and left out of the model.
    pub rejected_rows: Vec<usize>,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            duals: None,
            objective: f64::NAN,
            iterations,
            warnings: Vec::new(),
            rejected_rows: Vec::new(),
        }
    }
}

/// A stateful LP solver. `add_rows` appends constraints to the last loaded
/// model and re-optimizes.
pub trait LpBackend {
    fn name(&self) -> &'static str;
    fn solve(&mut self, model: &LpModel) -> Result<LpSolution, LpError>;
    fn add_rows(&mut self, rows: &[Row]) -> Result<LpSolution, LpError>;
}
