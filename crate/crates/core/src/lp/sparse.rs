use microlp::{ComparisonOp, Error as MicroError, LinearExpr, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};

use super::{LpBackend, LpError, LpModel, LpSolution, LpStatus, Row, Sense, BIG_BOUND};

/// Sparse revised simplex from `microlp`. Appended rows are handled by the
/// dual simplex starting from the previous optimal basis. Columns and rows
/// are equilibrated with power-of-two factors before they reach the solver.
#[derive(Default)]
pub struct SparseSimplex {
    model: Option<LpModel>,
    vars: Vec<Variable>,
    /// `x_j = col_scale[j] · x̃_j`.
    col_scale: Vec<f64>,
    offset: f64,
    current: Option<Solution>,
    warnings: Vec<String>,
}

impl SparseSimplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Scaled row as `(expression, rhs)`.
    fn expr(&self, row: &Row) -> (LinearExpr, f64) {
        let big = row
            .coefs
            .iter()
            .map(|&(j, a)| (a * self.col_scale[j]).abs())
            .fold(0.0, f64::max);
        let r = if big > 0.0 { pow2(1.0 / big) } else { 1.0 };
        let mut e = LinearExpr::empty();
        for &(j, a) in &row.coefs {
            e.add(self.vars[j], a * self.col_scale[j] * r);
        }
        (e, row.rhs * r)
    }

    fn finish(&mut self, outcome: Result<SolveOutcome, MicroError>) -> Result<LpSolution, LpError> {
        match outcome {
            Ok(SolveOutcome::Solution(sol)) => {
                let x: Vec<f64> = self
                    .vars
                    .iter()
                    .zip(&self.col_scale)
                    .map(|(&v, &s)| s * sol.var_value(v))
                    .collect();
                let out = LpSolution {
                    status: LpStatus::Optimal,
                    objective: sol.objective() + self.offset,
                    x,
                    duals: None,
                    iterations: 0,
                    warnings: self.warnings.clone(),
                    rejected_rows: Vec::new(),
                };
                self.current = Some(sol);
                Ok(out)
            }
            Ok(SolveOutcome::Interrupted(_)) => {
                self.current = None;
                Ok(LpSolution::without_point(LpStatus::IterationLimit, 0))
            }
            Err(MicroError::Infeasible) => {
                self.current = None;
                Ok(LpSolution::without_point(LpStatus::Infeasible, 0))
            }
            Err(MicroError::Unbounded) => {
                self.current = None;
                Ok(LpSolution::without_point(LpStatus::Unbounded, 0))
            }
            Err(e) => {
                self.current = None;
                Err(LpError::Numerical(e.to_string()))
            }
        }
    }
}

fn pow2(v: f64) -> f64 {
    2f64.powi(v.log2().round() as i32)
}

/// Geometric-mean column scaling over a few alternating passes.
fn column_scales(model: &LpModel) -> Vec<f64> {
    let n = model.num_vars();
    let mut col = vec![1.0; n];
    let mut row = vec![1.0; model.rows.len()];
    for _ in 0..4 {
        for (i, r) in model.rows.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(j, a) in &r.coefs {
                let v = (a * col[j]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            row[i] = if hi > 0.0 { 1.0 / (lo * hi).sqrt() } else { 1.0 };
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![0.0f64; n];
        for (i, r) in model.rows.iter().enumerate() {
            for &(j, a) in &r.coefs {
                let v = (a * row[i]).abs();
                if v > 0.0 {
                    lo[j] = lo[j].min(v);
                    hi[j] = hi[j].max(v);
                }
            }
        }
        for j in 0..n {
            if hi[j] > 0.0 {
                col[j] = 1.0 / (lo[j] * hi[j]).sqrt();
            }
        }
    }
    col.into_iter().map(pow2).collect()
}

fn op(sense: Sense) -> ComparisonOp {
    match sense {
        Sense::Le => ComparisonOp::Le,
        Sense::Ge => ComparisonOp::Ge,
        Sense::Eq => ComparisonOp::Eq,
    }
}

impl LpBackend for SparseSimplex {
    fn name(&self) -> &'static str {
        "sparse-simplex"
    }

    fn solve(&mut self, model: &LpModel) -> Result<LpSolution, LpError> {
        model.validate()?;
        self.model = Some(model.clone());
        self.cold(model)
    }

    fn add_rows(&mut self, rows: &[Row]) -> Result<LpSolution, LpError> {
        let mut sol = self.current.take().ok_or(LpError::NotLoaded)?;
        if let Some(&(j, _)) = rows.iter().flat_map(|r| &r.coefs).find(|&&(j, _)| j >= self.vars.len()) {
            return Err(LpError::Malformed(format!("row references variable {j}")));
        }
        let mut rejected = Vec::new();
        let mut notes = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            self.model.as_mut().ok_or(LpError::NotLoaded)?.add_row(String::new(), row.clone());
            let (expr, rhs) = self.expr(row);
            match sol.add_constraint(expr, op(row.sense), rhs) {
                Ok(SolveOutcome::Solution(next)) => sol = next,
                Err(MicroError::Infeasible) => return self.finish(Err(MicroError::Infeasible)),
                Ok(SolveOutcome::Interrupted(_)) | Err(_) => {
                    let model = self.model.clone().expect("model loaded");
                    match self.cold(&model) {
                        Ok(s) if s.status != LpStatus::Optimal => return Ok(s),
                        Ok(_) => notes.push(format!("warm start failed at row {i}; re-solved from scratch")),
                        Err(_) => {
                            let model = self.model.as_mut().expect("model loaded");
                            model.rows.pop();
                            model.row_names.pop();
                            let model = model.clone();
                            let s = self.cold(&model)?;
                            if s.status != LpStatus::Optimal {
                                return Ok(s);
                            }
                            notes.push(format!("row {i} left out after a singular basis"));
                            rejected.push(i);
                        }
                    }
                    sol = self.current.take().expect("cold solve stored a basis");
                }
            }
        }
        let mut out = self.finish(Ok(SolveOutcome::Solution(sol)))?;
        out.warnings.extend(notes);
        out.rejected_rows = rejected;
        Ok(out)
    }
}

impl SparseSimplex {
    fn cold(&mut self, model: &LpModel) -> Result<LpSolution, LpError> {
        self.warnings.clear();
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let mut replaced = 0;
        self.col_scale = column_scales(model);
        self.vars = (0..model.num_vars())
            .map(|j| {
                let s = self.col_scale[j];
                let mut lo = model.lower[j];
                let mut hi = model.upper[j];
                if lo == f64::NEG_INFINITY {
                    lo = -BIG_BOUND;
                    replaced += 1;
                }
                if hi == f64::INFINITY {
                    hi = BIG_BOUND;
                    replaced += 1;
                }
                problem.add_var(model.cost[j] * s, (lo / s, hi / s))
            })
            .collect();
        if replaced > 0 {
            self.warnings
                .push(format!("{replaced} infinite bounds replaced by ±{BIG_BOUND:e}"));
        }
        self.offset = model.offset;
        for row in &model.rows {
            if row.coefs.iter().all(|&(_, a)| a == 0.0) {
                if row.sense.violation(0.0, row.rhs) > 1e-9 {
                    self.current = None;
                    return Ok(LpSolution::without_point(LpStatus::Infeasible, 0));
                }
                continue;
            }
            let (expr, rhs) = self.expr(row);
            problem.add_constraint(expr, op(row.sense), rhs);
        }
        let outcome = problem.solve();
        self.finish(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;

    #[test]
    fn matches_dense_on_small_lp() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, 4.0, -1.0);
        let y = m.add_var("y", -1.0, 4.0, -2.0);
        m.add_row("a", Row::new(vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0));
        m.add_row("b", Row::new(vec![(x, -1.0), (y, 2.0)], Sense::Le, 4.0));
        m.offset = 3.0;
        let a = SparseSimplex::new().solve(&m).unwrap();
        let b = DenseSimplex::new().solve(&m).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9, "{} vs {}", a.objective, b.objective);
    }

    #[test]
    fn warm_start_after_rows() {
        let mut m = LpModel::new();
        let x = m.add_var("x", 0.0, 4.0, -1.0);
        let y = m.add_var("y", 0.0, 4.0, -1.0);
        let mut lp = SparseSimplex::new();
        let a = lp.solve(&m).unwrap();
        assert!((a.objective + 8.0).abs() < 1e-9);
        let b = lp
            .add_rows(&[
                Row::new(vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0),
                Row::new(vec![(x, 1.0)], Sense::Le, 1.0),
            ])
            .unwrap();
        assert!((b.objective + 5.0).abs() < 1e-9);
        let c = lp.add_rows(&[Row::new(vec![(y, 1.0)], Sense::Ge, 5.0)]).unwrap();
        assert_eq!(c.status, LpStatus::Infeasible);
        assert_eq!(lp.add_rows(&[]).unwrap_err(), LpError::NotLoaded);
    }
}
