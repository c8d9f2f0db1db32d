use highs::{Col, HighsModelStatus, Model, RowProblem, Sense as Direction, SolvedModel};

use super::{LpBackend, LpError, LpModel, LpSolution, LpStatus, Row, Sense};

/// HiGHS dual/primal simplex. Appended rows are re-optimized from the
/// previous basis. Presolve is off so the basis survives between solves.
#[derive(Default)]
pub struct HighsSimplex {
    solved: Option<SolvedModel>,
    cols: Vec<Col>,
    offset: f64,
}

impl HighsSimplex {
    pub fn new() -> Self {
        Self::default()
    }

    fn run(&mut self, mut model: Model) -> Result<LpSolution, LpError> {
        model.set_option("solver", "simplex");
        model.set_option("presolve", "off");
        let solved = model
            .try_solve()
            .map_err(|e| LpError::Numerical(format!("HiGHS run failed: {e:?}")))?;
        let status = match solved.status() {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => LpStatus::Optimal,
            HighsModelStatus::Infeasible => LpStatus::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => LpStatus::Unbounded,
            HighsModelStatus::ReachedIterationLimit | HighsModelStatus::ReachedTimeLimit => LpStatus::IterationLimit,
            other => return Err(LpError::Numerical(format!("HiGHS stopped with {other:?}"))),
        };
        let out = if status == LpStatus::Optimal {
            let sol = solved.get_solution();
            LpSolution {
                status,
                x: sol.columns().to_vec(),
                duals: Some(sol.dual_rows().to_vec()),
                objective: solved.objective_value() + self.offset,
                iterations: 0,
                warnings: Vec::new(),
                rejected_rows: Vec::new(),
            }
        } else {
            LpSolution::without_point(status, 0)
        };
        self.solved = Some(solved);
        Ok(out)
    }
}

fn range(row: &Row) -> (f64, f64) {
    match row.sense {
        Sense::Le => (f64::NEG_INFINITY, row.rhs),
        Sense::Ge => (row.rhs, f64::INFINITY),
        Sense::Eq => (row.rhs, row.rhs),
    }
}

impl LpBackend for HighsSimplex {
    fn name(&self) -> &'static str {
        "highs-simplex"
    }

    fn solve(&mut self, model: &LpModel) -> Result<LpSolution, LpError> {
        model.validate()?;
        let mut problem = RowProblem::new();
        self.cols = (0..model.num_vars())
            .map(|j| problem.add_column(model.cost[j], model.lower[j]..=model.upper[j]))
            .collect();
        for row in &model.rows {
            let (lo, hi) = range(row);
            let terms: Vec<(Col, f64)> = row.coefs.iter().map(|&(j, a)| (self.cols[j], a)).collect();
            problem.add_row(lo..=hi, terms);
        }
        self.offset = model.offset;
        self.run(problem.optimise(Direction::Minimise))
    }

    fn add_rows(&mut self, rows: &[Row]) -> Result<LpSolution, LpError> {
        let solved = self.solved.take().ok_or(LpError::NotLoaded)?;
        let mut model: Model = solved.into();
        for row in rows {
            if let Some(&(j, _)) = row.coefs.iter().find(|&&(j, _)| j >= self.cols.len()) {
                return Err(LpError::Malformed(format!("row references variable {j}")));
            }
            let (lo, hi) = range(row);
            model
                .try_add_row(lo..=hi, row.coefs.iter().map(|&(j, a)| (self.cols[j], a)))
                .map_err(|e| LpError::Numerical(format!("HiGHS rejected a row: {e:?}")))?;
        }
        self.run(model)
    }
}
