use super::{LpBackend, LpError, LpModel, LpSolution, LpStatus, Row, Sense, BIG_BOUND};

const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const BREAKDOWN_PIVOT: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-7;
const RAY_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

/// Bounded-variable primal simplex on a dense tableau.
///
/// Phase one minimizes the sum of artificial variables attached to rows whose
/// slack starts out of bounds. Entering variables are chosen by largest
/// reduced cost; after 50 consecutive degenerate pivots the rule switches to
/// Bland's smallest-index rule until a nondegenerate pivot occurs.
#[derive(Debug, Default, Clone)]
pub struct DenseSimplex {
    /// Overrides the default limit of `50 * (rows + cols)` pivots.
    pub iteration_limit: Option<usize>,
    model: Option<LpModel>,
}

impl DenseSimplex {
    pub fn new() -> Self {
        Self::default()
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &'static str {
        "dense-simplex"
    }

    fn solve(&mut self, model: &LpModel) -> Result<LpSolution, LpError> {
        model.validate()?;
        self.model = Some(model.clone());
        solve_dense(model, self.iteration_limit)
    }

    fn add_rows(&mut self, rows: &[Row]) -> Result<LpSolution, LpError> {
        let model = self.model.as_mut().ok_or(LpError::NotLoaded)?;
        for row in rows {
            model.add_row(format!("r{}", model.rows.len()), row.clone());
        }
        let model = model.clone();
        model.validate()?;
        solve_dense(&model, self.iteration_limit)
    }
}

struct Tableau {
    m: usize,
    ncols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    value: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.t[r * n + j];
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + j];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for (a, pr) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * pr;
                }
                row[j] = 0.0;
            }
        }
    }

    fn run(&mut self, cost: &[f64], limit: usize) -> Result<PhaseEnd, LpError> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= limit {
                return Ok(PhaseEnd::IterationLimit);
            }
            let d = self.reduced_costs(cost);
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                let dir = match self.state[j] {
                    VarState::Basic => continue,
                    VarState::AtLower if d[j] < -OPT_TOL && self.upper[j] > self.lower[j] => 1.0,
                    VarState::AtUpper if d[j] > OPT_TOL && self.upper[j] > self.lower[j] => -1.0,
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if d[j].abs() > best {
                    best = d[j].abs();
                    entering = Some((j, dir));
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            // ratio test
            let mut step = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = dir * self.at(i, j);
                let bv = self.basis[i];
                let limit = if alpha > PIVOT_TOL && self.lower[bv].is_finite() {
                    ((self.beta[i] - self.lower[bv]) / alpha).max(0.0)
                } else if alpha < -PIVOT_TOL && self.upper[bv].is_finite() {
                    ((self.upper[bv] - self.beta[i]) / -alpha).max(0.0)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < step,
                    Some((r, _)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                bv < self.basis[r]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = step.min(limit);
                    leave = Some((i, alpha > 0.0));
                    leave_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return Ok(PhaseEnd::Unbounded);
            }

            self.iterations += 1;
            if step < 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            for i in 0..self.m {
                let a = self.at(i, j);
                if a != 0.0 {
                    self.beta[i] -= dir * step * a;
                }
            }
            self.value[j] += dir * step;

            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.value[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some((r, to_lower)) => {
                    if self.at(r, j).abs() < BREAKDOWN_PIVOT {
                        return Err(LpError::Numerical(format!(
                            "pivot magnitude {:e} below threshold",
                            self.at(r, j).abs()
                        )));
                    }
                    let out = self.basis[r];
                    self.state[out] = if to_lower { VarState::AtLower } else { VarState::AtUpper };
                    self.value[out] = if to_lower { self.lower[out] } else { self.upper[out] };
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic;
                    self.beta[r] = self.value[j];
                }
            }
        }
    }
}

fn solve_dense(model: &LpModel, limit: Option<usize>) -> Result<LpSolution, LpError> {
    let n = model.num_vars();
    let mut warnings = Vec::new();

    // drop empty rows, checking them for consistency
    let mut rows: Vec<&Row> = Vec::with_capacity(model.rows.len());
    let mut row_ids = Vec::with_capacity(model.rows.len());
    for (i, row) in model.rows.iter().enumerate() {
        if row.coefs.iter().all(|&(_, a)| a == 0.0) {
            if row.sense.violation(0.0, row.rhs) > FEAS_TOL {
                return Ok(LpSolution::without_point(LpStatus::Infeasible, 0));
            }
            continue;
        }
        rows.push(row);
        row_ids.push(i);
    }
    let m = rows.len();

    let mut lower = model.lower.clone();
    let mut upper = model.upper.clone();
    let mut replaced = 0;
    for j in 0..n {
        if lower[j] == f64::NEG_INFINITY {
            lower[j] = -BIG_BOUND;
            replaced += 1;
        }
        if upper[j] == f64::INFINITY {
            upper[j] = BIG_BOUND;
            replaced += 1;
        }
    }
    if replaced > 0 {
        warnings.push(format!("{replaced} infinite bounds replaced by ±{BIG_BOUND:e}"));
    }

    let mut value: Vec<f64> = lower[..n].to_vec();
    let mut residual = vec![0.0; m];
    for (i, row) in rows.iter().enumerate() {
        residual[i] = row.rhs - row.lhs(&value);
    }

    // slack bounds
    let mut slack_lo = vec![0.0; m];
    let mut slack_hi = vec![0.0; m];
    for (i, row) in rows.iter().enumerate() {
        let (lo, hi) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        slack_lo[i] = lo;
        slack_hi[i] = hi;
    }

    let art_rows: Vec<usize> = (0..m)
        .filter(|&i| residual[i] < slack_lo[i] - 1e-12 || residual[i] > slack_hi[i] + 1e-12)
        .collect();
    let na = art_rows.len();
    let ncols = n + m + na;

    let mut t = vec![0.0; m * ncols];
    let mut basis = vec![0; m];
    let mut beta = vec![0.0; m];
    let mut state = vec![VarState::AtLower; ncols];
    lower.extend_from_slice(&slack_lo);
    upper.extend_from_slice(&slack_hi);
    lower.extend(std::iter::repeat(0.0).take(na));
    upper.extend(std::iter::repeat(f64::INFINITY).take(na));
    value.extend(std::iter::repeat(0.0).take(m + na));

    let mut art_of_row = vec![None; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = Some(n + m + k);
    }
    for (i, row) in rows.iter().enumerate() {
        let r = &mut t[i * ncols..(i + 1) * ncols];
        for &(j, a) in &row.coefs {
            r[j] += a;
        }
        r[n + i] = 1.0;
        match art_of_row[i] {
            None => {
                basis[i] = n + i;
                state[n + i] = VarState::Basic;
                beta[i] = residual[i];
                value[n + i] = residual[i];
            }
            Some(art) => {
                let (bound, at) = if residual[i] < slack_lo[i] {
                    (slack_lo[i], VarState::AtLower)
                } else {
                    (slack_hi[i], VarState::AtUpper)
                };
                state[n + i] = at;
                value[n + i] = bound;
                let sign = if residual[i] > bound { 1.0 } else { -1.0 };
                r[art] = sign;
                // basis column is sign * e_i, so scale the row by sign
                if sign < 0.0 {
                    for v in r.iter_mut() {
                        *v = -*v;
                    }
                }
                basis[i] = art;
                state[art] = VarState::Basic;
                beta[i] = (residual[i] - bound).abs();
                value[art] = beta[i];
            }
        }
    }

    let mut tab = Tableau {
        m,
        ncols,
        t,
        beta,
        basis,
        state,
        value,
        lower,
        upper,
        iterations: 0,
    };
    let limit = limit.unwrap_or(50 * (m + n).max(1));

    if na > 0 {
        let mut phase1 = vec![0.0; ncols];
        for c in &mut phase1[n + m..] {
            *c = 1.0;
        }
        match tab.run(&phase1, limit)? {
            PhaseEnd::IterationLimit => {
                return Ok(LpSolution::without_point(LpStatus::IterationLimit, tab.iterations))
            }
            PhaseEnd::Unbounded => {
                return Err(LpError::Numerical("phase one reported an unbounded ray".into()))
            }
            PhaseEnd::Optimal => {}
        }
        let infeas: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= n + m)
            .map(|i| tab.beta[i])
            .sum();
        let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeas > FEAS_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.iterations));
        }
        for j in n + m..ncols {
            tab.upper[j] = 0.0;
            if tab.state[j] != VarState::Basic {
                tab.state[j] = VarState::AtLower;
                tab.value[j] = 0.0;
            }
        }
    }

    let mut cost = model.cost.clone();
    cost.resize(ncols, 0.0);
    let end = tab.run(&cost, limit)?;
    let status = match end {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.iterations)),
        PhaseEnd::IterationLimit => {
            return Ok(LpSolution::without_point(LpStatus::IterationLimit, tab.iterations))
        }
    };

    // recompute basic values from B^-1 (the slack columns) to shed drift
    let mut rhs = vec![0.0; m];
    for (i, row) in rows.iter().enumerate() {
        rhs[i] = row.rhs;
    }
    for j in 0..ncols {
        if tab.state[j] == VarState::Basic || tab.value[j] == 0.0 {
            continue;
        }
        let v = tab.value[j];
        if j < n {
            for (i, row) in rows.iter().enumerate() {
                for &(jj, a) in &row.coefs {
                    if jj == j {
                        rhs[i] -= a * v;
                    }
                }
            }
        } else if j < n + m {
            rhs[j - n] -= v;
        }
        // nonbasic artificials sit at zero in phase two
    }
    for i in 0..m {
        let mut s = 0.0;
        for (k, r) in rhs.iter().enumerate() {
            s += tab.at(i, n + k) * r;
        }
        tab.beta[i] = s;
        let bv = tab.basis[i];
        tab.value[bv] = s;
    }

    let x: Vec<f64> = tab.value[..n].to_vec();
    let mut duals_kept = vec![0.0; m];
    for (i, y) in duals_kept.iter_mut().enumerate() {
        *y = (0..m).map(|k| cost[tab.basis[k]] * tab.at(k, n + i)).sum();
    }
    let mut duals = vec![0.0; model.rows.len()];
    for (k, &orig) in row_ids.iter().enumerate() {
        duals[orig] = duals_kept[k];
    }

    let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let viol = model.max_violation(&x);
    if viol > FEAS_TOL * scale {
        return Err(LpError::Numerical(format!("final primal residual {viol:e}")));
    }

    if replaced > 0 && improving_ray(model, Some(limit))? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.iterations));
    }

    Ok(LpSolution {
        status,
        objective: model.objective(&x),
        x,
        duals: Some(duals),
        iterations: tab.iterations,
        warnings,
        rejected_rows: Vec::new(),
    })
}

/// Whether the recession cone of a feasible model holds a direction of
/// strict descent. Searched over the unit box, so every bound is finite.
fn improving_ray(model: &LpModel, limit: Option<usize>) -> Result<bool, LpError> {
    let mut ray = model.clone();
    ray.offset = 0.0;
    for j in 0..model.num_vars() {
        ray.lower[j] = if model.lower[j].is_finite() { 0.0 } else { -1.0 };
        ray.upper[j] = if model.upper[j].is_finite() { 0.0 } else { 1.0 };
    }
    for row in &mut ray.rows {
        row.rhs = 0.0;
    }
    let sol = solve_dense(&ray, limit)?;
    Ok(sol.status == LpStatus::Optimal && sol.objective < -RAY_TOL)
}
