//! Cutting-plane loop: solve the LP, separate, append violated cuts, repeat.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cuts::{self, AngleInterval, Cut, CutConfig, CutError, Family};
use crate::lp::{DenseSimplex, HighsSimplex, LpBackend, LpError, LpSolution, LpStatus, SparseSimplex};
use crate::model::{build_base_model, ModelError, ModelInstance, ModelOptions};
use crate::netcase::Network;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error("LP solver failed in round {round}: {source}")]
    Lp { round: usize, source: LpError },
    #[error("LP solver stopped with status {status:?} in round {round}")]
    LpStatus { round: usize, status: LpStatus },
    #[error("cut {name} is not violated at its generating point ({violation:e})")]
    UnsoundCut { name: String, violation: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Highs,
    Sparse,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub cuts: CutConfig,
    /// Relative bound improvement per round that counts as progress.
    pub tol_improve: f64,
    /// Consecutive rounds without progress before stopping.
    pub stall_rounds: usize,
    pub max_rounds: usize,
    /// Per-family cap on cuts added per round; `None` means twice the
    /// number of in-service branches.
    pub max_cuts_per_family: Option<usize>,
    /// Angle intervals; they tighten the e/f boxes and the Δ bounds.
    pub intervals: Vec<AngleInterval>,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            cuts: CutConfig::default(),
            tol_improve: 1e-7,
            stall_rounds: 5,
            max_rounds: 200,
            max_cuts_per_family: None,
            intervals: Vec::new(),
            seed: 0,
            backend: Backend::Highs,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.cuts.tol > 0.0) || !(self.tol_improve > 0.0) {
            return Err(EngineError::Config("tolerances must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(EngineError::Config("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    RoundLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub bound: f64,
    pub cuts_added: BTreeMap<Family, usize>,
    /// Largest unit-normalized violation found by the separators.
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: RunStatus,
    /// Final lower bound; absent when the relaxation is infeasible.
    pub bound: Option<f64>,
    pub rounds: usize,
    pub trajectory: Vec<RoundRecord>,
    pub cuts_per_family: BTreeMap<Family, usize>,
    pub reference_objective: Option<f64>,
    /// `(reference − bound) / reference`.
    pub gap: Option<f64>,
    pub variables: usize,
    pub base_rows: usize,
    pub backend: String,
    #[serde(skip)]
    pub wall_seconds: f64,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn bounds(&self) -> Vec<f64> {
        self.trajectory.iter().map(|r| r.bound).collect()
    }

    /// Round-by-round bound trajectory as CSV.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("round,bound,cuts_added,max_violation\n");
        for r in &self.trajectory {
            let added: usize = r.cuts_added.values().sum();
            let _ = writeln!(out, "{},{:?},{},{:?}", r.round, r.bound, added, r.max_violation);
        }
        out
    }
}

/// Everything a run produced, for callers that inspect the final state.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: SolveReport,
    pub model: ModelInstance,
    /// Final LP point (empty when infeasible).
    pub point: Vec<f64>,
    /// Cuts appended by separation, in order, with their round.
    pub appended: Vec<(usize, Cut)>,
}

fn cut_key(cut: &Cut) -> (Vec<(usize, i64)>, i64, u8) {
    let q = |v: f64| (v * 1e9).round() as i64;
    let mut coefs: Vec<(usize, i64)> = cut.constraint.coefs.iter().map(|&(j, a)| (j, q(a))).collect();
    coefs.sort_unstable();
    (coefs, q(cut.constraint.rhs), cut.constraint.sense as u8)
}

fn make_backend(kind: Backend) -> Box<dyn LpBackend> {
    match kind {
        Backend::Highs => Box::new(HighsSimplex::new()),
        Backend::Sparse => Box::new(SparseSimplex::new()),
        Backend::Dense => Box::new(DenseSimplex::new()),
    }
}

fn check_status(sol: &LpSolution, round: usize) -> Result<bool, EngineError> {
    match sol.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        status => Err(EngineError::LpStatus { round, status }),
    }
}

/// Runs the cutting-plane loop and returns the report.
pub fn run(net: &Network, cfg: &SolveConfig, reference_obj: Option<f64>) -> Result<SolveReport, EngineError> {
    run_detailed(net, cfg, reference_obj).map(|o| o.report)
}

pub fn run_detailed(net: &Network, cfg: &SolveConfig, reference_obj: Option<f64>) -> Result<RunOutcome, EngineError> {
    cfg.validate()?;
    let start = Instant::now();
    let opts = ModelOptions { intervals: cfg.intervals.clone() };
    let mut model = build_base_model(net, &opts)?;
    let base_rows = model.constraints.len();

    let mut tighten: Vec<Option<AngleInterval>> = vec![None; net.buses.len()];
    for iv in &cfg.intervals {
        if let Some(i) = net.bus_index(iv.bus) {
            tighten[i] = model.bus_intervals[i];
        }
    }
    let mut counts: BTreeMap<Family, usize> = BTreeMap::new();
    if cfg.cuts.has(Family::Delta) {
        let delta = cuts::static_delta_cuts(&model, net, &tighten);
        *counts.entry(Family::Delta).or_default() += delta.len();
        model.cut_pool.extend(delta);
    }

    let mut backend = make_backend(cfg.backend);
    let mut warnings: Vec<String> = Vec::new();
    let lp = model.to_lp();
    let mut sol = backend.solve(&lp).map_err(|source| EngineError::Lp { round: 0, source })?;
    warnings.extend(sol.warnings.iter().cloned());

    let cap = cfg
        .max_cuts_per_family
        .unwrap_or(2 * model.catalog.branches.len())
        .max(1);
    let mut seen: HashSet<(Vec<(usize, i64)>, i64, u8)> = model.cut_pool.iter().map(cut_key).collect();
    let mut trajectory: Vec<RoundRecord> = Vec::new();
    let mut appended: Vec<(usize, Cut)> = Vec::new();
    let mut stalled = 0;
    let mut status = RunStatus::RoundLimit;
    let mut round = 0;

    loop {
        if !check_status(&sol, round)? {
            status = RunStatus::Infeasible;
            break;
        }
        let bound = sol.objective;
        if let Some(prev) = trajectory.last().map(|r| r.bound) {
            let step = bound - prev;
            if step < -1e-9 * prev.abs().max(1.0) {
                warnings.push(format!("round {round}: bound decreased by {:e}", -step));
            }
            if step <= cfg.tol_improve * prev.abs().max(1.0) {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }

        let found = cuts::separate_all(&model, net, &sol.x, &cfg.cuts)?;
        let max_violation = found.iter().map(|c| c.violation).fold(0.0, f64::max);
        let mut by_family: BTreeMap<Family, Vec<Cut>> = BTreeMap::new();
        for cut in found {
            let v = cut.constraint.violation(&sol.x);
            if !(v > cfg.cuts.tol) {
                return Err(EngineError::UnsoundCut { name: cut.constraint.name.clone(), violation: v });
            }
            if seen.insert(cut_key(&cut)) {
                by_family.entry(cut.family).or_default().push(cut);
            }
        }
        let mut batch: Vec<Cut> = Vec::new();
        let mut added: BTreeMap<Family, usize> = BTreeMap::new();
        for (family, mut list) in by_family {
            list.sort_by(|a, b| b.violation.total_cmp(&a.violation));
            list.truncate(cap);
            added.insert(family, list.len());
            batch.extend(list);
        }
        trajectory.push(RoundRecord { round, bound, cuts_added: added.clone(), max_violation });

        if batch.is_empty() {
            status = RunStatus::Converged;
            break;
        }
        if stalled >= cfg.stall_rounds {
            status = RunStatus::Converged;
            break;
        }
        if round + 1 >= cfg.max_rounds {
            break;
        }
        round += 1;
        let rows: Vec<_> = batch.iter().map(|c| c.constraint.to_row()).collect();
        sol = backend.add_rows(&rows).map_err(|source| EngineError::Lp { round, source })?;
        warnings.extend(sol.warnings.iter().map(|w| format!("round {round}: {w}")));
        for (i, cut) in batch.into_iter().enumerate() {
            if sol.rejected_rows.contains(&i) {
                if let Some(n) = trajectory.last_mut().and_then(|r| r.cuts_added.get_mut(&cut.family)) {
                    *n -= 1;
                }
                continue;
            }
            let mut cut = cut;
            *counts.entry(cut.family).or_default() += 1;
            cut.constraint.name = format!("{}_r{round}_{i}", cut.constraint.name);
            appended.push((round, cut.clone()));
            model.cut_pool.push(cut);
        }
    }
    warnings.dedup();

    let bound = (status != RunStatus::Infeasible).then(|| trajectory.last().map(|r| r.bound)).flatten();
    let gap = match (bound, reference_obj) {
        (Some(b), Some(r)) if r != 0.0 => Some((r - b) / r),
        _ => None,
    };
    let report = SolveReport {
        status,
        bound,
        rounds: trajectory.len(),
        trajectory,
        cuts_per_family: counts,
        reference_objective: reference_obj,
        gap,
        variables: model.num_vars(),
        base_rows,
        backend: backend.name().to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
        warnings,
    };
    let point = if status == RunStatus::Infeasible { Vec::new() } else { sol.x };
    Ok(RunOutcome { report, model, point, appended })
}
