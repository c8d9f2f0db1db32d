//! Cut families over the lifted variables: Δ, loss, circle, semidefinite,
//! line rating and cost tangents, plus angle-interval tightening of the Δ
//! bounds.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::Sense;
use crate::model::{
    circle_constant, cos_range, BranchVars, LinearConstraint, ModelInstance, Provenance, VarId,
};
use crate::netcase::{Branch, Network};

pub const TOL_VIOLATION: f64 = 1e-6;
pub const TOL_PSD: f64 = 1e-8;
const JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum CutError {
    #[error("Jacobi eigensolver did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("no product variable for buses {0} and {1}")]
    MissingProduct(usize, usize),
    #[error("moment subset needs at least one bus")]
    EmptySubset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Delta,
    Loss,
    Circle,
    Sdp,
    Rating,
    Cost,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Delta,
        Family::Loss,
        Family::Circle,
        Family::Sdp,
        Family::Rating,
        Family::Cost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Delta => "delta",
            Family::Loss => "loss",
            Family::Circle => "circle",
            Family::Sdp => "sdp",
            Family::Rating => "rating",
            Family::Cost => "cost",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// A linear inequality with provenance. `violation` is measured at the
/// generating point after scaling the coefficients to unit norm; static Δ
/// cuts carry zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub constraint: LinearConstraint,
    pub family: Family,
    pub source: String,
    pub violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub bus: usize,
    pub lo: f64,
    pub hi: f64,
}

impl AngleInterval {
    pub fn fixed(bus: usize, theta: f64) -> Self {
        AngleInterval { bus, lo: theta, hi: theta }
    }

    pub fn full(bus: usize) -> Self {
        AngleInterval { bus, lo: -PI, hi: PI }
    }

    pub fn contains(&self, other: &AngleInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Which separators run and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutConfig {
    pub families: Vec<Family>,
    /// Also separate loss tangents on the sending-end differences.
    pub loss_both_sides: bool,
    /// Border the moment matrices with the constant 1.
    pub sdp_with_one: bool,
    /// Extra moment subsets given as bus ids; every pair must share a branch.
    pub sdp_subsets: Vec<Vec<usize>>,
    pub tol: f64,
}

impl Default for CutConfig {
    fn default() -> Self {
        CutConfig {
            families: Family::ALL.to_vec(),
            loss_both_sides: true,
            sdp_with_one: false,
            sdp_subsets: Vec::new(),
            tol: TOL_VIOLATION,
        }
    }
}

impl CutConfig {
    pub fn has(&self, f: Family) -> bool {
        self.families.contains(&f)
    }
}

/// Scales to unit coefficient norm and keeps the cut when the point
/// violates it by more than `tol`.
fn finalize(
    name: String,
    coefs: Vec<(VarId, f64)>,
    sense: Sense,
    rhs: f64,
    family: Family,
    source: String,
    pt: Option<&[f64]>,
    tol: f64,
) -> Option<Cut> {
    let mut con = LinearConstraint::new(name, coefs, sense, rhs, Provenance::Definition);
    let norm = con.coefs.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    for c in &mut con.coefs {
        c.1 /= norm;
    }
    con.rhs /= norm;
    let violation = match pt {
        Some(x) => {
            let v = con.violation(x);
            if !(v > tol) {
                return None;
            }
            v
        }
        None => 0.0,
    };
    Some(Cut {
        constraint: con,
        family,
        source,
        violation,
    })
}

/// Bounds on `|g e + b f|` (μ) and `|g f − b e|` (ν) over the voltage box of
/// the bus, optionally restricted to an angle interval.
pub fn delta_bounds(br: &Branch, vmax: f64, interval: Option<&AngleInterval>) -> (f64, f64) {
    let base = br.admittance_norm() * vmax;
    match interval {
        None => (base, base),
        Some(iv) => {
            let peak = |phase: f64| {
                let (lo, hi) = cos_range(iv.lo, iv.hi, phase);
                lo.abs().max(hi.abs())
            };
            (base * peak(br.b.atan2(br.g)), base * peak(br.g.atan2(-br.b)))
        }
    }
}

/// The four Δ-inequalities of a branch:
/// `±(P_km − g_sh/(2τ²)·V2_k) ≤ (μ/τ)·dE_km + (ν/τ)·dF_km` and
/// `±(P_mk − g_sh/2·V2_m) ≤ μ_rev·dE_mk + ν_rev·dF_mk`.
pub fn delta_cuts(
    br: &Branch,
    bv: &BranchVars,
    v2: (VarId, VarId),
    (mu, nu): (f64, f64),
    (mu_rev, nu_rev): (f64, f64),
) -> Vec<Cut> {
    let t = br.tau;
    let lab = br.label();
    let mut out = Vec::with_capacity(4);
    let ends = [
        (bv.p_km, v2.0, br.g_sh / (2.0 * t * t), bv.de_km, mu / t, bv.df_km, nu / t, "km"),
        (bv.p_mk, v2.1, br.g_sh / 2.0, bv.de_mk, mu_rev, bv.df_mk, nu_rev, "mk"),
    ];
    for (p, v2, s, de, a, df, b, end) in ends {
        for (sign, tag) in [(1.0, "pos"), (-1.0, "neg")] {
            let coefs = vec![(p, sign), (v2, -sign * s), (de, -a), (df, -b)];
            let name = format!("delta_{lab}_{end}_{tag}");
            out.extend(finalize(name, coefs, Sense::Le, 0.0, Family::Delta, lab.clone(), None, 0.0));
        }
    }
    out
}

/// Δ-cuts for every in-service branch, tightened by the model's configured
/// intervals when `tighten` is set.
pub fn static_delta_cuts(model: &ModelInstance, net: &Network, tighten: &[Option<AngleInterval>]) -> Vec<Cut> {
    let mut out = Vec::new();
    for bv in &model.catalog.branches {
        let br = &net.branches[bv.branch];
        let (bk, bm) = (&net.buses[bv.k], &net.buses[bv.m]);
        let fwd = delta_bounds(br, bk.vmax, tighten.get(bv.k).and_then(|i| i.as_ref()));
        let rev = delta_bounds(br, bm.vmax, tighten.get(bv.m).and_then(|i| i.as_ref()));
        let v2 = (model.catalog.buses[bv.k].v2, model.catalog.buses[bv.m].v2);
        out.extend(delta_cuts(br, bv, v2, fwd, rev));
    }
    out
}

/// Which difference variables a loss tangent is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossSide {
    Receiving,
    Sending,
}

/// Tangent of `g(dE² + dF²) ≤ P_km + P_mk − (g_sh/2)(V2_k/τ² + V2_m)` at the
/// point's difference values.
pub fn loss_separate(
    br: &Branch,
    bv: &BranchVars,
    v2: (VarId, VarId),
    pt: &[f64],
    side: LossSide,
    tol: f64,
) -> Option<Cut> {
    if br.g < 0.0 {
        return None;
    }
    let (de, df) = match side {
        LossSide::Receiving => (bv.de_mk, bv.df_mk),
        LossSide::Sending => (bv.de_km, bv.df_km),
    };
    let (he, hf) = (pt[de], pt[df]);
    let g = br.g;
    let t2 = br.tau * br.tau;
    let coefs = vec![
        (de, 2.0 * g * he),
        (df, 2.0 * g * hf),
        (bv.p_km, -1.0),
        (bv.p_mk, -1.0),
        (v2.0, br.g_sh / (2.0 * t2)),
        (v2.1, br.g_sh / 2.0),
    ];
    let tag = if side == LossSide::Receiving { "mk" } else { "km" };
    let lab = br.label();
    finalize(
        format!("loss_{lab}_{tag}"),
        coefs,
        Sense::Le,
        g * (he * he + hf * hf),
        Family::Loss,
        lab,
        Some(pt),
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Sending,
    Receiving,
}

/// Outer approximation of `α² + β² ≤ c·V2_k·V2_m` via its second-order cone
/// form `‖(2α, 2β, c·V2_k − V2_m)‖ ≤ c·V2_k + V2_m`.
pub fn circle_separate(
    br: &Branch,
    bv: &BranchVars,
    v2: (VarId, VarId),
    pt: &[f64],
    end: End,
    tol: f64,
) -> Option<Cut> {
    let (a, b) = match end {
        End::Sending => (bv.alpha_km, bv.beta_km),
        End::Receiving => (bv.alpha_mk, bv.beta_mk),
    };
    let c = circle_constant(br);
    let w = [2.0 * pt[a], 2.0 * pt[b], c * pt[v2.0] - pt[v2.1]];
    let norm = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if norm == 0.0 {
        return None;
    }
    let u = [w[0] / norm, w[1] / norm, w[2] / norm];
    let coefs = vec![
        (a, 2.0 * u[0]),
        (b, 2.0 * u[1]),
        (v2.0, c * u[2] - c),
        (v2.1, -u[2] - 1.0),
    ];
    let tag = if end == End::Sending { "km" } else { "mk" };
    let lab = br.label();
    finalize(format!("circle_{lab}_{tag}"), coefs, Sense::Le, 0.0, Family::Circle, lab, Some(pt), tol)
}

/// Tangent `P̂·P + Q̂·Q ≤ rate·‖(P̂, Q̂)‖` when the point exceeds the rating.
pub fn rating_separate(br: &Branch, bv: &BranchVars, pt: &[f64], end: End, tol: f64) -> Option<Cut> {
    if !(br.rate_a > 0.0) {
        return None;
    }
    let (p, q) = match end {
        End::Sending => (bv.p_km, bv.q_km),
        End::Receiving => (bv.p_mk, bv.q_mk),
    };
    let (hp, hq) = (pt[p], pt[q]);
    let mag = hp.hypot(hq);
    if mag <= br.rate_a {
        return None;
    }
    let tag = if end == End::Sending { "km" } else { "mk" };
    let lab = br.label();
    finalize(
        format!("rating_{lab}_{tag}"),
        vec![(p, hp), (q, hq)],
        Sense::Le,
        br.rate_a * mag,
        Family::Rating,
        lab,
        Some(pt),
        tol,
    )
}

/// Tangent to a generator's quadratic cost at the point's output when the
/// epigraph variable sits below the curve.
pub fn cost_separate(model: &ModelInstance, net: &Network, gen_slot: usize, pt: &[f64], tol: f64) -> Option<Cut> {
    let gv = model.catalog.gens[gen_slot];
    let gen = &net.generators[gv.gen];
    let p_hat = pt[gv.p];
    if pt[gv.t] >= gen.cost.eval(p_hat) {
        return None;
    }
    let n = gv.gen + 1;
    let tangent = crate::model::cost_epigraph_tangent(gen, &gv, p_hat, String::new());
    finalize(
        format!("cost_{n}"),
        tangent.coefs,
        Sense::Ge,
        tangent.rhs,
        Family::Cost,
        format!("gen_{n}"),
        Some(pt),
        tol,
    )
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and eigenvectors as columns.
pub fn jacobi_eigen(m: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), CutError> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (m[i][j] + m[j][i])).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _sweep in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let vals = (0..n).map(|i| a[i][i]).collect();
            return Ok((vals, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(CutError::NoConvergence(JACOBI_SWEEPS))
}

/// A unit vector `u` with `uᵀMu < −TOL_PSD`, if the symmetrized matrix has
/// one, together with `uᵀMu`.
pub fn psd_certificate(m: &[Vec<f64>]) -> Result<Option<(Vec<f64>, f64)>, CutError> {
    let (vals, vecs) = jacobi_eigen(m)?;
    let (imin, &lmin) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(CutError::EmptySubset)?;
    if lmin >= -TOL_PSD {
        return Ok(None);
    }
    let mut u: Vec<f64> = vecs.iter().map(|row| row[imin]).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    let n = m.len();
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..n {
            value += u[i] * 0.5 * (m[i][j] + m[j][i]) * u[j];
        }
    }
    Ok(Some((u, value)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry {
    One,
    Var(VarId),
}

/// Symbolic moment matrix of `w = (e, f)` stacked over the buses (bus
/// indices), optionally bordered by the constant 1.
pub fn moment_matrix(model: &ModelInstance, buses: &[usize], include_one: bool) -> Result<Vec<Vec<Entry>>, CutError> {
    if buses.is_empty() {
        return Err(CutError::EmptySubset);
    }
    let cat = &model.catalog;
    let mut coords: Vec<Entry> = Vec::new();
    if include_one {
        coords.push(Entry::One);
    }
    // each coordinate: (bus slot, is_f)
    let mut slots: Vec<Option<(usize, bool)>> = Vec::new();
    if include_one {
        slots.push(None);
    }
    for &b in buses {
        coords.push(Entry::Var(cat.buses[b].e));
        coords.push(Entry::Var(cat.buses[b].f));
        slots.push(Some((b, false)));
        slots.push(Some((b, true)));
    }
    let n = slots.len();
    let mut out = vec![vec![Entry::One; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = match (slots[i], slots[j]) {
                (None, None) => Entry::One,
                (None, Some(_)) => coords[j],
                (Some(_), None) => coords[i],
                (Some((a, fa)), Some((b, fb))) if a == b => {
                    let bv = cat.buses[a];
                    Entry::Var(match (fa, fb) {
                        (false, false) => bv.ee,
                        (true, true) => bv.ff,
                        _ => bv.x,
                    })
                }
                (Some((a, fa)), Some((b, fb))) => {
                    let p = cat
                        .pair_products(a, b)
                        .ok_or(CutError::MissingProduct(model_bus_id(model, a), model_bus_id(model, b)))?;
                    Entry::Var(match (fa, fb) {
                        (false, false) => p.ee,
                        (false, true) => p.ef,
                        (true, false) => p.fe,
                        (true, true) => p.ff,
                    })
                }
            };
        }
    }
    Ok(out)
}

fn model_bus_id(model: &ModelInstance, slot: usize) -> usize {
    model.catalog.bus_ids.get(slot).copied().unwrap_or(slot)
}

/// Semidefinite cut `Σ u_i u_j W_ij ≥ 0` from the minimum eigenvector of the
/// point's moment matrix.
pub fn sdp_separate(
    model: &ModelInstance,
    buses: &[usize],
    include_one: bool,
    pt: &[f64],
    tol: f64,
) -> Result<Option<Cut>, CutError> {
    let sym = moment_matrix(model, buses, include_one)?;
    let value_of = |e: Entry| match e {
        Entry::One => 1.0,
        Entry::Var(j) => pt[j],
    };
    let num: Vec<Vec<f64>> = sym.iter().map(|r| r.iter().map(|&e| value_of(e)).collect()).collect();
    let Some((u, _)) = psd_certificate(&num)? else {
        return Ok(None);
    };
    let n = u.len();
    let mut coefs = Vec::new();
    let mut constant = 0.0;
    for i in 0..n {
        for j in 0..n {
            let c = u[i] * u[j];
            match sym[i][j] {
                Entry::One => constant += c,
                Entry::Var(v) => coefs.push((v, c)),
            }
        }
    }
    let ids: Vec<String> = buses.iter().map(|&b| model_bus_id(model, b).to_string()).collect();
    let source = ids.join("_");
    let suffix = if include_one { "_1" } else { "" };
    Ok(finalize(
        format!("sdp_{source}{suffix}"),
        coefs,
        Sense::Ge,
        -constant,
        Family::Sdp,
        source,
        Some(pt),
        tol,
    ))
}

/// Drops coefficients below `eps` in magnitude, relaxing the right-hand
/// side by each dropped term's extreme over the variable box so the cut
/// stays valid.
pub fn clean_cut(cut: &mut Cut, lower: &[f64], upper: &[f64], eps: f64) {
    let con = &mut cut.constraint;
    let mut shift = 0.0;
    con.coefs.retain(|&(j, a)| {
        if a.abs() >= eps {
            return true;
        }
        let (lo, hi) = (a * lower[j], a * upper[j]);
        shift += match con.sense {
            Sense::Le => lo.min(hi),
            Sense::Ge => lo.max(hi),
            Sense::Eq => return true,
        };
        false
    });
    con.rhs -= shift;
}

/// Runs every enabled dynamic separator at `pt`. Coefficients below 1e-7
/// are folded into the right-hand side and the violation re-measured.
pub fn separate_all(model: &ModelInstance, net: &Network, pt: &[f64], cfg: &CutConfig) -> Result<Vec<Cut>, CutError> {
    let mut out = separate_raw(model, net, pt, cfg)?;
    let cat = &model.catalog;
    out.retain_mut(|cut| {
        clean_cut(cut, &cat.lower, &cat.upper, 1e-7);
        cut.violation = cut.constraint.violation(pt);
        !cut.constraint.coefs.is_empty() && cut.violation > cfg.tol
    });
    Ok(out)
}

fn separate_raw(model: &ModelInstance, net: &Network, pt: &[f64], cfg: &CutConfig) -> Result<Vec<Cut>, CutError> {
    let mut out = Vec::new();
    let cat = &model.catalog;
    for bv in &cat.branches {
        let br = &net.branches[bv.branch];
        let v2 = (cat.buses[bv.k].v2, cat.buses[bv.m].v2);
        if cfg.has(Family::Loss) {
            out.extend(loss_separate(br, bv, v2, pt, LossSide::Receiving, cfg.tol));
            if cfg.loss_both_sides {
                out.extend(loss_separate(br, bv, v2, pt, LossSide::Sending, cfg.tol));
            }
        }
        for end in [End::Sending, End::Receiving] {
            if cfg.has(Family::Circle) {
                out.extend(circle_separate(br, bv, v2, pt, end, cfg.tol));
            }
            if cfg.has(Family::Rating) {
                out.extend(rating_separate(br, bv, pt, end, cfg.tol));
            }
        }
    }
    if cfg.has(Family::Sdp) {
        let mut seen = std::collections::HashSet::new();
        for bv in &cat.branches {
            let key = (bv.k.min(bv.m), bv.k.max(bv.m));
            if seen.insert(key) {
                out.extend(sdp_separate(model, &[bv.k, bv.m], cfg.sdp_with_one, pt, cfg.tol)?);
            }
        }
        for subset in &cfg.sdp_subsets {
            let slots: Vec<usize> = subset.iter().filter_map(|&id| net.bus_index(id)).collect();
            out.extend(sdp_separate(model, &slots, cfg.sdp_with_one, pt, cfg.tol)?);
        }
    }
    if cfg.has(Family::Cost) {
        for slot in 0..cat.gens.len() {
            out.extend(cost_separate(model, net, slot, pt, cfg.tol));
        }
    }
    Ok(out)
}

/// A uniformly random point in the model's variable box.
pub fn random_box_point<R: Rng>(model: &ModelInstance, rng: &mut R) -> Vec<f64> {
    let cat = &model.catalog;
    (0..cat.len())
        .map(|j| {
            let (lo, hi) = (cat.lower[j], cat.upper[j]);
            if lo == hi {
                lo
            } else {
                rng.gen_range(lo..=hi)
            }
        })
        .collect()
}

/// Static Δ-cuts plus every dynamic family separated at `points` random box
/// points, with and without the bordered moment matrices.
pub fn random_cut_suite<R: Rng>(model: &ModelInstance, net: &Network, points: usize, rng: &mut R) -> Result<Vec<Cut>, CutError> {
    let mut cuts = static_delta_cuts(model, net, &model.bus_intervals);
    let mut cfg = CutConfig::default();
    for k in 0..points {
        cfg.sdp_with_one = k % 2 == 1;
        let pt = random_box_point(model, rng);
        cuts.extend(separate_all(model, net, &pt, &cfg)?);
    }
    Ok(cuts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_base_model, ModelOptions};
    use crate::netcase::parse_case;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TWO_BUS: &str = "
mpc.baseMVA = 100;
mpc.bus = [
 1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;
 2 1 50 10 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.gen = [
 1 0 0 300 -300 1 100 1 250 10 0 0 0 0 0 0 0 0 0 0 0;
];
mpc.branch = [
 1 2 0 0.5 0 100 0 0 0 0 1 -360 360;
];
mpc.gencost = [
 2 0 0 3 0.11 5 150;
];
";

    fn setup() -> (Network, ModelInstance) {
        let net = parse_case(TWO_BUS).unwrap();
        let model = build_base_model(&net, &ModelOptions::default()).unwrap();
        (net, model)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn delta_bound_examples() {
        let mut br = Branch::new(1, 2, 0.5, 0.5, 0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(close(br.g, 1.0, 1e-12) && close(br.b, -1.0, 1e-12));
        let (mu, nu) = delta_bounds(&br, 1.1, None);
        assert!(close(mu, 1.1 * 2f64.sqrt(), 1e-12) && close(nu, mu, 0.0));
        br.g = 1.0;
        br.b = 0.0;
        let (mu, nu) = delta_bounds(&br, 1.1, Some(&AngleInterval::fixed(1, 0.0)));
        assert!(close(mu, 1.1, 1e-12) && close(nu, 0.0, 1e-12), "{mu} {nu}");
        let full = delta_bounds(&br, 1.1, Some(&AngleInterval { bus: 1, lo: 0.0, hi: 2.0 * PI }));
        assert_eq!(full, delta_bounds(&br, 1.1, None));
    }

    #[test]
    fn delta_cuts_reduce_to_basic_form() {
        let (net, model) = setup();
        let bv = model.catalog.branches[0];
        let br = &net.branches[0];
        let v2 = (model.catalog.buses[0].v2, model.catalog.buses[1].v2);
        let cuts = delta_cuts(br, &bv, v2, (2.0, 3.0), (2.0, 3.0));
        assert_eq!(cuts.len(), 4);
        let c = &cuts[0].constraint;
        // P − 2 dE − 3 dF ≤ 0, scaled
        let s = c.coefs.iter().find(|x| x.0 == bv.p_km).unwrap().1;
        assert!(c.coefs.len() == 3);
        let de = c.coefs.iter().find(|x| x.0 == bv.de_km).unwrap().1;
        assert!(close(de / s, -2.0, 1e-12));
        // zero bounds pin the flow
        let zero = delta_cuts(br, &bv, v2, (0.0, 0.0), (0.0, 0.0));
        assert_eq!(zero[0].constraint.coefs, vec![(bv.p_km, 1.0)]);
        assert_eq!(zero[1].constraint.coefs, vec![(bv.p_km, -1.0)]);
    }

    #[test]
    fn loss_example() {
        let (net, model) = setup();
        let mut br = net.branches[0].clone();
        br.g = 1.0;
        let bv = model.catalog.branches[0];
        let v2 = (model.catalog.buses[0].v2, model.catalog.buses[1].v2);
        let mut pt = vec![0.0; model.num_vars()];
        pt[v2.0] = 1.0;
        pt[v2.1] = 1.0;
        assert!(loss_separate(&br, &bv, v2, &pt, LossSide::Receiving, 1e-6).is_none());
        pt[bv.de_mk] = 1.0;
        pt[bv.p_km] = 0.5;
        let cut = loss_separate(&br, &bv, v2, &pt, LossSide::Receiving, 1e-6).unwrap();
        // 2 dE − P_km − P_mk ≤ 1 has norm √6 and raw violation 0.5
        assert!(close(cut.violation, 0.5 / 6f64.sqrt(), 1e-12), "{}", cut.violation);
        br.g = -1.0;
        assert!(loss_separate(&br, &bv, v2, &pt, LossSide::Receiving, 1e-6).is_none());
    }

    #[test]
    fn circle_example() {
        let (net, model) = setup();
        let mut br = net.branches[0].clone();
        // c = 1/(τ²|z|²) = 1 with x = 1
        br.x = 1.0;
        br.r = 0.0;
        let bv = model.catalog.branches[0];
        let v2 = (model.catalog.buses[0].v2, model.catalog.buses[1].v2);
        let mut pt = vec![0.0; model.num_vars()];
        pt[v2.0] = 1.0;
        pt[v2.1] = 0.5;
        assert!(circle_separate(&br, &bv, v2, &pt, End::Sending, 1e-6).is_none());
        pt[bv.alpha_km] = 0.5f64.sqrt();
        assert!(circle_separate(&br, &bv, v2, &pt, End::Sending, 1e-6).is_none());
        pt[bv.alpha_km] = 1.0;
        let cut = circle_separate(&br, &bv, v2, &pt, End::Sending, 1e-6).unwrap();
        let w = (4.0f64 + 0.25).sqrt();
        // u·(2α, 2β, V2k − V2m) − V2k − V2m ≤ 0 with u = (2, 0, 0.5)/w
        let coef_norm = ((4.0 / w).powi(2) + (0.5 / w - 1.0).powi(2) + (0.5 / w + 1.0).powi(2)).sqrt();
        assert!(close(cut.violation, (w - 1.5) / coef_norm, 1e-12));
        // cone points satisfy it
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a, b): (f64, f64) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
            let r = (a * b).sqrt();
            let th: f64 = rng.gen_range(-PI..PI);
            let mut q = pt.clone();
            q[v2.0] = a;
            q[v2.1] = b;
            q[bv.alpha_km] = r * th.cos();
            q[bv.beta_km] = r * th.sin();
            assert!(cut.constraint.violation(&q) < 1e-12);
        }
    }

    #[test]
    fn rating_example() {
        let (net, model) = setup();
        let mut br = net.branches[0].clone();
        br.rate_a = 1.0;
        let bv = model.catalog.branches[0];
        let mut pt = vec![0.0; model.num_vars()];
        assert!(rating_separate(&br, &bv, &pt, End::Sending, 1e-6).is_none());
        pt[bv.p_km] = 1.0;
        pt[bv.q_km] = 1.0;
        let cut = rating_separate(&br, &bv, &pt, End::Sending, 1e-6).unwrap();
        assert!(close(cut.violation, 2f64.sqrt() - 1.0, 1e-12));
        let h = 0.5f64.sqrt();
        assert_eq!(cut.constraint.coefs.len(), 2);
        assert!(close(cut.constraint.coefs[0].1, h, 1e-15) && close(cut.constraint.rhs, 1.0, 1e-12));
    }

    #[test]
    fn certificate_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(psd_certificate(&id).unwrap(), None);
        for m in [vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]] {
            let (u, val) = psd_certificate(&m).unwrap().unwrap();
            assert!(close(val, -1.0, 1e-12));
            let h = 0.5f64.sqrt();
            assert!(close(u[0].abs(), h, 1e-12) && close(u[0], -u[1], 1e-12));
        }
    }

    #[test]
    fn sdp_example() {
        let (_, model) = setup();
        let cat = &model.catalog;
        let (b1, b2) = (cat.buses[0], cat.buses[1]);
        let p = cat.branches[0].prod;
        let mut pt = vec![0.0; model.num_vars()];
        pt[b1.ee] = 1.0;
        pt[b2.ff] = 1.0;
        pt[p.ef] = 2.0;
        let cut = sdp_separate(&model, &[0, 1], false, &pt, 1e-6).unwrap().unwrap();
        // E_kk − 2·EF_km + F_mm ≥ 0, unit-normalized
        let n = 6f64.sqrt();
        let get = |j| cut.constraint.coefs.iter().find(|c| c.0 == j).map(|c| c.1).unwrap_or(0.0);
        assert!(close(get(b1.ee), 1.0 / n, 1e-9));
        assert!(close(get(p.ef), -2.0 / n, 1e-9));
        assert!(close(get(b2.ff), 1.0 / n, 1e-9));
        assert!(close(cut.violation, 2.0 / n, 1e-9), "{}", cut.violation);
    }

    #[test]
    fn embedded_points_satisfy_random_suite() {
        let (net, model) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cuts = random_cut_suite(&model, &net, 20, &mut rng).unwrap();
        assert!(cuts.iter().any(|c| c.family == Family::Sdp));
        for _ in 0..200 {
            let v = [
                Complex64::new(rng.gen_range(0.9..1.1), 0.0),
                Complex64::from_polar(rng.gen_range(0.9..1.1), rng.gen_range(-PI..PI)),
            ];
            let pt = model.embed(&net, &v, None).unwrap();
            for cut in cuts.iter().filter(|c| c.family != Family::Rating) {
                assert!(cut.constraint.violation(&pt.0) <= 1e-7, "{}", cut.constraint.name);
            }
        }
    }

    #[test]
    fn tightening_is_monotone() {
        let br = Branch::new(1, 2, 0.02, 0.2, 0.0, 1.0, 0.0, 0.0).unwrap();
        let outer = AngleInterval { bus: 1, lo: -0.5, hi: 0.7 };
        let inner = AngleInterval { bus: 1, lo: -0.1, hi: 0.2 };
        let a = delta_bounds(&br, 1.05, Some(&inner));
        let b = delta_bounds(&br, 1.05, Some(&outer));
        let c = delta_bounds(&br, 1.05, None);
        assert!(a.0 <= b.0 && a.1 <= b.1 && b.0 <= c.0 && b.1 <= c.1);
    }
}
