//! The lifted linear relaxation: variable catalog, base constraints, exact
//! embedding of voltage profiles, and conversion to an [`LpModel`].

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cuts::{AngleInterval, Cut};
use crate::lp::{format, LpModel, Row, Sense};
use crate::netcase::{Branch, Generator, Network};
use crate::physics::{self, VoltagePair};

pub type VarId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("generator {0} sits on unknown bus {1}")]
    UnknownGeneratorBus(usize, usize),
    #[error("angle interval on unknown bus {0}")]
    UnknownIntervalBus(usize),
    #[error("invalid angle interval on bus {bus}: [{lo}, {hi}]")]
    BadInterval { bus: usize, lo: f64, hi: f64 },
    #[error("variable {0} has a non-finite bound")]
    Unbounded(String),
    #[error("expected {expected} voltages, got {got}")]
    VoltageCount { expected: usize, got: usize },
    #[error("expected {expected} dispatch entries, got {got}")]
    DispatchCount { expected: usize, got: usize },
}

/// What a row encodes. Only `Definition` and `Cost` rows must hold at every
/// embedded voltage profile; `Operating` rows depend on demand and limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Definition,
    Operating,
    Cost,
    /// Consequences of configured angle intervals.
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub coefs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub provenance: Provenance,
}

impl LinearConstraint {
    pub fn new(
        name: impl Into<String>,
        coefs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
        provenance: Provenance,
    ) -> Self {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(coefs.len());
        for (j, a) in coefs {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        LinearConstraint {
            name: name.into(),
            coefs: merged,
            sense,
            rhs,
            provenance,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Positive when `x` violates the row.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.sense.violation(self.lhs(x), self.rhs)
    }

    pub fn to_row(&self) -> Row {
        Row::new(self.coefs.clone(), self.sense, self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusVars {
    pub v2: VarId,
    pub e: VarId,
    pub f: VarId,
    pub ee: VarId,
    pub ff: VarId,
    pub x: VarId,
}

/// Products `e_k e_m, e_k f_m, f_k e_m, f_k f_m` in a branch's orientation.
/// Parallel branches share the variables of their bus pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairProducts {
    pub ee: VarId,
    pub ef: VarId,
    pub fe: VarId,
    pub ff: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchVars {
    /// Index into `Network::branches`.
    pub branch: usize,
    /// Bus indices of the from and to ends.
    pub k: usize,
    pub m: usize,
    pub p_km: VarId,
    pub q_km: VarId,
    pub p_mk: VarId,
    pub q_mk: VarId,
    pub alpha_km: VarId,
    pub beta_km: VarId,
    pub alpha_mk: VarId,
    pub beta_mk: VarId,
    pub prod: PairProducts,
    pub de_km: VarId,
    pub df_km: VarId,
    pub de_mk: VarId,
    pub df_mk: VarId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenVars {
    /// Index into `Network::generators`.
    pub gen: usize,
    pub bus: usize,
    pub p: VarId,
    pub q: VarId,
    pub t: VarId,
}

#[derive(Debug, Clone, Default)]
pub struct VarCatalog {
    pub names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bounds that encode operating limits rather than physics.
    pub operating: Vec<bool>,
    pub buses: Vec<BusVars>,
    pub branches: Vec<BranchVars>,
    pub gens: Vec<GenVars>,
    /// Bus id per bus index.
    pub bus_ids: Vec<usize>,
    pairs: HashMap<(usize, usize), PairProducts>,
    index: HashMap<String, VarId>,
}

impl VarCatalog {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    /// Products of the coordinates at bus indices `k` and `m`, oriented
    /// `(e_k e_m, e_k f_m, f_k e_m, f_k f_m)`.
    pub fn pair_products(&self, k: usize, m: usize) -> Option<PairProducts> {
        self.pairs.get(&(k, m)).copied()
    }

    fn add(&mut self, name: String, lo: f64, hi: f64, operating: bool) -> VarId {
        let id = self.names.len();
        let previous = self.index.insert(name.clone(), id);
        debug_assert!(previous.is_none(), "duplicate variable {name}");
        self.names.push(name);
        self.lower.push(lo);
        self.upper.push(hi);
        self.operating.push(operating);
        id
    }
}

/// A full assignment to the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint(pub Vec<f64>);

impl std::ops::Index<VarId> for LiftedPoint {
    type Output = f64;
    fn index(&self, j: VarId) -> &f64 {
        &self.0[j]
    }
}

#[derive(Debug, Clone, Default)]
pub struct ModelOptions {
    /// Per-bus angle intervals. Without an entry for the reference bus its
    /// angle is fixed at zero.
    pub intervals: Vec<AngleInterval>,
}

#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub catalog: VarCatalog,
    pub constraints: Vec<LinearConstraint>,
    /// Minimized objective.
    pub objective: Vec<(VarId, f64)>,
    pub cut_pool: Vec<Cut>,
    /// Effective interval per bus index, including the reference fixing.
    pub bus_intervals: Vec<Option<AngleInterval>>,
}

/// Min and max of `cos(θ - phase)` over `θ ∈ [lo, hi]`.
pub fn cos_range(lo: f64, hi: f64, phase: f64) -> (f64, f64) {
    trig_range(lo, hi, phase, |t| (t - phase).cos())
}

/// Min and max of `sin θ` over `θ ∈ [lo, hi]`.
pub fn sin_range(lo: f64, hi: f64) -> (f64, f64) {
    trig_range(lo, hi, PI / 2.0, f64::sin)
}

/// Extremes of a unit sinusoid peaking at `phase + 2kπ`, with endpoint
/// values taken from `value`.
fn trig_range(lo: f64, hi: f64, phase: f64, value: impl Fn(f64) -> f64) -> (f64, f64) {
    let (a, b) = (lo - phase, hi - phase);
    let (va, vb) = (value(lo), value(hi));
    let mut min = va.min(vb);
    let mut max = va.max(vb);
    let mut k = (a / PI).ceil();
    while k * PI <= b {
        if (k as i64).rem_euclid(2) == 0 {
            max = 1.0;
        } else {
            min = -1.0;
        }
        k += 1.0;
        if max == 1.0 && min == -1.0 {
            break;
        }
    }
    (min, max)
}

/// Range of `r·c` over `r ∈ [rmin, rmax]` and `c ∈ [cmin, cmax]`.
fn scaled_range(rmin: f64, rmax: f64, (cmin, cmax): (f64, f64)) -> (f64, f64) {
    let lo = if cmin >= 0.0 { rmin * cmin } else { rmax * cmin };
    let hi = if cmax >= 0.0 { rmax * cmax } else { rmin * cmax };
    (lo, hi)
}

/// `t_g ≥ (2 c2 p̂ + c1) p_g − c2 p̂² + c0`.
pub fn cost_epigraph_tangent(gen: &Generator, vars: &GenVars, p_hat: f64, name: String) -> LinearConstraint {
    let c = gen.cost;
    let slope = 2.0 * c.c2 * p_hat + c.c1;
    let intercept = c.c0 - c.c2 * p_hat * p_hat;
    LinearConstraint::new(
        name,
        vec![(vars.t, 1.0), (vars.p, -slope)],
        Sense::Ge,
        intercept,
        Provenance::Cost,
    )
}

/// Coefficients of `(P, Q)` at the from end and to end as linear forms in
/// `(E_kk + F_kk, E_mm + F_mm, C, S)` with `C = E_km + F_km` and
/// `S = FE_km − EF_km`.
struct FlowCoefs {
    sq_k: (f64, f64),
    sq_m: (f64, f64),
    cross_km: (f64, f64, f64, f64),
    cross_mk: (f64, f64, f64, f64),
}

fn flow_coefs(br: &Branch) -> FlowCoefs {
    let y = physics::admittance_matrix(br);
    let (c11, c12, c21, c22) = (y[0][0].conj(), y[0][1].conj(), y[1][0].conj(), y[1][1].conj());
    // S_km = conj(Y11)|Vk|² + conj(Y12)(C + jS); S_mk = conj(Y22)|Vm|² + conj(Y21)(C − jS)
    FlowCoefs {
        sq_k: (c11.re, c11.im),
        sq_m: (c22.re, c22.im),
        cross_km: (c12.re, -c12.im, c12.im, c12.re),
        cross_mk: (c21.re, c21.im, c21.im, -c21.re),
    }
}

/// The two sending-end and two receiving-end difference expressions as
/// coefficient lists over `(e_k, f_k, e_m, f_m)`.
fn difference_forms(br: &Branch) -> [[f64; 4]; 4] {
    let (s, c) = br.sigma.sin_cos();
    let it = 1.0 / br.tau;
    [
        [it, 0.0, -c, s],
        [0.0, it, -s, -c],
        [-it * c, -it * s, 1.0, 0.0],
        [it * s, -it * c, 0.0, 1.0],
    ]
}

/// Circle constant `1/(τ²|z|²)`, shared by both ends.
pub fn circle_constant(br: &Branch) -> f64 {
    br.inv_z2() / (br.tau * br.tau)
}

impl ModelInstance {
    pub fn build(net: &Network, opts: &ModelOptions) -> Result<ModelInstance, ModelError> {
        build_base_model(net, opts)
    }

    pub fn num_vars(&self) -> usize {
        self.catalog.len()
    }

    /// Variables and base rows as an LP, followed by the cut pool.
    pub fn to_lp(&self) -> LpModel {
        let mut lp = LpModel::new();
        for j in 0..self.catalog.len() {
            lp.add_var(self.catalog.names[j].clone(), self.catalog.lower[j], self.catalog.upper[j], 0.0);
        }
        for &(j, c) in &self.objective {
            lp.cost[j] += c;
        }
        for con in &self.constraints {
            lp.add_row(con.name.clone(), con.to_row());
        }
        for cut in &self.cut_pool {
            lp.add_row(cut.constraint.name.clone(), cut.constraint.to_row());
        }
        lp
    }

    pub fn to_lp_text(&self, header: &[String]) -> String {
        format::write_lp(&self.to_lp(), header)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Exact lifted point for a voltage profile (one entry per bus, in bus
    /// order). Generator outputs come from `dispatch` when given (in-service
    /// generators in order); otherwise each bus's net injection is split
    /// evenly among its generators.
    pub fn embed(
        &self,
        net: &Network,
        voltages: &[Complex64],
        dispatch: Option<&[(f64, f64)]>,
    ) -> Result<LiftedPoint, ModelError> {
        embed_feasible_point(self, net, voltages, dispatch)
    }

    /// Largest violation at `x` over base rows (filtered by `keep`), cut pool
    /// rows, and variable bounds (operating bounds only when
    /// `operating_bounds`).
    pub fn max_violation(
        &self,
        x: &[f64],
        keep: impl Fn(Provenance) -> bool,
        operating_bounds: bool,
    ) -> (f64, String) {
        let mut worst = (f64::NEG_INFINITY, String::new());
        let mut consider = |v: f64, what: &dyn Fn() -> String| {
            if v > worst.0 {
                worst = (v, what());
            }
        };
        for con in self.constraints.iter().filter(|c| keep(c.provenance)) {
            consider(con.violation(x), &|| con.name.clone());
        }
        for cut in &self.cut_pool {
            consider(cut.constraint.violation(x), &|| cut.constraint.name.clone());
        }
        let cat = &self.catalog;
        for j in 0..cat.len() {
            if cat.operating[j] && !operating_bounds {
                continue;
            }
            consider(cat.lower[j] - x[j], &|| format!("lower bound of {}", cat.names[j]));
            consider(x[j] - cat.upper[j], &|| format!("upper bound of {}", cat.names[j]));
        }
        worst
    }
}

fn resolve_intervals(net: &Network, opts: &ModelOptions) -> Result<Vec<Option<AngleInterval>>, ModelError> {
    let mut out: Vec<Option<AngleInterval>> = vec![None; net.buses.len()];
    for iv in &opts.intervals {
        let i = net.bus_index(iv.bus).ok_or(ModelError::UnknownIntervalBus(iv.bus))?;
        if !(iv.lo <= iv.hi) || iv.hi - iv.lo > 2.0 * PI || !iv.lo.is_finite() || !iv.hi.is_finite() {
            return Err(ModelError::BadInterval { bus: iv.bus, lo: iv.lo, hi: iv.hi });
        }
        out[i] = Some(match out[i] {
            None => *iv,
            Some(prev) => {
                let (lo, hi) = (prev.lo.max(iv.lo), prev.hi.min(iv.hi));
                if lo > hi {
                    return Err(ModelError::BadInterval { bus: iv.bus, lo, hi });
                }
                AngleInterval { bus: iv.bus, lo, hi }
            }
        });
    }
    let r = net.bus_index(net.reference_bus).expect("reference bus resolves");
    if out[r].is_none() {
        out[r] = Some(AngleInterval::fixed(net.reference_bus, 0.0));
    }
    Ok(out)
}

/// Assembles catalog, base rows and the cost epigraph (one tangent per
/// generator at the midpoint of its output range).
pub fn build_base_model(net: &Network, opts: &ModelOptions) -> Result<ModelInstance, ModelError> {
    let intervals = resolve_intervals(net, opts)?;
    let mut cat = VarCatalog::default();
    let mut cons: Vec<LinearConstraint> = Vec::new();

    for (i, bus) in net.buses.iter().enumerate() {
        let (vmin, vmax) = (bus.vmin, bus.vmax);
        let id = bus.id;
        let (mut elo, mut ehi, mut flo, mut fhi) = (-vmax, vmax, -vmax, vmax);
        if let Some(iv) = intervals[i] {
            (elo, ehi) = scaled_range(vmin, vmax, cos_range(iv.lo, iv.hi, 0.0));
            (flo, fhi) = scaled_range(vmin, vmax, sin_range(iv.lo, iv.hi));
        }
        let v2 = cat.add(format!("V2_{id}"), vmin * vmin, vmax * vmax, false);
        let e = cat.add(format!("e_{id}"), elo, ehi, false);
        let f = cat.add(format!("f_{id}"), flo, fhi, false);
        let sq = vmax * vmax;
        let ee = cat.add(format!("EE_{id}"), 0.0, sq, false);
        let ff = cat.add(format!("FF_{id}"), 0.0, sq, false);
        let x = cat.add(format!("X_{id}"), -sq / 2.0, sq / 2.0, false);
        cat.buses.push(BusVars { v2, e, f, ee, ff, x });
        cat.bus_ids.push(id);
        cons.push(LinearConstraint::new(
            format!("link_V2_{id}"),
            vec![(v2, 1.0), (ee, -1.0), (ff, -1.0)],
            Sense::Eq,
            0.0,
            Provenance::Definition,
        ));
        if let Some(iv) = intervals[i] {
            if iv.hi - iv.lo <= PI && !(iv.lo == 0.0 && iv.hi == 0.0) {
                // θ ≥ lo: sin(θ − lo) ≥ 0; θ ≤ hi: sin(hi − θ) ≥ 0
                let (sl, cl) = iv.lo.sin_cos();
                let (sh, ch) = iv.hi.sin_cos();
                cons.push(LinearConstraint::new(
                    format!("wedge_lo_{id}"),
                    vec![(e, -sl), (f, cl)],
                    Sense::Ge,
                    0.0,
                    Provenance::Interval,
                ));
                cons.push(LinearConstraint::new(
                    format!("wedge_hi_{id}"),
                    vec![(e, sh), (f, -ch)],
                    Sense::Ge,
                    0.0,
                    Provenance::Interval,
                ));
            }
        }
    }

    for (bi, br) in net.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let k = net.bus_index(br.from).expect("validated network");
        let m = net.bus_index(br.to).expect("validated network");
        let (bk, bm) = (&net.buses[k], &net.buses[m]);
        let (vk, vm) = (bk.vmax, bm.vmax);
        let (lab, rev) = (br.label(), br.reverse_label());

        let y = physics::admittance_matrix(br);
        let pk = vk * (y[0][0].norm() * vk + y[0][1].norm() * vm);
        let pm = vm * (y[1][1].norm() * vm + y[1][0].norm() * vk);
        let p_km = cat.add(format!("P_{lab}"), -pk, pk, false);
        let q_km = cat.add(format!("Q_{lab}"), -pk, pk, false);
        let p_mk = cat.add(format!("P_{rev}"), -pm, pm, false);
        let q_mk = cat.add(format!("Q_{rev}"), -pm, pm, false);
        let ab = circle_constant(br).sqrt() * vk * vm;
        let alpha_km = cat.add(format!("alpha_{lab}"), -ab, ab, false);
        let beta_km = cat.add(format!("beta_{lab}"), -ab, ab, false);
        let alpha_mk = cat.add(format!("alpha_{rev}"), -ab, ab, false);
        let beta_mk = cat.add(format!("beta_{rev}"), -ab, ab, false);

        let prod = match cat.pair_products(k, m) {
            Some(p) => p,
            None => {
                let (a, b) = (bk.id, bm.id);
                let cross = vk * vm;
                let p = PairProducts {
                    ee: cat.add(format!("EE_{a}_{b}"), -cross, cross, false),
                    ef: cat.add(format!("EF_{a}_{b}"), -cross, cross, false),
                    fe: cat.add(format!("FE_{a}_{b}"), -cross, cross, false),
                    ff: cat.add(format!("FF_{a}_{b}"), -cross, cross, false),
                };
                cat.pairs.insert((k, m), p);
                cat.pairs.insert((m, k), PairProducts { ee: p.ee, ef: p.fe, fe: p.ef, ff: p.ff });
                p
            }
        };

        let dmax = vk / br.tau + vm;
        let dmax_rev = vm + vk / br.tau;
        let de_km = cat.add(format!("dE_{lab}"), 0.0, dmax, false);
        let df_km = cat.add(format!("dF_{lab}"), 0.0, dmax, false);
        let de_mk = cat.add(format!("dE_{rev}"), 0.0, dmax_rev, false);
        let df_mk = cat.add(format!("dF_{rev}"), 0.0, dmax_rev, false);

        let (bvk, bvm) = (cat.buses[k], cat.buses[m]);
        let fc = flow_coefs(br);
        let cross_terms = |(c_c, c_s, _, _): (f64, f64, f64, f64)| {
            // c_c·C + c_s·S
            vec![(prod.ee, c_c), (prod.ff, c_c), (prod.fe, c_s), (prod.ef, -c_s)]
        };
        let cross_terms_q = |(_, _, q_c, q_s): (f64, f64, f64, f64)| {
            vec![(prod.ee, q_c), (prod.ff, q_c), (prod.fe, q_s), (prod.ef, -q_s)]
        };
        let def = |name: String, var: VarId, sq: (VarId, VarId), a: f64, rest: Vec<(VarId, f64)>| {
            let mut coefs = vec![(var, 1.0), (sq.0, -a), (sq.1, -a)];
            coefs.extend(rest.into_iter().map(|(j, c)| (j, -c)));
            LinearConstraint::new(name, coefs, Sense::Eq, 0.0, Provenance::Definition)
        };
        let sqk = (bvk.ee, bvk.ff);
        let sqm = (bvm.ee, bvm.ff);
        cons.push(def(format!("defP_{lab}"), p_km, sqk, fc.sq_k.0, cross_terms(fc.cross_km)));
        cons.push(def(format!("defQ_{lab}"), q_km, sqk, fc.sq_k.1, cross_terms_q(fc.cross_km)));
        cons.push(def(format!("defP_{rev}"), p_mk, sqm, fc.sq_m.0, cross_terms(fc.cross_mk)));
        cons.push(def(format!("defQ_{rev}"), q_mk, sqm, fc.sq_m.1, cross_terms_q(fc.cross_mk)));

        // α = P − (g + g_sh/2)·V2/τ², β = Q + (b + b_sh/2)·V2/τ² (no τ at m)
        let t2 = br.tau * br.tau;
        let ga = br.g + br.g_sh / 2.0;
        let ba = br.b + br.b_sh / 2.0;
        for (name, aux, flow, v2, coef) in [
            (format!("defA_{lab}"), alpha_km, p_km, bvk.v2, -ga / t2),
            (format!("defB_{lab}"), beta_km, q_km, bvk.v2, ba / t2),
            (format!("defA_{rev}"), alpha_mk, p_mk, bvm.v2, -ga),
            (format!("defB_{rev}"), beta_mk, q_mk, bvm.v2, ba),
        ] {
            cons.push(LinearConstraint::new(
                name,
                vec![(aux, 1.0), (flow, -1.0), (v2, -coef)],
                Sense::Eq,
                0.0,
                Provenance::Definition,
            ));
        }

        let forms = difference_forms(br);
        let coords = [bvk.e, bvk.f, bvm.e, bvm.f];
        for (d, form, name) in [
            (de_km, forms[0], format!("dE_{lab}")),
            (df_km, forms[1], format!("dF_{lab}")),
            (de_mk, forms[2], format!("dE_{rev}")),
            (df_mk, forms[3], format!("dF_{rev}")),
        ] {
            for (sign, tag) in [(1.0, "pos"), (-1.0, "neg")] {
                let mut coefs = vec![(d, 1.0)];
                coefs.extend(coords.iter().zip(form).map(|(&j, a)| (j, -sign * a)));
                cons.push(LinearConstraint::new(
                    format!("abs_{name}_{tag}"),
                    coefs,
                    Sense::Ge,
                    0.0,
                    Provenance::Definition,
                ));
            }
        }

        cat.branches.push(BranchVars {
            branch: bi,
            k,
            m,
            p_km,
            q_km,
            p_mk,
            q_mk,
            alpha_km,
            beta_km,
            alpha_mk,
            beta_mk,
            prod,
            de_km,
            df_km,
            de_mk,
            df_mk,
        });
    }

    let mut objective = Vec::new();
    for (gi, gen) in net.generators.iter().enumerate() {
        if !gen.in_service {
            continue;
        }
        let bus = net.bus_index(gen.bus).ok_or(ModelError::UnknownGeneratorBus(gi, gen.bus))?;
        let n = gi + 1;
        let p = cat.add(format!("pg_{n}"), gen.pmin, gen.pmax, true);
        let q = cat.add(format!("qg_{n}"), gen.qmin, gen.qmax, true);
        let (tlo, thi) = gen.cost.range(gen.pmin, gen.pmax);
        let t = cat.add(format!("tg_{n}"), tlo, thi, true);
        let vars = GenVars { gen: gi, bus, p, q, t };
        cat.gens.push(vars);
        objective.push((t, 1.0));
        let mid = 0.5 * (gen.pmin + gen.pmax);
        cons.push(cost_epigraph_tangent(gen, &vars, mid, format!("cost_{n}_0")));
    }

    for (i, bus) in net.buses.iter().enumerate() {
        let bv = cat.buses[i];
        let mut p = vec![(bv.v2, bus.gs)];
        let mut q = vec![(bv.v2, -bus.bs)];
        for b in &cat.branches {
            if b.k == i {
                p.push((b.p_km, 1.0));
                q.push((b.q_km, 1.0));
            }
            if b.m == i {
                p.push((b.p_mk, 1.0));
                q.push((b.q_mk, 1.0));
            }
        }
        for g in cat.gens.iter().filter(|g| g.bus == i) {
            p.push((g.p, -1.0));
            q.push((g.q, -1.0));
        }
        let id = bus.id;
        cons.push(LinearConstraint::new(format!("balP_{id}"), p, Sense::Eq, -bus.pd, Provenance::Operating));
        cons.push(LinearConstraint::new(format!("balQ_{id}"), q, Sense::Eq, -bus.qd, Provenance::Operating));
    }

    for j in 0..cat.len() {
        if !cat.lower[j].is_finite() || !cat.upper[j].is_finite() {
            return Err(ModelError::Unbounded(cat.names[j].clone()));
        }
    }

    Ok(ModelInstance {
        catalog: cat,
        constraints: cons,
        objective,
        cut_pool: Vec::new(),
        bus_intervals: intervals,
    })
}

/// Sets every lifted variable to its definitional value at `voltages`.
pub fn embed_feasible_point(
    model: &ModelInstance,
    net: &Network,
    voltages: &[Complex64],
    dispatch: Option<&[(f64, f64)]>,
) -> Result<LiftedPoint, ModelError> {
    let cat = &model.catalog;
    if voltages.len() != net.buses.len() {
        return Err(ModelError::VoltageCount { expected: net.buses.len(), got: voltages.len() });
    }
    if let Some(d) = dispatch {
        if d.len() != cat.gens.len() {
            return Err(ModelError::DispatchCount { expected: cat.gens.len(), got: d.len() });
        }
    }
    let mut x = vec![0.0; cat.len()];
    for (bv, v) in cat.buses.iter().zip(voltages) {
        x[bv.v2] = v.norm_sqr();
        x[bv.e] = v.re;
        x[bv.f] = v.im;
        x[bv.ee] = v.re * v.re;
        x[bv.ff] = v.im * v.im;
        x[bv.x] = v.re * v.im;
    }
    let mut injection: Vec<(f64, f64)> = net
        .buses
        .iter()
        .zip(voltages)
        .map(|(b, v)| (b.pd + b.gs * v.norm_sqr(), b.qd - b.bs * v.norm_sqr()))
        .collect();
    for bv in &cat.branches {
        let br = &net.branches[bv.branch];
        let pair = VoltagePair::new(voltages[bv.k], voltages[bv.m]);
        let flows = physics::flow_rect(br, &pair);
        x[bv.p_km] = flows.p_km;
        x[bv.q_km] = flows.q_km;
        x[bv.p_mk] = flows.p_mk;
        x[bv.q_mk] = flows.q_mk;
        injection[bv.k].0 += flows.p_km;
        injection[bv.k].1 += flows.q_km;
        injection[bv.m].0 += flows.p_mk;
        injection[bv.m].1 += flows.q_mk;

        let t2 = br.tau * br.tau;
        let (v2k, v2m) = (pair.vk().norm_sqr(), pair.vm().norm_sqr());
        x[bv.alpha_km] = flows.p_km - (br.g + br.g_sh / 2.0) * v2k / t2;
        x[bv.beta_km] = flows.q_km + (br.b + br.b_sh / 2.0) * v2k / t2;
        x[bv.alpha_mk] = flows.p_mk - (br.g + br.g_sh / 2.0) * v2m;
        x[bv.beta_mk] = flows.q_mk + (br.b + br.b_sh / 2.0) * v2m;

        x[bv.prod.ee] = pair.e_k * pair.e_m;
        x[bv.prod.ef] = pair.e_k * pair.f_m;
        x[bv.prod.fe] = pair.f_k * pair.e_m;
        x[bv.prod.ff] = pair.f_k * pair.f_m;

        let (dr, di) = physics::sending_differences(br, &pair);
        let (rr, ri) = physics::receiving_differences(br, &pair);
        x[bv.de_km] = dr.abs();
        x[bv.df_km] = di.abs();
        x[bv.de_mk] = rr.abs();
        x[bv.df_mk] = ri.abs();
    }
    for (n, g) in cat.gens.iter().enumerate() {
        let (p, q) = match dispatch {
            Some(d) => d[n],
            None => {
                let count = cat.gens.iter().filter(|h| h.bus == g.bus).count() as f64;
                (injection[g.bus].0 / count, injection[g.bus].1 / count)
            }
        };
        x[g.p] = p;
        x[g.q] = q;
        x[g.t] = net.generators[g.gen].cost.eval(p);
    }
    Ok(LiftedPoint(x))
}
