//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::io::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use opf_lift::cuts::{self, delta_bounds, psd_certificate, AngleInterval, TOL_VIOLATION};
use opf_lift::engine::{run_detailed, RunOutcome, SolveConfig};
use opf_lift::glover::{binary_expansion, build_milp, export_milp, ProductBuilder};
use opf_lift::lp::format::read_lp;
use opf_lift::lp::{DenseSimplex, HighsSimplex, LpBackend, LpModel, LpStatus, Row, Sense, SparseSimplex};
use opf_lift::model::{build_base_model, ModelOptions, Provenance};
use opf_lift::physics::{flow_polar, flow_rect, VoltagePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{applies, load, overloaded, power_oracle, random_branch, random_voltages, reference, Regime, CASES};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn report(id: u32, title: &str, v: &Verdict, seconds: f64) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id} {tag}  {title}: {} ({seconds:.2}s)", v.detail);
}

fn physics() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut cross, mut oracle, mut loss_plain, mut loss_general) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..10_000 {
        let regime = [Regime::Plain, Regime::ShuntOnly, Regime::General][i % 3];
        let br = random_branch(&mut rng, regime);
        let (mk, tk) = (rng.gen_range(0.8..1.2), rng.gen_range(-PI..PI));
        let (mm, tm) = (rng.gen_range(0.8..1.2), rng.gen_range(-PI..PI));
        let v = VoltagePair::from_polar(mk, tk, mm, tm);
        let rect = flow_rect(&br, &v);
        let polar = flow_polar(&br, mk, mm, tk - tm);
        cross = cross.max(rect.max_abs_diff(&polar));
        let (skm, smk) = power_oracle(&br, v.vk(), v.vm());
        oracle = oracle
            .max((rect.p_km - skm.re).abs())
            .max((rect.q_km - skm.im).abs())
            .max((rect.p_mk - smk.re).abs())
            .max((rect.q_mk - smk.im).abs());
        let loss = rect.p_km + rect.p_mk;
        match regime {
            Regime::Plain => loss_plain = loss_plain.max((loss - br.g * (v.vk() - v.vm()).norm_sqr()).abs()),
            _ => {
                let t = br.tau;
                let expect = br.g * (mk * mk / (t * t) + mm * mm) - 2.0 * br.g * (mk / t) * mm * (tk - tm - br.sigma).cos()
                    + br.g_sh * mk * mk / (2.0 * t * t)
                    + br.g_sh * mm * mm / 2.0;
                loss_general = loss_general.max((loss - expect).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let worst = cross.max(oracle).max(loss_plain).max(loss_general);
    verdict(
        worst <= 1e-9 && secs < 5.0,
        format!("rect/polar {cross:.1e}, S=VI* {oracle:.1e}, plain loss {loss_plain:.1e}, general loss {loss_general:.1e}"),
    )
}

fn cut_validity() -> Verdict {
    let start = Instant::now();
    let mut worst = (f64::NEG_INFINITY, String::new());
    let (mut checked, mut over_rating) = (0usize, 0usize);
    for (ci, name) in CASES.iter().enumerate() {
        let net = load(name);
        let model = build_base_model(&net, &ModelOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + ci as u64);
        let suite = cuts::random_cut_suite(&model, &net, 10, &mut rng).unwrap();
        for _ in 0..100 {
            let v = random_voltages(&net, PI, &mut rng);
            let x = model.embed(&net, &v, None).unwrap();
            let (base, row) = model.max_violation(&x.0, |p| p != Provenance::Operating, false);
            if base > worst.0 {
                worst = (base, format!("{name}:{row}"));
            }
            let overloaded = overloaded(&model, &net, &x.0);
            for cut in &suite {
                if !applies(cut, &overloaded) {
                    over_rating += 1;
                    continue;
                }
                let viol = cut.constraint.violation(&x.0);
                if viol > worst.0 {
                    worst = (viol, format!("{name}:{}", cut.constraint.name));
                }
            }
            checked += suite.len();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst.0 <= 1e-7 && secs < 60.0,
        format!(
            "{} cut checks, {over_rating} rating checks skipped at overloaded branches, worst slack {:.1e} at {}",
            checked - over_rating,
            -worst.0,
            worst.1
        ),
    )
}

struct CaseRun {
    name: &'static str,
    result: Result<RunOutcome, String>,
    seconds: f64,
}

fn full_runs() -> Vec<CaseRun> {
    CASES
        .iter()
        .map(|&name| {
            let net = load(name);
            let (best, _) = reference(name);
            let start = Instant::now();
            let result = run_detailed(&net, &SolveConfig::default(), Some(best)).map_err(|e| e.to_string());
            CaseRun { name, result, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn soundness(runs: &[CaseRun]) -> Verdict {
    let mut total = 0;
    let mut weakest = f64::INFINITY;
    for run in runs {
        match &run.result {
            Ok(out) => {
                for (_, cut) in &out.appended {
                    weakest = weakest.min(cut.violation);
                    total += 1;
                }
            }
            Err(e) => return verdict(false, format!("{}: {e}", run.name)),
        }
    }
    verdict(weakest > TOL_VIOLATION, format!("{total} appended cuts, smallest violation {weakest:.2e}"))
}

/// 2× the published LP gap plus half a percentage point.
const GAP_LIMITS: [(&str, f64); 4] = [
    ("case9", 2.0 * 0.7899 + 0.5),
    ("case30", 2.0 * 1.3964 + 0.5),
    ("case57", 2.0 * 0.9954 + 0.5),
    ("case118", 2.0 * 1.4642 + 0.5),
];

fn gaps(runs: &[CaseRun]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (run, (name, limit)) in runs.iter().zip(GAP_LIMITS) {
        assert_eq!(run.name, name);
        match &run.result {
            Ok(out) => {
                let gap = 100.0 * out.report.gap.unwrap_or(f64::INFINITY);
                let ok = gap <= limit && run.seconds <= 60.0;
                pass &= ok;
                parts.push(format!("{name} {gap:.4}% (max {limit:.4}%) {:.1}s", run.seconds));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} failed: {e}"));
            }
        }
    }
    verdict(pass, parts.join(", "))
}

fn monotone(runs: &[CaseRun], extra: &[Vec<f64>]) -> Verdict {
    let mut worst = 0.0f64;
    let mut count = 0;
    let trajectories = runs
        .iter()
        .filter_map(|r| r.result.as_ref().ok())
        .map(|o| o.report.bounds())
        .chain(extra.iter().cloned());
    for t in trajectories {
        count += 1;
        for w in t.windows(2) {
            worst = worst.min((w[1] - w[0]) / w[0].abs().max(1.0));
        }
    }
    let complete = runs.iter().all(|r| r.result.is_ok());
    verdict(
        complete && worst >= -1e-9,
        format!("{count} trajectories, most negative relative step {worst:.1e}"),
    )
}

/// Minimum over all feasible basic points of `min c·x, rows, lo ≤ x ≤ hi`.
fn vertex_minimum(lp: &LpModel) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coefs {
            a[j] += v;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        planes.push((a.clone(), lp.lower[j]));
        planes.push((a, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |r, c| planes[pick[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| planes[pick[r]].1);
        if a.determinant().abs() > 1e-9 {
            if let Some(x) = a.lu().solve(&b) {
                let x: Vec<f64> = x.iter().copied().collect();
                let inside = (0..n).all(|j| x[j] >= lp.lower[j] - 1e-9 && x[j] <= lp.upper[j] + 1e-9);
                if inside && lp.max_violation(&x) <= 1e-9 {
                    let obj = lp.objective(&x);
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
        }
        // next n-combination of the planes
        let total = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < total - n + i {
                break;
            }
        }
        pick[i] += 1;
        for k in i + 1..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

fn random_lp<R: Rng>(rng: &mut R) -> LpModel {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let mut lp = LpModel::new();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    for (j, &x) in x0.iter().enumerate() {
        let lo = x - rng.gen_range(0.0..3.0);
        let hi = x + rng.gen_range(0.0..3.0);
        lp.add_var(format!("x{j}"), lo, hi, rng.gen_range(-5.0..5.0));
    }
    let feasible = rng.gen_bool(0.9);
    for i in 0..m {
        let mut coefs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.8) {
                coefs.push((j, rng.gen_range(-5.0..5.0)));
            }
        }
        let lhs: f64 = coefs.iter().map(|&(j, a)| a * x0[j]).sum();
        let slack = if feasible { rng.gen_range(0.0..2.0) } else { rng.gen_range(-3.0..2.0) };
        let row = if rng.gen_bool(0.5) {
            Row::new(coefs, Sense::Le, lhs + slack)
        } else {
            Row::new(coefs, Sense::Ge, lhs - slack)
        };
        lp.add_row(format!("r{i}"), row);
    }
    lp
}

fn lp_backend() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_obj, mut worst_dual, mut mismatched, mut infeasible) = (0.0f64, 0.0f64, 0, 0);
    for _ in 0..500 {
        let lp = random_lp(&mut rng);
        let truth = vertex_minimum(&lp);
        let dense = DenseSimplex::new().solve(&lp).unwrap();
        let sparse = SparseSimplex::new().solve(&lp).unwrap();
        let highs = HighsSimplex::new().solve(&lp).unwrap();
        let all = [&dense, &sparse, &highs];
        match truth {
            None => {
                infeasible += 1;
                if all.iter().any(|s| s.status != LpStatus::Infeasible) {
                    mismatched += 1;
                }
            }
            Some(best) => {
                if all.iter().any(|s| s.status != LpStatus::Optimal) {
                    mismatched += 1;
                    continue;
                }
                for s in all {
                    worst_obj = worst_obj.max((s.objective - best).abs());
                }
                for s in [&dense, &highs] {
                    let bound = lp.dual_bound(s.duals.as_ref().expect("backend returns duals"));
                    worst_dual = worst_dual.max((s.objective - bound).abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatched == 0 && worst_obj <= 1e-7 && worst_dual <= 1e-7 && secs < 10.0,
        format!("{infeasible} infeasible, {mismatched} status mismatches, objective error {worst_obj:.1e}, duality gap {worst_dual:.1e}"),
    )
}

fn random_symmetric<R: Rng>(n: usize, eigen: &[f64], rng: &mut R) -> DMatrix<f64> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
    &q * DMatrix::from_diagonal(&DVector::from_column_slice(eigen)) * q.transpose()
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn sdp() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = load("case9");
    let model = build_base_model(&net, &ModelOptions::default()).unwrap();
    let mut emitted = Vec::new();
    for k in 0..40 {
        let pt = cuts::random_box_point(&model, &mut rng);
        for bv in &model.catalog.branches {
            if let Some(cut) = cuts::sdp_separate(&model, &[bv.k, bv.m], k % 2 == 1, &pt, TOL_VIOLATION).unwrap() {
                emitted.push(cut);
            }
        }
    }
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let v = random_voltages(&net, PI, &mut rng);
        let x = model.embed(&net, &v, None).unwrap();
        for cut in &emitted {
            worst = worst.max(cut.constraint.violation(&x.0));
        }
    }
    let mut false_alarms = 0;
    let mut missed = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let rank = rng.gen_range(1..=n);
        let b = DMatrix::from_fn(rank, n, |_, _| rng.gen_range(-1.0..1.0));
        if psd_certificate(&to_rows(&(b.transpose() * b))).unwrap().is_some() {
            false_alarms += 1;
        }
        let mut eig: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        eig[0] = -rng.gen_range(0.1..1.0);
        eig[n - 1] = rng.gen_range(0.1..1.0);
        let m = to_rows(&random_symmetric(n, &eig, &mut rng));
        match psd_certificate(&m).unwrap() {
            Some((u, _)) => {
                let q: f64 = (0..n).map(|i| (0..n).map(|j| u[i] * m[i][j] * u[j]).sum::<f64>()).sum();
                if !(q < 0.0) {
                    missed += 1;
                }
            }
            None => missed += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        !emitted.is_empty() && worst <= 1e-7 && false_alarms == 0 && missed == 0 && secs < 10.0,
        format!(
            "{} cuts, worst rank-one slack {:.1e}, {false_alarms} certificates on Gram matrices, {missed} misses on indefinite ones",
            emitted.len(),
            -worst
        ),
    )
}

fn glover() -> Verdict {
    let start = Instant::now();
    let mut widths = Vec::new();
    let mut failures = 0;
    for bits in [1u32, 4, 8] {
        let mut worst_width = 0.0f64;
        let mut lp = LpModel::new();
        let a = lp.add_var("a", 0.0, 1.0, 0.0);
        let b = lp.add_var("b", 0.0, 1.0, 0.0);
        let p = lp.add_var("p", 0.0, 1.0, 0.0);
        let mut builder = ProductBuilder::new(lp, bits).unwrap();
        builder.add_product(p, a, b).unwrap();
        let milp = builder.finish();
        let idx = |name: &str| milp.lp.names.iter().position(|n| n == name).unwrap();
        let (na, nb, z, delta) = (idx("n_a"), idx("n_b"), idx("z_p"), idx("delta_a"));
        let ys: Vec<usize> = (1..=bits).map(|j| idx(&format!("y_a_{j}"))).collect();
        let ws: Vec<usize> = (1..=bits).map(|j| idx(&format!("w_p_{j}"))).collect();
        let step = 0.5f64.powi(bits as i32);
        for i in 0..100 {
            for k in 0..100 {
                let (u, v) = (i as f64 / 99.0, k as f64 / 99.0);
                let (digits, rest) = binary_expansion(u, bits);
                let mut x = vec![0.0; milp.lp.num_vars()];
                x[a] = u;
                x[b] = v;
                x[na] = u;
                x[nb] = v;
                x[delta] = rest;
                let mut low = 0.0;
                for (j, &d) in digits.iter().enumerate() {
                    x[ys[j]] = d as f64;
                    x[ws[j]] = d as f64 * v;
                    low += 0.5f64.powi(j as i32 + 1) * d as f64 * v;
                }
                let high = low + step * v;
                worst_width = worst_width.max(high - low);
                for (zv, ok) in [(low, true), (high, true), (low - 1e-6, false), (high + 1e-6, false)] {
                    x[z] = zv;
                    x[p] = zv;
                    let feasible = milp.lp.max_violation(&x) <= 1e-12;
                    if feasible != ok {
                        failures += 1;
                    }
                }
                if !(low <= u * v + 1e-15 && u * v <= high + 1e-15) {
                    failures += 1;
                }
            }
        }
        if worst_width > step + 1e-15 {
            failures += 1;
        }
        widths.push(format!("T={bits} {worst_width:.3e}"));
    }
    let net = load("case9");
    let milp = build_milp(&net, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("case9.lp");
    export_milp(&milp, &path, &[]).unwrap();
    let back = read_lp(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let round_trip = back.names == milp.lp.names
        && back.rows.len() == milp.lp.rows.len()
        && back.kinds == milp.lp.kinds
        && back.rows.iter().zip(&milp.lp.rows).all(|(r, s)| r.sense == s.sense && r.coefs.len() == s.coefs.len());
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures == 0 && round_trip && secs < 5.0,
        format!("widest sandwich {}, {failures} grid failures, round trip {round_trip}", widths.join(" / ")),
    )
}

fn tightening(trajectories: &mut Vec<Vec<f64>>) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut breaks = 0;
    for i in 0..1000 {
        let br = random_branch(&mut rng, [Regime::Plain, Regime::ShuntOnly, Regime::General][i % 3]);
        let vmax = rng.gen_range(1.0..1.2);
        let c = rng.gen_range(-PI..PI);
        let w = rng.gen_range(0.0..PI);
        let outer = AngleInterval { bus: 1, lo: c - w, hi: c + w };
        let lo = rng.gen_range(outer.lo..=outer.hi);
        let hi = rng.gen_range(lo..=outer.hi);
        let inner = AngleInterval { bus: 1, lo, hi };
        let (mi, ni) = delta_bounds(&br, vmax, Some(&inner));
        let (mo, no) = delta_bounds(&br, vmax, Some(&outer));
        let (mf, nf) = delta_bounds(&br, vmax, None);
        let tol = 1e-12 * mf;
        if mi > mo + tol || ni > no + tol || mo > mf + tol || no > nf + tol {
            breaks += 1;
        }
    }
    let net = load("case9");
    let plain = run_detailed(&net, &SolveConfig::default(), None).unwrap().report;
    let cfg = SolveConfig { intervals: vec![AngleInterval::fixed(net.reference_bus, 0.0)], ..SolveConfig::default() };
    let fixed = run_detailed(&net, &cfg, None).unwrap().report;
    trajectories.push(plain.bounds());
    trajectories.push(fixed.bounds());
    let (bp, bf) = (plain.bound.unwrap(), fixed.bound.unwrap());
    let secs = start.elapsed().as_secs_f64();
    verdict(
        breaks == 0 && bf >= bp - 1e-6 * bp.abs(),
        format!("{breaks} monotonicity breaks; case9 bound {bp:.6} untightened, {bf:.6} with reference fixed ({secs:.1}s)"),
    )
}

fn main() {
    let mut failed = Vec::new();
    let mut check = |id: u32, title: &str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        report(id, title, &v, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(id);
        }
    };
    check(1, "physics oracle consistency", &mut physics);
    check(2, "cut validity", &mut cut_validity);
    let start = Instant::now();
    let runs = full_runs();
    let _ = writeln!(std::io::stderr(), "full runs finished in {:.1}s", start.elapsed().as_secs_f64());
    check(3, "separation soundness", &mut || soundness(&runs));
    check(4, "gap regression", &mut || gaps(&runs));
    check(6, "LP backend", &mut lp_backend);
    check(7, "semidefinite cuts", &mut sdp);
    check(8, "binary expansion", &mut glover);
    let mut extra = Vec::new();
    check(9, "angle tightening", &mut || tightening(&mut extra));
    check(5, "bound monotonicity", &mut || monotone(&runs, &extra));
    if !failed.is_empty() {
        let _ = writeln!(std::io::stderr(), "failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
