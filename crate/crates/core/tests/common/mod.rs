#![allow(dead_code)]

use std::collections::HashSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use opf_lift::cli::VoltageProfile;
use opf_lift::cuts::{Cut, Family};
use opf_lift::model::ModelInstance;
use opf_lift::netcase::{parse_case, Branch, Network};
use rand::Rng;

pub const CASES: [&str; 4] = ["case9", "case30", "case57", "case118"];

pub fn data_dir() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/data")
}

pub fn load(name: &str) -> Network {
    let text = std::fs::read_to_string(format!("{}/{name}.m", data_dir())).unwrap();
    parse_case(&text).unwrap()
}

pub fn reference(name: &str) -> (f64, VoltageProfile) {
    let text = std::fs::read_to_string(format!("{}/reference/{name}_opf.json", data_dir())).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let profile: VoltageProfile = serde_json::from_value(value.clone()).unwrap();
    (value["objective"].as_f64().unwrap(), profile)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Plain,
    ShuntOnly,
    General,
}

pub fn random_branch<R: Rng>(rng: &mut R, regime: Regime) -> Branch {
    let r = rng.gen_range(0.0..0.1);
    let x = rng.gen_range(0.01..0.5);
    let mut br = Branch::new(1, 2, r, x, 0.0, 1.0, 0.0, 0.0).unwrap();
    if regime != Regime::Plain {
        br.g_sh = rng.gen_range(0.0..0.05);
        br.b_sh = rng.gen_range(0.0..0.5);
    }
    if regime == Regime::General {
        br.tau = rng.gen_range(0.85..1.15);
        br.sigma = rng.gen_range(-0.5..0.5);
    }
    br
}

/// Complex power into the branch at both ends from `S = V·conj(Y V)`.
pub fn power_oracle(br: &Branch, vk: Complex64, vm: Complex64) -> (Complex64, Complex64) {
    let y = Complex64::new(br.g, br.b);
    let ysh = Complex64::new(br.g_sh, br.b_sh);
    let shift = Complex64::from_polar(br.tau, br.sigma);
    let y11 = (y + ysh / 2.0) / (br.tau * br.tau);
    let y12 = -y / shift.conj();
    let y21 = -y / shift;
    let y22 = y + ysh / 2.0;
    let ik = y11 * vk + y12 * vm;
    let im = y21 * vk + y22 * vm;
    (vk * ik.conj(), vm * im.conj())
}

/// Voltages with magnitudes inside each bus's limits, the reference angle at
/// zero and other angles within `spread` of it.
pub fn random_voltages<R: Rng>(net: &Network, spread: f64, rng: &mut R) -> Vec<Complex64> {
    net.buses
        .iter()
        .map(|b| {
            let mag = rng.gen_range(b.vmin..=b.vmax);
            let theta = if b.id == net.reference_bus { 0.0 } else { rng.gen_range(-spread..=spread) };
            Complex64::from_polar(mag, theta)
        })
        .collect()
}

pub fn wrap(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

/// Labels of rated branches whose flows at `x` exceed the rating at either end.
pub fn overloaded(model: &ModelInstance, net: &Network, x: &[f64]) -> HashSet<String> {
    model
        .catalog
        .branches
        .iter()
        .filter(|bv| {
            let br = &net.branches[bv.branch];
            br.rate_a > 0.0 && (x[bv.p_km].hypot(x[bv.q_km]) > br.rate_a || x[bv.p_mk].hypot(x[bv.q_mk]) > br.rate_a)
        })
        .map(|bv| net.branches[bv.branch].label())
        .collect()
}

/// Rating tangents are only claimed valid for points inside the rating.
pub fn applies(cut: &Cut, overloaded: &HashSet<String>) -> bool {
    cut.family != Family::Rating || !overloaded.contains(&cut.source)
}
