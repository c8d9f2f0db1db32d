//! MATPOWER case files and the per-unit network model.
//!
//! Only the subset of the MATPOWER v2 format needed for AC OPF is accepted:
//! the `baseMVA`, `bus`, `gen`, `branch` and `gencost` matrices. Everything
//! is converted to per-unit on load. Data the relaxation cannot honor
//! (angle-difference limits, ramp limits, capability curves, piecewise
//! linear or cubic costs, reactive costs) is rejected instead of dropped.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics;

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("missing matrix block `mpc.{0}`")]
    MissingBlock(&'static str),
    #[error("non-numeric token `{token}` in `mpc.{block}` row {row}")]
    BadNumber {
        block: &'static str,
        row: usize,
        token: String,
    },
    #[error("`mpc.{block}` row {row} has {found} columns, expected at least {expected}")]
    ShortRow {
        block: &'static str,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("{what} references unknown bus {bus}")]
    UnknownBus { what: String, bus: usize },
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("branch {from}-{to} is in service with zero series impedance")]
    ZeroImpedance { from: usize, to: usize },
    #[error("expected exactly one reference bus, found {0}")]
    ReferenceBusCount(usize),
    #[error("unsupported case data: {0}")]
    Unsupported(String),
    #[error("invalid case data: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Pq,
    Pv,
    Reference,
}

impl BusKind {
    fn code(self) -> u8 {
        match self {
            BusKind::Pq => 1,
            BusKind::Pv => 2,
            BusKind::Reference => 3,
        }
    }
}

/// Bus data in per-unit. `gs`/`bs` are the shunt admittance at 1 p.u. voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    pub pd: f64,
    pub qd: f64,
    pub gs: f64,
    pub bs: f64,
    pub vmin: f64,
    pub vmax: f64,
}

/// Polynomial generation cost `c2 p^2 + c1 p + c0` with `p` in per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCurve {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CostCurve {
    pub fn eval(&self, p: f64) -> f64 {
        (self.c2 * p + self.c1) * p + self.c0
    }

    /// Minimum and maximum of the cost over `[lo, hi]`.
    pub fn range(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut min = self.eval(lo).min(self.eval(hi));
        let max = self.eval(lo).max(self.eval(hi));
        if self.c2 > 0.0 {
            let vertex = -self.c1 / (2.0 * self.c2);
            if vertex > lo && vertex < hi {
                min = min.min(self.eval(vertex));
            }
        }
        (min, max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub cost: CostCurve,
    pub in_service: bool,
}

/// Per-line π-model data. The transformer (`tau`, `sigma`) sits at the
/// `from` end; `g_sh`/`b_sh` are the total shunt admittance, half at each end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Position among in-service and out-of-service branches joining the same
    /// unordered bus pair, starting at 0.
    pub ordinal: usize,
    pub r: f64,
    pub x: f64,
    pub g: f64,
    pub b: f64,
    pub g_sh: f64,
    pub b_sh: f64,
    pub tau: f64,
    /// Phase shift in radians.
    pub sigma: f64,
    /// Apparent power limit in per-unit; 0 means unlimited.
    pub rate_a: f64,
    pub in_service: bool,
}

impl Branch {
    /// Builds a branch from impedance data, deriving the series admittance.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        from: usize,
        to: usize,
        r: f64,
        x: f64,
        b_sh: f64,
        tau: f64,
        sigma: f64,
        rate_a: f64,
    ) -> Result<Branch, CaseError> {
        let (g, b) = physics::series_admittance(r, x)
            .map_err(|_| CaseError::ZeroImpedance { from, to })?;
        Ok(Branch {
            from,
            to,
            ordinal: 0,
            r,
            x,
            g,
            b,
            g_sh: 0.0,
            b_sh,
            tau,
            sigma,
            rate_a,
            in_service: true,
        })
    }

    /// Stable label used in variable names: `<from>_<to>`, with `_<n>` appended
    /// for the n-th parallel branch (n ≥ 2).
    pub fn label(&self) -> String {
        if self.ordinal == 0 {
            format!("{}_{}", self.from, self.to)
        } else {
            format!("{}_{}_{}", self.from, self.to, self.ordinal + 1)
        }
    }

    pub fn reverse_label(&self) -> String {
        if self.ordinal == 0 {
            format!("{}_{}", self.to, self.from)
        } else {
            format!("{}_{}_{}", self.to, self.from, self.ordinal + 1)
        }
    }

    /// |y| = 1/|z|.
    pub fn admittance_norm(&self) -> f64 {
        self.g.hypot(self.b)
    }

    /// 1/(r² + x²).
    pub fn inv_z2(&self) -> f64 {
        1.0 / (self.r * self.r + self.x * self.x)
    }
}

/// A validated per-unit network. Immutable once built.
#[derive(Debug, Clone, Serialize)]
pub struct Network {
    pub base_mva: f64,
    pub reference_bus: usize,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
    #[serde(skip)]
    index: HashMap<usize, usize>,
}

#[derive(Deserialize)]
struct NetworkRepr {
    base_mva: f64,
    #[allow(dead_code)]
    reference_bus: usize,
    buses: Vec<Bus>,
    generators: Vec<Generator>,
    branches: Vec<Branch>,
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = NetworkRepr::deserialize(d)?;
        Network::new(repr.base_mva, repr.buses, repr.generators, repr.branches)
            .map_err(serde::de::Error::custom)
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.base_mva == other.base_mva
            && self.reference_bus == other.reference_bus
            && self.buses == other.buses
            && self.generators == other.generators
            && self.branches == other.branches
    }
}

impl Network {
    /// Validates the parts and assigns parallel-branch ordinals.
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        generators: Vec<Generator>,
        mut branches: Vec<Branch>,
    ) -> Result<Network, CaseError> {
        if !(base_mva > 0.0) {
            return Err(CaseError::Invalid(format!("baseMVA must be positive, got {base_mva}")));
        }
        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(CaseError::DuplicateBus(bus.id));
            }
            if !(bus.vmin > 0.0) || bus.vmin > bus.vmax {
                return Err(CaseError::Invalid(format!(
                    "bus {} voltage bounds [{}, {}]",
                    bus.id, bus.vmin, bus.vmax
                )));
            }
        }
        let refs: Vec<usize> = buses
            .iter()
            .filter(|b| b.kind == BusKind::Reference)
            .map(|b| b.id)
            .collect();
        if refs.len() != 1 {
            return Err(CaseError::ReferenceBusCount(refs.len()));
        }
        for gen in &generators {
            if !index.contains_key(&gen.bus) {
                return Err(CaseError::UnknownBus {
                    what: "generator".into(),
                    bus: gen.bus,
                });
            }
            if gen.pmin > gen.pmax || gen.qmin > gen.qmax {
                return Err(CaseError::Invalid(format!(
                    "generator at bus {} has inverted output limits",
                    gen.bus
                )));
            }
            if gen.cost.c2 < 0.0 {
                return Err(CaseError::Invalid(format!(
                    "generator at bus {} has nonconvex cost (c2 = {})",
                    gen.bus, gen.cost.c2
                )));
            }
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for br in &mut branches {
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(CaseError::UnknownBus {
                        what: format!("branch {}-{}", br.from, br.to),
                        bus: end,
                    });
                }
            }
            if br.in_service && br.r * br.r + br.x * br.x == 0.0 {
                return Err(CaseError::ZeroImpedance {
                    from: br.from,
                    to: br.to,
                });
            }
            if !(br.tau > 0.0) {
                return Err(CaseError::Invalid(format!(
                    "branch {}-{} has tap ratio {}",
                    br.from, br.to, br.tau
                )));
            }
            if br.rate_a < 0.0 {
                return Err(CaseError::Invalid(format!(
                    "branch {}-{} has negative rating",
                    br.from, br.to
                )));
            }
            let key = (br.from.min(br.to), br.from.max(br.to));
            let n = seen.entry(key).or_insert(0);
            br.ordinal = *n;
            *n += 1;
        }
        Ok(Network {
            base_mva,
            reference_bus: refs[0],
            buses,
            generators,
            branches,
            index,
        })
    }

    /// Position of a bus id in `buses`.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn bus(&self, id: usize) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.in_service)
    }

    pub fn in_service_generators(&self) -> impl Iterator<Item = &Generator> {
        self.generators.iter().filter(|g| g.in_service)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Network, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One-line summary in the style "30 buses, 41 branches, 6 generators".
    pub fn summary(&self) -> String {
        format!(
            "{} buses, {} branches, {} generators",
            self.buses.len(),
            self.branches.len(),
            self.generators.len()
        )
    }
}

const BUS_COLS: usize = 13;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

/// Parses MATPOWER case text into a per-unit [`Network`].
pub fn parse_case(text: &str) -> Result<Network, CaseError> {
    let clean = strip_comments(text);
    let base_mva = scalar(&clean, "baseMVA")?;
    let bus_rows = matrix(&clean, "bus")?;
    let gen_rows = matrix(&clean, "gen")?;
    let branch_rows = matrix(&clean, "branch")?;
    let cost_rows = matrix(&clean, "gencost")?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    for (i, row) in bus_rows.iter().enumerate() {
        need("bus", i, row, BUS_COLS)?;
        let kind = match row[1] as i64 {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Reference,
            4 => return Err(CaseError::Unsupported(format!("isolated bus {}", row[0]))),
            other => {
                return Err(CaseError::Invalid(format!("bus {} has type {other}", row[0])))
            }
        };
        buses.push(Bus {
            id: id_of(row[0], "bus", i)?,
            kind,
            pd: row[2] / base_mva,
            qd: row[3] / base_mva,
            gs: row[4] / base_mva,
            bs: row[5] / base_mva,
            vmax: row[11],
            vmin: row[12],
        });
    }

    if cost_rows.len() != gen_rows.len() {
        return Err(CaseError::Unsupported(format!(
            "gencost has {} rows for {} generators (reactive costs are not supported)",
            cost_rows.len(),
            gen_rows.len()
        )));
    }
    let mut generators = Vec::with_capacity(gen_rows.len());
    for (i, (row, cost)) in gen_rows.iter().zip(&cost_rows).enumerate() {
        need("gen", i, row, GEN_COLS)?;
        if row.len() > GEN_COLS && row[GEN_COLS..].iter().any(|&v| v != 0.0) {
            return Err(CaseError::Unsupported(format!(
                "generator row {} has capability-curve or ramp data",
                i + 1
            )));
        }
        generators.push(Generator {
            bus: id_of(row[0], "gen", i)?,
            qmax: row[3] / base_mva,
            qmin: row[4] / base_mva,
            in_service: row[7] > 0.0,
            pmax: row[8] / base_mva,
            pmin: row[9] / base_mva,
            cost: cost_curve(cost, i, base_mva)?,
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for (i, row) in branch_rows.iter().enumerate() {
        need("branch", i, row, BRANCH_COLS)?;
        let from = id_of(row[0], "branch", i)?;
        let to = id_of(row[1], "branch", i)?;
        if row.len() >= 13 {
            let (lo, hi) = (row[11], row[12]);
            let unlimited = (lo <= -360.0 && hi >= 360.0) || (lo == 0.0 && hi == 0.0);
            if !unlimited {
                return Err(CaseError::Unsupported(format!(
                    "branch {from}-{to} has angle-difference limits [{lo}, {hi}]"
                )));
            }
        }
        let (r, x) = (row[2], row[3]);
        let in_service = row[10] > 0.0;
        let (g, b) = match physics::series_admittance(r, x) {
            Ok(gb) => gb,
            Err(_) if !in_service => (0.0, 0.0),
            Err(_) => return Err(CaseError::ZeroImpedance { from, to }),
        };
        branches.push(Branch {
            from,
            to,
            ordinal: 0,
            r,
            x,
            g,
            b,
            g_sh: 0.0,
            b_sh: row[4],
            tau: if row[8] == 0.0 { 1.0 } else { row[8] },
            sigma: row[9].to_radians(),
            rate_a: row[5] / base_mva,
            in_service,
        });
    }

    Network::new(base_mva, buses, generators, branches)
}

fn cost_curve(row: &[f64], i: usize, base: f64) -> Result<CostCurve, CaseError> {
    need("gencost", i, row, 4)?;
    if row[0] != 2.0 {
        return Err(CaseError::Unsupported(format!(
            "gencost row {} uses model {} (only polynomial model 2 is accepted)",
            i + 1,
            row[0]
        )));
    }
    let n = row[3] as usize;
    if n > 3 {
        return Err(CaseError::Unsupported(format!(
            "gencost row {} has degree {} polynomial",
            i + 1,
            n.saturating_sub(1)
        )));
    }
    need("gencost", i, row, 4 + n)?;
    // highest order first
    let mut c = [0.0; 3];
    for (k, v) in row[4..4 + n].iter().rev().enumerate() {
        c[k] = *v;
    }
    Ok(CostCurve {
        c2: c[2] * base * base,
        c1: c[1] * base,
        c0: c[0],
    })
}

fn need(block: &'static str, row: usize, values: &[f64], expected: usize) -> Result<(), CaseError> {
    if values.len() < expected {
        return Err(CaseError::ShortRow {
            block,
            row: row + 1,
            found: values.len(),
            expected,
        });
    }
    Ok(())
}

fn id_of(v: f64, block: &'static str, row: usize) -> Result<usize, CaseError> {
    if v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(CaseError::BadNumber {
            block,
            row: row + 1,
            token: v.to_string(),
        })
    }
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| match l.find('%') {
            Some(p) => &l[..p],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Finds `mpc.<name> = ` and returns the text after the `=`.
fn assignment<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    let key = format!("mpc.{name}");
    let mut from = 0;
    while let Some(pos) = text[from..].find(&key) {
        let rest = &text[from + pos + key.len()..];
        let trimmed = rest.trim_start();
        if let Some(after) = trimmed.strip_prefix('=') {
            return Some(after);
        }
        from += pos + key.len();
    }
    None
}

fn scalar(text: &str, name: &'static str) -> Result<f64, CaseError> {
    let rhs = assignment(text, name).ok_or(CaseError::MissingBlock(name))?;
    let token = rhs.split(';').next().unwrap_or("").trim();
    token.parse().map_err(|_| CaseError::BadNumber {
        block: name,
        row: 1,
        token: token.to_string(),
    })
}

fn matrix(text: &str, name: &'static str) -> Result<Vec<Vec<f64>>, CaseError> {
    let rhs = assignment(text, name).ok_or(CaseError::MissingBlock(name))?;
    let open = rhs.find('[').ok_or(CaseError::MissingBlock(name))?;
    let close = rhs[open..].find(']').ok_or(CaseError::MissingBlock(name))? + open;
    let body = &rhs[open + 1..close];
    let mut rows = Vec::new();
    for line in body.split(|c| c == ';' || c == '\n') {
        let tokens: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            continue;
        }
        let row_no = rows.len() + 1;
        let values = tokens
            .iter()
            .map(|t| {
                parse_number(t).ok_or_else(|| CaseError::BadNumber {
                    block: name,
                    row: row_no,
                    token: t.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(values);
    }
    Ok(rows)
}

fn parse_number(token: &str) -> Option<f64> {
    match token {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        _ => token.parse().ok(),
    }
}

/// Writes a network back out as a MATPOWER case file.
pub fn write_case(net: &Network, name: &str) -> String {
    let base = net.base_mva;
    let mut s = String::new();
    let _ = writeln!(s, "function mpc = {name}");
    s.push_str("mpc.version = '2';\n");
    let _ = writeln!(s, "mpc.baseMVA = {:?};", base);
    s.push_str("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\nmpc.bus = [\n");
    for b in &net.buses {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t1\t1\t0\t0\t1\t{:?}\t{:?};",
            b.id,
            b.kind.code(),
            b.pd * base,
            b.qd * base,
            b.gs * base,
            b.bs * base,
            b.vmax,
            b.vmin
        );
    }
    s.push_str("];\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\nmpc.gen = [\n");
    for g in &net.generators {
        let _ = writeln!(
            s,
            "\t{}\t0\t0\t{:?}\t{:?}\t1\t{:?}\t{}\t{:?}\t{:?};",
            g.bus,
            g.qmax * base,
            g.qmin * base,
            base,
            u8::from(g.in_service),
            g.pmax * base,
            g.pmin * base
        );
    }
    s.push_str("];\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\nmpc.branch = [\n");
    for br in &net.branches {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t0\t0\t{:?}\t{:?}\t{};",
            br.from,
            br.to,
            br.r,
            br.x,
            br.b_sh,
            br.rate_a * base,
            br.tau,
            br.sigma.to_degrees(),
            u8::from(br.in_service)
        );
    }
    s.push_str("];\n%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\nmpc.gencost = [\n");
    for g in &net.generators {
        let _ = writeln!(
            s,
            "\t2\t0\t0\t3\t{:?}\t{:?}\t{:?};",
            g.cost.c2 / (base * base),
            g.cost.c1 / base,
            g.cost.c0
        );
    }
    s.push_str("];\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TWO_BUS: &str = "
function mpc = two_bus
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;
  2 1 50 10 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 100 -100 1 100 1 200 0 0 0 0 0 0 0 0 0 0 0 0;
];
mpc.branch = [
  1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.1 5 10;
];
";

    #[test]
    fn two_bus_per_unit() {
        let net = parse_case(TWO_BUS).unwrap();
        assert_eq!(net.base_mva, 100.0);
        assert_eq!(net.reference_bus, 1);
        let br = &net.branches[0];
        assert_relative_eq!(br.g, 0.990099009900990, epsilon = 1e-12);
        assert_relative_eq!(br.b, -9.900990099009901, epsilon = 1e-12);
        assert_eq!(br.tau, 1.0);
        assert_eq!(net.buses[1].pd, 0.5);
        assert_eq!(net.generators[0].pmax, 2.0);
        let cost = net.generators[0].cost;
        assert_relative_eq!(cost.c2, 1000.0);
        assert_relative_eq!(cost.c1, 500.0);
        assert_relative_eq!(cost.c0, 10.0);
    }

    #[test]
    fn unknown_bus_rejected() {
        let text = TWO_BUS.replace("1 2 0.01 0.1", "1 99 0.01 0.1");
        match parse_case(&text) {
            Err(CaseError::UnknownBus { bus, .. }) => assert_eq!(bus, 99),
            other => panic!("expected unknown bus, got {other:?}"),
        }
    }

    #[test]
    fn zero_impedance_rejected_only_in_service() {
        let text = TWO_BUS.replace("1 2 0.01 0.1", "1 2 0 0");
        assert!(matches!(parse_case(&text), Err(CaseError::ZeroImpedance { .. })));
        let text = text.replace("0 0 0 0 0 0 1 -360 360", "0 0 0 0 0 0 0 -360 360");
        let net = parse_case(&text).unwrap();
        assert!(!net.branches[0].in_service);
    }

    #[test]
    fn reference_bus_count() {
        let none = TWO_BUS.replace("1 3 0 0", "1 2 0 0");
        assert_eq!(parse_case(&none).unwrap_err(), CaseError::ReferenceBusCount(0));
        let two = TWO_BUS.replace("2 1 50 10", "2 3 50 10");
        assert_eq!(parse_case(&two).unwrap_err(), CaseError::ReferenceBusCount(2));
    }

    #[test]
    fn missing_block_and_bad_token() {
        let text = TWO_BUS.replace("mpc.gencost", "mpc.gencostx");
        assert_eq!(parse_case(&text).unwrap_err(), CaseError::MissingBlock("gencost"));
        let text = TWO_BUS.replace("0.01 0.1", "0.01 abc");
        assert!(matches!(
            parse_case(&text),
            Err(CaseError::BadNumber { block: "branch", .. })
        ));
    }

    #[test]
    fn rejects_angle_limits_and_piecewise_costs() {
        let text = TWO_BUS.replace("-360 360", "-30 30");
        assert!(matches!(parse_case(&text), Err(CaseError::Unsupported(_))));
        let text = TWO_BUS.replace("2 0 0 3 0.1 5 10", "1 0 0 2 0 0 100 500");
        assert!(matches!(parse_case(&text), Err(CaseError::Unsupported(_))));
        let text = TWO_BUS.replace("2 0 0 3 0.1 5 10", "2 0 0 4 1 0.1 5 10");
        assert!(matches!(parse_case(&text), Err(CaseError::Unsupported(_))));
    }

    #[test]
    fn tap_and_shift_conversion() {
        let text = TWO_BUS.replace("0 0 0 0 0 0 1 -360 360", "0 0 0 0 0.95 30 1 0 0");
        let net = parse_case(&text).unwrap();
        assert_eq!(net.branches[0].tau, 0.95);
        assert_relative_eq!(net.branches[0].sigma, std::f64::consts::PI / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn parallel_branches_get_ordinals() {
        let text = TWO_BUS.replace(
            "1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;",
            "1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;\n 2 1 0.02 0.2 0 0 0 0 0 0 1 -360 360;",
        );
        let net = parse_case(&text).unwrap();
        assert_eq!(net.branches[0].label(), "1_2");
        assert_eq!(net.branches[1].label(), "2_1_2");
        assert_eq!(net.branches[1].reverse_label(), "1_2_2");
    }

    #[test]
    fn cost_range_includes_vertex() {
        let c = CostCurve { c2: 1.0, c1: -2.0, c0: 0.0 };
        assert_eq!(c.range(0.0, 3.0), (-1.0, 3.0));
        assert_eq!(c.range(2.0, 3.0), (0.0, 3.0));
    }

    #[test]
    fn json_round_trip() {
        let net = parse_case(TWO_BUS).unwrap();
        let back = Network::from_json(&net.to_json()).unwrap();
        assert_eq!(net, back);
    }
}
