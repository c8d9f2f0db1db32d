//! Binary-expansion MILP approximation of the lifted model.
//!
//! One factor of every product variable is written as
//! `u = Σ 2^{-j} y_j + δ` with binary `y_j` and `0 ≤ δ ≤ 2^{-T}` after
//! mapping it onto `[0, 1]`; each `y_j·v` is linked to a continuous `w_j`
//! by McCormick rows and the product is sandwiched as
//! `Σ 2^{-j} w_j ≤ u·v ≤ Σ 2^{-j} w_j + 2^{-T} v`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{format, LpModel, Row, Sense, VarKind};
use crate::model::{build_base_model, ModelError, ModelOptions, VarId};
use crate::netcase::Network;

pub const DEFAULT_BITS: u32 = 8;
pub const MAX_BITS: u32 = 30;

#[derive(Debug, Error)]
pub enum GloverError {
    #[error("bit count must be in 1..={MAX_BITS}, got {0}")]
    Bits(u32),
    #[error("factor {0} has an infinite bound and cannot be normalized")]
    Unbounded(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Greedy most-significant-first expansion of `u ∈ [0, 1]`.
pub fn binary_expansion(u: f64, bits: u32) -> (Vec<u8>, f64) {
    let mut rest = u;
    let mut out = Vec::with_capacity(bits as usize);
    for j in 1..=bits {
        let w = 0.5f64.powi(j as i32);
        if rest >= w {
            out.push(1);
            rest -= w;
        } else {
            out.push(0);
        }
    }
    (out, rest)
}

/// `w ≤ v`, `w ≤ y`, `w ≥ v + y − 1`, `w ≥ 0`.
pub fn mccormick_link(y: VarId, v: VarId, w: VarId) -> [Row; 4] {
    [
        Row::new(vec![(w, 1.0), (v, -1.0)], Sense::Le, 0.0),
        Row::new(vec![(w, 1.0), (y, -1.0)], Sense::Le, 0.0),
        Row::new(vec![(w, 1.0), (v, -1.0), (y, -1.0)], Sense::Ge, -1.0),
        Row::new(vec![(w, 1.0)], Sense::Ge, 0.0),
    ]
}

/// How a factor variable maps onto `[0, 1]`: `x = shift + scale·u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSpec {
    pub variable: String,
    pub shift: f64,
    pub scale: f64,
    pub normalized: String,
    pub bits: Vec<String>,
    pub delta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub product: String,
    pub expanded: String,
    pub other: String,
    /// Sandwiched stand-in for the normalized product; absent when a factor
    /// is fixed and the product is linear.
    pub z: Option<String>,
    pub w: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpManifest {
    pub bits: u32,
    pub expansions: Vec<ExpansionSpec>,
    pub products: Vec<ProductSpec>,
}

#[derive(Debug, Clone)]
pub struct Milp {
    pub lp: LpModel,
    pub manifest: MilpManifest,
}

impl Milp {
    pub fn binary_count(&self) -> usize {
        self.lp.kinds.iter().filter(|&&k| k == VarKind::Binary).count()
    }
}

/// Appends bilinear products to an LP. Each call to [`add_product`]
/// reuses the bits of factors expanded earlier.
///
/// [`add_product`]: ProductBuilder::add_product
pub struct ProductBuilder {
    pub lp: LpModel,
    pub bits: u32,
    expansions: BTreeMap<VarId, (usize, VarId, Vec<VarId>)>,
    normalized: BTreeMap<VarId, VarId>,
    pub manifest: MilpManifest,
    /// Rows added by McCormick links and sandwiches.
    pub linking_rows: usize,
}

impl ProductBuilder {
    pub fn new(lp: LpModel, bits: u32) -> Result<Self, GloverError> {
        if bits == 0 || bits > MAX_BITS {
            return Err(GloverError::Bits(bits));
        }
        Ok(ProductBuilder {
            lp,
            bits,
            expansions: BTreeMap::new(),
            normalized: BTreeMap::new(),
            manifest: MilpManifest { bits, expansions: Vec::new(), products: Vec::new() },
            linking_rows: 0,
        })
    }

    fn range(&self, x: VarId) -> Result<(f64, f64), GloverError> {
        let (lo, hi) = (self.lp.lower[x], self.lp.upper[x]);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(GloverError::Unbounded(self.lp.names[x].clone()));
        }
        Ok((lo, hi - lo))
    }

    /// `n ∈ [0, 1]` with `x = lo + Δ·n`.
    fn normalized(&mut self, x: VarId) -> Result<VarId, GloverError> {
        if let Some(&n) = self.normalized.get(&x) {
            return Ok(n);
        }
        let (lo, d) = self.range(x)?;
        let name = format!("n_{}", self.lp.names[x]);
        let n = self.lp.add_var(name.clone(), 0.0, 1.0, 0.0);
        self.lp
            .add_row(format!("norm_{}", self.lp.names[x]), Row::new(vec![(x, 1.0), (n, -d)], Sense::Eq, lo));
        self.normalized.insert(x, n);
        Ok(n)
    }

    fn expansion(&mut self, x: VarId) -> Result<(VarId, Vec<VarId>), GloverError> {
        if let Some((_, n, ys)) = self.expansions.get(&x) {
            return Ok((*n, ys.clone()));
        }
        let n = self.normalized(x)?;
        let (lo, d) = self.range(x)?;
        let base = self.lp.names[x].clone();
        let mut coefs = vec![(n, 1.0)];
        let mut ys = Vec::with_capacity(self.bits as usize);
        let mut names = Vec::new();
        for j in 1..=self.bits {
            let name = format!("y_{base}_{j}");
            let y = self.lp.add_var(name.clone(), 0.0, 1.0, 0.0);
            self.lp.kinds[y] = VarKind::Binary;
            coefs.push((y, -0.5f64.powi(j as i32)));
            ys.push(y);
            names.push(name);
        }
        let delta_name = format!("delta_{base}");
        let delta = self.lp.add_var(delta_name.clone(), 0.0, 0.5f64.powi(self.bits as i32), 0.0);
        coefs.push((delta, -1.0));
        self.lp.add_row(format!("expand_{base}"), Row::new(coefs, Sense::Eq, 0.0));
        self.manifest.expansions.push(ExpansionSpec {
            variable: base,
            shift: lo,
            scale: d,
            normalized: self.lp.names[n].clone(),
            bits: names,
            delta: delta_name,
        });
        self.expansions.insert(x, (self.manifest.expansions.len() - 1, n, ys.clone()));
        Ok((n, ys))
    }

    /// Constrains `p = a·b` up to the expansion error, expanding the factor
    /// whose name sorts first.
    pub fn add_product(&mut self, p: VarId, a: VarId, b: VarId) -> Result<(), GloverError> {
        let (a, b) = if self.lp.names[a] <= self.lp.names[b] { (a, b) } else { (b, a) };
        let pname = self.lp.names[p].clone();
        let (lo_a, da) = self.range(a)?;
        let (lo_b, db) = self.range(b)?;
        let mut spec = ProductSpec {
            product: pname.clone(),
            expanded: self.lp.names[a].clone(),
            other: self.lp.names[b].clone(),
            z: None,
            w: Vec::new(),
        };
        if da == 0.0 || db == 0.0 {
            // one factor is fixed: p = lo_a·b or p = a·lo_b
            let row = if da == 0.0 {
                Row::new(vec![(p, 1.0), (b, -lo_a)], Sense::Eq, 0.0)
            } else {
                Row::new(vec![(p, 1.0), (a, -lo_b)], Sense::Eq, 0.0)
            };
            self.lp.add_row(format!("prod_{pname}"), row);
            self.manifest.products.push(spec);
            return Ok(());
        }
        let (_, ys) = self.expansion(a)?;
        let nb = self.normalized(b)?;
        let na = self.normalized(a)?;
        let zname = format!("z_{pname}");
        let z = self.lp.add_var(zname.clone(), 0.0, 1.0, 0.0);
        let mut sum = Vec::with_capacity(ys.len());
        for (j, &y) in ys.iter().enumerate() {
            let wname = format!("w_{pname}_{}", j + 1);
            let w = self.lp.add_var(wname.clone(), 0.0, 1.0, 0.0);
            for (k, row) in mccormick_link(y, nb, w).into_iter().enumerate() {
                self.lp.add_row(format!("mc_{pname}_{}_{k}", j + 1), row);
            }
            sum.push((w, -0.5f64.powi(j as i32 + 1)));
            spec.w.push(wname);
        }
        let mut lower = vec![(z, 1.0)];
        lower.extend(sum.iter().copied());
        self.lp.add_row(format!("sandwich_lo_{pname}"), Row::new(lower, Sense::Ge, 0.0));
        let mut upper = vec![(z, 1.0), (nb, -0.5f64.powi(self.bits as i32))];
        upper.extend(sum.iter().copied());
        self.lp.add_row(format!("sandwich_hi_{pname}"), Row::new(upper, Sense::Le, 0.0));
        self.linking_rows += 4 * ys.len() + 2;
        // p = lo_a lo_b + lo_a Δb n_b + Δa lo_b n_a + Δa Δb z
        let mut coefs = vec![(p, 1.0), (nb, -lo_a * db), (z, -da * db)];
        if na == nb {
            coefs[1].1 -= da * lo_b;
        } else {
            coefs.push((na, -da * lo_b));
        }
        self.lp.add_row(format!("prod_{pname}"), Row::new(coefs, Sense::Eq, lo_a * lo_b));
        spec.z = Some(zname);
        self.manifest.products.push(spec);
        Ok(())
    }

    pub fn finish(self) -> Milp {
        Milp { lp: self.lp, manifest: self.manifest }
    }
}

/// The base lifted model with every product variable tied to its factors.
pub fn build_milp(net: &Network, bits: u32) -> Result<Milp, GloverError> {
    let model = build_base_model(net, &ModelOptions::default())?;
    let lp = model.to_lp();
    let mut builder = ProductBuilder::new(lp, bits)?;
    let cat = &model.catalog;
    for bv in &cat.buses {
        builder.add_product(bv.ee, bv.e, bv.e)?;
        builder.add_product(bv.ff, bv.f, bv.f)?;
        builder.add_product(bv.x, bv.e, bv.f)?;
    }
    let mut done = std::collections::HashSet::new();
    for br in &cat.branches {
        if !done.insert(br.prod.ee) {
            continue;
        }
        let (k, m) = (cat.buses[br.k], cat.buses[br.m]);
        builder.add_product(br.prod.ee, k.e, m.e)?;
        builder.add_product(br.prod.ef, k.e, m.f)?;
        builder.add_product(br.prod.fe, k.f, m.e)?;
        builder.add_product(br.prod.ff, k.f, m.f)?;
    }
    Ok(builder.finish())
}

/// Manifest path next to an LP file: `x.lp` → `x.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    path.with_extension("manifest.json")
}

/// Writes the LP-format model and its manifest.
pub fn export_milp(milp: &Milp, path: &Path, header: &[String]) -> Result<PathBuf, GloverError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| GloverError::Io { path: p, source }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, format::write_lp(&milp.lp, header)).map_err(io(path))?;
    let mpath = manifest_path(path);
    let json = serde_json::to_string_pretty(&milp.manifest).expect("manifest serializes");
    std::fs::write(&mpath, json).map_err(io(&mpath))?;
    Ok(mpath)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_examples() {
        assert_eq!(binary_expansion(0.0, 5), (vec![0; 5], 0.0));
        assert_eq!(binary_expansion(0.625, 3), (vec![1, 0, 1], 0.0));
        let (bits, delta) = binary_expansion(0.3, 2);
        assert_eq!(bits, vec![0, 1]);
        assert!((delta - 0.05).abs() < 1e-15);
    }

    fn eval(rows: &[Row], x: &[f64]) -> f64 {
        rows.iter().map(|r| r.violation(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn mccormick_cases() {
        let rows = mccormick_link(0, 1, 2);
        // y = 1, v = 0.7 forces w = 0.7
        assert!(eval(&rows, &[1.0, 0.7, 0.7]) <= 1e-15);
        assert!(eval(&rows, &[1.0, 0.7, 0.69]) > 0.0);
        assert!(eval(&rows, &[1.0, 0.7, 0.71]) > 0.0);
        // y = 0 forces w = 0
        assert!(eval(&rows, &[0.0, 0.4, 0.0]) <= 0.0);
        assert!(eval(&rows, &[0.0, 0.4, 0.01]) > 0.0);
        // fractional y leaves w free in [0, 0.5]
        for w in [0.0, 0.25, 0.5] {
            assert!(eval(&rows, &[0.5, 0.5, w]) <= 0.0);
        }
        assert!(eval(&rows, &[0.5, 0.5, 0.51]) > 0.0);
    }

    #[test]
    fn single_product_counts() {
        let mut lp = LpModel::new();
        let a = lp.add_var("a", 0.0, 1.0, 0.0);
        let b = lp.add_var("b", 0.0, 1.0, 0.0);
        let p = lp.add_var("p", 0.0, 1.0, 0.0);
        let mut builder = ProductBuilder::new(lp, 1).unwrap();
        builder.add_product(p, a, b).unwrap();
        assert_eq!(builder.linking_rows, 6);
        let milp = builder.finish();
        assert_eq!(milp.binary_count(), 1);
        assert_eq!(milp.lp.names.iter().filter(|n| n.starts_with("w_")).count(), 1);
        assert_eq!(milp.manifest.products[0].expanded, "a");
    }

    #[test]
    fn rejects_bad_bits() {
        assert!(ProductBuilder::new(LpModel::new(), 0).is_err());
        assert!(ProductBuilder::new(LpModel::new(), 31).is_err());
    }
}
