//! Solves a small LP with both simplex backends, appends a row with a warm
//! start and prints the model in LP format.

use opf_lift::lp::format::write_lp;
use opf_lift::lp::{DenseSimplex, LpBackend, LpModel, Row, Sense, SparseSimplex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // min -3x - 2y  s.t.  x + y <= 4,  x + 3y <= 6,  0 <= x <= 3,  y >= 0
    let mut lp = LpModel::new();
    let x = lp.add_var("x", 0.0, 3.0, -3.0);
    let y = lp.add_var("y", 0.0, f64::INFINITY, -2.0);
    lp.add_row("cap", Row::new(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0));
    lp.add_row("mix", Row::new(vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0));

    let mut dense = DenseSimplex::new();
    let mut sparse = SparseSimplex::new();
    let a = dense.solve(&lp)?;
    let b = sparse.solve(&lp)?;
    println!("dense  {:?} objective {:.6} at {:?}", a.status, a.objective, a.x);
    println!("sparse {:?} objective {:.6} at {:?}", b.status, b.objective, b.x);
    if let Some(duals) = &a.duals {
        println!("dense duals {duals:?}, dual bound {:.6}", lp.dual_bound(duals));
    }

    let cut = Row::new(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    let a = dense.add_rows(std::slice::from_ref(&cut))?;
    let b = sparse.add_rows(&[cut])?;
    println!("after x - y <= 1: dense {:.6}, sparse {:.6}", a.objective, b.objective);

    print!("{}", write_lp(&lp, &["two-variable example".to_string()]));
    Ok(())
}
