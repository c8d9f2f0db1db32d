//! Separates semidefinite cuts on the moment matrix of one branch after
//! solving the base LP, and checks a few matrices for a negative eigenvalue.

use opf_lift::cuts::{psd_certificate, sdp_separate, TOL_VIOLATION};
use opf_lift::lp::{LpBackend, SparseSimplex};
use opf_lift::model::{build_base_model, ModelOptions};
use opf_lift::netcase::parse_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let net = parse_case(&std::fs::read_to_string(format!("{dir}/case9.m"))?)?;
    let model = build_base_model(&net, &ModelOptions::default())?;
    let sol = SparseSimplex::new().solve(&model.to_lp())?;
    println!("base LP bound {:.4}", sol.objective);

    for bv in model.catalog.branches.iter().take(3) {
        for include_one in [false, true] {
            let found = sdp_separate(&model, &[bv.k, bv.m], include_one, &sol.x, TOL_VIOLATION)?;
            if let Some(cut) = found {
                println!(
                    "{:<28} violation {:.4}  terms {}",
                    cut.constraint.name,
                    cut.violation,
                    cut.constraint.coefs.len()
                );
            }
        }
    }

    let gram = vec![vec![2.0, 1.0], vec![1.0, 1.0]];
    let indefinite = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
    println!("gram matrix certificate: {:?}", psd_certificate(&gram)?);
    println!("indefinite matrix certificate: {:?}", psd_certificate(&indefinite)?);
    Ok(())
}
