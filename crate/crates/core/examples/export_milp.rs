//! Writes the binary-expansion MILP for case9 and reads it back.
//!
//! cargo run --example export_milp -- 4

use opf_lift::glover::{build_milp, export_milp};
use opf_lift::lp::format::read_lp;
use opf_lift::netcase::parse_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bits: u32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let net = parse_case(&std::fs::read_to_string(format!("{dir}/case9.m"))?)?;
    let milp = build_milp(&net, bits)?;

    let out = std::env::temp_dir().join(format!("case9_t{bits}.lp"));
    let manifest = export_milp(&milp, &out, &["case9".to_string()])?;
    let back = read_lp(&std::fs::read_to_string(&out)?)?;
    println!("wrote {} and {}", out.display(), manifest.display());
    println!(
        "{} variables, {} rows, {} binaries for {} expanded coordinates",
        milp.lp.num_vars(),
        milp.lp.rows.len(),
        milp.binary_count(),
        milp.manifest.expansions.len()
    );
    println!("re-read: {} variables, {} rows", back.num_vars(), back.rows.len());
    Ok(())
}
