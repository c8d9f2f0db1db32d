//! Embeds the reference operating point of a case into the lifted space and
//! measures it against the base rows and a random cut suite.
//!
//! cargo run --release --example validate_profile -- case30

use opf_lift::cli::{validate_profile, VoltageProfile};
use opf_lift::netcase::parse_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "case9".into());
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let net = parse_case(&std::fs::read_to_string(format!("{dir}/{name}.m"))?)?;
    let reference: VoltageProfile =
        serde_json::from_str(&std::fs::read_to_string(format!("{dir}/reference/{name}_opf.json"))?)?;

    for (label, profile) in [("reference", reference), ("flat", VoltageProfile::flat(&net))] {
        let (worst, row, op, op_row, count) = validate_profile(&net, &profile, 7).map_err(|e| e.message)?;
        println!("{label}: {count} cuts, max violation {worst:.2e} ({row}), operating {op:.2e} ({op_row})");
    }
    Ok(())
}
