//! Reads a MATPOWER case, prints its contents in per-unit and writes it back.
//!
//! cargo run --example parse_case -- crates/core/data/case30.m

use opf_lift::netcase::{parse_case, write_case, Network};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case9.m").into());
    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    println!("{}", net.summary());
    println!("base {} MVA", net.base_mva);

    for br in net.branches.iter().take(5) {
        println!(
            "branch {:>8}  g {:>9.4}  b {:>9.4}  tau {:.3}  sigma {:+.4}",
            br.label(),
            br.g,
            br.b,
            br.tau,
            br.sigma
        );
    }
    for (i, g) in net.generators.iter().enumerate() {
        println!("gen {} at bus {}: p in [{:.3}, {:.3}] pu", i + 1, g.bus, g.pmin, g.pmax);
    }

    let again = parse_case(&write_case(&net, "copy"))?;
    let json = Network::from_json(&net.to_json())?;
    println!("text round trip equal: {}", again == net);
    println!("json round trip equal: {}", json == net);
    Ok(())
}
