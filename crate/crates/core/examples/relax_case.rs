//! Lower-bounds a bundled case with every cut family enabled.
//!
//! cargo run --release --example relax_case -- case30

use opf_lift::engine::{run, SolveConfig};
use opf_lift::netcase::parse_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "case9".into());
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let net = parse_case(&std::fs::read_to_string(format!("{dir}/{name}.m"))?)?;
    let reference: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{dir}/reference/{name}_opf.json"))?)?;
    let best = reference["objective"].as_f64();

    let report = run(&net, &SolveConfig::default(), best)?;
    println!("{name}: {}", net.summary());
    for r in &report.trajectory {
        let added: usize = r.cuts_added.values().sum();
        println!("round {:>3}  bound {:>14.6}  cuts {:>5}", r.round, r.bound, added);
    }
    println!("status {:?}, bound {:?}", report.status, report.bound);
    if let Some(gap) = report.gap {
        println!("gap vs reference {:.4}%", 100.0 * gap);
    }
    println!("{:.2}s", report.wall_seconds);
    Ok(())
}
