//! Evaluates branch flows at a known operating point in rectangular and polar
//! form and reports the largest disagreement.
//!
//! cargo run --example branch_flows -- case57

use opf_lift::cli::VoltageProfile;
use opf_lift::netcase::parse_case;
use opf_lift::physics::{active_loss_polar, flow_polar, flow_rect, VoltagePair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "case9".into());
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let net = parse_case(&std::fs::read_to_string(format!("{dir}/{name}.m"))?)?;
    let profile: VoltageProfile = serde_json::from_str(&std::fs::read_to_string(format!("{dir}/reference/{name}_opf.json"))?)?;
    let v = profile.voltages(&net)?;

    let mut worst = 0.0f64;
    let mut losses = 0.0;
    for br in net.in_service_branches() {
        let (k, m) = (net.bus_index(br.from).unwrap(), net.bus_index(br.to).unwrap());
        let pair = VoltagePair::new(v[k], v[m]);
        let rect = flow_rect(br, &pair);
        let polar = flow_polar(br, pair.vk_mag(), pair.vm_mag(), pair.theta_k() - pair.theta_m());
        worst = worst.max(rect.max_abs_diff(&polar));
        losses += active_loss_polar(br, pair.vk_mag(), pair.vm_mag(), pair.theta_k() - pair.theta_m());
        if br.tau != 1.0 || br.sigma != 0.0 {
            println!(
                "transformer {:>8}: P {:+.4} / {:+.4}  Q {:+.4} / {:+.4}",
                br.label(),
                rect.p_km,
                rect.p_mk,
                rect.q_km,
                rect.q_mk
            );
        }
    }
    println!("{}", net.summary());
    println!("total active loss {:.4} MW", losses * net.base_mva);
    println!("largest rectangular/polar difference {worst:.2e}");
    Ok(())
}
