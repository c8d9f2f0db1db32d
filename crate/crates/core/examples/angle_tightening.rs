//! Shows how an angle interval at one bus shrinks the Δ bounds of its
//! branches and changes the final bound.

use std::f64::consts::PI;

use opf_lift::cuts::{delta_bounds, AngleInterval};
use opf_lift::engine::{run, SolveConfig};
use opf_lift::netcase::parse_case;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let net = parse_case(&std::fs::read_to_string(format!("{dir}/case9.m"))?)?;
    let br = &net.branches[0];
    let vmax = net.bus(br.from).unwrap().vmax;
    for (lo, hi) in [(-PI, PI), (-0.5, 0.5), (-0.1, 0.1), (0.0, 0.0)] {
        let iv = AngleInterval { bus: br.from, lo, hi };
        let (mu, nu) = delta_bounds(br, vmax, Some(&iv));
        println!("interval [{lo:+.2}, {hi:+.2}]  mu {mu:.4}  nu {nu:.4}");
    }

    let reference = net.reference_bus;
    let plain = run(&net, &SolveConfig::default(), None)?;
    let fixed_cfg = SolveConfig { intervals: vec![AngleInterval::fixed(reference, 0.0)], ..SolveConfig::default() };
    let fixed = run(&net, &fixed_cfg, None)?;
    println!("bound without interval {:.4}", plain.bound.unwrap_or(f64::NAN));
    println!("bound with bus {reference} fixed {:.4}", fixed.bound.unwrap_or(f64::NAN));
    Ok(())
}
