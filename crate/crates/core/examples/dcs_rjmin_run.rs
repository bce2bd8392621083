// Two-level iterations against one-level iterations on 4x4 subdomains with
// random initial Robin data, f = 0.

use dcs_rjmin::ddm::{run, Method, RunConfig};

pub fn run_example() -> dcs_rjmin::Result<()> {
    for p in [2.0, 6.0, 10.0] {
        let osm = run(&RunConfig::new(4, 20, p, p, Method::Osm))?;
        let dcs = run(&RunConfig::new(4, 20, p, 40.0, Method::DcsRjmin))?;
        println!(
            "p = {p:>4}: log10 ratio after 50 iterations  osm {:>8.3}  dcs-rjmin(q = 40) {:>8.3}",
            osm.log_ratio, dcs.log_ratio
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dcs_rjmin::Result<()> {
    run_example()
}
