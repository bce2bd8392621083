// One-level optimized Schwarz iterations on 2x2 subdomains converging to the
// monodomain solution for f = 1.

use dcs_rjmin::ddm::{run, Initialization, Method, RunConfig};
use dcs_rjmin::fvcore::{ProblemSpec, Source};

pub fn run_example() -> dcs_rjmin::Result<()> {
    let mut config = RunConfig::new(2, 10, 5.0, 5.0, Method::Osm);
    config.problem = ProblemSpec::new(0.0, Source::Constant(1.0));
    config.init = Initialization::Zero;
    config.iterations = 120;
    let out = run(&config)?;
    for r in out.history.iter().step_by(20) {
        println!("n = {:>3}  ‖u − u_mono‖∞ = {:.3e}  J_p = {:.3e}", r.iteration, r.err_inf, r.j_p);
    }
    println!("final error {:.3e}", out.last().err_inf);
    Ok(())
}

#[allow(dead_code)]
fn main() -> dcs_rjmin::Result<()> {
    run_example()
}
