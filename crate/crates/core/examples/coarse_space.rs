// The discontinuous coarse space of a 3x3 decomposition: discrete harmonic
// functions with linear traces on one interface edge, and the jump system
// minimizing the Robin jumps of a given state.

use dcs_rjmin::coarse::{assemble_jump_system, build_coarse_space, jump_residual, solve_rjmin};
use dcs_rjmin::ddm::{init_state, osm_step, LocalProblem, Method, RunConfig};
use dcs_rjmin::mesh::Decomposition;
use std::sync::Arc;

pub fn run_example() -> dcs_rjmin::Result<()> {
    let config = RunConfig::new(3, 10, 3.0, 10.0, Method::DcsRjmin);
    let d = Arc::new(Decomposition::build(&config.decomposition)?);
    let space = build_coarse_space(0.0, &d)?;
    println!("{} interfaces, coarse dimension {}", d.interfaces.len(), space.dim());
    for b in space.basis.iter().take(4) {
        println!("  owner {} {:?} {:?}: max = {:.4}", b.owner, b.edge, b.profile, b.field.inf_norm());
    }

    let system = assemble_jump_system(&space, &d, config.q)?;
    let local = LocalProblem::new(d.clone(), &config.problem, config.p)?;
    let state = osm_step(&init_state(&config, &d), &local)?;
    let r0 = jump_residual(&d, &state.faces, config.q);
    let sol = solve_rjmin(&system, &r0)?;
    println!(
        "J_q: {:.4e} -> {:.4e} (optimality {:.1e})",
        sol.initial, sol.minimized, sol.optimality
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> dcs_rjmin::Result<()> {
    run_example()
}
