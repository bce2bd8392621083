// Monitoring the p-jump functional with q = p: each local solve lowers J_p by
// 4p times the discrete energy of the increment, and the coarse step lowers it
// further.

use dcs_rjmin::ddm::{run, Method, RunConfig};

pub fn run_example() -> dcs_rjmin::Result<()> {
    let p = 5.0;
    let mut config = RunConfig::new(4, 12, p, p, Method::DcsRjmin);
    config.iterations = 10;
    let out = run(&config)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "n", "J_p", "J_p half", "4p·energy", "‖δ‖_L2");
    for w in out.history.windows(2) {
        let s = w[1].step.as_ref().expect("step metrics");
        println!(
            "{:>3} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}",
            w[1].iteration,
            w[1].j_p,
            s.j_p_half,
            4.0 * p * s.increment_energy,
            s.increment_l2
        );
        assert!((w[0].j_p - s.j_p_half - 4.0 * p * s.increment_energy).abs() <= 1e-9 * out.history[0].j_p);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> dcs_rjmin::Result<()> {
    run_example()
}
