//! Properties of the iterations over randomized configurations.

use proptest::prelude::*;

use dcs_rjmin::ddm::{run, Initialization, Method, RunConfig};
use dcs_rjmin::fvcore::{solve_monodomain, ProblemSpec, Source};
use dcs_rjmin::mesh::DecompositionSpec;

fn config(layout: usize, cells: usize, p: f64, q: f64, method: Method, seed: u64, eta: f64) -> RunConfig {
    let mut c = RunConfig::new(layout, cells, p, q, method);
    c.seed = seed;
    c.iterations = 30;
    c.problem = ProblemSpec::new(eta, Source::Zero);
    c
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    // Per step, the increment energy equals the drop of J_p over the local
    // solve divided by 4p; summed, it is bounded by J_p^0 / (4p) when q = p.
    #[test]
    fn energy_telescopes_for_q_equal_p(
        layout in 2usize..=4,
        cells in 2usize..=8,
        p in 0.5f64..30.0,
        seed in 0u64..1000,
        eta in prop_oneof![Just(0.0), 0.0f64..5.0],
    ) {
        let out = run(&config(layout, cells, p, p, Method::DcsRjmin, seed, eta)).unwrap();
        let j0 = out.history[0].j_p;
        let mut total = 0.0;
        for w in out.history.windows(2) {
            let s = w[1].step.as_ref().unwrap();
            let drop = (w[0].j_p - s.j_p_half) / (4.0 * p);
            prop_assert!((s.increment_energy - drop).abs() <= 1e-9 * j0 / (4.0 * p));
            prop_assert!(w[1].j_p <= w[0].j_p * (1.0 + 1e-10));
            total += s.increment_energy;
        }
        prop_assert!(total <= j0 / (4.0 * p) * (1.0 + 1e-6));
    }

    #[test]
    fn coarse_step_never_raises_j_q(
        layout in 2usize..=4,
        cells in 2usize..=8,
        p in 0.5f64..30.0,
        q in 0.5f64..100.0,
        seed in 0u64..1000,
    ) {
        let out = run(&config(layout, cells, p, q, Method::DcsRjmin, seed, 0.0)).unwrap();
        for r in &out.history[1..] {
            let s = r.step.as_ref().unwrap();
            prop_assert!(r.j_q <= s.j_q_half);
            prop_assert!(s.coarse_optimality.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn osm_is_insensitive_to_q(p in 0.5f64..30.0, q in 0.5f64..100.0, seed in 0u64..100) {
        let a = run(&config(3, 4, p, p, Method::Osm, seed, 0.0)).unwrap();
        let b = run(&config(3, 4, p, q, Method::Osm, seed, 0.0)).unwrap();
        for (x, y) in a.history.iter().zip(&b.history) {
            prop_assert_eq!(x.j_p.to_bits(), y.j_p.to_bits());
            prop_assert_eq!(x.err_inf.to_bits(), y.err_inf.to_bits());
        }
    }
}

/// The squared L² increments summed over the run, against `J_p^0 / (4p)`.
/// For η = 0 the local energy controls only gradients, so this is checked on
/// the configurations of the monotonicity criterion rather than assumed.
#[test]
fn l2_increments_against_initial_jump() {
    for p in [2.0, 5.0, 10.0] {
        for seed in 0..3 {
            let mut c = RunConfig::new(4, 20, p, p, Method::DcsRjmin);
            c.seed = seed;
            let out = run(&c).unwrap();
            let sum: f64 = out.history[1..]
                .iter()
                .map(|r| r.step.as_ref().unwrap().increment_l2.powi(2))
                .sum();
            let bound = out.history[0].j_p / (4.0 * p);
            assert!(
                sum <= bound * (1.0 + 1e-6),
                "p = {p}, seed = {seed}: Σ‖δ‖² = {sum:.6e} > J_p^0/(4p) = {bound:.6e}"
            );
        }
    }
}

#[test]
fn two_level_reaches_monodomain_solution() {
    let mut c = RunConfig::new(3, 6, 6.0, 20.0, Method::DcsRjmin);
    c.problem = ProblemSpec::new(0.5, Source::Function(std::sync::Arc::new(|x, y| x * (4.0 - y))));
    c.iterations = 200;
    c.init = Initialization::Zero;
    let out = run(&c).unwrap();
    let mono = solve_monodomain(&c.problem, &DecompositionSpec::square(3, 6)).unwrap();
    assert!(out.last().err_inf <= 1e-9 * (1.0 + mono.inf_norm()), "{}", out.last().err_inf);
}
