// Every example runs to completion.

macro_rules! example {
    ($name:ident, $file:literal) => {
        mod $name {
            include!($file);
        }

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(monodomain_solve, "../examples/monodomain_solve.rs");
example!(osm_convergence, "../examples/osm_convergence.rs");
example!(coarse_space, "../examples/coarse_space.rs");
example!(dcs_rjmin_run, "../examples/dcs_rjmin_run.rs");
example!(jump_energy, "../examples/jump_energy.rs");
example!(parameter_sweep, "../examples/parameter_sweep.rs");
