//! Two-level optimized Schwarz iterations for `η u − Δu = f` on cartesian
//! cell-centered finite volume grids.
//!
//! The domain is split into a uniform grid of box subdomains. Each iteration
//! performs one local Robin solve per subdomain (the one-level optimized
//! Schwarz step) and, for the two-level method, adds a coarse corrector taken
//! from a discontinuous space of piecewise discrete-harmonic functions. The
//! corrector minimizes the weighted L² norm of the Robin jumps across all
//! interfaces.
//!
//! Module map:
//!
//! * [`mesh`]: decomposition of the square domain and interface topology.
//! * [`fvcore`]: the finite volume discretization, local solves and face data.
//! * [`coarse`]: the discontinuous coarse space and the jump least-squares solve.
//! * [`ddm`]: the iteration drivers and convergence metrics.
//! * [`cli`]: configuration, parameter sweeps and CSV / plot-data output.

pub mod cli;
pub mod coarse;
pub mod ddm;
pub mod error;
pub mod fvcore;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
