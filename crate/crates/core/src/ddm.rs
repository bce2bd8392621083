//! One-level optimized Schwarz iterations and the two-level variant with the
//! Robin-jump-minimizing coarse corrector.
//!
//! A step solves every subdomain with Robin data built from the neighbors'
//! stored `(trace, flux)` pairs, giving the half-step `u^{n+1/2}`. The
//! one-level method stops there; the two-level method adds the coarse
//! corrector. Subdomain solves run in parallel; every reduction is serial and
//! in a fixed order, so results do not depend on the number of workers.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coarse::{
    apply_correction, assemble_jump_system, build_coarse_space, jump_residual, solve_rjmin,
    CoarseSpace, JumpSystem,
};
use crate::error::{Error, Result};
use crate::fvcore::{
    assemble_operator, extract_all_faces, restrict, robin_combine, solve_monodomain,
    solve_subdomain, BoundaryCondition, BoundaryKind, CellField, FaceData, ProblemSpec, Side,
    SubdomainOperator,
};
use crate::mesh::{Decomposition, DecompositionSpec, Edge, EdgeKind, EdgeMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Osm,
    DcsRjmin,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Method::Osm => "osm",
            Method::DcsRjmin => "dcs-rjmin",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "osm" => Ok(Method::Osm),
            "dcs-rjmin" | "dcs_rjmin" | "dcs" => Ok(Method::DcsRjmin),
            _ => Err(Error::parameter(
                "method",
                format!("unknown method `{s}` (expected `osm` or `dcs-rjmin`)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Initialization {
    /// Zero fields and zero face data.
    Zero,
    /// Zero fields; the first local solve uses i.i.d. uniform `[-1, 1]`
    /// Robin data on every interface face, drawn independently per side.
    RandomRobin,
}

impl FromStr for Initialization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(Initialization::Zero),
            "random-robin" | "random_robin" | "random" => Ok(Initialization::RandomRobin),
            _ => Err(Error::parameter(
                "init",
                format!("unknown initialization `{s}` (expected `zero` or `random-robin`)"),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub decomposition: DecompositionSpec,
    pub problem: ProblemSpec,
    /// Robin coefficient of the local solves.
    pub p: f64,
    /// Robin coefficient of the coarse jump functional.
    pub q: f64,
    pub iterations: usize,
    pub seed: u64,
    pub method: Method,
    pub init: Initialization,
}

impl RunConfig {
    /// `layout × layout` subdomains on `[0, 4]²`, `η = 0`, `f = 0`,
    /// random Robin initialization, 50 iterations, seed 0.
    pub fn new(layout: usize, cells: usize, p: f64, q: f64, method: Method) -> Self {
        RunConfig {
            decomposition: DecompositionSpec::square(layout, cells),
            problem: ProblemSpec::default(),
            p,
            q,
            iterations: 50,
            seed: 0,
            method,
            init: Initialization::RandomRobin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.decomposition.h()?;
        self.problem.validate()?;
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::parameter("p", format!("p must be > 0, got {}", self.p)));
        }
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::parameter("q", format!("q must be > 0, got {}", self.q)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationState {
    pub n: usize,
    pub fields: Vec<CellField>,
    /// Face data of every edge of every subdomain.
    pub faces: Vec<EdgeMap<FaceData>>,
    /// Robin data overriding the neighbor exchange in the next local solve.
    pub incoming: Option<Vec<EdgeMap<Vec<f64>>>>,
}

impl IterationState {
    pub fn zero(decomposition: &Decomposition) -> Self {
        IterationState {
            n: 0,
            fields: decomposition
                .subdomains
                .iter()
                .map(|s| CellField::zeros(s.cells_x, s.cells_y))
                .collect(),
            faces: decomposition
                .subdomains
                .iter()
                .map(|s| EdgeMap::from_fn(|e| FaceData::zeros(s.face_count(e))))
                .collect(),
            incoming: None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        self.fields.iter().any(CellField::is_diverged)
    }
}

pub fn init_state(config: &RunConfig, decomposition: &Decomposition) -> IterationState {
    let mut state = IterationState::zero(decomposition);
    if config.init == Initialization::RandomRobin {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let incoming = decomposition
            .subdomains
            .iter()
            .map(|s| {
                EdgeMap::from_fn(|e| {
                    if s.edges[e].is_interface() {
                        (0..s.face_count(e))
                            .map(|_| rng.random_range(-1.0..=1.0))
                            .collect()
                    } else {
                        Vec::new()
                    }
                })
            })
            .collect();
        state.incoming = Some(incoming);
    }
    state
}

/// Factorized local operators and sampled sources for one `(η, p)` pair.
#[derive(Debug)]
pub struct LocalProblem {
    pub decomposition: Arc<Decomposition>,
    pub p: f64,
    operators: Vec<Arc<SubdomainOperator>>,
    sources: Vec<Vec<f64>>,
}

impl LocalProblem {
    pub fn new(decomposition: Arc<Decomposition>, problem: &ProblemSpec, p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::parameter("p", format!("p must be > 0, got {p}")));
        }
        let mut cache: HashMap<[bool; 4], Arc<SubdomainOperator>> = HashMap::new();
        let mut operators = Vec::with_capacity(decomposition.subdomain_count());
        for sub in &decomposition.subdomains {
            let pattern = sub.edges.0.map(|k| k.is_interface());
            let op = match cache.get(&pattern) {
                Some(op) => op.clone(),
                None => {
                    let kinds = sub.edges.map(|_, k| match k {
                        EdgeKind::Interface { .. } => BoundaryKind::Robin(p),
                        EdgeKind::Exterior => BoundaryKind::Dirichlet,
                    });
                    let op = Arc::new(assemble_operator(problem.eta, sub, kinds)?);
                    cache.insert(pattern, op.clone());
                    op
                }
            };
            operators.push(op);
        }
        let sources = decomposition
            .subdomains
            .iter()
            .map(|s| problem.source.sample_subdomain(s))
            .collect();
        Ok(LocalProblem {
            decomposition,
            p,
            operators,
            sources,
        })
    }

    pub fn eta(&self) -> f64 {
        self.operators.first().map_or(0.0, |op| op.eta)
    }
}

/// Prebuilt coarse space and jump system for one `q`.
#[derive(Clone, Debug)]
pub struct CoarseContext {
    pub space: Arc<CoarseSpace>,
    pub system: Arc<JumpSystem>,
}

impl CoarseContext {
    pub fn new(space: Arc<CoarseSpace>, decomposition: &Decomposition, q: f64) -> Result<Self> {
        let system = Arc::new(assemble_jump_system(&space, decomposition, q)?);
        Ok(CoarseContext { space, system })
    }

    pub fn q(&self) -> f64 {
        self.system.q
    }
}

/// Local solves with Robin data `−φ_j + p·u_j` from every neighbor `j`
/// (or the pending `incoming` data), homogeneous Dirichlet on `∂Ω`.
pub fn osm_step(state: &IterationState, local: &LocalProblem) -> Result<IterationState> {
    let d = &local.decomposition;
    let p = local.p;
    let results = (0..d.subdomain_count())
        .into_par_iter()
        .map(|i| {
            let sub = &d.subdomains[i];
            let bc = EdgeMap::from_fn(|e| match d.across(i, e) {
                Some((nb, nb_edge, _, _)) => {
                    let data = match &state.incoming {
                        Some(incoming) => incoming[i][e].clone(),
                        None => robin_combine(&state.faces[nb][nb_edge], p, Side::Opposite),
                    };
                    BoundaryCondition::Robin { coeff: p, data }
                }
                None => BoundaryCondition::Dirichlet(vec![0.0; sub.face_count(e)]),
            });
            let field = solve_subdomain(&local.operators[i], &local.sources[i], &bc)?;
            let faces = extract_all_faces(&field, d.h, &bc)?;
            Ok((field, faces))
        })
        .collect::<Result<Vec<_>>>()?;
    let (fields, faces) = results.into_iter().unzip();
    Ok(IterationState {
        n: state.n,
        fields,
        faces,
        incoming: None,
    })
}

/// What a coarse correction did to the q-jump functional.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseReport {
    pub j_q_before: f64,
    pub j_q_after: f64,
    pub optimality: f64,
}

/// Half-step, then the jump-minimizing coarse correction.
pub fn dcs_rjmin_step(
    state: &IterationState,
    local: &LocalProblem,
    coarse: &CoarseContext,
) -> Result<(IterationState, CoarseReport)> {
    let half = osm_step(state, local)?;
    coarse_correct(half, &local.decomposition, coarse)
}

fn coarse_correct(
    mut half: IterationState,
    decomposition: &Decomposition,
    coarse: &CoarseContext,
) -> Result<(IterationState, CoarseReport)> {
    let q = coarse.q();
    let r0 = jump_residual(decomposition, &half.faces, q);
    let sol = solve_rjmin(&coarse.system, &r0)?;
    apply_correction(&mut half.fields, &mut half.faces, &coarse.space, &sol.coefficients);
    let report = CoarseReport {
        j_q_before: sol.initial,
        j_q_after: jump_functional(decomposition, &half.faces, q),
        optimality: sol.optimality,
    };
    Ok((half, report))
}

/// `Σ_i Σ_{j ∈ N(i)} Σ_faces h · ((φ_i + c u_i) − (−φ_j + c u_j))²`.
pub fn jump_functional(decomposition: &Decomposition, faces: &[EdgeMap<FaceData>], coeff: f64) -> f64 {
    let h = decomposition.h;
    let mut total = 0.0;
    for sub in &decomposition.subdomains {
        for edge in Edge::ALL {
            let Some((nb, nb_edge, _, _)) = decomposition.across(sub.index, edge) else {
                continue;
            };
            let mine = &faces[sub.index][edge];
            let theirs = &faces[nb][nb_edge];
            for k in 0..mine.len() {
                let jump = (mine.flux[k] + coeff * mine.trace[k])
                    - (-theirs.flux[k] + coeff * theirs.trace[k]);
                total += h * jump * jump;
            }
        }
    }
    total
}

/// Sup norm and `sqrt(Σ h² v²)` of `fields − reference` (reference zero when
/// `None`).
pub fn error_norms(
    fields: &[CellField],
    reference: Option<&[CellField]>,
    h: f64,
) -> Result<(f64, f64)> {
    if let Some(r) = reference {
        if r.len() != fields.len()
            || r.iter().zip(fields).any(|(a, b)| a.values.len() != b.values.len())
        {
            return Err(Error::Mismatch("reference grid does not match the state".into()));
        }
    }
    let mut sup = 0.0_f64;
    let mut sq = 0.0;
    for (i, f) in fields.iter().enumerate() {
        for (k, v) in f.values.iter().enumerate() {
            let e = v - reference.map_or(0.0, |r| r[i].values[k]);
            sup = sup.max(e.abs());
            sq += e * e;
        }
    }
    Ok((sup, h * sq.sqrt()))
}

/// `‖a − b‖_{L²}` and the discrete energy of `δ = a − b`,
/// `η h² Σ δ² + Σ_interior faces (δ_c − δ_nb)² + Σ_boundary faces h² φ(δ)²/2`.
fn increment_norms(
    a: &IterationState,
    b: &IterationState,
    eta: f64,
    h: f64,
) -> (f64, f64) {
    let mut sq = 0.0;
    let mut energy = 0.0;
    for (i, (fa, fb)) in a.fields.iter().zip(&b.fields).enumerate() {
        let (nx, ny) = (fa.nx, fa.ny);
        let delta: Vec<f64> = fa.values.iter().zip(&fb.values).map(|(x, y)| x - y).collect();
        for (k, dv) in delta.iter().enumerate() {
            sq += dv * dv;
            let (c, r) = (k % nx, k / nx);
            if c + 1 < nx {
                energy += (dv - delta[k + 1]).powi(2);
            }
            if r + 1 < ny {
                energy += (dv - delta[k + nx]).powi(2);
            }
        }
        for edge in Edge::ALL {
            let (pa, pb) = (&a.faces[i][edge].flux, &b.faces[i][edge].flux);
            for (x, y) in pa.iter().zip(pb) {
                energy += 0.5 * h * h * (x - y).powi(2);
            }
        }
    }
    energy += eta * h * h * sq;
    (h * sq.sqrt(), energy)
}

/// Quantities attached to the step `n − 1 → n`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepMetrics {
    /// `‖u^{n-1/2} − u^{n-1}‖_{L²}`
    pub increment_l2: f64,
    /// Discrete energy of the same increment.
    pub increment_energy: f64,
    pub j_p_half: f64,
    pub j_q_half: f64,
    /// Coarse least-squares optimality residual (two-level method only).
    pub coarse_optimality: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub iteration: usize,
    pub j_p: f64,
    pub j_q: f64,
    pub err_inf: f64,
    pub err_l2: f64,
    pub step: Option<StepMetrics>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub history: Vec<MetricsRecord>,
    pub final_state: IterationState,
    pub diverged: bool,
    /// `log10(‖e_last‖∞ / ‖e_0‖∞)`.
    pub log_ratio: f64,
}

impl RunOutcome {
    pub fn last(&self) -> &MetricsRecord {
        self.history.last().expect("history holds at least the initial record")
    }
}

/// Everything a run needs that does not depend on the seed.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub local: Arc<LocalProblem>,
    pub coarse: Option<CoarseContext>,
    /// Monodomain solution restricted to the subdomains; `None` means zero.
    pub reference: Option<Arc<Vec<CellField>>>,
}

impl RunContext {
    pub fn build(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let decomposition = Arc::new(Decomposition::build(&config.decomposition)?);
        let local = Arc::new(LocalProblem::new(decomposition.clone(), &config.problem, config.p)?);
        let coarse = match config.method {
            Method::Osm => None,
            Method::DcsRjmin => {
                let space = Arc::new(build_coarse_space(config.problem.eta, &decomposition)?);
                Some(CoarseContext::new(space, &decomposition, config.q)?)
            }
        };
        let reference = reference_solution(&config.problem, &decomposition)?;
        Ok(RunContext {
            local,
            coarse,
            reference,
        })
    }
}

/// Monodomain reference restricted to the subdomains, or `None` when `f = 0`.
pub fn reference_solution(
    problem: &ProblemSpec,
    decomposition: &Decomposition,
) -> Result<Option<Arc<Vec<CellField>>>> {
    if problem.source.is_zero() {
        return Ok(None);
    }
    let global = solve_monodomain(problem, &decomposition.spec)?;
    Ok(Some(Arc::new(
        decomposition
            .subdomains
            .iter()
            .map(|s| restrict(&global, s))
            .collect(),
    )))
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let ctx = RunContext::build(config)?;
    run_with_context(config, &ctx)
}

/// [`run`] inside a dedicated pool of `workers` threads.
pub fn run_with_workers(config: &RunConfig, workers: usize) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Solver(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run(config))
}

pub fn run_with_context(config: &RunConfig, ctx: &RunContext) -> Result<RunOutcome> {
    config.validate()?;
    let local = &*ctx.local;
    let d = &*local.decomposition;
    if config.method == Method::DcsRjmin && ctx.coarse.is_none() {
        return Err(Error::Config("two-level run without a coarse context".into()));
    }
    let (p, q, h) = (config.p, config.q, d.h);
    let eta = local.eta();
    let reference = ctx.reference.as_deref().map(|v| v.as_slice());

    let record = |state: &IterationState, step: Option<StepMetrics>| -> Result<MetricsRecord> {
        let (err_inf, err_l2) = error_norms(&state.fields, reference, h)?;
        Ok(MetricsRecord {
            iteration: state.n,
            j_p: jump_functional(d, &state.faces, p),
            j_q: jump_functional(d, &state.faces, q),
            err_inf,
            err_l2,
            step,
        })
    };

    let mut state = init_state(config, d);
    if state.incoming.is_some() {
        // u^0 is the local solution for the random Robin data
        state = osm_step(&state, local)?;
    }
    let mut history = vec![record(&state, None)?];
    let mut diverged = state.is_diverged();

    for n in 0..config.iterations {
        if diverged {
            break;
        }
        let half = osm_step(&state, local)?;
        let (increment_l2, increment_energy) = increment_norms(&half, &state, eta, h);
        let j_p_half = jump_functional(d, &half.faces, p);
        let j_q_half = jump_functional(d, &half.faces, q);
        let (mut next, coarse_optimality) = match (&config.method, &ctx.coarse) {
            (Method::DcsRjmin, Some(coarse)) => {
                let (next, report) = coarse_correct(half, d, coarse)?;
                (next, Some(report.optimality))
            }
            _ => (half, None),
        };
        next.n = n + 1;
        diverged = next.is_diverged();
        history.push(record(
            &next,
            Some(StepMetrics {
                increment_l2,
                increment_energy,
                j_p_half,
                j_q_half,
                coarse_optimality,
            }),
        )?);
        state = next;
    }

    let first = history[0].err_inf;
    let last = history.last().map_or(first, |r| r.err_inf);
    let log_ratio = if last == first {
        0.0
    } else {
        (last / first).log10()
    };
    Ok(RunOutcome {
        history,
        final_state: state,
        diverged,
        log_ratio,
    })
}
