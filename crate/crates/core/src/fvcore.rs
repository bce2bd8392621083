//! Cell-centered finite volumes for `η u − Δu = f` with two-point fluxes.
//!
//! Unknowns sit at cell centers. The flux through an interior face is
//! `(u_nb − u_c)/h`; through a boundary face it uses the half-cell distance,
//! `2(u_f − u_c)/h`, where `u_f` is the face value. Dirichlet faces prescribe
//! `u_f`; Robin faces `∂u/∂ν + c·u = g` eliminate it:
//!
//! ```text
//! u_f = (g + (2/h)·u_c) / (c + 2/h),     φ = (2/h)·(g − c·u_c) / (c + 2/h)
//! ```
//!
//! Each cell balance `η h² u_c − h·Σ φ = h² f_c` gives one row of a symmetric
//! positive definite five-point system with unit off-diagonal couplings.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, StencilMatrix, StencilSolver};
use crate::mesh::{DecompositionSpec, Decomposition, Edge, EdgeMap, SubdomainTopology};

/// Fields whose sup norm exceeds this are treated as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Right-hand side `f`.
#[derive(Clone, Default)]
pub enum Source {
    #[default]
    Zero,
    Constant(f64),
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Constant(v) => write!(f, "Constant({v})"),
            Source::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Source {
    pub fn is_zero(&self) -> bool {
        matches!(self, Source::Zero) || matches!(self, Source::Constant(v) if *v == 0.0)
    }

    /// Values at the cell centers of an `nx × ny` grid with lower-left corner
    /// `origin`.
    pub fn sample(&self, origin: (f64, f64), nx: usize, ny: usize, h: f64) -> Vec<f64> {
        match self {
            Source::Zero => vec![0.0; nx * ny],
            Source::Constant(v) => vec![*v; nx * ny],
            Source::Function(f) => (0..nx * ny)
                .map(|i| {
                    let (a, b) = (i % nx, i / nx);
                    f(
                        origin.0 + (a as f64 + 0.5) * h,
                        origin.1 + (b as f64 + 0.5) * h,
                    )
                })
                .collect(),
        }
    }

    pub fn sample_subdomain(&self, topology: &SubdomainTopology) -> Vec<f64> {
        self.sample(topology.origin, topology.cells_x, topology.cells_y, topology.h)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ProblemSpec {
    pub eta: f64,
    pub source: Source,
}

impl ProblemSpec {
    pub fn new(eta: f64, source: Source) -> Self {
        ProblemSpec { eta, source }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::parameter("eta", format!("eta must be >= 0, got {}", self.eta)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryKind {
    Dirichlet,
    Robin(f64),
}

/// Boundary data on one edge, one value per face.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Dirichlet(Vec<f64>),
    Robin { coeff: f64, data: Vec<f64> },
}

impl BoundaryCondition {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::Dirichlet(_) => BoundaryKind::Dirichlet,
            BoundaryCondition::Robin { coeff, .. } => BoundaryKind::Robin(*coeff),
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            BoundaryCondition::Dirichlet(v) => v,
            BoundaryCondition::Robin { data, .. } => data,
        }
    }

    pub fn homogeneous(kind: BoundaryKind, faces: usize) -> Self {
        match kind {
            BoundaryKind::Dirichlet => BoundaryCondition::Dirichlet(vec![0.0; faces]),
            BoundaryKind::Robin(coeff) => BoundaryCondition::Robin {
                coeff,
                data: vec![0.0; faces],
            },
        }
    }
}

/// Cell values of one grid, `index = a + b·nx`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl CellField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        CellField {
            nx,
            ny,
            values: vec![0.0; nx * ny],
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a + b * self.nx]
    }

    pub fn inf_norm(&self) -> f64 {
        inf_norm(&self.values)
    }

    /// Diverged: non-finite or above [`DIVERGENCE_THRESHOLD`].
    pub fn is_diverged(&self) -> bool {
        self.values
            .iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_THRESHOLD)
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &CellField) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += alpha * o;
        }
    }

    pub fn face_count(&self, edge: Edge) -> usize {
        if edge.is_vertical() {
            self.ny
        } else {
            self.nx
        }
    }

    /// Value of the cell adjacent to face `k` of `edge`.
    pub fn boundary_value(&self, edge: Edge, k: usize) -> f64 {
        match edge {
            Edge::West => self.get(0, k),
            Edge::East => self.get(self.nx - 1, k),
            Edge::South => self.get(k, 0),
            Edge::North => self.get(k, self.ny - 1),
        }
    }
}

/// Face traces and outward fluxes `φ = ∂u/∂ν` along one edge.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FaceData {
    pub trace: Vec<f64>,
    pub flux: Vec<f64>,
}

impl FaceData {
    pub fn zeros(faces: usize) -> Self {
        FaceData {
            trace: vec![0.0; faces],
            flux: vec![0.0; faces],
        }
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &FaceData) {
        for (t, o) in self.trace.iter_mut().zip(&other.trace) {
            *t += alpha * o;
        }
        for (t, o) in self.flux.iter_mut().zip(&other.flux) {
            *t += alpha * o;
        }
    }
}

/// Which side of an interface evaluates a Robin combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// The side that owns the face data: `φ + c·u_f`.
    Owner,
    /// The neighbor, whose normal is reversed: `−φ + c·u_f`.
    Opposite,
}

pub fn robin_combine(fd: &FaceData, coeff: f64, side: Side) -> Vec<f64> {
    let sign = match side {
        Side::Owner => 1.0,
        Side::Opposite => -1.0,
    };
    fd.trace
        .iter()
        .zip(&fd.flux)
        .map(|(u, phi)| sign * phi + coeff * u)
        .collect()
}

/// Boundary contribution to the diagonal and the weight of the boundary
/// datum in the right-hand side, for a face of the given kind.
fn boundary_weights(kind: BoundaryKind, h: f64) -> (f64, f64) {
    match kind {
        BoundaryKind::Dirichlet => (2.0, 2.0),
        BoundaryKind::Robin(c) => {
            let w = 2.0 * h / (c * h + 2.0);
            (c * w, w)
        }
    }
}

fn assemble_grid(nx: usize, ny: usize, h: f64, eta: f64, kinds: &EdgeMap<BoundaryKind>) -> StencilMatrix {
    let mut diag = vec![eta * h * h; nx * ny];
    for b in 0..ny {
        for a in 0..nx {
            let d = &mut diag[a + b * nx];
            let neighbors = [a > 0, a + 1 < nx, b > 0, b + 1 < ny];
            for (edge, interior) in Edge::ALL.into_iter().zip(neighbors) {
                *d += if interior {
                    1.0
                } else {
                    boundary_weights(kinds[edge], h).0
                };
            }
        }
    }
    StencilMatrix { nx, ny, diag }
}

fn check_kinds(eta: f64, kinds: &EdgeMap<BoundaryKind>) -> Result<()> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::parameter("eta", format!("eta must be >= 0, got {eta}")));
    }
    for (edge, kind) in kinds.iter() {
        if let BoundaryKind::Robin(c) = kind {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::parameter(
                    "robin coefficient",
                    format!("must be > 0 on the {edge:?} edge, got {c}"),
                ));
            }
        }
    }
    Ok(())
}

/// Factorized local operator. The boundary kinds (and Robin coefficients) are
/// fixed; boundary values only enter the right-hand side.
#[derive(Clone, Debug)]
pub struct SubdomainOperator {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub eta: f64,
    pub kinds: EdgeMap<BoundaryKind>,
    solver: StencilSolver,
}

impl SubdomainOperator {
    pub fn matrix(&self) -> &StencilMatrix {
        &self.solver.matrix
    }

    /// `h² f + Σ boundary terms`.
    pub fn rhs(&self, f: &[f64], bc: &EdgeMap<BoundaryCondition>) -> Result<Vec<f64>> {
        let (nx, ny, h) = (self.nx, self.ny, self.h);
        if f.len() != nx * ny {
            return Err(Error::Mismatch(format!(
                "source has {} values, grid has {} cells",
                f.len(),
                nx * ny
            )));
        }
        let mut rhs: Vec<f64> = f.iter().map(|v| h * h * v).collect();
        for (edge, cond) in bc.iter() {
            if cond.kind() != self.kinds[edge] {
                return Err(Error::Mismatch(format!(
                    "{edge:?} edge: operator assembled for {:?}, data given for {:?}",
                    self.kinds[edge],
                    cond.kind()
                )));
            }
            let faces = if edge.is_vertical() { ny } else { nx };
            let values = cond.values();
            if values.len() != faces {
                return Err(Error::Mismatch(format!(
                    "{edge:?} edge has {faces} faces, got {} values",
                    values.len()
                )));
            }
            let w = boundary_weights(cond.kind(), h).1;
            for (k, v) in values.iter().enumerate() {
                let i = match edge {
                    Edge::West => k * nx,
                    Edge::East => nx - 1 + k * nx,
                    Edge::South => k,
                    Edge::North => k + (ny - 1) * nx,
                };
                rhs[i] += w * v;
            }
        }
        Ok(rhs)
    }
}

pub fn assemble_operator(
    eta: f64,
    topology: &SubdomainTopology,
    kinds: EdgeMap<BoundaryKind>,
) -> Result<SubdomainOperator> {
    assemble_grid_operator(eta, topology.cells_x, topology.cells_y, topology.h, kinds)
}

pub fn assemble_grid_operator(
    eta: f64,
    nx: usize,
    ny: usize,
    h: f64,
    kinds: EdgeMap<BoundaryKind>,
) -> Result<SubdomainOperator> {
    check_kinds(eta, &kinds)?;
    if nx == 0 || ny == 0 || !(h > 0.0) {
        return Err(Error::Decomposition(format!("empty grid {nx}x{ny}, h = {h}")));
    }
    let matrix = assemble_grid(nx, ny, h, eta, &kinds);
    Ok(SubdomainOperator {
        nx,
        ny,
        h,
        eta,
        kinds,
        solver: StencilSolver::new(matrix)?,
    })
}

pub fn solve_subdomain(
    op: &SubdomainOperator,
    f: &[f64],
    bc: &EdgeMap<BoundaryCondition>,
) -> Result<CellField> {
    let rhs = op.rhs(f, bc)?;
    let values = op.solver.solve(&rhs)?;
    Ok(CellField {
        nx: op.nx,
        ny: op.ny,
        values,
    })
}

/// Face values and outward fluxes of a solved field on one edge.
pub fn extract_face_data(
    field: &CellField,
    h: f64,
    edge: Edge,
    bc: &BoundaryCondition,
) -> Result<FaceData> {
    let faces = field.face_count(edge);
    let values = bc.values();
    if values.len() != faces {
        return Err(Error::Mismatch(format!(
            "{edge:?} edge has {faces} faces, boundary data has {}",
            values.len()
        )));
    }
    let two_h = 2.0 / h;
    let mut fd = FaceData::zeros(faces);
    for (k, v) in values.iter().enumerate() {
        let uc = field.boundary_value(edge, k);
        let uf = match bc.kind() {
            BoundaryKind::Dirichlet => *v,
            BoundaryKind::Robin(c) => (v + two_h * uc) / (c + two_h),
        };
        fd.trace[k] = uf;
        fd.flux[k] = two_h * (uf - uc);
    }
    Ok(fd)
}

pub fn extract_all_faces(
    field: &CellField,
    h: f64,
    bc: &EdgeMap<BoundaryCondition>,
) -> Result<EdgeMap<FaceData>> {
    let mut out = EdgeMap::<FaceData>::default();
    for (edge, cond) in bc.iter() {
        out[edge] = extract_face_data(field, h, edge, cond)?;
    }
    Ok(out)
}

/// Global solve with homogeneous Dirichlet data on `∂Ω`.
pub fn solve_monodomain(problem: &ProblemSpec, spec: &DecompositionSpec) -> Result<CellField> {
    problem.validate()?;
    let h = spec.h()?;
    let (nx, ny) = (spec.global_cells_x(), spec.global_cells_y());
    let op = assemble_grid_operator(
        problem.eta,
        nx,
        ny,
        h,
        EdgeMap([BoundaryKind::Dirichlet; 4]),
    )?;
    let f = problem.source.sample((0.0, 0.0), nx, ny, h);
    let bc = EdgeMap::from_fn(|e| {
        BoundaryCondition::Dirichlet(vec![0.0; if e.is_vertical() { ny } else { nx }])
    });
    solve_subdomain(&op, &f, &bc)
}

/// Cells of a global field that belong to one subdomain.
pub fn restrict(global: &CellField, topology: &SubdomainTopology) -> CellField {
    let (ox, oy) = (
        topology.id.ix * topology.cells_x,
        topology.id.iy * topology.cells_y,
    );
    let mut out = CellField::zeros(topology.cells_x, topology.cells_y);
    for b in 0..topology.cells_y {
        for a in 0..topology.cells_x {
            out.values[a + b * topology.cells_x] = global.get(ox + a, oy + b);
        }
    }
    out
}

/// Face data that a global field induces on the edges of one subdomain:
/// interface traces are the average of the two adjacent cells, so the flux is
/// the monodomain two-point flux; exterior traces are zero.
pub fn global_face_data(
    global: &CellField,
    decomposition: &Decomposition,
    sub: usize,
) -> EdgeMap<FaceData> {
    let topo = &decomposition.subdomains[sub];
    let h = decomposition.h;
    let (ox, oy) = (topo.id.ix * topo.cells_x, topo.id.iy * topo.cells_y);
    EdgeMap::from_fn(|edge| {
        let faces = topo.face_count(edge);
        let mut fd = FaceData::zeros(faces);
        for k in 0..faces {
            let (a, b) = topo.boundary_cell(edge, k);
            let (ga, gb) = (ox + a, oy + b);
            let uc = global.get(ga, gb);
            let outside = match edge {
                Edge::West => ga.checked_sub(1).map(|x| (x, gb)),
                Edge::East => (ga + 1 < global.nx).then_some((ga + 1, gb)),
                Edge::South => gb.checked_sub(1).map(|y| (ga, y)),
                Edge::North => (gb + 1 < global.ny).then_some((ga, gb + 1)),
            };
            let uf = match outside {
                Some((x, y)) if topo.edges[edge].is_interface() => 0.5 * (uc + global.get(x, y)),
                _ => 0.0,
            };
            fd.trace[k] = uf;
            fd.flux[k] = 2.0 * (uf - uc) / h;
        }
        fd
    })
}
