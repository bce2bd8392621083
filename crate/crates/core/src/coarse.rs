//! Discontinuous coarse space and the Robin jump least-squares corrector.
//!
//! Every interface edge of every subdomain carries two linear trace profiles.
//! A basis function is the discrete solution of `η U − ΔU = 0` in its owner
//! with one profile as Dirichlet data on one edge and zero on the other
//! edges; it vanishes outside the owner. Since both sides of an interface
//! have their own profiles, the space contains functions that jump across
//! interfaces.
//!
//! The corrector minimizes
//!
//! ```text
//! J_q(c) = Σ_(i,j) Σ_faces h · ( (φ_i + q u_i) − (−φ_j + q u_j) )²
//! ```
//!
//! over the coefficients `c`, where the sum runs over ordered pairs of
//! neighbors and `(u, φ)` are the face traces and outward fluxes of
//! `u^{n+1/2} + Σ c_b U_b`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fvcore::{
    assemble_operator, extract_all_faces, robin_combine, solve_subdomain, BoundaryCondition,
    BoundaryKind, CellField, FaceData, Side,
};
use crate::mesh::{face_centers, Decomposition, Edge, EdgeMap, JumpBlock};

/// Relative diagonal shift applied to the normal matrix before factorization.
pub const NORMAL_REGULARIZATION: f64 = 1e-12;

/// Required bound on `‖Mᵀ W (r₀ + M c)‖ / (1 + ‖Mᵀ W r₀‖)`.
pub const OPTIMALITY_RTOL: f64 = 1e-8;

/// Linear trace profile on an edge of length `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Profile {
    /// `1 − s/L`
    Start,
    /// `s/L`
    End,
}

impl Profile {
    pub const BOTH: [Profile; 2] = [Profile::Start, Profile::End];

    pub fn eval(self, s: f64, length: f64) -> f64 {
        match self {
            Profile::Start => 1.0 - s / length,
            Profile::End => s / length,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoarseBasisFunction {
    pub owner: usize,
    pub edge: Edge,
    pub profile: Profile,
    pub field: CellField,
    /// Face data on every edge of the owner.
    pub faces: EdgeMap<FaceData>,
}

#[derive(Clone, Debug)]
pub struct CoarseSpace {
    /// Ordered by owner, then edge, then profile.
    pub basis: Vec<CoarseBasisFunction>,
    owner_ranges: Vec<Range<usize>>,
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Indices of the basis functions supported in subdomain `i`.
    pub fn owned_by(&self, i: usize) -> Range<usize> {
        self.owner_ranges[i].clone()
    }
}

pub fn build_coarse_space(eta: f64, decomposition: &Decomposition) -> Result<CoarseSpace> {
    let mut specs = Vec::new();
    let mut owner_ranges = Vec::with_capacity(decomposition.subdomain_count());
    for sub in &decomposition.subdomains {
        let start = specs.len();
        for edge in sub.interface_edges() {
            for profile in Profile::BOTH {
                specs.push((sub.index, edge, profile));
            }
        }
        owner_ranges.push(start..specs.len());
    }

    // uniform decompositions: one all-Dirichlet operator serves every owner
    let operator = match decomposition.subdomains.first() {
        Some(sub) => assemble_operator(eta, sub, EdgeMap([BoundaryKind::Dirichlet; 4]))?,
        None => return Err(Error::Decomposition("no subdomains".into())),
    };

    let basis = specs
        .into_par_iter()
        .map(|(owner, edge, profile)| {
            let sub = &decomposition.subdomains[owner];
            let length = sub.edge_length(edge);
            let bc = EdgeMap::from_fn(|e| {
                let values = if e == edge {
                    face_centers(sub, e)
                        .iter()
                        .map(|fc| profile.eval(fc.s, length))
                        .collect()
                } else {
                    vec![0.0; sub.face_count(e)]
                };
                BoundaryCondition::Dirichlet(values)
            });
            let field = solve_subdomain(&operator, &vec![0.0; sub.cell_count()], &bc)?;
            let faces = extract_all_faces(&field, decomposition.h, &bc)?;
            Ok(CoarseBasisFunction {
                owner,
                edge,
                profile,
                field,
                faces,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CoarseSpace {
        basis,
        owner_ranges,
    })
}

/// Oriented Robin jumps of a piecewise state, one row per face of each
/// ordered pair `(this, other)`: `(φ_this + q u_this) − (−φ_other + q u_other)`.
pub fn jump_residual(decomposition: &Decomposition, faces: &[EdgeMap<FaceData>], q: f64) -> Vec<f64> {
    let mut r = vec![0.0; decomposition.jump_rows()];
    for block in decomposition.jump_blocks() {
        let this = robin_combine(&faces[block.this][block.this_edge], q, Side::Owner);
        let other = robin_combine(&faces[block.other][block.other_edge], q, Side::Opposite);
        for (k, (a, b)) in this.iter().zip(&other).enumerate() {
            r[block.offset + k] = a - b;
        }
    }
    r
}

/// `Σ h·r²`, the midpoint quadrature of the squared L² norm.
pub fn weighted_norm_sq(r: &[f64], h: f64) -> f64 {
    h * r.iter().map(|v| v * v).sum::<f64>()
}

/// Column of the jump matrix restricted to one row block.
#[derive(Clone, Debug)]
struct BlockEntry {
    column: usize,
    values: Vec<f64>,
}

/// Weighted least-squares system `min_c ‖r₀ + M c‖²_W`, `W = h·I`, stored by
/// row blocks (each column touches only the blocks of its owner's interfaces),
/// together with the factorized normal matrix.
#[derive(Clone, Debug)]
pub struct JumpSystem {
    pub q: f64,
    pub h: f64,
    dim: usize,
    rows: usize,
    blocks: Vec<JumpBlock>,
    entries: Vec<Vec<BlockEntry>>,
    normal: DMatrix<f64>,
    shift: f64,
    factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

pub fn assemble_jump_system(
    cs: &CoarseSpace,
    decomposition: &Decomposition,
    q: f64,
) -> Result<JumpSystem> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::parameter("q", format!("q must be > 0, got {q}")));
    }
    let blocks = decomposition.jump_blocks();
    let entries = blocks
        .iter()
        .map(|block| {
            let mut row = Vec::new();
            for b in cs.owned_by(block.this) {
                let values = robin_combine(&cs.basis[b].faces[block.this_edge], q, Side::Owner);
                row.push(BlockEntry { column: b, values });
            }
            for b in cs.owned_by(block.other) {
                let values = robin_combine(&cs.basis[b].faces[block.other_edge], q, Side::Opposite)
                    .into_iter()
                    .map(|v| -v)
                    .collect();
                row.push(BlockEntry { column: b, values });
            }
            row
        })
        .collect();
    JumpSystem::from_blocks(q, decomposition.h, cs.dim(), blocks, entries)
}

impl JumpSystem {
    fn from_blocks(
        q: f64,
        h: f64,
        dim: usize,
        blocks: Vec<JumpBlock>,
        entries: Vec<Vec<BlockEntry>>,
    ) -> Result<Self> {
        let rows = blocks.iter().map(|b| b.len).sum();
        let mut normal = DMatrix::<f64>::zeros(dim, dim);
        for row in &entries {
            for a in row {
                for b in row {
                    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
                    normal[(a.column, b.column)] += h * dot;
                }
            }
        }
        let max_diag = (0..dim).map(|i| normal[(i, i)]).fold(0.0_f64, f64::max);
        let shift = NORMAL_REGULARIZATION * max_diag.max(f64::MIN_POSITIVE);
        let mut shifted = normal.clone();
        for i in 0..dim {
            shifted[(i, i)] += shift;
        }
        let factor = nalgebra::Cholesky::new(shifted).ok_or_else(|| {
            Error::Solver("jump normal matrix is not positive definite after regularization".into())
        })?;
        Ok(JumpSystem {
            q,
            h,
            dim,
            rows,
            blocks,
            entries,
            normal,
            shift,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `Mᵀ W M` before regularization.
    pub fn normal_matrix(&self) -> &DMatrix<f64> {
        &self.normal
    }

    /// `M c`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (block, row) in self.blocks.iter().zip(&self.entries) {
            let dst = &mut out[block.offset..block.offset + block.len];
            for e in row {
                let cb = c[e.column];
                for (d, v) in dst.iter_mut().zip(&e.values) {
                    *d += cb * v;
                }
            }
        }
        out
    }

    /// `Mᵀ W r`.
    pub fn apply_transpose_weighted(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (block, row) in self.blocks.iter().zip(&self.entries) {
            let src = &r[block.offset..block.offset + block.len];
            for e in row {
                out[e.column] += self.h * e.values.iter().zip(src).map(|(v, s)| v * s).sum::<f64>();
            }
        }
        out
    }

    /// Dense copy of `M`, for diagnostics and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.dim);
        for (block, row) in self.blocks.iter().zip(&self.entries) {
            for e in row {
                for (k, v) in e.values.iter().enumerate() {
                    m[(block.offset + k, e.column)] += v;
                }
            }
        }
        m
    }

    /// The same system restricted to a subset of the columns, renumbered in
    /// the given order.
    pub fn restrict_columns(&self, keep: &[usize]) -> Result<JumpSystem> {
        let entries = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .filter_map(|e| {
                        keep.iter().position(|&k| k == e.column).map(|column| BlockEntry {
                            column,
                            values: e.values.clone(),
                        })
                    })
                    .collect()
            })
            .collect();
        JumpSystem::from_blocks(self.q, self.h, keep.len(), self.blocks.clone(), entries)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RjminSolution {
    pub coefficients: Vec<f64>,
    /// `‖r₀‖²_W`
    pub initial: f64,
    /// `‖r₀ + M c‖²_W`
    pub minimized: f64,
    /// `‖Mᵀ W (r₀ + M c)‖ / (1 + ‖Mᵀ W r₀‖)`
    pub optimality: f64,
}

pub fn solve_rjmin(js: &JumpSystem, r0: &[f64]) -> Result<RjminSolution> {
    if r0.len() != js.rows {
        return Err(Error::Mismatch(format!(
            "jump residual has {} rows, system has {}",
            r0.len(),
            js.rows
        )));
    }
    let g0 = js.apply_transpose_weighted(r0);
    let scale = 1.0 + norm2(&g0);
    let mut c = js.factor.solve(&(-DVector::from_vec(g0)));

    let mut optimality = f64::INFINITY;
    let mut residual = Vec::new();
    for attempt in 0..2 {
        residual = js.apply(c.as_slice());
        for (r, base) in residual.iter_mut().zip(r0) {
            *r += base;
        }
        let g = js.apply_transpose_weighted(&residual);
        optimality = norm2(&g) / scale;
        if optimality <= OPTIMALITY_RTOL || attempt == 1 {
            break;
        }
        c -= js.factor.solve(&DVector::from_vec(g));
    }
    if !(optimality <= OPTIMALITY_RTOL) {
        return Err(Error::Solver(format!(
            "coarse least-squares optimality residual {optimality:e} above {OPTIMALITY_RTOL:e} (shift {:e})",
            js.shift
        )));
    }
    Ok(RjminSolution {
        coefficients: c.as_slice().to_vec(),
        initial: weighted_norm_sq(r0, js.h),
        minimized: weighted_norm_sq(&residual, js.h),
        optimality,
    })
}

/// Adds `Σ c_b U_b` to the cell fields and the face data of every subdomain.
pub fn apply_correction(
    fields: &mut [CellField],
    faces: &mut [EdgeMap<FaceData>],
    cs: &CoarseSpace,
    c: &[f64],
) {
    fields
        .par_iter_mut()
        .zip(faces.par_iter_mut())
        .enumerate()
        .for_each(|(i, (field, fd))| {
            for b in cs.owned_by(i) {
                let basis = &cs.basis[b];
                field.add_scaled(c[b], &basis.field);
                for edge in Edge::ALL {
                    fd[edge].add_scaled(c[b], &basis.faces[edge]);
                }
            }
        });
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
