//! Five-point cell stencils and a banded Cholesky factorization for them.

use crate::error::{Error, Result};

/// Symmetric matrix on an `nx × ny` cell grid (`index = a + b·nx`) whose
/// off-diagonal entries couple each cell to its four neighbors with weight −1.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilMatrix {
    pub nx: usize,
    pub ny: usize,
    pub diag: Vec<f64>,
}

impl StencilMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn inf_norm(&self) -> f64 {
        self.diag.iter().fold(0.0_f64, |m, d| m.max(d.abs() + 4.0))
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for b in 0..ny {
            for a in 0..nx {
                let i = a + b * nx;
                let mut v = self.diag[i] * x[i];
                if a > 0 {
                    v -= x[i - 1];
                }
                if a + 1 < nx {
                    v -= x[i + 1];
                }
                if b > 0 {
                    v -= x[i - nx];
                }
                if b + 1 < ny {
                    v -= x[i + nx];
                }
                y[i] = v;
            }
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            let (a, b) = (i % self.nx, i / self.nx);
            if a + 1 < self.nx {
                m[(i, i + 1)] = -1.0;
                m[(i + 1, i)] = -1.0;
            }
            if b + 1 < self.ny {
                m[(i, i + self.nx)] = -1.0;
                m[(i + self.nx, i)] = -1.0;
            }
        }
        m
    }

    /// Banded Cholesky factorization with bandwidth `nx`.
    pub fn factorize(&self) -> Result<BandedCholesky> {
        let n = self.len();
        let bw = self.nx.min(n.saturating_sub(1));
        let mut band = BandedCholesky::zeroed(n, bw);
        for i in 0..n {
            band.set(i, i, self.diag[i]);
            let a = i % self.nx;
            if a > 0 {
                band.set(i, i - 1, -1.0);
            }
            if i >= self.nx {
                band.set(i, i - self.nx, -1.0);
            }
        }
        band.factorize_in_place()?;
        Ok(band)
    }
}

/// Lower-triangular band factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i - bw ..= i]`, left-padded with zeros.
    data: Vec<f64>,
}

impl BandedCholesky {
    fn zeroed(n: usize, bw: usize) -> Self {
        BandedCholesky {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    fn factorize_in_place(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = self.data[self.slot(i, j)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in jlo..j {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                if i == j {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(Error::Solver(format!(
                            "Cholesky pivot {i} is not positive ({s:e})"
                        )));
                    }
                    self.data[ri + i] = s.sqrt();
                } else {
                    self.data[ri + j] = s / self.data[rj + j];
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let ri = i * w + bw - i;
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[ri + k] * x[k];
            }
            x[i] = s / self.data[ri + i];
        }
        for i in (0..n).rev() {
            let ri = i * w + bw - i;
            x[i] /= self.data[ri + i];
            let xi = x[i];
            for k in i.saturating_sub(bw)..i {
                x[k] -= self.data[ri + k] * xi;
            }
        }
    }
}

/// Factorized stencil operator with a residual check after every solve.
#[derive(Clone, Debug)]
pub struct StencilSolver {
    pub matrix: StencilMatrix,
    factor: BandedCholesky,
}

/// Relative residual required from every solve.
pub const SOLVE_RTOL: f64 = 1e-12;

impl StencilSolver {
    pub fn new(matrix: StencilMatrix) -> Result<Self> {
        let factor = matrix.factorize()?;
        Ok(StencilSolver { matrix, factor })
    }

    /// Solves `A x = rhs`, refining once if the relative residual exceeds
    /// [`SOLVE_RTOL`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.len();
        if rhs.len() != n {
            return Err(Error::Mismatch(format!(
                "right-hand side has {} entries, operator has {n}",
                rhs.len()
            )));
        }
        let mut x = rhs.to_vec();
        self.factor.solve_in_place(&mut x);
        let mut r = vec![0.0; n];
        for attempt in 0..2 {
            self.matrix.apply(&x, &mut r);
            for (ri, bi) in r.iter_mut().zip(rhs) {
                *ri = bi - *ri;
            }
            let res = inf_norm(&r);
            // normwise backward error ‖b − Ax‖ / (‖A‖‖x‖ + ‖b‖)
            let scale = self.matrix.inf_norm() * inf_norm(&x) + inf_norm(rhs);
            if res <= SOLVE_RTOL * scale {
                return Ok(x);
            }
            if !res.is_finite() {
                break;
            }
            if attempt == 0 {
                self.factor.solve_in_place(&mut r);
                for (xi, di) in x.iter_mut().zip(&r) {
                    *xi += di;
                }
            }
        }
        Err(Error::Solver(format!(
            "relative residual above {SOLVE_RTOL:e} after refinement"
        )))
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
