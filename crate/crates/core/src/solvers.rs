//! Sparse linear algebra: CSR storage, Krylov solvers (CG, BiCGStab), a
//! banded LU fallback for tough saddle-point systems, and a fast
//! tensor-product solver for constant-coefficient Neumann operators used
//! as a preconditioner.

use crate::error::CoreError;

/// Default relative residual tolerance for iterative solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default iteration cap as a multiple of the unknown count.
pub const DEFAULT_MAX_ITER_FACTOR: usize = 20;

/// Compressed-sparse-row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

/// Triplet accumulator; duplicate entries are summed on build.
pub struct CsrBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.n && col < self.n);
        if val != 0.0 {
            self.triplets.push((row, col, val));
        }
    }

    pub fn build(mut self) -> Csr {
        self.triplets
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(self.triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            n_rows: self.n,
            n_cols: self.n,
            row_ptr,
            col_idx,
            vals,
        }
    }
}

impl Csr {
    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = s;
        }
        y
    }

    /// Diagonal entries (zero where structurally absent).
    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] += self.vals[k];
                }
            }
        }
        d
    }

    /// Dense copy (testing only; quadratic memory).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n_cols]; self.n_rows];
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[r][self.col_idx[k]] += self.vals[k];
            }
        }
        m
    }
}

/// A square sparse system with solver settings.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: Csr,
    pub rhs: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// For singular Neumann systems: project the constant nullspace out of
    /// the right-hand side and pin the solution mean to zero.
    pub pin_mean: bool,
}

impl SparseSystem {
    pub fn new(matrix: Csr, rhs: Vec<f64>) -> Result<Self, CoreError> {
        if matrix.n_rows != matrix.n_cols || matrix.n_rows != rhs.len() {
            return Err(CoreError::InvalidParameter(format!(
                "sparse system must be square and consistent: {}x{} matrix, rhs length {}",
                matrix.n_rows,
                matrix.n_cols,
                rhs.len()
            )));
        }
        let n = rhs.len();
        Ok(Self {
            matrix,
            rhs,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER_FACTOR * n,
            pin_mean: false,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_pin_mean(mut self, pin: bool) -> Self {
        self.pin_mean = pin;
        self
    }
}

/// Iteration count and final relative residual of a solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= m;
    }
}

/// Conjugate gradients with Jacobi (diagonal) preconditioning for symmetric
/// positive (semi)definite systems. With `pin_mean` the constant nullspace
/// of the Neumann Laplacian is projected out each iteration.
pub fn solve_spd(sys: &SparseSystem) -> Result<(Vec<f64>, SolveStats), CoreError> {
    let a = &sys.matrix;
    let n = a.n_rows;
    let mut b = sys.rhs.clone();
    if sys.pin_mean {
        project_mean(&mut b);
    }
    let bnorm = norm(&b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let diag = a.diag();
    let minv: Vec<f64> = diag
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b;
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
    if sys.pin_mean {
        project_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / bnorm;
    for it in 0..sys.max_iter {
        if res <= sys.tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let mut znew: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
        if sys.pin_mean {
            project_mean(&mut znew);
            project_mean(&mut x);
        }
        let rznew = dot(&r, &znew);
        let beta = rznew / rz;
        for k in 0..n {
            p[k] = znew[k] + beta * p[k];
        }
        z = znew;
        rz = rznew;
        let _ = &z;
        res = norm(&r) / bnorm;
    }
    if res <= sys.tol {
        return Ok((
            x,
            SolveStats {
                iterations: sys.max_iter,
                residual: res,
            },
        ));
    }
    Err(CoreError::LinearSolve {
        solver: "cg",
        residual: res,
        iterations: sys.max_iter,
        tolerance: sys.tol,
    })
}

/// BiCGStab on a matrix-free operator with a supplied preconditioner
/// application `minv`. Returns the solution or a diagnostic error.
pub fn bicgstab_op(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    minv: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), CoreError> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    let mut best = x.clone();
    let mut best_res = res;
    for it in 0..max_iter {
        if res <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        let ph = minv(&p);
        v = apply(&ph);
        let r0v = dot(&r0, &v);
        if r0v.abs() < 1e-300 {
            break;
        }
        alpha = rho_new / r0v;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm(&s) / bnorm <= tol {
            for k in 0..n {
                x[k] += alpha * ph[k];
            }
            let res = norm(&s) / bnorm;
            return Ok((
                x,
                SolveStats {
                    iterations: it + 1,
                    residual: res,
                },
            ));
        }
        let sh = minv(&s);
        let t = apply(&sh);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for k in 0..n {
            x[k] += alpha * ph[k] + omega * sh[k];
            r[k] = s[k] - omega * t[k];
        }
        rho = rho_new;
        res = norm(&r) / bnorm;
        if res < best_res {
            best_res = res;
            best = x.clone();
        }
        if omega.abs() < 1e-300 {
            break;
        }
    }
    // Recompute the true residual of the best iterate before reporting.
    let ax = apply(&best);
    let true_res = best
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let d = b[k] - ax[k];
            d * d
        })
        .sum::<f64>()
        .sqrt()
        / bnorm;
    if true_res <= tol {
        return Ok((
            best,
            SolveStats {
                iterations: max_iter,
                residual: true_res,
            },
        ));
    }
    Err(CoreError::LinearSolve {
        solver: "bicgstab",
        residual: true_res,
        iterations: max_iter,
        tolerance: tol,
    })
}

/// BiCGStab with Jacobi preconditioning on a CSR system. Zero diagonal
/// entries (saddle-point pressure rows) fall back to the supplied
/// `diag_fallback` scale.
pub fn solve_general(
    sys: &SparseSystem,
    diag_fallback: f64,
) -> Result<(Vec<f64>, SolveStats), CoreError> {
    let diag = sys.matrix.diag();
    let minv: Vec<f64> = diag
        .iter()
        .map(|&d| {
            if d.abs() > 1e-14 {
                1.0 / d.abs()
            } else {
                1.0 / diag_fallback.abs().max(1e-14)
            }
        })
        .collect();
    let a = &sys.matrix;
    bicgstab_op(
        &|x| a.matvec(x),
        &|r| r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect(),
        &sys.rhs,
        None,
        sys.tol,
        sys.max_iter,
    )
}

/// Banded LU factorization with partial pivoting (LAPACK `gbtrf` layout).
/// Used as a robust direct fallback for saddle-point systems whose
/// unknowns have been ordered for small bandwidth.
pub struct BandedLu {
    n: usize,
    bl: usize,
    bu: usize,
    /// Column-major band storage with `2*bl + bu + 1` rows per column.
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor a CSR matrix. The bandwidths are discovered from the sparsity
    /// pattern; the upper band is widened by `bl` for pivoting fill-in.
    pub fn factor(a: &Csr) -> Result<Self, CoreError> {
        let n = a.n_rows;
        let mut bl = 0usize;
        let mut bu = 0usize;
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                if c < r {
                    bl = bl.max(r - c);
                } else {
                    bu = bu.max(c - r);
                }
            }
        }
        let ldab = 2 * bl + bu + 1;
        let mut ab = vec![0.0; ldab * n];
        // Entry (i, j) lives at ab[j * ldab + (bl + bu + i - j)].
        let off = (bl + bu) as i64;
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                ab[c * ldab + (off + r as i64 - c as i64) as usize] += a.vals[k];
            }
        }
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            // Pivot within rows k..=min(k+bl, n-1).
            let imax = (k + bl).min(n - 1);
            let mut piv = k;
            let mut pmax = 0.0;
            for i in k..=imax {
                let v = ab[k * ldab + (off + i as i64 - k as i64) as usize].abs();
                if v > pmax {
                    pmax = v;
                    piv = i;
                }
            }
            if pmax == 0.0 {
                return Err(CoreError::LinearSolve {
                    solver: "banded-lu",
                    residual: f64::INFINITY,
                    iterations: k,
                    tolerance: 0.0,
                });
            }
            ipiv[k] = piv;
            let jmax = (k + bl + bu).min(n - 1);
            if piv != k {
                for j in k..=jmax {
                    let ik = j * ldab + (off + k as i64 - j as i64) as usize;
                    let ip = j * ldab + (off + piv as i64 - j as i64) as usize;
                    ab.swap(ik, ip);
                }
            }
            let pivval = ab[k * ldab + (off) as usize];
            for i in (k + 1)..=imax {
                let li = k * ldab + (off + i as i64 - k as i64) as usize;
                let l = ab[li] / pivval;
                ab[li] = l;
                if l != 0.0 {
                    for j in (k + 1)..=jmax {
                        let akj = ab[j * ldab + (off + k as i64 - j as i64) as usize];
                        if akj != 0.0 {
                            ab[j * ldab + (off + i as i64 - j as i64) as usize] -= l * akj;
                        }
                    }
                }
            }
        }
        Ok(Self { n, bl, bu, ab, ipiv })
    }

    /// Solve `A x = b` using the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ldab = 2 * self.bl + self.bu + 1;
        let off = (self.bl + self.bu) as i64;
        let mut x = b.to_vec();
        // Forward: apply pivots and L.
        for k in 0..n {
            let piv = self.ipiv[k];
            if piv != k {
                x.swap(k, piv);
            }
            let imax = (k + self.bl).min(n - 1);
            for i in (k + 1)..=imax {
                let l = self.ab[k * ldab + (off + i as i64 - k as i64) as usize];
                x[i] -= l * x[k];
            }
        }
        // Backward: solve U.
        for k in (0..n).rev() {
            let jmax = (k + self.bl + self.bu).min(n - 1);
            let mut s = x[k];
            for j in (k + 1)..=jmax {
                s -= self.ab[j * ldab + (off + k as i64 - j as i64) as usize] * x[j];
            }
            x[k] = s / self.ab[k * ldab + off as usize];
        }
        x
    }
}

/// Fast solver for `(a I + b A + A^2) x = r` where `A` is the 5-point
/// Neumann `-laplace` on a uniform `nx x ny` grid, diagonalized by the
/// tensor cosine basis. Serves as an exact constant-coefficient solver and
/// as a preconditioner for variable-coefficient fourth-order systems.
pub struct NeumannSpectral {
    nx: usize,
    ny: usize,
    lam_x: Vec<f64>,
    lam_y: Vec<f64>,
    /// Row-orthogonal basis, `bx[k * nx + i] = cos(pi k (i + 1/2) / nx)`.
    bx: Vec<f64>,
    by: Vec<f64>,
    norm_x: Vec<f64>,
    norm_y: Vec<f64>,
}

impl NeumannSpectral {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        let lam = |n: usize, h: f64| -> Vec<f64> {
            (0..n)
                .map(|k| {
                    let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                    4.0 * s * s / (h * h)
                })
                .collect()
        };
        let basis = |n: usize| -> Vec<f64> {
            let mut b = vec![0.0; n * n];
            for k in 0..n {
                for i in 0..n {
                    b[k * n + i] =
                        (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
                }
            }
            b
        };
        let norms = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| if k == 0 { n as f64 } else { n as f64 / 2.0 })
                .collect()
        };
        Self {
            nx,
            ny,
            lam_x: lam(nx, hx),
            lam_y: lam(ny, hy),
            bx: basis(nx),
            by: basis(ny),
            norm_x: norms(nx),
            norm_y: norms(ny),
        }
    }

    /// Apply `(a I + b A + A^2)^{-1}` to a cell-layout vector.
    /// All polynomial eigenvalues must be nonzero (a > 0, or b, a not both 0
    /// on the constant mode).
    pub fn solve_poly(&self, a: f64, b: f64, rhs: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        // Forward transform: project onto cos_k(x) for each row.
        let mut c1 = vec![0.0; nx * ny]; // c1[j * nx + k]
        for j in 0..ny {
            for k in 0..nx {
                let mut s = 0.0;
                for i in 0..nx {
                    s += self.bx[k * nx + i] * rhs[j * nx + i];
                }
                c1[j * nx + k] = s;
            }
        }
        // Project onto cos_l(y) for each x-mode; scale and solve.
        let mut c2 = vec![0.0; nx * ny]; // c2[l * nx + k]
        for l in 0..ny {
            for k in 0..nx {
                let mut s = 0.0;
                for j in 0..ny {
                    s += self.by[l * ny + j] * c1[j * nx + k];
                }
                let lam = self.lam_x[k] + self.lam_y[l];
                let denom = (a + b * lam + lam * lam) * self.norm_x[k] * self.norm_y[l];
                c2[l * nx + k] = s / denom;
            }
        }
        // Inverse transform (synthesis).
        let mut d1 = vec![0.0; nx * ny]; // d1[j * nx + k]
        for j in 0..ny {
            for k in 0..nx {
                let mut s = 0.0;
                for l in 0..ny {
                    s += self.by[l * ny + j] * c2[l * nx + k];
                }
                d1[j * nx + k] = s;
            }
        }
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let mut s = 0.0;
                for k in 0..nx {
                    s += self.bx[k * nx + i] * d1[j * nx + k];
                }
                out[j * nx + i] = s;
            }
        }
        out
    }
}
