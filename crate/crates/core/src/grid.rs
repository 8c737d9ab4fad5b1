//! Rectangular staggered (MAC) grid, field containers, and second-order
//! centered difference operators.
//!
//! Scalars (`phi`, `mu`, `sigma`, `p`) live at cell centers; vector fields
//! (`v`, lifted velocities) carry x-components on vertical faces and
//! y-components on horizontal faces. With this layout `div(grad(.))`
//! reproduces the 5-point Laplacian exactly, pressure checkerboard modes
//! are excluded, and discrete integration by parts holds to machine
//! precision with matching boundary handling.

use crate::error::CoreError;

/// Uniform rectangular grid of `nx * ny` cells covering `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2d {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid2d {
    /// Build a grid; requires at least 4 cells per direction and positive extents.
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, CoreError> {
        if nx < 4 || ny < 4 {
            return Err(CoreError::InvalidParameter(format!(
                "grid must have at least 4 cells per direction, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "grid extents must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Number of cells.
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell area `hx * hy`.
    pub fn cell_volume(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Domain area `lx * ly`.
    pub fn volume(&self) -> f64 {
        self.lx * self.ly
    }

    /// Boundary length `2 (lx + ly)`.
    pub fn boundary_length(&self) -> f64 {
        2.0 * (self.lx + self.ly)
    }

    /// Flat index of cell `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// x-coordinate of the center of cell column `i`.
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx()
    }

    /// y-coordinate of the center of cell row `j`.
    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy()
    }

    /// Number of x-face values (`(nx+1) * ny`).
    pub fn n_xfaces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    /// Number of y-face values (`nx * (ny+1)`).
    pub fn n_yfaces(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    /// Flat index of the vertical face at `(x = i hx, row j)`.
    #[inline]
    pub fn xf(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Flat index of the horizontal face at `(column i, y = j hy)`.
    #[inline]
    pub fn yf(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid2d,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2d) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: Grid2d, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.n_cells()],
        }
    }

    /// Sample `f(x, y)` at cell centers.
    pub fn from_fn(grid: Grid2d, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                data.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    /// Apply `f` pointwise, returning a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Domain integral (midpoint rule).
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Mean value over the domain.
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Discrete L2 norm `sqrt(sum v^2 * cell_volume)`.
    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_grid(&self, other: &Self) -> Result<(), CoreError> {
        if self.grid != other.grid {
            return Err(CoreError::InvalidParameter(
                "fields live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self, CoreError> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }
}

/// Staggered vector field: `u` on vertical faces, `w` on horizontal faces.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid2d,
    /// x-components, length `(nx+1) * ny`.
    pub u: Vec<f64>,
    /// y-components, length `nx * (ny+1)`.
    pub w: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid2d) -> Self {
        Self {
            grid,
            u: vec![0.0; grid.n_xfaces()],
            w: vec![0.0; grid.n_yfaces()],
        }
    }

    /// Sample component functions at their face locations.
    pub fn from_fns(
        grid: Grid2d,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut u = Vec::with_capacity(grid.n_xfaces());
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                u.push(fx(i as f64 * grid.hx(), grid.yc(j)));
            }
        }
        let mut w = Vec::with_capacity(grid.n_yfaces());
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                w.push(fy(grid.xc(i), j as f64 * grid.hy()));
            }
        }
        Self { grid, u, w }
    }

    /// Largest component magnitude over all faces.
    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.w)
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Discrete L2 norm treating each face value as a midpoint sample.
    pub fn norm_l2(&self) -> f64 {
        let vol = self.grid.cell_volume();
        let sx: f64 = self
            .u
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                // Boundary faces control half cells.
                let i = k % (self.grid.nx + 1);
                let wgt = if i == 0 || i == self.grid.nx { 0.5 } else { 1.0 };
                wgt * v * v
            })
            .sum();
        let sy: f64 = self
            .w
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let j = k / self.grid.nx;
                let wgt = if j == 0 || j == self.grid.ny { 0.5 } else { 1.0 };
                wgt * v * v
            })
            .sum();
        ((sx + sy) * vol).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.w).all(|v| v.is_finite())
    }

    /// `self + s * other` (same grid required).
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self, CoreError> {
        if self.grid != other.grid {
            return Err(CoreError::InvalidParameter(
                "vector fields live on different grids".into(),
            ));
        }
        Ok(Self {
            grid: self.grid,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + s * b).collect(),
            w: self.w.iter().zip(&other.w).map(|(a, b)| a + s * b).collect(),
        })
    }

    /// Discrete L2 inner product (same face weighting as [`VectorField::norm_l2`]).
    pub fn inner(&self, other: &Self) -> f64 {
        let vol = self.grid.cell_volume();
        let nx = self.grid.nx;
        let ny = self.grid.ny;
        let mut s = 0.0;
        for (k, (&a, &b)) in self.u.iter().zip(&other.u).enumerate() {
            let i = k % (nx + 1);
            let wgt = if i == 0 || i == nx { 0.5 } else { 1.0 };
            s += wgt * a * b;
        }
        for (k, (&a, &b)) in self.w.iter().zip(&other.w).enumerate() {
            let j = k / nx;
            let wgt = if j == 0 || j == ny { 0.5 } else { 1.0 };
            s += wgt * a * b;
        }
        s * vol
    }
}

/// Boundary condition for scalar operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBc {
    /// Homogeneous Neumann `d(phi)/dn = 0`.
    Neumann,
    /// Homogeneous Dirichlet `phi = 0` at the boundary.
    Dirichlet0,
    /// Robin influx `d(sigma)/dn = K (1 - sigma)` with permeability `K`.
    Robin(f64),
}

/// Centered gradient of a cell field onto faces. Boundary faces get zero
/// (homogeneous-Neumann convention); callers imposing other boundary data
/// overwrite them explicitly.
pub fn grad(phi: &ScalarField) -> VectorField {
    let g = phi.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut v = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            v.u[g.xf(i, j)] = (phi.at(i, j) - phi.at(i - 1, j)) / hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            v.w[g.yf(i, j)] = (phi.at(i, j) - phi.at(i, j - 1)) / hy;
        }
    }
    v
}

/// Centered divergence of a face field onto cells.
pub fn div(v: &VectorField) -> ScalarField {
    let g = v.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.data[g.idx(i, j)] = (v.u[g.xf(i + 1, j)] - v.u[g.xf(i, j)]) / hx
                + (v.w[g.yf(i, j + 1)] - v.w[g.yf(i, j)]) / hy;
        }
    }
    out
}

/// 5-point Laplacian with ghost-value boundary handling.
///
/// For `Robin(K)` the operator is affine (`L phi + const`); this function
/// applies the full affine action (the constant influx included), matching
/// the assembled system of [`laplacian_system`].
pub fn laplace(phi: &ScalarField, bc: ScalarBc) -> ScalarField {
    let g = phi.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let (hx2, hy2) = (hx * hx, hy * hy);
    let mut out = ScalarField::zeros(g);
    let ghost = |inner: f64, h: f64| -> f64 {
        match bc {
            ScalarBc::Neumann => inner,
            ScalarBc::Dirichlet0 => -inner,
            // (ghost - inner)/h = K (1 - (ghost+inner)/2)
            ScalarBc::Robin(k) => (inner * (2.0 - k * h) + 2.0 * k * h) / (2.0 + k * h),
        }
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = phi.at(i, j);
            let xl = if i > 0 { phi.at(i - 1, j) } else { ghost(c, hx) };
            let xr = if i + 1 < g.nx { phi.at(i + 1, j) } else { ghost(c, hx) };
            let yl = if j > 0 { phi.at(i, j - 1) } else { ghost(c, hy) };
            let yr = if j + 1 < g.ny { phi.at(i, j + 1) } else { ghost(c, hy) };
            out.data[g.idx(i, j)] =
                (xl - 2.0 * c + xr) / hx2 + (yl - 2.0 * c + yr) / hy2;
        }
    }
    out
}

/// Convective divergence `div(phi v)` with centered face averaging of `phi`.
/// Boundary-face values of `v` are used as given (zero for interior-only
/// velocity fields).
pub fn div_of_scalar_times_velocity(phi: &ScalarField, v: &VectorField) -> ScalarField {
    let g = phi.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = ScalarField::zeros(g);
    let phix = |i: usize, j: usize| -> f64 {
        // Value of phi at the vertical face (i, j); one-sided at the boundary.
        if i == 0 {
            phi.at(0, j)
        } else if i == g.nx {
            phi.at(g.nx - 1, j)
        } else {
            0.5 * (phi.at(i - 1, j) + phi.at(i, j))
        }
    };
    let phiy = |i: usize, j: usize| -> f64 {
        if j == 0 {
            phi.at(i, 0)
        } else if j == g.ny {
            phi.at(i, g.ny - 1)
        } else {
            0.5 * (phi.at(i, j - 1) + phi.at(i, j))
        }
    };
    for j in 0..g.ny {
        for i in 0..g.nx {
            let fxr = v.u[g.xf(i + 1, j)] * phix(i + 1, j);
            let fxl = v.u[g.xf(i, j)] * phix(i, j);
            let fyr = v.w[g.yf(i, j + 1)] * phiy(i, j + 1);
            let fyl = v.w[g.yf(i, j)] * phiy(i, j);
            out.data[g.idx(i, j)] = (fxr - fxl) / hx + (fyr - fyl) / hy;
        }
    }
    out
}

/// Discrete Dirichlet energy `int |grad phi|^2` with the homogeneous-Neumann
/// face convention (boundary faces contribute zero).
pub fn grad_energy(phi: &ScalarField) -> f64 {
    let v = grad(phi);
    let g = phi.grid;
    let vol = g.cell_volume();
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 1..g.nx {
            let val = v.u[g.xf(i, j)];
            s += val * val;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let val = v.w[g.yf(i, j)];
            s += val * val;
        }
    }
    s * vol
}

/// Discrete inner product `int grad(a) . grad(b)` (Neumann convention).
pub fn grad_inner(a: &ScalarField, b: &ScalarField) -> f64 {
    let va = grad(a);
    let vb = grad(b);
    let g = a.grid;
    let vol = g.cell_volume();
    let mut s = 0.0;
    for j in 0..g.ny {
        for i in 1..g.nx {
            s += va.u[g.xf(i, j)] * vb.u[g.xf(i, j)];
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            s += va.w[g.yf(i, j)] * vb.w[g.yf(i, j)];
        }
    }
    s * vol
}

/// Assembled 5-point `-laplace` operator (positive semidefinite/definite)
/// plus the affine right-hand-side contribution of the boundary condition:
/// the system is `A phi = b + rhs_bc` where `A = -laplace`-with-`bc` and
/// `rhs_bc` collects the Robin influx terms (zero for Neumann/Dirichlet).
pub fn laplacian_system(grid: Grid2d, bc: ScalarBc) -> (crate::solvers::Csr, Vec<f64>) {
    laplacian_system_sides(grid, [bc; 4])
}

/// Like [`laplacian_system`] with per-side boundary conditions, ordered
/// `[left, right, bottom, top]` (used e.g. for 1D slab reductions where the
/// transverse sides are insulated).
pub fn laplacian_system_sides(
    grid: Grid2d,
    bcs: [ScalarBc; 4],
) -> (crate::solvers::Csr, Vec<f64>) {
    let (hx, hy) = (grid.hx(), grid.hy());
    let (hx2, hy2) = (hx * hx, hy * hy);
    let n = grid.n_cells();
    let mut builder = crate::solvers::CsrBuilder::new(n);
    let mut rhs = vec![0.0; n];
    // Ghost elimination: ghost = a * inner + b_const, so the boundary flux
    // contributes (1 - a)/h^2 to the diagonal and b_const/h^2 to the rhs.
    let ghost_coeffs = |bc: ScalarBc, h: f64| -> (f64, f64) {
        match bc {
            ScalarBc::Neumann => (1.0, 0.0),
            ScalarBc::Dirichlet0 => (-1.0, 0.0),
            ScalarBc::Robin(k) => ((2.0 - k * h) / (2.0 + k * h), 2.0 * k * h / (2.0 + k * h)),
        }
    };
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let row = grid.idx(i, j);
            let mut diag = 2.0 / hx2 + 2.0 / hy2;
            let mut add_neighbor = |ii: i64, jj: i64, h2: f64, h: f64, bc: ScalarBc| {
                if ii >= 0 && ii < grid.nx as i64 && jj >= 0 && jj < grid.ny as i64 {
                    builder.push(row, grid.idx(ii as usize, jj as usize), -1.0 / h2);
                } else {
                    let (a, b) = ghost_coeffs(bc, h);
                    diag -= a / h2;
                    rhs[row] += b / h2;
                }
            };
            add_neighbor(i as i64 - 1, j as i64, hx2, hx, bcs[0]);
            add_neighbor(i as i64 + 1, j as i64, hx2, hx, bcs[1]);
            add_neighbor(i as i64, j as i64 - 1, hy2, hy, bcs[2]);
            add_neighbor(i as i64, j as i64 + 1, hy2, hy, bcs[3]);
            builder.push(row, row, diag);
        }
    }
    (builder.build(), rhs)
}
