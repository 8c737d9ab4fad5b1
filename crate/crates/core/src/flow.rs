//! Viscous flow solvers on the staggered grid.
//!
//! Three solvers live here:
//!
//! * [`solve_brinkman`] — the full Brinkman system: a variable-viscosity
//!   Stokes operator plus a friction term `nu * v`, with a prescribed
//!   divergence `div v = g` and traction (natural stress) boundary
//!   conditions. Normal stresses live at cell centers, shear stresses at
//!   grid nodes; the resulting saddle-point system is solved with a banded
//!   direct factorization over a column-major unknown ordering.
//! * [`solve_darcy`] — the vanishing-viscosity limit: a Poisson problem for
//!   the pressure with homogeneous Dirichlet data, then a flux
//!   reconstruction `v = -(grad p - q) / nu`.
//! * [`divergence_lift`] — builds a velocity with prescribed divergence and
//!   constant normal trace, used for source-lifting arguments and as a
//!   well-posedness probe.

use crate::error::CoreError;
use crate::grid::{grad, Grid2d, ScalarBc, ScalarField, VectorField};
use crate::solvers::{BandedLu, CsrBuilder, SparseSystem};

/// How the shear and bulk viscosities depend on the phase variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `eta = eta0`, `lambda = lambda0` everywhere.
    Constant,
    /// Linear interpolation in the clipped phase: `eta` runs from `eta0`
    /// (liquid, `c = -1`) to `eta1` (tumour, `c = +1`), and `lambda` from
    /// `0` to `lambda0`.
    LinearInPhi,
}

/// Bounded viscosity profile `eta(c)`, `lambda(c)`.
///
/// The admissible range is `0 < eta0 <= eta(c) <= eta1` and
/// `0 <= lambda(c) <= lambda0`; the constructor rejects parameters that
/// violate it.
#[derive(Debug, Clone, Copy)]
pub struct ViscosityProfile {
    eta0: f64,
    eta1: f64,
    lambda0: f64,
    kind: ProfileKind,
}

impl ViscosityProfile {
    pub fn new(eta0: f64, eta1: f64, lambda0: f64, kind: ProfileKind) -> Result<Self, CoreError> {
        if !(eta0 > 0.0) || !eta0.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "viscosity lower bound eta0 must be positive and finite, got {eta0}"
            )));
        }
        if !(eta1 >= eta0) || !eta1.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "viscosity upper bound eta1 must satisfy eta1 >= eta0, got eta0={eta0}, eta1={eta1}"
            )));
        }
        if !(lambda0 >= 0.0) || !lambda0.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "bulk viscosity bound lambda0 must be non-negative, got {lambda0}"
            )));
        }
        Ok(Self {
            eta0,
            eta1,
            lambda0,
            kind,
        })
    }

    /// Constant-viscosity profile `eta = eta0`, `lambda = lambda0`.
    pub fn constant(eta0: f64, lambda0: f64) -> Result<Self, CoreError> {
        Self::new(eta0, eta0, lambda0, ProfileKind::Constant)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Shear viscosity at phase value `c`.
    pub fn eta(&self, c: f64) -> f64 {
        match self.kind {
            ProfileKind::Constant => self.eta0,
            ProfileKind::LinearInPhi => {
                let s = 0.5 * (1.0 + c.clamp(-1.0, 1.0));
                self.eta0 + (self.eta1 - self.eta0) * s
            }
        }
    }

    /// Bulk viscosity at phase value `c`.
    pub fn lambda(&self, c: f64) -> f64 {
        match self.kind {
            ProfileKind::Constant => self.lambda0,
            ProfileKind::LinearInPhi => {
                let s = 0.5 * (1.0 + c.clamp(-1.0, 1.0));
                self.lambda0 * s
            }
        }
    }
}

/// Which boundary segment a traction sample lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Boundary traction `t = T(v, p) n` sampled at a boundary point; the pair
/// is the physical `(t_x, t_y)` with `n` the outward unit normal.
pub type TractionFn<'a> = &'a dyn Fn(f64, f64, Side) -> (f64, f64);

/// Data for one Brinkman solve.
pub struct BrinkmanProblem<'a> {
    /// Phase field controlling the viscosities.
    pub c: &'a ScalarField,
    /// Body force sampled on faces.
    pub f: &'a VectorField,
    /// Prescribed divergence (mass source) at cell centers.
    pub g: &'a ScalarField,
    /// Friction (permeability) coefficient `nu > 0`.
    pub nu: f64,
    /// Viscosity profile.
    pub profile: ViscosityProfile,
    /// Optional inhomogeneous traction data; `None` means `T n = 0`.
    pub traction: Option<TractionFn<'a>>,
}

/// A linear expression `sum coef_k * x_k + constant` over the flow unknowns.
#[derive(Debug, Clone, Default)]
struct Lin {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Lin {
    fn term(&mut self, col: usize, coef: f64) {
        self.terms.push((col, coef));
    }

    fn add_scaled(&mut self, other: &Lin, s: f64) {
        for &(col, coef) in &other.terms {
            self.terms.push((col, s * coef));
        }
        self.constant += s * other.constant;
    }
}

/// Column-major unknown ordering for the Brinkman saddle system. Keeping all
/// unknowns of one grid column adjacent bounds the matrix bandwidth by a few
/// multiples of `ny`, which the banded factorization exploits.
struct DofMap {
    u: Vec<usize>,
    w: Vec<usize>,
    p: Vec<usize>,
    n: usize,
}

impl DofMap {
    fn new(g: Grid2d) -> Self {
        let mut u = vec![usize::MAX; g.n_xfaces()];
        let mut w = vec![usize::MAX; g.n_yfaces()];
        let mut p = vec![usize::MAX; g.n_cells()];
        let mut next = 0;
        for i in 0..=g.nx {
            for j in 0..g.ny {
                u[g.xf(i, j)] = next;
                next += 1;
            }
            if i < g.nx {
                for j in 0..=g.ny {
                    w[g.yf(i, j)] = next;
                    next += 1;
                }
                for j in 0..g.ny {
                    p[g.idx(i, j)] = next;
                    next += 1;
                }
            }
        }
        Self { u, w, p, n: next }
    }
}

/// Shear viscosity at grid node `(i, j)` (corner of up to four cells):
/// arithmetic mean of the adjacent cell values.
fn eta_at_node(c: &ScalarField, profile: &ViscosityProfile, i: usize, j: usize) -> f64 {
    let g = c.grid;
    let mut sum = 0.0;
    let mut count = 0.0;
    for dj in 0..2_usize {
        for di in 0..2_usize {
            let (ci, cj) = (i as i64 - 1 + di as i64, j as i64 - 1 + dj as i64);
            if ci >= 0 && ci < g.nx as i64 && cj >= 0 && cj < g.ny as i64 {
                sum += profile.eta(c.at(ci as usize, cj as usize));
                count += 1.0;
            }
        }
    }
    sum / count
}

/// Solve the Brinkman system
///
/// ```text
/// -div( 2 eta(c) Dv + lambda(c) (div v) I - p I ) + nu v = f,
/// div v = g,    T(v, p) n = t  on the boundary,
/// ```
///
/// returning `(v, p)`. The discretization stores normal stresses at cell
/// centers and shear stresses at nodes; traction conditions enter through
/// mirrored ghost stresses, which keeps the assembled operator the exact
/// gradient of the discrete energy (see [`brinkman_energy`]).
pub fn solve_brinkman(prob: &BrinkmanProblem) -> Result<(VectorField, ScalarField), CoreError> {
    let g = prob.c.grid;
    if !(prob.nu > 0.0) || !prob.nu.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "friction coefficient nu must be positive, got {}",
            prob.nu
        )));
    }
    let (hx, hy) = (g.hx(), g.hy());
    let (lx, ly) = (g.lx, g.ly);
    let dofs = DofMap::new(g);
    let profile = &prob.profile;

    let zero_traction = |_x: f64, _y: f64, _side: Side| (0.0, 0.0);
    let traction: &dyn Fn(f64, f64, Side) -> (f64, f64) = match prob.traction {
        Some(t) => t,
        None => &zero_traction,
    };

    // Normal stress sxx = 2 eta du/dx + lambda div v - p at cell (i, j).
    let sxx_cell = |i: usize, j: usize| -> Lin {
        let eta = profile.eta(prob.c.at(i, j));
        let lam = profile.lambda(prob.c.at(i, j));
        let mut lin = Lin::default();
        lin.term(dofs.u[g.xf(i + 1, j)], (2.0 * eta + lam) / hx);
        lin.term(dofs.u[g.xf(i, j)], -(2.0 * eta + lam) / hx);
        lin.term(dofs.w[g.yf(i, j + 1)], lam / hy);
        lin.term(dofs.w[g.yf(i, j)], -lam / hy);
        lin.term(dofs.p[g.idx(i, j)], -1.0);
        lin
    };
    // Normal stress syy = 2 eta dw/dy + lambda div v - p at cell (i, j).
    let syy_cell = |i: usize, j: usize| -> Lin {
        let eta = profile.eta(prob.c.at(i, j));
        let lam = profile.lambda(prob.c.at(i, j));
        let mut lin = Lin::default();
        lin.term(dofs.w[g.yf(i, j + 1)], (2.0 * eta + lam) / hy);
        lin.term(dofs.w[g.yf(i, j)], -(2.0 * eta + lam) / hy);
        lin.term(dofs.u[g.xf(i + 1, j)], lam / hx);
        lin.term(dofs.u[g.xf(i, j)], -lam / hx);
        lin.term(dofs.p[g.idx(i, j)], -1.0);
        lin
    };
    // Shear stress sxy = eta (du/dy + dw/dx) at node (i, j). Boundary nodes
    // carry the prescribed tangential traction instead of a stencil.
    let sxy_node = |i: usize, j: usize| -> Lin {
        let mut lin = Lin::default();
        let (x, y) = (i as f64 * hx, j as f64 * hy);
        if i == 0 {
            lin.constant = -traction(x, y, Side::Left).1;
            return lin;
        }
        if i == g.nx {
            lin.constant = traction(x, y, Side::Right).1;
            return lin;
        }
        if j == 0 {
            lin.constant = -traction(x, y, Side::Bottom).0;
            return lin;
        }
        if j == g.ny {
            lin.constant = traction(x, y, Side::Top).0;
            return lin;
        }
        let eta = eta_at_node(prob.c, profile, i, j);
        lin.term(dofs.u[g.xf(i, j)], eta / hy);
        lin.term(dofs.u[g.xf(i, j - 1)], -eta / hy);
        lin.term(dofs.w[g.yf(i, j)], eta / hx);
        lin.term(dofs.w[g.yf(i - 1, j)], -eta / hx);
        lin
    };

    let mut builder = CsrBuilder::new(dofs.n);
    let mut rhs = vec![0.0; dofs.n];
    let mut emit = |row: usize, lin: &Lin, data: f64| {
        for &(col, coef) in &lin.terms {
            builder.push(row, col, coef);
        }
        rhs[row] = data - lin.constant;
    };

    // x-momentum: nu u - (sxx_e - sxx_w)/hx - (sxy_n - sxy_s)/hy = f_x.
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let row = dofs.u[g.xf(i, j)];
            let mut lin = Lin::default();
            lin.term(row, prob.nu);
            if i == 0 {
                // Ghost mirror: sxx(-1) = 2 sxx_bc - sxx(0).
                let sbc = -traction(0.0, g.yc(j), Side::Left).0;
                lin.add_scaled(&sxx_cell(0, j), -2.0 / hx);
                lin.constant += 2.0 * sbc / hx;
            } else if i == g.nx {
                let sbc = traction(lx, g.yc(j), Side::Right).0;
                lin.add_scaled(&sxx_cell(g.nx - 1, j), 2.0 / hx);
                lin.constant -= 2.0 * sbc / hx;
            } else {
                lin.add_scaled(&sxx_cell(i - 1, j), 1.0 / hx);
                lin.add_scaled(&sxx_cell(i, j), -1.0 / hx);
            }
            lin.add_scaled(&sxy_node(i, j), 1.0 / hy);
            lin.add_scaled(&sxy_node(i, j + 1), -1.0 / hy);
            emit(row, &lin, prob.f.u[g.xf(i, j)]);
        }
    }
    // y-momentum: nu w - (syy_n - syy_s)/hy - (sxy_e - sxy_w)/hx = f_y.
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let row = dofs.w[g.yf(i, j)];
            let mut lin = Lin::default();
            lin.term(row, prob.nu);
            if j == 0 {
                let sbc = -traction(g.xc(i), 0.0, Side::Bottom).1;
                lin.add_scaled(&syy_cell(i, 0), -2.0 / hy);
                lin.constant += 2.0 * sbc / hy;
            } else if j == g.ny {
                let sbc = traction(g.xc(i), ly, Side::Top).1;
                lin.add_scaled(&syy_cell(i, g.ny - 1), 2.0 / hy);
                lin.constant -= 2.0 * sbc / hy;
            } else {
                lin.add_scaled(&syy_cell(i, j - 1), 1.0 / hy);
                lin.add_scaled(&syy_cell(i, j), -1.0 / hy);
            }
            lin.add_scaled(&sxy_node(i, j), 1.0 / hx);
            lin.add_scaled(&sxy_node(i + 1, j), -1.0 / hx);
            emit(row, &lin, prob.f.w[g.yf(i, j)]);
        }
    }
    // Continuity: div v = g.
    for j in 0..g.ny {
        for i in 0..g.nx {
            let row = dofs.p[g.idx(i, j)];
            let mut lin = Lin::default();
            lin.term(dofs.u[g.xf(i + 1, j)], 1.0 / hx);
            lin.term(dofs.u[g.xf(i, j)], -1.0 / hx);
            lin.term(dofs.w[g.yf(i, j + 1)], 1.0 / hy);
            lin.term(dofs.w[g.yf(i, j)], -1.0 / hy);
            emit(row, &lin, prob.g.at(i, j));
        }
    }

    let matrix = builder.build();
    let lu = BandedLu::factor(&matrix)?;
    let x = lu.solve(&rhs);

    // Direct factorizations can still fail silently on near-singular data;
    // verify the residual before handing the solution back.
    let ax = matrix.matvec(&x);
    let res: f64 = ax
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = rhs.iter().map(|b| b * b).sum::<f64>().sqrt().max(1.0);
    if !(res <= 1e-9 * scale) {
        return Err(CoreError::LinearSolve {
            solver: "banded-lu(brinkman)".into(),
            residual: res / scale,
            iterations: 1,
            tolerance: 1e-9,
        });
    }

    let mut v = VectorField::zeros(g);
    for (face, &col) in dofs.u.iter().enumerate() {
        v.u[face] = x[col];
    }
    for (face, &col) in dofs.w.iter().enumerate() {
        v.w[face] = x[col];
    }
    let mut p = ScalarField::zeros(g);
    for (cell, &col) in dofs.p.iter().enumerate() {
        p.data[cell] = x[col];
    }
    Ok((v, p))
}

/// Breakdown of the discrete Brinkman energy identity
///
/// ```text
/// viscous + lambda_div + friction = force_work + pressure_work,
/// ```
///
/// with `viscous = int 2 eta |Dv|^2`, `lambda_div = int lambda (div v)^2`,
/// `friction = nu ||v||^2`, `force_work = int f . v` and
/// `pressure_work = int p g`. For homogeneous traction the identity holds to
/// solver precision by construction.
#[derive(Debug, Clone, Copy)]
pub struct FlowEnergy {
    pub viscous: f64,
    pub lambda_div: f64,
    pub friction: f64,
    pub force_work: f64,
    pub pressure_work: f64,
}

impl FlowEnergy {
    /// Left-hand side minus right-hand side of the identity.
    pub fn defect(&self) -> f64 {
        self.viscous + self.lambda_div + self.friction - self.force_work - self.pressure_work
    }
}

/// Viscous dissipation functionals `(int 2 eta |Dv|^2, int lambda (div v)^2)`
/// with the quadrature matched to the Brinkman stencil: normal strains at
/// cell centers, shear strains at interior nodes.
pub fn viscous_dissipation(
    v: &VectorField,
    c: &ScalarField,
    profile: &ViscosityProfile,
) -> (f64, f64) {
    let g = v.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let vol = g.cell_volume();
    let mut visc = 0.0;
    let mut lam_div = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let ux = (v.u[g.xf(i + 1, j)] - v.u[g.xf(i, j)]) / hx;
            let wy = (v.w[g.yf(i, j + 1)] - v.w[g.yf(i, j)]) / hy;
            let eta = profile.eta(c.at(i, j));
            let lam = profile.lambda(c.at(i, j));
            visc += 2.0 * eta * (ux * ux + wy * wy) * vol;
            lam_div += lam * (ux + wy) * (ux + wy) * vol;
        }
    }
    for j in 1..g.ny {
        for i in 1..g.nx {
            let uy = (v.u[g.xf(i, j)] - v.u[g.xf(i, j - 1)]) / hy;
            let wx = (v.w[g.yf(i, j)] - v.w[g.yf(i - 1, j)]) / hx;
            let eta = eta_at_node(c, profile, i, j);
            visc += eta * (uy + wx) * (uy + wx) * vol;
        }
    }
    (visc, lam_div)
}

/// Evaluate the discrete energy bookkeeping for a Brinkman solution.
pub fn brinkman_energy(
    v: &VectorField,
    p: &ScalarField,
    c: &ScalarField,
    profile: &ViscosityProfile,
    nu: f64,
    f: &VectorField,
    g_src: &ScalarField,
) -> FlowEnergy {
    let (viscous, lambda_div) = viscous_dissipation(v, c, profile);
    let vol = v.grid.cell_volume();
    let pressure_work = p
        .data
        .iter()
        .zip(&g_src.data)
        .map(|(pp, gg)| pp * gg * vol)
        .sum();
    FlowEnergy {
        viscous,
        lambda_div,
        friction: nu * v.norm_l2().powi(2),
        force_work: v.inner(f),
        pressure_work,
    }
}

/// Face field `(coef averaged to faces) * grad(phi)` with zero boundary
/// faces (the natural choice when `phi` carries homogeneous Neumann data).
pub fn coef_times_grad(coef: &ScalarField, phi: &ScalarField) -> VectorField {
    let g = phi.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let avg = 0.5 * (coef.at(i - 1, j) + coef.at(i, j));
            out.u[g.xf(i, j)] = avg * (phi.at(i, j) - phi.at(i - 1, j)) / hx;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            let avg = 0.5 * (coef.at(i, j - 1) + coef.at(i, j));
            out.w[g.yf(i, j)] = avg * (phi.at(i, j) - phi.at(i, j - 1)) / hy;
        }
    }
    out
}

/// Parameters of the Darcy solve.
#[derive(Debug, Clone, Copy)]
pub struct DarcyParams {
    /// Chemotaxis coupling `chi >= 0`.
    pub chi: f64,
    /// Friction coefficient `nu > 0`.
    pub nu: f64,
    /// Linear-solver tolerance.
    pub tol: f64,
}

/// Solve the Darcy (zero-viscosity) limit
///
/// ```text
/// nu v + grad p = (mu + chi sigma) grad phi,    div v = g,    p = 0 on the boundary,
/// ```
///
/// by a pressure Poisson solve followed by flux reconstruction, returning
/// `(v, p)`. The reconstruction reproduces `div v = g` to solver tolerance.
pub fn solve_darcy(
    mu: &ScalarField,
    sigma: &ScalarField,
    phi: &ScalarField,
    g_src: &ScalarField,
    params: DarcyParams,
) -> Result<(VectorField, ScalarField), CoreError> {
    let g = phi.grid;
    if !(params.nu > 0.0) || !params.nu.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "friction coefficient nu must be positive, got {}",
            params.nu
        )));
    }
    if params.chi < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "chemotaxis coefficient chi must be non-negative, got {}",
            params.chi
        )));
    }
    let coef = mu.add_scaled(params.chi, sigma)?;
    let q = coef_times_grad(&coef, phi);

    // -lap p = nu g - div q with homogeneous Dirichlet pressure.
    let (matrix, _) = crate::grid::laplacian_system(g, ScalarBc::Dirichlet0);
    let divq = crate::grid::div(&q);
    let rhs: Vec<f64> = g_src
        .data
        .iter()
        .zip(&divq.data)
        .map(|(gg, dq)| params.nu * gg - dq)
        .collect();
    let sys = SparseSystem::new(matrix, rhs)?.with_tol(params.tol);
    let (pdata, _) = crate::solvers::solve_spd(&sys)?;
    let p = ScalarField {
        grid: g,
        data: pdata,
    };

    // v = (q - grad p) / nu, with the Dirichlet ghost p_out = -p_in at the
    // boundary so that div v matches the pressure equation cell by cell.
    let (hx, hy) = (g.hx(), g.hy());
    let mut v = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let dpdx = if i == 0 {
                2.0 * p.at(0, j) / hx
            } else if i == g.nx {
                -2.0 * p.at(g.nx - 1, j) / hx
            } else {
                (p.at(i, j) - p.at(i - 1, j)) / hx
            };
            v.u[g.xf(i, j)] = (q.u[g.xf(i, j)] - dpdx) / params.nu;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let dpdy = if j == 0 {
                2.0 * p.at(i, 0) / hy
            } else if j == g.ny {
                -2.0 * p.at(i, g.ny - 1) / hy
            } else {
                (p.at(i, j) - p.at(i, j - 1)) / hy
            };
            v.w[g.yf(i, j)] = (q.w[g.yf(i, j)] - dpdy) / params.nu;
        }
    }
    Ok((v, p))
}

/// Construct a velocity `u` with `div u = f` and constant outward normal
/// trace `u . n = g_n`, where `g_n = (int f) / |boundary|` is forced by the
/// divergence theorem. Returns `(u, g_n)`.
///
/// Internally solves a Neumann Poisson problem for a potential and takes its
/// gradient; stability of the construction can be probed through
/// [`h1_norm`] of the result.
pub fn divergence_lift(f: &ScalarField, tol: f64) -> Result<(VectorField, f64), CoreError> {
    let g = f.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let gn = f.integral() / g.boundary_length();

    // -lap q = -f + (boundary-flux contribution of g_n), mean-pinned.
    let (matrix, _) = crate::grid::laplacian_system(g, ScalarBc::Neumann);
    let mut rhs = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let mut b = -f.at(i, j);
            if i == 0 || i == g.nx - 1 {
                b += gn / hx;
            }
            if j == 0 || j == g.ny - 1 {
                b += gn / hy;
            }
            rhs[g.idx(i, j)] = b;
        }
    }
    let sys = SparseSystem::new(matrix, rhs)?
        .with_tol(tol)
        .with_pin_mean(true);
    let (qdata, _) = crate::solvers::solve_spd(&sys)?;
    let q = ScalarField {
        grid: g,
        data: qdata,
    };

    let mut u = grad(&q);
    for j in 0..g.ny {
        u.u[g.xf(0, j)] = -gn;
        u.u[g.xf(g.nx, j)] = gn;
    }
    for i in 0..g.nx {
        u.w[g.yf(i, 0)] = -gn;
        u.w[g.yf(i, g.ny)] = gn;
    }
    Ok((u, gn))
}

/// Discrete `H^1` norm of a staggered velocity: the `L^2` norm plus the
/// strain-type seminorm (normal derivatives at cells, cross derivatives at
/// interior nodes).
pub fn h1_norm(v: &VectorField) -> f64 {
    let g = v.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let vol = g.cell_volume();
    let mut semi = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let ux = (v.u[g.xf(i + 1, j)] - v.u[g.xf(i, j)]) / hx;
            let wy = (v.w[g.yf(i, j + 1)] - v.w[g.yf(i, j)]) / hy;
            semi += (ux * ux + wy * wy) * vol;
        }
    }
    for j in 1..g.ny {
        for i in 1..g.nx {
            let uy = (v.u[g.xf(i, j)] - v.u[g.xf(i, j - 1)]) / hy;
            let wx = (v.w[g.yf(i, j)] - v.w[g.yf(i - 1, j)]) / hx;
            semi += (uy * uy + wx * wx) * vol;
        }
    }
    (v.norm_l2().powi(2) + semi).sqrt()
}
