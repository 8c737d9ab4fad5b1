//! Time integration of the coupled phase-field / nutrient / flow system.
//!
//! One step splits the system as: (i) quasistatic nutrient solve from the
//! current phase, (ii) flow solve (Brinkman or Darcy) with the lagged
//! capillary body force, (iii) a convex-split Cahn–Hilliard update in which
//! the monotone part `beta_delta` and the biharmonic part are implicit and
//! the concave potential part and the convection are explicit/lagged. The
//! implicit block is solved by Newton iteration on the reduced fourth-order
//! system with a spectral preconditioner.
//!
//! Alongside the stepper, this module keeps the energy and mass ledgers
//! (per-step identity defects) and the `delta`-continuation driver that
//! tabulates the obstacle-overshoot functional as the regularization width
//! shrinks.

use crate::error::CoreError;
use crate::flow::{
    brinkman_energy, coef_times_grad, solve_brinkman, solve_darcy, viscous_dissipation,
    BrinkmanProblem, DarcyParams, ViscosityProfile,
};
use crate::grid::{
    div_of_scalar_times_velocity, grad, grad_energy, grad_inner, laplace, Grid2d, ScalarBc,
    ScalarField, VectorField,
};
use crate::nutrient::{default_consumption, solve_nutrient, NutrientProblem};
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::solvers::{bicgstab_op, NeumannSpectral};
use crate::sources::SourceModel;

/// Complete simulation state at one time level.
#[derive(Debug, Clone)]
pub struct SimState {
    pub phi: ScalarField,
    pub mu: ScalarField,
    pub sigma: ScalarField,
    pub v: VectorField,
    pub p: ScalarField,
    pub t: f64,
    pub delta: f64,
    pub step_count: usize,
}

impl SimState {
    /// Overshoot metric `max (|phi| - 1)_+` over all cells.
    pub fn overshoot(&self) -> f64 {
        self.phi
            .data
            .iter()
            .map(|&r| (r.abs() - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Squared-overshoot functional `int (|phi| - 1)_+^2`.
    pub fn overshoot_l2sq(&self) -> f64 {
        let vol = self.phi.grid.cell_volume();
        self.phi
            .data
            .iter()
            .map(|&r| {
                let o = (r.abs() - 1.0).max(0.0);
                o * o * vol
            })
            .sum()
    }

    /// Mean phase value over the domain.
    pub fn phi_mean(&self) -> f64 {
        self.phi.mean()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite()
            && self.mu.is_finite()
            && self.sigma.is_finite()
            && self.p.is_finite()
            && self.v.is_finite()
    }
}

/// Which flow closure couples into the phase equation.
#[derive(Debug, Clone, Copy)]
pub enum FlowMode {
    /// No flow: `v = 0`, `p = 0` (pure Cahn–Hilliard dynamics).
    Off,
    /// Full viscous Brinkman solve.
    Brinkman { nu: f64, profile: ViscosityProfile },
    /// Darcy (vanishing-viscosity) limit.
    Darcy { nu: f64 },
}

/// Model parameters shared by every step of a run.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub potential: PotentialSpec,
    pub source: SourceModel,
    /// Chemotaxis coupling `chi >= 0`.
    pub chi: f64,
    /// Robin boundary permeability `K > 0` of the nutrient problem.
    pub nutrient_k: f64,
    /// Consumption amplitude `h0 >= 0`; the profile is
    /// `h(r) = h0 (1 + clamp(r, -1, 1)) / 2`.
    pub consumption_h0: f64,
    pub flow: FlowMode,
    /// Relative tolerance of the Newton solve for the implicit phase block.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl ModelParams {
    /// Parameters with all couplings switched off: pure Cahn–Hilliard
    /// dynamics with the given potential.
    pub fn uncoupled(potential: PotentialSpec) -> Self {
        Self {
            potential,
            source: SourceModel::disabled(),
            chi: 0.0,
            nutrient_k: 1.0,
            consumption_h0: 0.0,
            flow: FlowMode::Off,
            newton_tol: 1e-11,
            newton_max_iter: 60,
        }
    }
}

/// Apply `A = -laplace` with homogeneous Neumann data.
fn a_op(phi: &ScalarField) -> ScalarField {
    laplace(phi, ScalarBc::Neumann).map(|x| -x)
}

/// Free-energy functional `int psi_delta(phi) + 1/2 |grad phi|^2`.
pub fn free_energy(phi: &ScalarField, potential: &PotentialSpec) -> f64 {
    let vol = phi.grid.cell_volume();
    let bulk: f64 = phi.data.iter().map(|&r| potential.psi(r) * vol).sum();
    bulk + 0.5 * grad_energy(phi)
}

/// One row of the per-step diagnostics ledger.
#[derive(Debug, Clone, Copy)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// Free energy at the end of the step.
    pub energy: f64,
    /// `int |grad mu|^2 + 2 eta |Dv|^2 + lambda (div v)^2 + nu |v|^2`.
    pub dissipation: f64,
    /// `-chi int grad sigma . grad mu`.
    pub chemotaxis: f64,
    /// `int (Gamma_phi - phi Gamma_v)(mu + chi sigma)`.
    pub source_work: f64,
    /// Velocity-coupling work: capillary force work, pressure work against
    /// the mass source, and the advection pairing.
    pub lifting_work: f64,
    /// Energy-identity defect, first order in `dt` by construction.
    pub energy_defect: f64,
    pub mass_lhs: f64,
    pub mass_rhs: f64,
    pub mass_defect: f64,
    pub overshoot: f64,
    pub overshoot_l2sq: f64,
    pub phi_max_abs: f64,
    pub phi_mean: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub newton_iterations: usize,
}

/// Outcome of one accepted step.
struct StepOutput {
    state: SimState,
    newton_iterations: usize,
}

/// Advance the state by one time step of size `dt`.
///
/// Errors with a `PropertyViolation` mentioning "CFL" when the advective
/// stability bound `dt <= min(h) / (2 max |v|)` fails for the freshly
/// computed velocity; callers may retry with a smaller step.
pub fn step(state: &SimState, dt: f64, params: &ModelParams) -> Result<SimState, CoreError> {
    step_inner(state, dt, params).map(|out| out.state)
}

fn step_inner(state: &SimState, dt: f64, params: &ModelParams) -> Result<StepOutput, CoreError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CoreError::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let g = state.phi.grid;
    let n = g.n_cells();
    let pot = &params.potential;
    let theta_c = pot.theta_c_coeff();

    // (i) Quasistatic nutrient from the current phase.
    let h_profile = default_consumption(params.consumption_h0);
    let sigma = solve_nutrient(&NutrientProblem {
        phi: &state.phi,
        h_profile: &h_profile,
        k: params.nutrient_k,
        slab_1d: false,
    })?;

    // Source fields evaluated at the lagged phase.
    let mut gamma_v = ScalarField::zeros(g);
    let mut gamma_phi = ScalarField::zeros(g);
    for k in 0..n {
        gamma_v.data[k] = params.source.gamma_v(state.phi.data[k], sigma.data[k]);
        gamma_phi.data[k] = params.source.gamma_phi(state.phi.data[k], sigma.data[k]);
    }

    // (ii) Flow with the lagged capillary body force (mu + chi sigma) grad phi.
    let (v, p) = match params.flow {
        FlowMode::Off => (VectorField::zeros(g), ScalarField::zeros(g)),
        FlowMode::Brinkman { nu, profile } => {
            let coef = state.mu.add_scaled(params.chi, &sigma)?;
            let f = coef_times_grad(&coef, &state.phi);
            solve_brinkman(&BrinkmanProblem {
                c: &state.phi,
                f: &f,
                g: &gamma_v,
                nu,
                profile,
                traction: None,
            })?
        }
        FlowMode::Darcy { nu } => solve_darcy(
            &state.mu,
            &sigma,
            &state.phi,
            &gamma_v,
            DarcyParams {
                chi: params.chi,
                nu,
                tol: 1e-12,
            },
        )?,
    };

    // Advective CFL bound for the explicit convection term.
    let vmax = v.max_abs();
    let h_min = g.hx().min(g.hy());
    if vmax > 0.0 && dt > h_min / (2.0 * vmax) * (1.0 + 1e-12) {
        return Err(CoreError::PropertyViolation(format!(
            "CFL violation: dt = {dt:.3e} exceeds advective bound {:.3e} (max |v| = {vmax:.3e})",
            h_min / (2.0 * vmax)
        )));
    }

    // (iii) Convex-split Cahn--Hilliard update. Eliminating mu gives the
    // reduced residual
    //   F(phi) = (phi - phi^n)/dt + div(phi^n v) - Gamma_phi
    //            + A (beta(phi) - Theta_c phi^n + A phi - chi sigma),
    // with A = -laplace (Neumann) and Jacobian I/dt + A diag(beta') + A^2.
    let adv = div_of_scalar_times_velocity(&state.phi, &v);
    let chi = params.chi;
    let mu_of = |phi_new: &ScalarField| -> ScalarField {
        let mut m = a_op(phi_new);
        for k in 0..n {
            m.data[k] +=
                pot.beta(phi_new.data[k]) - theta_c * state.phi.data[k] - chi * sigma.data[k];
        }
        m
    };
    let residual = |phi_new: &ScalarField| -> Vec<f64> {
        let am = a_op(&mu_of(phi_new));
        (0..n)
            .map(|k| {
                (phi_new.data[k] - state.phi.data[k]) / dt + adv.data[k] - gamma_phi.data[k]
                    + am.data[k]
            })
            .collect()
    };
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();

    let spectral = NeumannSpectral::new(g.nx, g.ny, g.hx(), g.hy());
    let scale = (norm(&state.phi.data) / dt).max(1.0);
    let tol_abs = params.newton_tol * scale;

    let mut phi = state.phi.clone();
    let mut res = residual(&phi);
    let mut res_norm = norm(&res);
    let mut newton_iterations = 0;
    while res_norm > tol_abs {
        if newton_iterations >= params.newton_max_iter {
            return Err(CoreError::NonlinearSolve {
                solver: "newton(cahn-hilliard)".into(),
                residual: res_norm / scale,
                iterations: newton_iterations,
            });
        }
        let beta_prime: Vec<f64> = phi.data.iter().map(|&r| pot.beta_prime(r)).collect();
        let b_mean = beta_prime.iter().sum::<f64>() / n as f64;
        let apply = |x: &[f64]| -> Vec<f64> {
            let xf = ScalarField {
                grid: g,
                data: x.to_vec(),
            };
            let mut inner = a_op(&xf);
            for k in 0..n {
                inner.data[k] += beta_prime[k] * x[k];
            }
            let outer = a_op(&inner);
            (0..n).map(|k| x[k] / dt + outer.data[k]).collect()
        };
        let minv = |r: &[f64]| spectral.solve_poly(1.0 / dt, b_mean, r);
        let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
        let (s, _) = bicgstab_op(&apply, &minv, &rhs, None, 1e-10, 600)?;

        // Backtracking line search on the residual norm.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = phi.add_scaled(alpha, &ScalarField { grid: g, data: s.clone() })?;
            let trial_res = residual(&trial);
            let trial_norm = norm(&trial_res);
            if trial_norm < res_norm * (1.0 - 1e-4 * alpha) || trial_norm <= tol_abs {
                phi = trial;
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(CoreError::NonlinearSolve {
                solver: "newton(cahn-hilliard) line search".into(),
                residual: res_norm / scale,
                iterations: newton_iterations,
            });
        }
        newton_iterations += 1;
    }

    let mu = mu_of(&phi);
    let next = SimState {
        phi,
        mu,
        sigma,
        v,
        p,
        t: state.t + dt,
        delta: state.delta,
        step_count: state.step_count + 1,
    };
    if !next.is_finite() {
        return Err(CoreError::PropertyViolation(
            "non-finite field after step".into(),
        ));
    }
    Ok(StepOutput {
        state: next,
        newton_iterations,
    })
}

/// Both sides of the discrete mass identity
/// `d/dt (phi)_mean = |Omega|^{-1} int (Gamma_phi - phi Gamma_v - grad phi . v)`.
#[derive(Debug, Clone, Copy)]
pub struct MassRate {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
}

/// Evaluate the mass identity across two consecutive states. The right-hand
/// side uses the updated phase with the step's (lagged) nutrient and
/// velocity, so the defect measures the pure time lag of the splitting and
/// is first order in `dt`.
pub fn mass_rate(prev: &SimState, next: &SimState, source: &SourceModel) -> MassRate {
    let g = next.phi.grid;
    let dt = next.t - prev.t;
    let lhs = if dt > 0.0 {
        (next.phi.mean() - prev.phi.mean()) / dt
    } else {
        0.0
    };
    let vol = g.cell_volume();
    let mut bulk = 0.0;
    for k in 0..g.n_cells() {
        let (r, s) = (next.phi.data[k], next.sigma.data[k]);
        bulk += (source.gamma_phi(r, s) - r * source.gamma_v(r, s)) * vol;
    }
    let advective = grad(&next.phi).inner(&next.v);
    let rhs = (bulk - advective) / g.volume();
    MassRate {
        lhs,
        rhs,
        defect: lhs - rhs,
    }
}

fn ledger_row(
    prev: &SimState,
    next: &SimState,
    dt: f64,
    params: &ModelParams,
    newton_iterations: usize,
) -> LedgerRow {
    let g = next.phi.grid;
    let n = g.n_cells();
    let vol = g.cell_volume();
    let chi = params.chi;
    let energy_prev = free_energy(&prev.phi, &params.potential);
    let energy = free_energy(&next.phi, &params.potential);

    // Phase-field dissipation plus the flow dissipation (with the lagged
    // phase, matching the flow solve).
    let mut dissipation = grad_energy(&next.mu);
    let mut flow_rhs = 0.0;
    match params.flow {
        FlowMode::Off => {}
        FlowMode::Brinkman { nu, profile } => {
            let (visc, lam) = viscous_dissipation(&next.v, &prev.phi, &profile);
            dissipation += visc + lam + nu * next.v.norm_l2().powi(2);
            let coef = prev.mu.add_scaled(chi, &next.sigma).expect("same grid");
            let f = coef_times_grad(&coef, &prev.phi);
            let mut gamma_v = ScalarField::zeros(g);
            for k in 0..n {
                gamma_v.data[k] = params.source.gamma_v(prev.phi.data[k], next.sigma.data[k]);
            }
            let e = brinkman_energy(&next.v, &next.p, &prev.phi, &profile, nu, &f, &gamma_v);
            flow_rhs = e.force_work + e.pressure_work;
        }
        FlowMode::Darcy { nu } => {
            dissipation += nu * next.v.norm_l2().powi(2);
            let coef = prev.mu.add_scaled(chi, &next.sigma).expect("same grid");
            let f = coef_times_grad(&coef, &prev.phi);
            let mut pressure_work = 0.0;
            for k in 0..n {
                pressure_work += next.p.data[k]
                    * params.source.gamma_v(prev.phi.data[k], next.sigma.data[k])
                    * vol;
            }
            flow_rhs = next.v.inner(&f) + pressure_work;
        }
    }

    let chemotaxis = -chi * grad_inner(&next.sigma, &next.mu);
    // Work of the sources against the generalized potential mu + chi sigma;
    // Gamma terms are evaluated where the scheme evaluates them (lagged phase).
    let mut source_work = 0.0;
    let mut phi_gamma_v_work = 0.0;
    for k in 0..n {
        let (r, s) = (prev.phi.data[k], next.sigma.data[k]);
        let potential = next.mu.data[k] + chi * next.sigma.data[k];
        source_work +=
            (params.source.gamma_phi(r, s) - r * params.source.gamma_v(r, s)) * potential * vol;
        phi_gamma_v_work += r * params.source.gamma_v(r, s) * potential * vol;
    }
    // Advection pairing -<div(phi^n v), mu + chi sigma> regrouped with the
    // flow identity's right-hand side and the phi Gamma_v exchange term.
    let adv = div_of_scalar_times_velocity(&prev.phi, &next.v);
    let mut adv_work = 0.0;
    for k in 0..n {
        adv_work += adv.data[k] * (next.mu.data[k] + chi * next.sigma.data[k]) * vol;
    }
    let lifting_work = phi_gamma_v_work - adv_work + flow_rhs;

    let de = (energy - energy_prev) / dt;
    let energy_defect = de + dissipation - (chemotaxis + source_work + lifting_work);
    let mass = mass_rate(prev, next, &params.source);

    LedgerRow {
        step: next.step_count,
        t: next.t,
        dt,
        energy,
        dissipation,
        chemotaxis,
        source_work,
        lifting_work,
        energy_defect,
        mass_lhs: mass.lhs,
        mass_rhs: mass.rhs,
        mass_defect: mass.defect,
        overshoot: next.overshoot(),
        overshoot_l2sq: next.overshoot_l2sq(),
        phi_max_abs: next.phi.data.iter().map(|r| r.abs()).fold(0.0, f64::max),
        phi_mean: next.phi_mean(),
        sigma_min: next.sigma.min(),
        sigma_max: next.sigma.max(),
        newton_iterations,
    }
}

/// Initial phase configuration.
#[derive(Debug, Clone)]
pub enum InitialData {
    /// Spatially uniform value in `(-1, 1)`.
    Uniform(f64),
    /// Tumour seed `phi0 = tanh((radius - dist) / (sqrt(2) width))` centred
    /// at `(cx, cy)`.
    TanhSeed {
        radius: f64,
        width: f64,
        cx: f64,
        cy: f64,
    },
    /// Caller-supplied field.
    Field(ScalarField),
}

/// Full description of one run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub grid: Grid2d,
    pub params: ModelParams,
    pub t_end: f64,
    /// Base time step; defaults to `0.1 min(hx, hy)^2` when `None`. The
    /// advective CFL cap is applied on top after each flow solve.
    pub dt: Option<f64>,
    pub initial: InitialData,
    /// Record a state snapshot every this many steps (0 = final only).
    pub record_every: usize,
    pub max_steps: usize,
}

/// Recorded output of [`run`].
#[derive(Debug)]
pub struct Trajectory {
    pub snapshots: Vec<SimState>,
    pub ledger: Vec<LedgerRow>,
    pub final_state: SimState,
}

/// Build the initial state for a run: the seeded phase (clipped strictly
/// inside `(-1, 1)` for the logarithmic potential), `sigma = 1`, zero flow,
/// and a chemical potential consistent with the phase.
pub fn initial_state(spec: &RunSpec) -> Result<SimState, CoreError> {
    let g = spec.grid;
    let pot = &spec.params.potential;
    let mut phi = match &spec.initial {
        InitialData::Uniform(v) => {
            if v.abs() >= 1.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "uniform initial phase must lie in (-1, 1), got {v}"
                )));
            }
            ScalarField::constant(g, *v)
        }
        InitialData::TanhSeed {
            radius,
            width,
            cx,
            cy,
        } => {
            if !(*radius > 0.0) || !(*width > 0.0) {
                return Err(CoreError::InvalidParameter(
                    "tanh seed requires positive radius and width".into(),
                ));
            }
            let (r0, w, cx, cy) = (*radius, *width, *cx, *cy);
            ScalarField::from_fn(g, move |x, y| {
                let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                ((r0 - d) / (std::f64::consts::SQRT_2 * w)).tanh()
            })
        }
        InitialData::Field(f) => f.clone(),
    };
    // Strict interior data for the logarithmic potential.
    if let PotentialKind::Logarithmic { .. } = pot.kind() {
        let cap = 1.0 - pot.delta();
        phi = phi.map(|r| r.clamp(-cap, cap));
    } else if phi.data.iter().any(|r| r.abs() > 1.0) {
        return Err(CoreError::InvalidParameter(
            "obstacle initial phase must lie in [-1, 1]".into(),
        ));
    }

    let h_profile = default_consumption(spec.params.consumption_h0);
    let sigma = solve_nutrient(&NutrientProblem {
        phi: &phi,
        h_profile: &h_profile,
        k: spec.params.nutrient_k,
        slab_1d: false,
    })?;
    let theta_c = pot.theta_c_coeff();
    let mut mu = a_op(&phi);
    for k in 0..g.n_cells() {
        mu.data[k] +=
            pot.beta(phi.data[k]) - theta_c * phi.data[k] - spec.params.chi * sigma.data[k];
    }
    Ok(SimState {
        phi,
        mu,
        sigma,
        v: VectorField::zeros(g),
        p: ScalarField::zeros(g),
        t: 0.0,
        delta: pot.delta(),
        step_count: 0,
    })
}

/// Default base time step for a grid.
pub fn default_dt(grid: Grid2d) -> f64 {
    let h = grid.hx().min(grid.hy());
    0.1 * h * h
}

/// Drive a run to its horizon, retrying CFL-rejected steps with a halved
/// step and recording ledgers and snapshots along the way.
pub fn run(spec: &RunSpec) -> Result<Trajectory, CoreError> {
    let mut state = initial_state(spec)?;
    let dt_base = spec.dt.unwrap_or_else(|| default_dt(spec.grid));
    if !(dt_base > 0.0) || !(spec.t_end > 0.0) {
        return Err(CoreError::InvalidParameter(
            "run requires positive dt and t_end".into(),
        ));
    }
    let mut snapshots = Vec::new();
    let mut ledger = Vec::new();
    let mut steps = 0;
    while state.t < spec.t_end - 1e-14 && steps < spec.max_steps {
        let mut dt = dt_base.min(spec.t_end - state.t);
        let mut out = None;
        for _ in 0..24 {
            match step_inner(&state, dt, &spec.params) {
                Ok(o) => {
                    out = Some(o);
                    break;
                }
                Err(CoreError::PropertyViolation(msg)) if msg.contains("CFL") => {
                    dt *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let out = out.ok_or_else(|| {
            CoreError::PropertyViolation("CFL cap could not be satisfied".into())
        })?;
        ledger.push(ledger_row(
            &state,
            &out.state,
            dt,
            &spec.params,
            out.newton_iterations,
        ));
        state = out.state;
        steps += 1;
        if spec.record_every > 0 && steps % spec.record_every == 0 {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        snapshots,
        ledger,
        final_state: state,
    })
}

/// One row of the `delta`-continuation table.
#[derive(Debug, Clone, Copy)]
pub struct ContinuationRow {
    pub delta: f64,
    /// Time-integrated overshoot `int_0^T int (|phi| - 1)_+^2`.
    pub overshoot_integral: f64,
    /// Largest `|phi|` seen over the run.
    pub max_abs_phi: f64,
    /// Largest pointwise overshoot seen over the run.
    pub max_overshoot: f64,
}

/// Re-run the same scenario for a descending list of regularization widths
/// and tabulate the overshoot functional. The widths must be admissible for
/// the configured potential and source extension.
pub fn delta_continuation(
    base: &RunSpec,
    deltas: &[f64],
) -> Result<Vec<ContinuationRow>, CoreError> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoreError::InvalidParameter(
            "continuation widths must be strictly descending".into(),
        ));
    }
    let mut limit = base.params.potential.delta_bound_threshold();
    if let Some(d0) = base.params.source.delta0() {
        limit = limit.min(d0);
    }
    if deltas.iter().any(|&d| !(d > 0.0 && d < limit)) {
        return Err(CoreError::InvalidParameter(format!(
            "continuation widths must lie in (0, {limit:.3e})"
        )));
    }
    let mut rows = Vec::new();
    for &delta in deltas {
        let mut spec = base.clone();
        spec.params.potential = match base.params.potential.kind() {
            PotentialKind::DoubleObstacle => PotentialSpec::double_obstacle(delta)?,
            PotentialKind::Logarithmic { theta, theta_c } => {
                PotentialSpec::logarithmic(theta, theta_c, delta)?
            }
        };
        let traj = run(&spec)?;
        let mut integral = 0.0;
        let mut max_over = 0.0_f64;
        let mut max_abs_phi = 0.0_f64;
        for row in &traj.ledger {
            integral += row.dt * row.overshoot_l2sq;
            max_over = max_over.max(row.overshoot);
            max_abs_phi = max_abs_phi.max(row.phi_max_abs);
        }
        rows.push(ContinuationRow {
            delta,
            overshoot_integral: integral,
            max_abs_phi,
            max_overshoot: max_over,
        });
    }
    Ok(rows)
}

/// Fit the discrete 1/2-Hölder constant of the mean-phase trajectory:
/// the largest `|m(t_a) - m(t_b)| / |t_a - t_b|^{1/2}` over recorded pairs
/// (subsampled for long ledgers).
pub fn holder_constant(rows: &[LedgerRow]) -> f64 {
    if rows.len() < 2 {
        return 0.0;
    }
    let stride = (rows.len() / 200).max(1);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .step_by(stride)
        .map(|r| (r.t, r.phi_mean))
        .collect();
    let mut c = 0.0_f64;
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            let dt = (pts[b].0 - pts[a].0).abs();
            if dt > 0.0 {
                c = c.max((pts[b].1 - pts[a].1).abs() / dt.sqrt());
            }
        }
    }
    c
}
