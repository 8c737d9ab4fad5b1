//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`; failures also panic with the
//! same detail).

use chb_core::evolution::{
    self, FlowMode, InitialData, LedgerRow, ModelParams, RunSpec,
};
use chb_core::flow::{
    coef_times_grad, divergence_lift, solve_brinkman, solve_darcy, BrinkmanProblem, DarcyParams,
    ProfileKind, Side, ViscosityProfile,
};
use chb_core::grid::{div, Grid2d, ScalarField, VectorField};
use chb_core::nutrient::{default_consumption, solve_nutrient, NutrientProblem};
use chb_core::potentials::{self, PotentialSpec};
use chb_core::sources::{self, ExtensionKind, SourceModel};
use chb_core::stationary::{solve_stationary, StationaryConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

/// Heavy criteria take this lock so their wall-clock budgets are measured
/// without competing for cores.
static HEAVY: Mutex<()> = Mutex::new(());

fn verdict(criterion: usize, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {tag} — {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn r_grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Criterion 1: two-sided obstacle bounds, logarithmic barrier/derivative
/// bounds, and the linear-growth bound with c1 = theta and derived c2, all
/// margin >= 0 over a 10^4-point r grid and the admissible widths.
#[test]
fn criterion_01_potential_inequality_suite() {
    let t0 = Instant::now();
    let rs = r_grid(10_000, -5.0, 5.0);
    let all = [0.2, 0.1, 0.05, 0.01, 0.001];
    let mut fails = Vec::new();

    let obst: Vec<f64> = all.iter().copied().filter(|&d| d < 0.25).collect();
    let reports = potentials::sweep_obstacle_bounds(&rs, &obst).unwrap();
    for (name, rep) in ["lower", "upper", "derivative", "sign"].iter().zip(&reports) {
        if rep.worst_margin < 0.0 {
            fails.push(format!(
                "obstacle {name} bound violated by {:.3e} at r={}, delta={}",
                rep.worst_margin, rep.worst_r, rep.worst_delta
            ));
        }
    }

    let (theta, theta_c) = (1.0f64, 2.0f64);
    let cap = (theta / (4.0 * theta_c)).min(1.0);
    let logd: Vec<f64> = all.iter().copied().filter(|&d| d <= cap).collect();
    let reports = potentials::sweep_log_bounds(theta, theta_c, &rs, &logd).unwrap();
    for (name, rep) in ["barrier", "derivative"].iter().zip(&reports) {
        if rep.worst_margin < 0.0 {
            fails.push(format!(
                "logarithmic {name} bound violated by {:.3e} at r={}, delta={}",
                rep.worst_margin, rep.worst_r, rep.worst_delta
            ));
        }
    }
    let c2 = potentials::derive_log_growth_c2(theta, theta_c, &logd).unwrap();
    let growth = potentials::sweep_log_growth(theta, theta_c, c2, &rs, &logd).unwrap();
    if growth.worst_margin < 0.0 {
        fails.push(format!(
            "growth bound (c1 = theta, c2 = {c2:.4e}) violated by {:.3e}",
            growth.worst_margin
        ));
    }

    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 5.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 5s"));
    }
    verdict(
        1,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "all potential inequality margins >= 0 over {} r-points x {} widths (obstacle) \
                 and {} widths (log, c2 = {c2:.4e}); {elapsed:.2}s",
                rs.len(),
                obst.len(),
                logd.len()
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Criterion 2: interaction growth bound for the log-extension growth model,
/// `(r Gamma_v - Gamma_phi) beta_delta(r) >= -C (1 + |s| + |r|)` with a
/// pre-derived C, zero violations on r in [-3,3], s in [0,2].
#[test]
fn criterion_02_interaction_growth_bound() {
    let t0 = Instant::now();
    let (theta, theta_c) = (1.0, 2.0);
    let model =
        SourceModel::example(1.0, 0.5, 0.25, 1.0, ExtensionKind::Logarithmic { r0: 1.5 }).unwrap();
    let deltas = [0.05, 0.01];
    let c = sources::derive_interaction_constant(&model, theta, theta_c, &deltas).unwrap();
    let rs = r_grid(601, -3.0, 3.0);
    let ss = r_grid(81, 0.0, 2.0);
    let margin =
        sources::sweep_interaction_bound(&model, theta, theta_c, c, &rs, &ss, &deltas).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        2,
        margin >= 0.0 && elapsed < 5.0,
        format!(
            "worst margin {margin:.3e} with C = {c:.4e} over {}x{} samples x {} widths; \
             {elapsed:.2}s",
            rs.len(),
            ss.len(),
            deltas.len()
        ),
    );
}

/// Analytic 1D slab profile for constant consumption c^2 and Robin K.
fn analytic_slab(c: f64, k: f64, l: f64, x: f64) -> f64 {
    let d = c * (c * l / 2.0).sinh() + k * (c * l / 2.0).cosh();
    k * (c * (x - l / 2.0)).cosh() / d
}

/// Criterion 3: nutrient solver — trivial state, 1D Robin slab convergence
/// order >= 1.9, and the maximum principle on 100 random phase fields.
#[test]
fn criterion_03_nutrient_solver() {
    let t0 = Instant::now();
    let mut fails = Vec::new();

    // h == 0 forces sigma == 1.
    let g = Grid2d::new(64, 64, 1.0, 1.0).unwrap();
    let phi = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() * y);
    let h0 = |_: f64| 0.0;
    let sigma = solve_nutrient(&NutrientProblem {
        phi: &phi,
        h_profile: &h0,
        k: 1.0,
        slab_1d: false,
    })
    .unwrap();
    let dev = sigma
        .data
        .iter()
        .fold(0.0f64, |m, &v| m.max((v - 1.0).abs()));
    if dev > 1e-10 {
        fails.push(format!("sigma deviates from 1 by {dev:.3e} with zero consumption"));
    }

    // 1D Robin slab against the closed form.
    let (c, k, l) = (2.0f64, 1.5f64, 1.0f64);
    let mut errs = Vec::new();
    for nx in [32usize, 64, 128] {
        let g = Grid2d::new(nx, 4, l, 1.0).unwrap();
        let phi = ScalarField::zeros(g);
        let h = move |_: f64| c * c;
        let sigma = solve_nutrient(&NutrientProblem {
            phi: &phi,
            h_profile: &h,
            k,
            slab_1d: true,
        })
        .unwrap();
        let mut err = 0.0f64;
        for i in 0..g.nx {
            err = err.max((sigma.at(i, 1) - analytic_slab(c, k, l, g.xc(i))).abs());
        }
        errs.push(err);
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    if orders.iter().any(|&o| o < 1.9) {
        fails.push(format!("slab orders {orders:?} below 1.9 (errors {errs:?})"));
    }

    // Maximum principle on randomized fields.
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let g = Grid2d::new(32, 32, 1.0, 1.0).unwrap();
    for trial in 0..100 {
        let data: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let phi = ScalarField { grid: g, data };
        let h0 = rng.gen_range(0.1..5.0);
        let k = rng.gen_range(0.1..5.0);
        let h = default_consumption(h0);
        let sigma = solve_nutrient(&NutrientProblem {
            phi: &phi,
            h_profile: &h,
            k,
            slab_1d: false,
        })
        .unwrap();
        if sigma.min() < -1e-10 || sigma.max() > 1.0 + 1e-10 {
            fails.push(format!(
                "trial {trial}: sigma in [{:.3e}, {:.3e}]",
                sigma.min(),
                sigma.max()
            ));
            break;
        }
    }

    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 30s"));
    }
    verdict(
        3,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "sigma==1 to {dev:.1e}; slab orders {:.2}/{:.2}; bounds hold on 100 random \
                 fields; {elapsed:.2}s",
                orders[0], orders[1]
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Criterion 4: Brinkman solver — zero data, the constant-viscosity radial
/// expansion oracle at 64^2 within 1e-8 relative, and manufactured
/// variable-viscosity convergence order >= 1.5.
#[test]
fn criterion_04_brinkman_solver() {
    let _lock = HEAVY.lock().unwrap();
    let t0 = Instant::now();
    let mut fails = Vec::new();

    // Zero data.
    let g = Grid2d::new(24, 24, 1.0, 1.0).unwrap();
    let c = ScalarField::zeros(g);
    let f = VectorField::zeros(g);
    let src = ScalarField::zeros(g);
    let (v, p) = solve_brinkman(&BrinkmanProblem {
        c: &c,
        f: &f,
        g: &src,
        nu: 1.0,
        profile: ViscosityProfile::constant(1.0, 0.5).unwrap(),
        traction: None,
    })
    .unwrap();
    if v.max_abs() > 1e-12 || p.data.iter().any(|x| x.abs() > 1e-12) {
        fails.push(format!("zero data gave |v| up to {:.3e}", v.max_abs()));
    }

    // Radial expansion oracle at 64^2: v = (g0/2)(x-xc, y-yc),
    // p = g0 (eta + lambda).
    let g = Grid2d::new(64, 64, 1.0, 1.0).unwrap();
    let (g0, nu, eta, lam) = (0.7, 2.3, 1.1, 0.4);
    let c = ScalarField::zeros(g);
    let f = VectorField::from_fns(
        g,
        |x, _| nu * 0.5 * g0 * (x - 0.5),
        |_, y| nu * 0.5 * g0 * (y - 0.5),
    );
    let src = ScalarField::constant(g, g0);
    let (v, p) = solve_brinkman(&BrinkmanProblem {
        c: &c,
        f: &f,
        g: &src,
        nu,
        profile: ViscosityProfile::constant(eta, lam).unwrap(),
        traction: None,
    })
    .unwrap();
    let vex = VectorField::from_fns(g, |x, _| 0.5 * g0 * (x - 0.5), |_, y| 0.5 * g0 * (y - 0.5));
    let verr = v
        .u
        .iter()
        .zip(&vex.u)
        .chain(v.w.iter().zip(&vex.w))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / g0;
    let pex = g0 * (eta + lam);
    let perr = p
        .data
        .iter()
        .fold(0.0f64, |m, &x| m.max((x - pex).abs() / pex.abs()));
    if verr > 1e-8 || perr > 1e-8 {
        fails.push(format!("radial oracle errors v {verr:.3e}, p {perr:.3e}"));
    }

    // Manufactured variable-viscosity solution over three refinements.
    use std::f64::consts::PI;
    let nu = 1.0;
    let profile = ViscosityProfile::new(0.5, 2.0, 0.7, ProfileKind::LinearInPhi).unwrap();
    let uex = |x: f64, y: f64| (PI * x).sin() * (PI * y).cos();
    let wex = |x: f64, y: f64| (PI * x).cos() * (PI * y).sin();
    let pexf = |x: f64, y: f64| (PI * x).cos() * (PI * y).cos();
    let cex = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let ux = |x: f64, y: f64| PI * (PI * x).cos() * (PI * y).cos();
    let uy = |x: f64, y: f64| -PI * (PI * x).sin() * (PI * y).sin();
    let wx = |x: f64, y: f64| -PI * (PI * x).sin() * (PI * y).sin();
    let wy = |x: f64, y: f64| PI * (PI * x).cos() * (PI * y).cos();
    let etaf = move |x: f64, y: f64| profile.eta(cex(x, y));
    let lamf = move |x: f64, y: f64| profile.lambda(cex(x, y));
    let sxx =
        move |x: f64, y: f64| 2.0 * etaf(x, y) * ux(x, y) + lamf(x, y) * (ux(x, y) + wy(x, y)) - pexf(x, y);
    let syy =
        move |x: f64, y: f64| 2.0 * etaf(x, y) * wy(x, y) + lamf(x, y) * (ux(x, y) + wy(x, y)) - pexf(x, y);
    let sxy = move |x: f64, y: f64| etaf(x, y) * (uy(x, y) + wx(x, y));
    let h = 1e-5;
    let fx = move |x: f64, y: f64| {
        -((sxx(x + h, y) - sxx(x - h, y)) / (2.0 * h)
            + (sxy(x, y + h) - sxy(x, y - h)) / (2.0 * h))
            + nu * uex(x, y)
    };
    let fy = move |x: f64, y: f64| {
        -((sxy(x + h, y) - sxy(x - h, y)) / (2.0 * h)
            + (syy(x, y + h) - syy(x, y - h)) / (2.0 * h))
            + nu * wex(x, y)
    };
    let gsrc = move |x: f64, y: f64| ux(x, y) + wy(x, y);
    let trac = move |x: f64, y: f64, side: Side| match side {
        Side::Left => (-sxx(x, y), -sxy(x, y)),
        Side::Right => (sxx(x, y), sxy(x, y)),
        Side::Bottom => (-sxy(x, y), -syy(x, y)),
        Side::Top => (sxy(x, y), syy(x, y)),
    };
    let mut errs = Vec::new();
    for n in [16usize, 32, 64] {
        let g = Grid2d::new(n, n, 1.0, 1.0).unwrap();
        let c = ScalarField::from_fn(g, cex);
        let f = VectorField::from_fns(g, fx, fy);
        let src = ScalarField::from_fn(g, gsrc);
        let (v, _) = solve_brinkman(&BrinkmanProblem {
            c: &c,
            f: &f,
            g: &src,
            nu,
            profile,
            traction: Some(&trac),
        })
        .unwrap();
        let vex = VectorField::from_fns(g, uex, wex);
        errs.push(v.add_scaled(-1.0, &vex).unwrap().norm_l2());
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    if orders.iter().any(|&o| o < 1.5) {
        fails.push(format!("manufactured orders {orders:?} below 1.5 (errors {errs:?})"));
    }

    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 2min"));
    }
    verdict(
        4,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "zero data exact; radial oracle within {:.1e}; manufactured orders \
                 {:.2}/{:.2}; {elapsed:.2}s",
                verr.max(perr),
                orders[0],
                orders[1]
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Criterion 5: divergence lift reproduces the prescribed divergence to
/// solver tolerance with the expected uniform boundary flux, for 20 random
/// sources.
#[test]
fn criterion_05_divergence_lift() {
    let t0 = Instant::now();
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = Grid2d::new(32, 28, 1.2, 0.9).unwrap();
    let mut worst_div = 0.0f64;
    let mut worst_flux = 0.0f64;
    for trial in 0..20 {
        let data: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let f = ScalarField { grid: g, data };
        let (u, gn) = divergence_lift(&f, 1e-12).unwrap();
        let d = div(&u);
        let derr = d
            .data
            .iter()
            .zip(&f.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let flux_err = (gn - f.integral() / g.boundary_length()).abs();
        worst_div = worst_div.max(derr);
        worst_flux = worst_flux.max(flux_err);
        if derr > 1e-8 || flux_err > 1e-8 {
            fails.push(format!("trial {trial}: div defect {derr:.3e}, flux error {flux_err:.3e}"));
            break;
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 30s"));
    }
    verdict(
        5,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "20 random sources: worst div defect {worst_div:.3e}, worst flux error \
                 {worst_flux:.3e}; {elapsed:.2}s"
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Criterion 6: with sources, chemotaxis, and flow disabled, the discrete
/// free energy is non-increasing over 200 steps from 10 random initial
/// fields on a 64^2 grid.
#[test]
fn criterion_06_energy_stability() {
    let _lock = HEAVY.lock().unwrap();
    let t0 = Instant::now();
    let g = Grid2d::new(64, 64, 1.0, 1.0).unwrap();
    let dt = evolution::default_dt(g);
    let mut fails = Vec::new();
    let mut max_rise = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let data: Vec<f64> = (0..g.n_cells()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let spec = RunSpec {
            grid: g,
            params: ModelParams::uncoupled(PotentialSpec::double_obstacle(0.05).unwrap()),
            t_end: 200.0 * dt,
            dt: Some(dt),
            initial: InitialData::Field(ScalarField { grid: g, data }),
            record_every: 0,
            max_steps: 200,
        };
        let traj = evolution::run(&spec).unwrap();
        assert_eq!(traj.ledger.len(), 200);
        for w in traj.ledger.windows(2) {
            let rise = w[1].energy - w[0].energy;
            max_rise = max_rise.max(rise);
            if rise > 0.0 {
                fails.push(format!(
                    "seed {seed}: energy rose by {rise:.3e} at step {}",
                    w[1].step
                ));
                break;
            }
        }
        if !fails.is_empty() {
            break;
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 2min"));
    }
    verdict(
        6,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "energy non-increasing over 200 steps x 10 random fields at 64^2 (largest \
                 step-to-step change {max_rise:.3e} <= 0); {elapsed:.2}s"
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Fully coupled growth scenario used by the mass-identity study.
fn coupled_params(potential: PotentialSpec) -> ModelParams {
    ModelParams {
        potential,
        source: SourceModel::example(1.0, 0.4, 0.5, 1.5, ExtensionKind::Obstacle).unwrap(),
        chi: 0.3,
        nutrient_k: 1.0,
        consumption_h0: 1.0,
        flow: FlowMode::Brinkman {
            nu: 1.0,
            profile: ViscosityProfile::constant(1.0, 0.0).unwrap(),
        },
        newton_tol: 1e-11,
        newton_max_iter: 60,
    }
}

/// Criterion 7: the per-step mass identity defect halves (within 20%) when
/// the time step halves, over three dt levels on a fixed coupled run.
#[test]
fn criterion_07_mass_identity_defect() {
    let _lock = HEAVY.lock().unwrap();
    let t0 = Instant::now();
    let g = Grid2d::new(16, 16, 1.0, 1.0).unwrap();
    use std::f64::consts::PI;
    let phi0 = ScalarField::from_fn(g, |x, y| 0.2 + 0.3 * (PI * x).cos() * (PI * y).cos());
    let mut defects = Vec::new();
    for k in 0..3 {
        let dt = 2e-4 / f64::powi(2.0, k);
        let spec = RunSpec {
            grid: g,
            params: coupled_params(PotentialSpec::double_obstacle(0.05).unwrap()),
            t_end: 2e-3,
            dt: Some(dt),
            initial: InitialData::Field(phi0.clone()),
            record_every: 0,
            max_steps: 100_000,
        };
        let traj = evolution::run(&spec).unwrap();
        let wsum: f64 = traj.ledger.iter().map(|r| r.dt).sum();
        defects.push(
            traj.ledger
                .iter()
                .map(|r| r.dt * r.mass_defect.abs())
                .sum::<f64>()
                / wsum,
        );
    }
    let ratios = [defects[0] / defects[1], defects[1] / defects[2]];
    let ok = ratios.iter().all(|&r| (1.6..=2.4).contains(&r));
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        7,
        ok && elapsed < 180.0,
        format!(
            "defects {:.3e}/{:.3e}/{:.3e} over dt halvings, ratios {:.2}/{:.2} (target 2 +- \
             20%); {elapsed:.2}s",
            defects[0], defects[1], defects[2], ratios[0], ratios[1]
        ),
    );
}

/// One run of the continuation scenario: returns the ledger. The
/// obstacle-case runs use strong proliferation so the overshoot functional
/// is measurably positive; the log-case runs use moderate growth (the
/// regularized barrier is only affine beyond 1 - delta, so unbounded forcing
/// can defeat it).
fn continuation_run(potential: PotentialSpec, kind: ExtensionKind) -> Vec<LedgerRow> {
    let g = Grid2d::new(32, 32, 1.0, 1.0).unwrap();
    let (source, chi, width) = match kind {
        ExtensionKind::Obstacle => (
            SourceModel::example(2.0, 0.5, 0.5, 2.0, kind).unwrap(),
            0.5,
            0.04,
        ),
        ExtensionKind::Logarithmic { .. } => (
            SourceModel::example(1.0, 0.5, 0.25, 1.0, kind).unwrap(),
            0.1,
            0.1,
        ),
    };
    let spec = RunSpec {
        grid: g,
        params: ModelParams {
            potential,
            source,
            chi,
            nutrient_k: 1.0,
            consumption_h0: 1.0,
            flow: FlowMode::Brinkman {
                nu: 1.0,
                profile: ViscosityProfile::constant(1.0, 0.0).unwrap(),
            },
            newton_tol: 1e-11,
            newton_max_iter: 60,
        },
        t_end: 0.01,
        dt: Some(1e-4),
        initial: InitialData::TanhSeed {
            radius: 0.35,
            width,
            cx: 0.5,
            cy: 0.5,
        },
        record_every: 0,
        max_steps: 100_000,
    };
    evolution::run(&spec).unwrap().ledger
}

struct ContinuationData {
    /// (delta, overshoot integral, ledger) per obstacle-case width.
    obstacle: Vec<(f64, f64, Vec<LedgerRow>)>,
    /// (delta, max |phi|, ledger) per log-case width.
    log: Vec<(f64, f64, Vec<LedgerRow>)>,
}

static CONTINUATION: OnceLock<ContinuationData> = OnceLock::new();

fn continuation_data() -> &'static ContinuationData {
    CONTINUATION.get_or_init(|| {
        let deltas = [1e-1, 3e-2, 1e-2];
        let obstacle = deltas
            .map(|d| {
                let ledger = continuation_run(
                    PotentialSpec::double_obstacle(d).unwrap(),
                    ExtensionKind::Obstacle,
                );
                let integral: f64 = ledger.iter().map(|r| r.dt * r.overshoot_l2sq).sum();
                (d, integral, ledger)
            })
            .to_vec();
        let log = deltas
            .map(|d| {
                let ledger = continuation_run(
                    PotentialSpec::logarithmic(1.5, 2.0, d).unwrap(),
                    ExtensionKind::Logarithmic { r0: 1.5 },
                );
                let max_abs = ledger.iter().fold(0.0f64, |m, r| m.max(r.phi_max_abs));
                (d, max_abs, ledger)
            })
            .to_vec();
        ContinuationData { obstacle, log }
    })
}

/// Criterion 8: the obstacle-case overshoot functional decreases strictly
/// across delta in {1e-1, 3e-2, 1e-2} with O(delta)/delta bounded within a
/// factor 10, and the matching log-case runs keep |phi| < 1 everywhere.
#[test]
fn criterion_08_delta_continuation() {
    let lock = HEAVY.lock().unwrap();
    let t0 = Instant::now();
    let data = continuation_data();
    drop(lock);
    let mut fails = Vec::new();

    for w in data.obstacle.windows(2) {
        if w[1].1 >= w[0].1 {
            fails.push(format!(
                "overshoot did not decrease: O({:.0e}) = {:.4e} vs O({:.0e}) = {:.4e}",
                w[0].0, w[0].1, w[1].0, w[1].1
            ));
        }
    }
    let ratios: Vec<f64> = data.obstacle.iter().map(|(d, o, _)| o / d).collect();
    let (rmin, rmax) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    if rmax > 10.0 * rmin {
        fails.push(format!(
            "O(delta)/delta spans more than a factor 10: {ratios:?}"
        ));
    }
    for (d, max_abs, _) in &data.log {
        if *max_abs >= 1.0 {
            fails.push(format!("log case delta={d:.0e}: max|phi| = {max_abs} >= 1"));
        }
    }

    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 600.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 10min"));
    }
    let os: Vec<String> = data
        .obstacle
        .iter()
        .map(|(d, o, _)| format!("O({d:.0e})={o:.3e}"))
        .collect();
    verdict(
        8,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "{} strictly decreasing; O/delta in [{rmin:.3e}, {rmax:.3e}] (spread {:.2}); \
                 log-case max|phi| = {:.6} < 1; {elapsed:.2}s",
                os.join(", "),
                rmax / rmin,
                data.log.iter().fold(0.0f64, |m, (_, a, _)| m.max(*a))
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Criterion 9: the phase mean stays strictly inside (-1, 1) at every
/// recorded step of the criterion-8 runs.
#[test]
fn criterion_09_mean_confinement() {
    let lock = HEAVY.lock().unwrap();
    let data = continuation_data();
    drop(lock);
    let mut fails = Vec::new();
    let mut span = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rows = 0usize;
    for (label, runs) in [("obstacle", &data.obstacle), ("log", &data.log)] {
        for (d, _, ledger) in runs.iter() {
            for r in ledger {
                rows += 1;
                span = (span.0.min(r.phi_mean), span.1.max(r.phi_mean));
                if !(r.phi_mean > -1.0 && r.phi_mean < 1.0) {
                    fails.push(format!(
                        "{label} delta={d:.0e} step {}: mean phi = {}",
                        r.step, r.phi_mean
                    ));
                }
            }
        }
    }
    verdict(
        9,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "mean phi within ({:.4}, {:.4}) over {rows} recorded steps of 6 runs",
                span.0, span.1
            )
        } else {
            fails.join("; ")
        },
    );
}

/// Criterion 10: the Brinkman velocity approaches the Darcy velocity
/// monotonically as the viscosity scale shrinks, on a fixed field snapshot.
#[test]
fn criterion_10_darcy_limit() {
    let t0 = Instant::now();
    let g = Grid2d::new(32, 32, 1.0, 1.0).unwrap();
    let (nu, chi) = (1.0, 0.2);
    let spec = RunSpec {
        grid: g,
        params: ModelParams {
            potential: PotentialSpec::double_obstacle(0.01).unwrap(),
            source: SourceModel::example(1.0, 0.5, 0.25, 1.0, ExtensionKind::Obstacle).unwrap(),
            chi,
            nutrient_k: 1.0,
            consumption_h0: 1.0,
            flow: FlowMode::Darcy { nu },
            newton_tol: 1e-11,
            newton_max_iter: 60,
        },
        t_end: 1.0,
        dt: None,
        initial: InitialData::TanhSeed {
            radius: 0.25,
            width: 0.1,
            cx: 0.5,
            cy: 0.5,
        },
        record_every: 0,
        max_steps: 1,
    };
    let state = evolution::initial_state(&spec).unwrap();
    let gamma_v = {
        let mut f = ScalarField::zeros(g);
        for (k, v) in f.data.iter_mut().enumerate() {
            *v = spec
                .params
                .source
                .gamma_v(state.phi.data[k], state.sigma.data[k]);
        }
        f
    };
    let coef = state.mu.add_scaled(chi, &state.sigma).unwrap();
    let force = coef_times_grad(&coef, &state.phi);
    let (v_darcy, _) = solve_darcy(
        &state.mu,
        &state.sigma,
        &state.phi,
        &gamma_v,
        DarcyParams { chi, nu, tol: 1e-12 },
    )
    .unwrap();

    let mut gaps = Vec::new();
    for dv in [1e-1, 1e-2, 1e-3] {
        let (v_b, _) = solve_brinkman(&BrinkmanProblem {
            c: &state.phi,
            f: &force,
            g: &gamma_v,
            nu,
            profile: ViscosityProfile::constant(dv, 0.0).unwrap(),
            traction: None,
        })
        .unwrap();
        gaps.push(v_b.add_scaled(-1.0, &v_darcy).unwrap().norm_l2());
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let elapsed = t0.elapsed().as_secs_f64();
    verdict(
        10,
        monotone && elapsed < 120.0,
        format!(
            "||v_brinkman - v_darcy|| = {:.4e} / {:.4e} / {:.4e} for viscosity scales \
             1e-1/1e-2/1e-3; {elapsed:.2}s",
            gaps[0], gaps[1], gaps[2]
        ),
    );
}

/// Criterion 11: the stationary solver converges with residuals below 1e-7
/// on (a) a uniform trivial fixed point and (b) a coupled obstacle-case
/// scenario at delta = 1e-2 on 48^2, with the mean identity, nutrient
/// bounds, inactive stabilizer, and confined phase mean.
#[test]
fn criterion_11_stationary_states() {
    let _lock = HEAVY.lock().unwrap();
    let t0 = Instant::now();
    let g = Grid2d::new(48, 48, 1.0, 1.0).unwrap();
    let mut fails = Vec::new();

    // (a) the uniform trivial fixed point (no sources).
    let params_a = ModelParams::uncoupled(PotentialSpec::double_obstacle(0.01).unwrap());
    let cfg_a = StationaryConfig::new(params_a);
    let phi0 = ScalarField::constant(g, 0.4);
    let out_a = solve_stationary(&cfg_a, &phi0).unwrap();
    let res_a = out_a
        .residual
        .max_field()
        .max(out_a.residual.r_mean / g.volume());
    if !out_a.converged || res_a >= 1e-7 {
        fails.push(format!(
            "uniform fixed point: converged={} residual {res_a:.3e}",
            out_a.converged
        ));
    }

    // (b) the coupled obstacle-case scenario.
    let params_b = ModelParams {
        potential: PotentialSpec::double_obstacle(0.01).unwrap(),
        source: SourceModel::example(0.5, 0.2, 0.25, 1.0, ExtensionKind::Obstacle).unwrap(),
        chi: 0.1,
        nutrient_k: 1.0,
        consumption_h0: 0.5,
        flow: FlowMode::Brinkman {
            nu: 1.0,
            profile: ViscosityProfile::constant(1.0, 0.0).unwrap(),
        },
        newton_tol: 1e-11,
        newton_max_iter: 60,
    };
    let cfg_b = StationaryConfig::new(params_b);
    let phi0 = ScalarField::constant(g, 0.1);
    let out_b = solve_stationary(&cfg_b, &phi0).unwrap();
    let rb = &out_b.residual;
    if !out_b.converged || rb.max_field() >= 1e-7 {
        fails.push(format!(
            "coupled case: converged={} r_phi={:.3e} r_mu={:.3e} r_sigma={:.3e} r_flow={:.3e}",
            out_b.converged, rb.r_phi, rb.r_mu, rb.r_sigma, rb.r_flow
        ));
    }
    if rb.r_mean > 1e-6 * g.volume() {
        fails.push(format!("mean identity defect {:.3e}", rb.r_mean));
    }
    if out_b.sigma.min() < -1e-10 || out_b.sigma.max() > 1.0 + 1e-10 {
        fails.push(format!(
            "sigma in [{:.3e}, {:.3e}]",
            out_b.sigma.min(),
            out_b.sigma.max()
        ));
    }
    if out_b.stabilizer != 0.0 {
        fails.push(format!("stabilizer active: F = {:.3e}", out_b.stabilizer));
    }
    let mean = out_b.phi.mean();
    if !(mean > -1.0 && mean < 1.0) {
        fails.push(format!("mean phi = {mean}"));
    }

    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed >= 600.0 {
        fails.push(format!("runtime {elapsed:.2}s exceeds 10min"));
    }
    verdict(
        11,
        fails.is_empty(),
        if fails.is_empty() {
            format!(
                "uniform fixed point residual {res_a:.3e}; coupled case r_phi={:.3e}, mean \
                 identity {:.3e}, sigma in [{:.4}, {:.4}], F inactive, mean phi = {mean:.4}; \
                 {elapsed:.2}s",
                rb.r_phi,
                rb.r_mean,
                out_b.sigma.min(),
                out_b.sigma.max()
            )
        } else {
            fails.join("; ")
        },
    );
}
