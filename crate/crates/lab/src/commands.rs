//! The six experiment commands and their artifact emission.

use crate::config::{
    build_params, build_run_spec, build_stationary, RunConfig,
};
use crate::output::OutputDir;
use anyhow::Result;
use chb_core::error::CoreError;
use chb_core::evolution::{self, initial_state, SimState, Trajectory};
use chb_core::flow::{
    coef_times_grad, solve_brinkman, solve_darcy, BrinkmanProblem, DarcyParams, ProfileKind,
    ViscosityProfile,
};
use chb_core::potentials::{self, PotentialSpec};
use chb_core::sources;
use serde::Serialize;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Failure classes mapped to process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("property violation: {0}")]
    Property(String),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Solver(_) => 3,
            LabError::Property(_) => 4,
        }
    }
}

/// Classify a core error into an exit-code class.
pub fn classify(err: CoreError) -> LabError {
    match err {
        CoreError::InvalidParameter(m) => LabError::Config(m),
        CoreError::PropertyViolation(m) => LabError::Property(m),
        other => LabError::Solver(format!("{other}")),
    }
}

/// A pass/fail property check accumulated into `summary.txt`.
struct Checks {
    lines: Vec<String>,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            lines: Vec::new(),
            failed: Vec::new(),
        }
    }

    fn note(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        self.lines.push(format!("[{tag}] {name}: {detail}"));
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn finish(self, out: &mut OutputDir) -> Result<(), LabError> {
        let text = self.lines.join("\n") + "\n";
        out.write_text("summary.txt", &text)
            .map_err(|e| LabError::Config(format!("{e}")))?;
        if self.failed.is_empty() {
            Ok(())
        } else {
            Err(LabError::Property(format!(
                "failed checks: {}",
                self.failed.join(", ")
            )))
        }
    }
}

fn io_err(e: anyhow::Error) -> LabError {
    LabError::Config(format!("{e}"))
}

fn snapshot_vtk(out: &mut OutputDir, state: &SimState, step: usize) -> Result<(), LabError> {
    out.write_vtk(
        &format!("phi_{step:06}.vtk"),
        &[("phi", &state.phi), ("mu", &state.mu), ("sigma", &state.sigma)],
    )
    .map_err(io_err)
}

/// Worker pool over the items of a sweep: runs `work(i)` for every index,
/// using at most `CHB_LAB_THREADS` threads (default: available parallelism).
pub fn fan_out<T: Send>(
    n: usize,
    work: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let threads = std::env::var("CHB_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
        .min(n.max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = work(i);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker completed every index"))
        .collect()
}

/// Time evolution run: ledger CSV, snapshots, and property checks.
pub fn simulate(cfg: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = OutputDir::new(out_dir).map_err(io_err)?;
    let spec = build_run_spec(cfg).map_err(io_err)?;
    let traj: Trajectory = evolution::run(&spec).map_err(classify)?;

    out.write_ledger("ledger.csv", &traj.ledger).map_err(io_err)?;
    for snap in &traj.snapshots {
        snapshot_vtk(&mut out, snap, snap.step_count)?;
    }
    snapshot_vtk(&mut out, &traj.final_state, traj.final_state.step_count)?;

    let mut checks = Checks::new();
    let fin = &traj.final_state;
    checks.note(format!(
        "simulate: {} steps to t = {:.6e} on a {}x{} grid",
        fin.step_count, fin.t, cfg.grid.nx, cfg.grid.ny
    ));
    checks.note(format!(
        "final: mean(phi) = {:.6e}, max|phi| = {:.6e}, overshoot = {:.3e}",
        fin.phi_mean(),
        fin.phi.data.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        fin.overshoot()
    ));
    checks.check(
        "fields finite",
        fin.is_finite(),
        "all final fields are finite".into(),
    );
    let (smin, smax) = (fin.sigma.min(), fin.sigma.max());
    checks.check(
        "nutrient bounds",
        (-1e-9..=1.0 + 1e-9).contains(&smin) && smax <= 1.0 + 1e-9,
        format!("sigma in [{smin:.3e}, {smax:.3e}] (maximum principle)"),
    );
    if cfg.potential.kind == "log" {
        let pmax = fin.phi.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        checks.check(
            "phase interior",
            pmax < 1.0,
            format!("max|phi| = {pmax:.6e} < 1 (logarithmic barrier)"),
        );
    }
    let uncoupled = !cfg.source.enabled && cfg.nutrient.chi == 0.0 && cfg.flow.mode == "off";
    if uncoupled {
        let monotone = traj
            .ledger
            .windows(2)
            .all(|w| w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs().max(1.0));
        checks.check(
            "energy decay",
            monotone,
            "free energy non-increasing without sources".into(),
        );
    }
    let holder = evolution::holder_constant(&traj.ledger);
    checks.note(format!("mean-phase 1/2-Hoelder constant: {holder:.6e}"));

    let res = checks.finish(&mut out);
    out.finish_with(cfg, "simulate").map_err(io_err)?;
    res
}

#[derive(Serialize)]
struct StationaryReport {
    converged: bool,
    outer_iterations: usize,
    r_phi: f64,
    r_mu: f64,
    r_sigma: f64,
    r_flow: f64,
    r_mean: f64,
    stabilizer: f64,
    phi_mean: f64,
    sigma_min: f64,
    sigma_max: f64,
}

/// Stationary solve: converged fields, residual report, property checks.
pub fn stationary(cfg: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = OutputDir::new(out_dir).map_err(io_err)?;
    let spec = build_run_spec(cfg).map_err(io_err)?;
    let phi0 = initial_state(&spec).map_err(classify)?.phi;
    let scfg = build_stationary(cfg).map_err(io_err)?;
    let state = match cfg.stationary.strategy.as_str() {
        "pseudotime" => chb_core::stationary::solve_stationary_pseudotime(
            &scfg,
            spec.grid,
            &phi0,
            cfg.stationary.horizon,
        ),
        _ => chb_core::stationary::solve_stationary(&scfg, &phi0),
    }
    .map_err(classify)?;

    out.write_vtk(
        "stationary.vtk",
        &[
            ("phi", &state.phi),
            ("mu", &state.mu),
            ("sigma", &state.sigma),
            ("p", &state.p),
        ],
    )
    .map_err(io_err)?;
    let report = StationaryReport {
        converged: state.converged,
        outer_iterations: state.history.len(),
        r_phi: state.residual.r_phi,
        r_mu: state.residual.r_mu,
        r_sigma: state.residual.r_sigma,
        r_flow: state.residual.r_flow,
        r_mean: state.residual.r_mean,
        stabilizer: state.stabilizer,
        phi_mean: state.phi.mean(),
        sigma_min: state.sigma.min(),
        sigma_max: state.sigma.max(),
    };
    out.write_json("stationary.json", &report).map_err(io_err)?;

    let vol = state.phi.grid.volume();
    let mut checks = Checks::new();
    checks.note(format!(
        "stationary ({}): {} outer iterations",
        cfg.stationary.strategy,
        state.history.len()
    ));
    checks.check(
        "outer convergence",
        state.converged,
        format!("last update {:.3e}", state.history.last().copied().unwrap_or(0.0)),
    );
    checks.check(
        "residuals",
        state.residual.max_field() < 100.0 * cfg.stationary.tol.max(1e-9),
        format!(
            "r_phi={:.3e} r_mu={:.3e} r_sigma={:.3e} r_flow={:.3e}",
            state.residual.r_phi,
            state.residual.r_mu,
            state.residual.r_sigma,
            state.residual.r_flow
        ),
    );
    checks.check(
        "mean identity",
        state.residual.r_mean <= 1e-6 * vol,
        format!("|int gamma + v.grad phi| = {:.3e}", state.residual.r_mean),
    );
    checks.check(
        "stabilizer inactive",
        state.stabilizer == 0.0,
        format!("F = {:.3e} (mean phi^2 = {:.4})", state.stabilizer, {
            let m: f64 =
                state.phi.data.iter().map(|v| v * v).sum::<f64>() / state.phi.data.len() as f64;
            m
        }),
    );
    checks.check(
        "nutrient bounds",
        state.sigma.min() >= -1e-9 && state.sigma.max() <= 1.0 + 1e-9,
        format!("sigma in [{:.3e}, {:.3e}]", state.sigma.min(), state.sigma.max()),
    );
    let res = checks.finish(&mut out);
    out.finish_with(cfg, "stationary").map_err(io_err)?;
    res
}

/// Default regularization widths for the inequality sweeps, clipped to the
/// admissible range of the configured potential.
fn sweep_deltas(pot_threshold: f64) -> Vec<f64> {
    [0.2, 0.1, 0.05, 0.01, 0.001]
        .into_iter()
        .filter(|&d| d < pot_threshold)
        .collect()
}

/// Pointwise inequality sweep over the regularized potential family.
pub fn potential_check(cfg: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = OutputDir::new(out_dir).map_err(io_err)?;
    let base = crate::config::build_potential(cfg).map_err(io_err)?;
    let deltas = sweep_deltas(base.delta_bound_threshold());
    let n = 10_000usize;
    let rs: Vec<f64> = (0..n).map(|k| -5.0 + 10.0 * k as f64 / (n - 1) as f64).collect();

    let mut checks = Checks::new();
    let mut csv = String::new();
    let mut worst = f64::INFINITY;
    if cfg.potential.kind == "double-obstacle" {
        csv.push_str(
            "r,delta,beta,beta_hat,psi,margin_lower,margin_upper,margin_derivative,margin_sign\n",
        );
        for &delta in &deltas {
            let pot = PotentialSpec::double_obstacle(delta).map_err(classify)?;
            for &r in &rs {
                let b = pot.beta(r);
                let bh = pot.beta_hat(r);
                let bp = pot.beta_prime(r);
                let m = [
                    2.0 * bh - delta * b * b,
                    delta * b * b + 1.0 - 2.0 * bh,
                    bp - delta * bp * bp,
                    r * b - b.abs(),
                ];
                worst = worst.min(m.iter().cloned().fold(f64::INFINITY, f64::min));
                csv.push_str(&format!(
                    "{r:.8e},{delta:.3e},{b:.12e},{bh:.12e},{:.12e},{:.6e},{:.6e},{:.6e},{:.6e}\n",
                    pot.psi(r),
                    m[0],
                    m[1],
                    m[2],
                    m[3]
                ));
            }
        }
        let reports =
            potentials::sweep_obstacle_bounds(&rs, &deltas).map_err(classify)?;
        for (name, rep) in ["lower", "upper", "derivative", "sign"].iter().zip(&reports) {
            checks.check(
                &format!("obstacle bound ({name})"),
                rep.worst_margin >= 0.0,
                format!(
                    "worst margin {:.3e} at r={:.4}, delta={:.3e} over {} samples",
                    rep.worst_margin, rep.worst_r, rep.worst_delta, rep.samples
                ),
            );
        }
    } else {
        let (theta, theta_c) = (cfg.potential.theta, cfg.potential.theta_c);
        let c2 =
            potentials::derive_log_growth_c2(theta, theta_c, &deltas).map_err(classify)?;
        csv.push_str("r,delta,beta,beta_hat,psi,margin_barrier,margin_derivative,margin_growth\n");
        for &delta in &deltas {
            let pot =
                PotentialSpec::logarithmic(theta, theta_c, delta).map_err(classify)?;
            for &r in &rs {
                let b = pot.beta(r);
                let bh = pot.beta_hat(r);
                let bp = pot.beta_prime(r);
                let over = (r.abs() - 1.0).max(0.0);
                let m = [
                    4.0 * delta / theta * bh - over * over,
                    theta * bp - delta * bp * bp,
                    r * b - b.abs() + theta * r.abs() + c2,
                ];
                worst = worst.min(m.iter().cloned().fold(f64::INFINITY, f64::min));
                csv.push_str(&format!(
                    "{r:.8e},{delta:.3e},{b:.12e},{bh:.12e},{:.12e},{:.6e},{:.6e},{:.6e}\n",
                    pot.psi(r),
                    m[0],
                    m[1],
                    m[2]
                ));
            }
        }
        let reports =
            potentials::sweep_log_bounds(theta, theta_c, &rs, &deltas).map_err(classify)?;
        for (name, rep) in ["barrier", "derivative"].iter().zip(&reports) {
            checks.check(
                &format!("logarithmic bound ({name})"),
                rep.worst_margin >= 0.0,
                format!(
                    "worst margin {:.3e} at r={:.4}, delta={:.3e}",
                    rep.worst_margin, rep.worst_r, rep.worst_delta
                ),
            );
        }
        let growth = potentials::sweep_log_growth(theta, theta_c, c2, &rs, &deltas)
            .map_err(classify)?;
        checks.check(
            "logarithmic growth",
            growth.worst_margin >= 0.0,
            format!("c2 = {c2:.6e}, worst margin {:.3e}", growth.worst_margin),
        );
        if cfg.source.enabled {
            let model = crate::config::build_source(cfg).map_err(io_err)?;
            let c = sources::derive_interaction_constant(&model, theta, theta_c, &deltas)
                .map_err(classify)?;
            let ss: Vec<f64> = (0..41).map(|k| 2.0 * k as f64 / 40.0).collect();
            let margin = sources::sweep_interaction_bound(
                &model, theta, theta_c, c, &rs, &ss, &deltas,
            )
            .map_err(classify)?;
            checks.check(
                "interaction growth",
                margin >= 0.0,
                format!("C = {c:.6e}, worst margin {margin:.3e}"),
            );
        }
    }
    out.write_text("potential_margins.csv", &csv).map_err(io_err)?;
    checks.note(format!(
        "swept {} r-points x {} widths; overall worst margin {worst:.3e}",
        rs.len(),
        deltas.len()
    ));
    let res = checks.finish(&mut out);
    out.finish_with(cfg, "potential-check").map_err(io_err)?;
    res
}

/// Time-step halving study of the phase mean-value identity defect.
pub fn convergence(cfg: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = OutputDir::new(out_dir).map_err(io_err)?;
    let spec = build_run_spec(cfg).map_err(io_err)?;
    let dt0 = spec.dt.unwrap_or_else(|| evolution::default_dt(spec.grid));
    let dts: Vec<f64> = (0..3).map(|k| dt0 / f64::powi(2.0, k)).collect();

    let runs = fan_out(dts.len(), |i| {
        let mut s = spec.clone();
        s.dt = Some(dts[i]);
        evolution::run(&s)
    });
    let mut defects = Vec::new();
    let mut csv = String::from("dt,steps,mean_abs_mass_defect,max_abs_mass_defect\n");
    for (dt, r) in dts.iter().zip(runs) {
        let traj = r.map_err(classify)?;
        let weight: f64 = traj.ledger.iter().map(|row| row.dt).sum();
        let mean: f64 = traj
            .ledger
            .iter()
            .map(|row| row.dt * row.mass_defect.abs())
            .sum::<f64>()
            / weight;
        let max = traj
            .ledger
            .iter()
            .fold(0.0f64, |m, row| m.max(row.mass_defect.abs()));
        csv.push_str(&format!(
            "{dt:.8e},{},{mean:.8e},{max:.8e}\n",
            traj.ledger.len()
        ));
        defects.push(mean);
    }
    out.write_text("convergence.csv", &csv).map_err(io_err)?;

    let mut checks = Checks::new();
    for w in defects.windows(2) {
        let ratio = w[0] / w[1].max(f64::MIN_POSITIVE);
        checks.check(
            "defect halves with dt",
            ratio > 1.4,
            format!("defect ratio {ratio:.3} (expected ~2 for a first-order defect)"),
        );
    }
    let res = checks.finish(&mut out);
    out.finish_with(cfg, "convergence").map_err(io_err)?;
    res
}

/// Vanishing-viscosity comparison of the Brinkman and Darcy flow solves on a
/// fixed field snapshot.
pub fn darcy_limit(cfg: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = OutputDir::new(out_dir).map_err(io_err)?;
    let spec = build_run_spec(cfg).map_err(io_err)?;
    let params = build_params(cfg).map_err(io_err)?;
    let nu = if cfg.flow.mode == "off" { 1.0 } else { cfg.flow.nu };
    let state = initial_state(&spec).map_err(classify)?;

    let g = spec.grid;
    let gamma_v = {
        let mut f = chb_core::grid::ScalarField::zeros(g);
        for (k, v) in f.data.iter_mut().enumerate() {
            *v = params
                .source
                .gamma_v(state.phi.data[k], state.sigma.data[k]);
        }
        f
    };
    let coef = state
        .mu
        .add_scaled(cfg.nutrient.chi, &state.sigma)
        .map_err(classify)?;
    let force = coef_times_grad(&coef, &state.phi);
    let (v_darcy, _) = solve_darcy(
        &state.mu,
        &state.sigma,
        &state.phi,
        &gamma_v,
        DarcyParams {
            chi: cfg.nutrient.chi,
            nu,
            tol: 1e-12,
        },
    )
    .map_err(classify)?;

    let delta_vs = &cfg.darcy_limit.delta_vs;
    let diffs = fan_out(delta_vs.len(), |i| {
        let profile = ViscosityProfile::new(delta_vs[i], delta_vs[i], 0.0, ProfileKind::Constant)?;
        let prob = BrinkmanProblem {
            c: &state.phi,
            f: &force,
            g: &gamma_v,
            nu,
            profile,
            traction: None,
        };
        let (v_b, _) = solve_brinkman(&prob)?;
        Ok::<f64, CoreError>(v_b.add_scaled(-1.0, &v_darcy)?.norm_l2())
    });

    let mut csv = String::from("delta_v,velocity_gap_l2\n");
    let mut gaps = Vec::new();
    for (dv, d) in delta_vs.iter().zip(diffs) {
        let gap = d.map_err(classify)?;
        csv.push_str(&format!("{dv:.6e},{gap:.10e}\n"));
        gaps.push(gap);
    }
    out.write_text("darcy_limit.csv", &csv).map_err(io_err)?;

    let mut checks = Checks::new();
    checks.note(format!(
        "||v_brinkman(delta_v) - v_darcy||_L2 on a {}x{} snapshot (nu = {nu})",
        g.nx, g.ny
    ));
    for (w, dvs) in gaps.windows(2).zip(delta_vs.windows(2)) {
        checks.check(
            "gap shrinks with viscosity",
            w[1] < w[0],
            format!(
                "delta_v {:.1e} -> {:.1e}: gap {:.4e} -> {:.4e}",
                dvs[0], dvs[1], w[0], w[1]
            ),
        );
    }
    let res = checks.finish(&mut out);
    out.finish_with(cfg, "darcy-limit").map_err(io_err)?;
    res
}

/// Sharp-interface continuation: rerun the configured scenario over
/// descending regularization widths and tabulate the overshoot functional.
pub fn delta_continuation(cfg: &RunConfig, out_dir: &Path) -> Result<(), LabError> {
    let mut out = OutputDir::new(out_dir).map_err(io_err)?;
    let spec = build_run_spec(cfg).map_err(io_err)?;
    let deltas = &cfg.continuation.deltas;

    // Validate the widths once up front (the per-width runs are independent).
    let rows_res = fan_out(deltas.len(), |i| {
        evolution::delta_continuation(&spec, &deltas[i..=i]).map(|mut v| v.remove(0))
    });
    let mut rows = Vec::new();
    for r in rows_res {
        rows.push(r.map_err(classify)?);
    }

    let mut csv = String::from("delta,overshoot_integral,max_abs_phi,max_overshoot\n");
    for r in &rows {
        csv.push_str(&format!(
            "{:.6e},{:.10e},{:.10e},{:.10e}\n",
            r.delta, r.overshoot_integral, r.max_abs_phi, r.max_overshoot
        ));
    }
    out.write_text("continuation.csv", &csv).map_err(io_err)?;

    let mut checks = Checks::new();
    if cfg.potential.kind == "double-obstacle" {
        for w in rows.windows(2) {
            checks.check(
                "overshoot decreases",
                w[1].overshoot_integral < w[0].overshoot_integral
                    || (w[0].overshoot_integral == 0.0 && w[1].overshoot_integral == 0.0),
                format!(
                    "delta {:.1e} -> {:.1e}: O = {:.4e} -> {:.4e}",
                    w[0].delta, w[1].delta, w[0].overshoot_integral, w[1].overshoot_integral
                ),
            );
        }
    } else {
        for r in &rows {
            checks.check(
                "phase interior",
                r.max_abs_phi < 1.0,
                format!("delta {:.1e}: max|phi| = {:.8}", r.delta, r.max_abs_phi),
            );
        }
    }
    let res = checks.finish(&mut out);
    out.finish_with(cfg, "delta-continuation").map_err(io_err)?;
    res
}
