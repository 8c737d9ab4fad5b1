//! Singular potentials for the phase field and their delta-regularizations.
//!
//! Two families are supported:
//!
//! * the **double-obstacle** potential `psi(r) = 1/2 (1 - r^2) + I_[-1,1](r)`,
//!   whose indicator part is replaced by a piecewise-polynomial convex
//!   barrier `beta_hat` that vanishes on `[-1, 1]` and grows quadratically
//!   with slope scale `1/delta` outside;
//! * the **logarithmic** potential
//!   `psi(r) = theta/2 [(1+r)ln(1+r) + (1-r)ln(1-r)] + theta_c/2 (1 - r^2)`
//!   with `0 < theta < theta_c`, whose convex part is extended beyond
//!   `|r| = 1 - delta` by its second-order Taylor polynomial, so that the
//!   derivative `beta` continues affinely with slope `theta / (delta (2 - delta))`.
//!
//! In both cases the regularized potential splits as
//! `psi_delta = beta_hat_delta + Theta_c/2 (1 - r^2)` with `Theta_c = 1`
//! (obstacle) or `theta_c` (logarithmic); `beta = beta_hat'` is monotone,
//! odd, and Lipschitz with constant `O(1/delta)`.
//!
//! The module also provides the odd `C^{1,1}` cutoff `T_delta` used by the
//! stationary solver: identity on `[-(1-delta), 1-delta]`, a quadratic blend
//! on `1-delta <= |s| <= 1-delta/2`, and the plateau `+/-(1 - 3 delta/4)`
//! beyond.

use crate::error::CoreError;

/// Which singular potential the regularization is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// Double obstacle: quadratic concave part plus the indicator of `[-1, 1]`.
    DoubleObstacle,
    /// Logarithmic (Flory-Huggins) with temperatures `theta < theta_c`.
    Logarithmic { theta: f64, theta_c: f64 },
}

/// A delta-regularized singular potential.
///
/// All member functions are total on `R`, smooth enough for Newton
/// (`beta` is `C^1` except for the obstacle case, where `beta'` is
/// piecewise linear and continuous), and satisfy
/// `0 <= beta'(r) <= C/delta`.
#[derive(Debug, Clone, Copy)]
pub struct PotentialSpec {
    kind: PotentialKind,
    delta: f64,
}

impl PotentialSpec {
    /// Regularized double-obstacle potential with barrier width `delta`.
    ///
    /// Requires `delta` in `(0, 1)`; the sharp two-sided barrier bounds
    /// additionally need `delta < 1/4`, which is checked by
    /// [`PotentialSpec::check_obstacle_bounds`], not here.
    pub fn double_obstacle(delta: f64) -> Result<Self, CoreError> {
        if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "double-obstacle regularization width delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self {
            kind: PotentialKind::DoubleObstacle,
            delta,
        })
    }

    /// Regularized logarithmic potential, Taylor-extended beyond `|r| = 1 - delta`.
    ///
    /// Requires `0 < theta < theta_c` and `delta` in `(0, 1)`.
    pub fn logarithmic(theta: f64, theta_c: f64, delta: f64) -> Result<Self, CoreError> {
        if !(theta > 0.0 && theta_c > theta) || !theta.is_finite() || !theta_c.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "logarithmic potential needs 0 < theta < theta_c, got theta={theta}, theta_c={theta_c}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "logarithmic regularization width delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Logarithmic { theta, theta_c },
            delta,
        })
    }

    /// The potential family.
    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// The regularization width.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Coefficient `Theta_c` of the concave quadratic part:
    /// `psi_delta(r) = beta_hat(r) + Theta_c/2 (1 - r^2)`.
    pub fn theta_c_coeff(&self) -> f64 {
        match self.kind {
            PotentialKind::DoubleObstacle => 1.0,
            PotentialKind::Logarithmic { theta_c, .. } => theta_c,
        }
    }

    /// Largest `delta` for which the two-sided logarithmic barrier bounds
    /// hold (`min(1, theta / (4 theta_c))`); for the obstacle case, `1/4`.
    pub fn delta_bound_threshold(&self) -> f64 {
        match self.kind {
            PotentialKind::DoubleObstacle => 0.25,
            PotentialKind::Logarithmic { theta, theta_c } => (theta / (4.0 * theta_c)).min(1.0),
        }
    }

    /// Convex barrier `beta_hat(r) >= 0` (even, `C^1`, `beta_hat(0) = 0` up
    /// to the logarithmic core value, which is also `0`).
    pub fn beta_hat(&self, r: f64) -> f64 {
        let d = self.delta;
        match self.kind {
            PotentialKind::DoubleObstacle => {
                let s = r.abs();
                if s <= 1.0 {
                    0.0
                } else if s < 1.0 + d {
                    (s - 1.0).powi(3) / (6.0 * d * d)
                } else {
                    (s - (1.0 + 0.5 * d)).powi(2) / (2.0 * d) + d / 24.0
                }
            }
            PotentialKind::Logarithmic { theta, .. } => {
                let s = r.abs();
                let edge = 1.0 - d;
                if s <= edge {
                    log_beta_hat(theta, s)
                } else {
                    let e = s - edge;
                    log_beta_hat(theta, edge)
                        + log_beta(theta, edge) * e
                        + 0.5 * log_beta_prime(theta, edge) * e * e
                }
            }
        }
    }

    /// Monotone derivative `beta = beta_hat'` (odd).
    pub fn beta(&self, r: f64) -> f64 {
        let d = self.delta;
        let s = r.abs();
        let mag = match self.kind {
            PotentialKind::DoubleObstacle => {
                if s <= 1.0 {
                    0.0
                } else if s < 1.0 + d {
                    (s - 1.0).powi(2) / (2.0 * d * d)
                } else {
                    (s - (1.0 + 0.5 * d)) / d
                }
            }
            PotentialKind::Logarithmic { theta, .. } => {
                let edge = 1.0 - d;
                if s <= edge {
                    log_beta(theta, s)
                } else {
                    log_beta(theta, edge) + log_beta_prime(theta, edge) * (s - edge)
                }
            }
        };
        if r < 0.0 {
            -mag
        } else {
            mag
        }
    }

    /// Second derivative `beta' >= 0` (even, bounded by `O(1/delta)`).
    pub fn beta_prime(&self, r: f64) -> f64 {
        let d = self.delta;
        let s = r.abs();
        match self.kind {
            PotentialKind::DoubleObstacle => {
                if s <= 1.0 {
                    0.0
                } else if s < 1.0 + d {
                    (s - 1.0) / (d * d)
                } else {
                    1.0 / d
                }
            }
            PotentialKind::Logarithmic { theta, .. } => {
                let edge = 1.0 - d;
                if s <= edge {
                    log_beta_prime(theta, s)
                } else {
                    log_beta_prime(theta, edge)
                }
            }
        }
    }

    /// Full regularized potential `psi_delta = beta_hat + Theta_c/2 (1 - r^2)`.
    pub fn psi(&self, r: f64) -> f64 {
        self.beta_hat(r) + 0.5 * self.theta_c_coeff() * (1.0 - r * r)
    }

    /// Derivative `psi_delta' = beta - Theta_c r`.
    pub fn psi_prime(&self, r: f64) -> f64 {
        self.beta(r) - self.theta_c_coeff() * r
    }

    /// Second derivative `psi_delta'' = beta' - Theta_c`.
    pub fn psi_second(&self, r: f64) -> f64 {
        self.beta_prime(r) - self.theta_c_coeff()
    }

    /// Odd `C^{1,1}` cutoff: identity on `[-(1-delta), 1-delta]`, quadratic
    /// blend for `1-delta <= |s| <= 1-delta/2`, plateau `+/-(1 - 3 delta/4)`
    /// beyond. Satisfies `0 <= T' <= 1` and `|T| <= 1 - 3 delta/4`.
    pub fn cutoff(&self, s: f64) -> f64 {
        cutoff(self.delta, s)
    }

    /// Derivative of [`PotentialSpec::cutoff`] (continuous, in `[0, 1]`).
    pub fn cutoff_prime(&self, s: f64) -> f64 {
        cutoff_prime(self.delta, s)
    }
}

/// Convex part of the logarithmic potential on `(-1, 1)`:
/// `theta/2 [(1+r)ln(1+r) + (1-r)ln(1-r)]`.
fn log_beta_hat(theta: f64, r: f64) -> f64 {
    // (1 +/- r) ln(1 +/- r) -> 0 as the factor -> 0; guard the log at the ends.
    let term = |a: f64| if a > 0.0 { a * a.ln() } else { 0.0 };
    0.5 * theta * (term(1.0 + r) + term(1.0 - r))
}

/// `theta * artanh(r)` on `(-1, 1)`.
fn log_beta(theta: f64, r: f64) -> f64 {
    0.5 * theta * ((1.0 + r) / (1.0 - r)).ln()
}

/// `theta / (1 - r^2)` on `(-1, 1)`.
fn log_beta_prime(theta: f64, r: f64) -> f64 {
    theta / (1.0 - r * r)
}

/// Standalone cutoff `T_delta` (see [`PotentialSpec::cutoff`]).
pub fn cutoff(delta: f64, s: f64) -> f64 {
    let a = s.abs();
    let core = 1.0 - delta;
    let blend_end = 1.0 - 0.5 * delta;
    let mag = if a <= core {
        a
    } else if a <= blend_end {
        a - (a - core) * (a - core) / delta
    } else {
        1.0 - 0.75 * delta
    };
    mag.copysign(s)
}

/// Derivative of [`cutoff`] with respect to `s`.
pub fn cutoff_prime(delta: f64, s: f64) -> f64 {
    let a = s.abs();
    let core = 1.0 - delta;
    let blend_end = 1.0 - 0.5 * delta;
    if a <= core {
        1.0
    } else if a <= blend_end {
        1.0 - 2.0 * (a - core) / delta
    } else {
        0.0
    }
}

/// Result of a pointwise inequality sweep: the worst (most violated) margin
/// and where it occurred. A nonnegative `worst_margin` means the inequality
/// held everywhere sampled.
#[derive(Debug, Clone, Copy)]
pub struct SweepReport {
    /// Minimum over the sample set of (lhs of "`expr >= 0`").
    pub worst_margin: f64,
    /// Sample point `r` attaining the worst margin.
    pub worst_r: f64,
    /// `delta` at the worst margin.
    pub worst_delta: f64,
    /// Number of samples checked.
    pub samples: usize,
}

impl SweepReport {
    fn new() -> Self {
        Self {
            worst_margin: f64::INFINITY,
            worst_r: f64::NAN,
            worst_delta: f64::NAN,
            samples: 0,
        }
    }

    fn record(&mut self, margin: f64, r: f64, delta: f64) {
        self.samples += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.worst_r = r;
            self.worst_delta = delta;
        }
    }
}

/// Sweep the sharp two-sided obstacle bounds
/// `delta beta^2 <= 2 beta_hat <= delta beta^2 + 1`,
/// `delta (beta')^2 <= beta'`, and `|beta(r)| <= r beta(r)`
/// over the grid `rs x deltas` (each `delta` must lie in `(0, 1/4)`).
///
/// Returns one report per inequality, in the order listed. Margins are the
/// slack of the inequality (nonnegative iff it holds).
pub fn sweep_obstacle_bounds(rs: &[f64], deltas: &[f64]) -> Result<Vec<SweepReport>, CoreError> {
    let mut reports = vec![SweepReport::new(); 4];
    for &delta in deltas {
        if !(delta > 0.0 && delta < 0.25) {
            return Err(CoreError::InvalidParameter(format!(
                "obstacle bound sweep requires delta in (0, 1/4), got {delta}"
            )));
        }
        let pot = PotentialSpec::double_obstacle(delta)?;
        for &r in rs {
            let b = pot.beta(r);
            let bh = pot.beta_hat(r);
            let bp = pot.beta_prime(r);
            reports[0].record(2.0 * bh - delta * b * b, r, delta);
            reports[1].record(delta * b * b + 1.0 - 2.0 * bh, r, delta);
            reports[2].record(bp - delta * bp * bp, r, delta);
            reports[3].record(r * b - b.abs(), r, delta);
        }
    }
    Ok(reports)
}

/// Sweep the logarithmic barrier bounds
/// `4 delta theta^{-1} beta_hat >= (|r| - 1)_+^2` and
/// `delta (beta')^2 <= theta beta'`
/// over `rs x deltas` (each `delta` must satisfy
/// `delta <= min(1, theta / (4 theta_c))`).
pub fn sweep_log_bounds(
    theta: f64,
    theta_c: f64,
    rs: &[f64],
    deltas: &[f64],
) -> Result<Vec<SweepReport>, CoreError> {
    let mut reports = vec![SweepReport::new(); 2];
    for &delta in deltas {
        let cap = (theta / (4.0 * theta_c)).min(1.0);
        if !(delta > 0.0 && delta <= cap) {
            return Err(CoreError::InvalidParameter(format!(
                "logarithmic bound sweep requires delta in (0, {cap}], got {delta}"
            )));
        }
        let pot = PotentialSpec::logarithmic(theta, theta_c, delta)?;
        for &r in rs {
            let b = pot.beta(r);
            let bh = pot.beta_hat(r);
            let bp = pot.beta_prime(r);
            let over = (r.abs() - 1.0).max(0.0);
            reports[0].record(4.0 * delta / theta * bh - over * over, r, delta);
            reports[1].record(theta * bp - delta * bp * bp, r, delta);
            let _ = b;
        }
    }
    Ok(reports)
}

/// Brute-force the linear-growth constant `c2` in
/// `r beta(r) >= |beta(r)| - c1 |r| - c2` with `c1 = theta`, for the
/// logarithmic family: the smallest `c2` making the bound hold on a dense
/// derivation grid, inflated by a small headroom factor.
pub fn derive_log_growth_c2(theta: f64, theta_c: f64, deltas: &[f64]) -> Result<f64, CoreError> {
    let mut need = 0.0f64;
    for &delta in deltas {
        let pot = PotentialSpec::logarithmic(theta, theta_c, delta)?;
        // Derivation grid denser than (and offset from) typical check grids.
        let n = 40_001;
        for k in 0..n {
            let r = -4.0 + 8.0 * (k as f64 + 0.5) / n as f64;
            let b = pot.beta(r);
            need = need.max(b.abs() - theta * r.abs() - r * b);
        }
    }
    Ok(need * 1.05 + 1e-9)
}

/// Sweep the linear-growth bound `r beta(r) >= |beta(r)| - c1 |r| - c2`
/// (logarithmic family, `c1 = theta`) with a supplied `c2`.
pub fn sweep_log_growth(
    theta: f64,
    theta_c: f64,
    c2: f64,
    rs: &[f64],
    deltas: &[f64],
) -> Result<SweepReport, CoreError> {
    let mut report = SweepReport::new();
    for &delta in deltas {
        let pot = PotentialSpec::logarithmic(theta, theta_c, delta)?;
        for &r in rs {
            let b = pot.beta(r);
            report.record(r * b - b.abs() + theta * r.abs() + c2, r, delta);
        }
    }
    Ok(report)
}
