//! Source terms for mass exchange between tumour and host phases.
//!
//! The admissible class is `Gamma_v = b_v(phi) sigma + f_v(phi)` and
//! `Gamma_phi = b_phi(phi) sigma + f_phi(phi)` where the proliferation
//! coefficients `b_v, b_phi` are nonnegative and vanish for `|r| >= 1`, and
//! the drift parts satisfy the sign conditions `f_phi(1) - f_v(1) < 0`,
//! `f_phi(-1) + f_v(-1) > 0`.
//!
//! The concrete model is the proliferation/apoptosis example
//! `Gamma = P (1 - phi^2) sigma - A phi`, `Gamma_v = alpha Gamma`,
//! `Gamma_phi = rho_S Gamma`, defined on `[-1, 1]` and extended to all of
//! `R` in a way compatible with the chosen potential regularization:
//!
//! * **obstacle extension**: `r (f_phi(r) - f_v(r) r) < 0` strictly for
//!   `|r| > 1`. Implemented with `C^1` quadratic tapers: `f_phi` freezes to
//!   a constant beyond `|r| = 1.5`, while `r f_v(r)` (not `f_v` itself)
//!   freezes to a constant `G_1 < rho_S / alpha`, so the sign condition
//!   holds for arbitrarily large `|r|`.
//! * **logarithmic extension**: `H(r) = r f_v(r) - f_phi(r)` is positive on
//!   `[1, r_0]`, interpolated down to zero on `[r_0, 2 r_0]` without sign
//!   change, and both drifts vanish identically for `|r| >= 2 r_0`.
//!   Implemented by tapering `f_v` with a cubic Hermite and prescribing `H`
//!   as `H(r_0)` times a nonnegative `C^1` bump, then recovering
//!   `f_phi = r f_v - H`.

use crate::error::CoreError;
use crate::potentials::PotentialSpec;

/// How the drift terms are extended beyond the physical interval `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtensionKind {
    /// Extension compatible with the double-obstacle regularization.
    Obstacle,
    /// Extension compatible with the logarithmic regularization, with
    /// pivot `r_0 > 1`; drifts vanish for `|r| >= 2 r_0`.
    Logarithmic { r0: f64 },
}

/// A concrete source model (proliferation/apoptosis example).
#[derive(Debug, Clone, Copy)]
pub struct SourceModel {
    /// Proliferation rate `P > 0`.
    p: f64,
    /// Apoptosis rate `A > 0`.
    a: f64,
    /// Density contrast `alpha = 1/rho1 - 1/rho2 >= 0`.
    alpha: f64,
    /// Density sum `rho_S = 1/rho1 + 1/rho2 > |alpha|`.
    rho_s: f64,
    kind: ExtensionKind,
    /// Plateau of `r f_v(r)` in the obstacle extension (in units of `-alpha A`).
    g1: f64,
    /// Taper width of `r f_v(r)` in the obstacle extension.
    wv: f64,
    /// All source terms identically zero when false.
    enabled: bool,
}

/// Width of the obstacle-extension taper of `f_phi` (plateau at `1 + W_PHI/2`).
const W_PHI: f64 = 0.5;

impl SourceModel {
    /// Build the proliferation/apoptosis model
    /// `Gamma_v = alpha [P (1-r^2) s - A r]`, `Gamma_phi = rho_S [...]`
    /// with the extension matching `kind`.
    ///
    /// Requires `P, A > 0`, `alpha >= 0` (so the proliferation coefficients
    /// are nonnegative) and `rho_S > alpha` (the drift sign conditions);
    /// for the logarithmic kind additionally `1 < r_0` and, when
    /// `alpha > 0`, `r_0 < rho_S / alpha` so `H > 0` holds up to the pivot.
    pub fn example(
        p: f64,
        a: f64,
        alpha: f64,
        rho_s: f64,
        kind: ExtensionKind,
    ) -> Result<Self, CoreError> {
        if !(p > 0.0 && a > 0.0) || !p.is_finite() || !a.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "source rates must be positive, got P={p}, A={a}"
            )));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "density contrast alpha must be >= 0 so proliferation coefficients stay nonnegative, got {alpha}"
            )));
        }
        if !(rho_s > alpha.abs()) || !rho_s.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "drift sign conditions need rho_S > |alpha|, got rho_S={rho_s}, alpha={alpha}"
            )));
        }
        if let ExtensionKind::Logarithmic { r0 } = kind {
            if !(r0 > 1.0) || !r0.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "extension pivot r0 must exceed 1, got {r0}"
                )));
            }
            if alpha > 0.0 && r0 >= rho_s / alpha {
                return Err(CoreError::InvalidParameter(format!(
                    "extension pivot r0={r0} too large: r f_v - f_phi must stay positive on [1, r0], which needs r0 < rho_S/alpha = {}",
                    rho_s / alpha
                )));
            }
        }
        // Obstacle case: r f_v(r) plateaus at g1 = 1 + wv (in units of
        // -alpha A); keeping g1 < rho_S / alpha makes the sign condition
        // r (f_phi - r f_v) < 0 strict for every |r| > 1.
        let wv = if alpha > 0.0 {
            0.5f64.min(0.5 * (rho_s / alpha - 1.0))
        } else {
            0.5
        };
        let model = Self {
            p,
            a,
            alpha,
            rho_s,
            kind,
            g1: 1.0 + wv,
            wv,
            enabled: true,
        };
        if let ExtensionKind::Logarithmic { .. } = kind {
            // The interpolated bump must stay nonnegative; with
            // r0 < rho_S/alpha its leading coefficient is positive unless
            // the slope at the pivot is extremely negative, so verify.
            let (c1, _c2) = model.log_bump_coeffs();
            if c1 < 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "logarithmic extension would change sign on the interpolation interval (bump coefficient {c1} < 0); reduce r0 or alpha"
                )));
            }
        }
        Ok(model)
    }

    /// A model whose source terms are identically zero (growth disabled).
    pub fn disabled() -> Self {
        Self {
            p: 0.0,
            a: 0.0,
            alpha: 0.0,
            rho_s: 1.0,
            kind: ExtensionKind::Obstacle,
            g1: 1.0,
            wv: 0.5,
            enabled: false,
        }
    }

    /// Whether any source term can be nonzero.
    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    /// The extension kind this model was built with.
    pub fn kind(&self) -> ExtensionKind {
        self.kind
    }

    /// Proliferation coefficient of the velocity source: `alpha P (1-r^2)_+`.
    pub fn b_v(&self, r: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        self.alpha * self.p * (1.0 - r * r).max(0.0)
    }

    /// Proliferation coefficient of the phase source: `rho_S P (1-r^2)_+`.
    pub fn b_phi(&self, r: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        self.rho_s * self.p * (1.0 - r * r).max(0.0)
    }

    /// Drift of the velocity source: `-alpha A r` on `[-1,1]`, extended.
    pub fn f_v(&self, r: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        -self.alpha * self.a * self.drift_v_shape(r)
    }

    /// Drift of the phase source: `-rho_S A r` on `[-1,1]`, extended.
    pub fn f_phi(&self, r: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        match self.kind {
            ExtensionKind::Obstacle => -self.rho_s * self.a * self.drift_phi_shape_obstacle(r),
            ExtensionKind::Logarithmic { r0 } => {
                let s = r.abs();
                let mag = if s <= r0 {
                    -self.rho_s * self.a * s
                } else {
                    // Recover f_phi = r f_v - H from the prescribed bump H.
                    s * self.f_v(s) - self.log_h(s)
                };
                if r < 0.0 {
                    -mag
                } else {
                    mag
                }
            }
        }
    }

    /// Velocity source `Gamma_v(r, s) = b_v(r) s + f_v(r)`.
    pub fn gamma_v(&self, r: f64, s: f64) -> f64 {
        self.b_v(r) * s + self.f_v(r)
    }

    /// Phase source `Gamma_phi(r, s) = b_phi(r) s + f_phi(r)`.
    pub fn gamma_phi(&self, r: f64, s: f64) -> f64 {
        self.b_phi(r) * s + self.f_phi(r)
    }

    /// Stationary combination `gamma(r, s) = r Gamma_v(r, s) - Gamma_phi(r, s)`.
    pub fn gamma_stationary(&self, r: f64, s: f64) -> f64 {
        r * self.gamma_v(r, s) - self.gamma_phi(r, s)
    }

    /// Partial derivative of [`SourceModel::gamma_stationary`] in `r`
    /// (central finite difference; used for approximate Jacobians only).
    pub fn gamma_stationary_dr(&self, r: f64, s: f64) -> f64 {
        let h = 1e-6 * (1.0 + r.abs());
        (self.gamma_stationary(r + h, s) - self.gamma_stationary(r - h, s)) / (2.0 * h)
    }

    /// Largest `delta_0` in `(0, r_0 - 1)` such that `H(r) = r f_v - f_phi`
    /// stays positive on `(1 - delta_0, 1 + delta_0)`, found by bisection
    /// with dense sampling. Only meaningful for the logarithmic extension.
    pub fn delta0(&self) -> Option<f64> {
        let ExtensionKind::Logarithmic { r0 } = self.kind else {
            return None;
        };
        if !self.enabled {
            return None;
        }
        let h = |r: f64| r * self.f_v(r) - self.f_phi(r);
        let positive_on = |d: f64| {
            let n = 400;
            (0..=n).all(|k| {
                let r = 1.0 - d + 2.0 * d * k as f64 / n as f64;
                h(r) > 0.0
            })
        };
        let mut lo = 0.0;
        let mut hi = r0 - 1.0;
        if !positive_on(1e-9) {
            return Some(0.0);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if positive_on(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Shape of `f_v` in units of `-alpha A` (odd; `r` on `[-1,1]`).
    fn drift_v_shape(&self, r: f64) -> f64 {
        let s = r.abs();
        let mag = match self.kind {
            ExtensionKind::Obstacle => {
                // Taper of g(r) = r * shape(r): quadratic in (s-1), then
                // frozen at g1, so shape decays like g1/s.
                if s <= 1.0 {
                    s
                } else if s <= 1.0 + self.wv {
                    let e = s - 1.0;
                    (1.0 + 2.0 * e - e * e / self.wv) / s
                } else {
                    self.g1 / s
                }
            }
            ExtensionKind::Logarithmic { r0 } => {
                if s <= r0 {
                    s
                } else if s <= 2.0 * r0 {
                    // Cubic Hermite from (r0, r0, slope 1) to (2 r0, 0, slope 0).
                    let t = (s - r0) / r0;
                    let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
                    let h10 = t * (1.0 - t) * (1.0 - t);
                    r0 * h00 + r0 * h10
                } else {
                    0.0
                }
            }
        };
        if r < 0.0 {
            -mag
        } else {
            mag
        }
    }

    /// Shape of `f_phi` in units of `-rho_S A`, obstacle case (odd).
    fn drift_phi_shape_obstacle(&self, r: f64) -> f64 {
        let s = r.abs();
        let mag = if s <= 1.0 {
            s
        } else if s <= 1.0 + W_PHI {
            let e = s - 1.0;
            1.0 + e - 0.5 * e * e / W_PHI
        } else {
            1.0 + 0.5 * W_PHI
        };
        if r < 0.0 {
            -mag
        } else {
            mag
        }
    }

    /// Bump coefficients of the prescribed `H` on the interpolation interval
    /// (logarithmic case): `H(r) = H(r0) u^2 (c1 + c2 u)` with
    /// `u = (2 r0 - r)/r0`.
    fn log_bump_coeffs(&self) -> (f64, f64) {
        let ExtensionKind::Logarithmic { r0 } = self.kind else {
            return (3.0, -2.0);
        };
        let h0 = self.a * r0 * (self.rho_s - self.alpha * r0);
        let s0 = self.a * (self.rho_s - 2.0 * self.alpha * r0);
        let sr = s0 * r0 / h0;
        (3.0 + sr, -2.0 - sr)
    }

    /// Prescribed `H(r) = r f_v - f_phi` for `r` in `[r0, 2 r0]` (log case).
    fn log_h(&self, s: f64) -> f64 {
        let ExtensionKind::Logarithmic { r0 } = self.kind else {
            return 0.0;
        };
        if s >= 2.0 * r0 {
            return 0.0;
        }
        let h0 = self.a * r0 * (self.rho_s - self.alpha * r0);
        let (c1, c2) = self.log_bump_coeffs();
        let u = (2.0 * r0 - s) / r0;
        h0 * u * u * (c1 + c2 * u)
    }
}

/// Brute-force the Lipschitz-growth constant `C` in
/// `(r Gamma_v - Gamma_phi) beta_delta(r) >= -C (1 + |s| + |r|)` for a
/// logarithmic-extension model: smallest `C` on a dense derivation grid,
/// inflated by a small headroom factor.
pub fn derive_interaction_constant(
    model: &SourceModel,
    theta: f64,
    theta_c: f64,
    deltas: &[f64],
) -> Result<f64, CoreError> {
    let mut need = 0.0f64;
    for &delta in deltas {
        let pot = PotentialSpec::logarithmic(theta, theta_c, delta)?;
        let nr = 4001;
        let ns = 61;
        for i in 0..nr {
            let r = -4.0 + 8.0 * (i as f64 + 0.5) / nr as f64;
            let b = pot.beta(r);
            for j in 0..ns {
                let s = 3.0 * j as f64 / (ns - 1) as f64;
                let lhs = model.gamma_stationary(r, s) * b;
                need = need.max(-lhs / (1.0 + s + r.abs()));
            }
        }
    }
    Ok(need * 1.05 + 1e-9)
}

/// Worst margin of the interaction bound
/// `(r Gamma_v - Gamma_phi) beta_delta(r) + C (1 + |s| + |r|) >= 0`
/// over the given sample grid. Nonnegative return means no violation.
pub fn sweep_interaction_bound(
    model: &SourceModel,
    theta: f64,
    theta_c: f64,
    c: f64,
    rs: &[f64],
    ss: &[f64],
    deltas: &[f64],
) -> Result<f64, CoreError> {
    let mut worst = f64::INFINITY;
    for &delta in deltas {
        let pot = PotentialSpec::logarithmic(theta, theta_c, delta)?;
        for &r in rs {
            let b = pot.beta(r);
            for &s in ss {
                let margin = model.gamma_stationary(r, s) * b + c * (1.0 + s + r.abs());
                worst = worst.min(margin);
            }
        }
    }
    Ok(worst)
}

/// Worst (largest) value of `(Gamma_phi - r Gamma_v) beta_delta(r)` over the
/// sample grid for an obstacle-extension model; the structural sign
/// condition requires this to be `<= 0` everywhere.
pub fn sweep_obstacle_interaction_sign(
    model: &SourceModel,
    rs: &[f64],
    ss: &[f64],
    deltas: &[f64],
) -> Result<f64, CoreError> {
    let mut worst = f64::NEG_INFINITY;
    for &delta in deltas {
        let pot = PotentialSpec::double_obstacle(delta)?;
        for &r in rs {
            let b = pot.beta(r);
            for &s in ss {
                worst = worst.max(-model.gamma_stationary(r, s) * b);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_obstacle() -> SourceModel {
        SourceModel::example(1.0, 0.5, 1.0, 2.0, ExtensionKind::Obstacle).unwrap()
    }

    fn example_log() -> SourceModel {
        SourceModel::example(1.0, 0.5, 1.0, 2.0, ExtensionKind::Logarithmic { r0: 1.5 }).unwrap()
    }

    #[test]
    fn example_model_pinned_values() {
        let m = example_obstacle();
        assert_relative_eq!(m.gamma_phi(0.0, 1.0), 2.0);
        assert_relative_eq!(m.b_phi(0.0), 2.0);
        for s in [0.0, 0.3, 1.0, 7.5] {
            assert_relative_eq!(m.gamma_v(1.0, s), -0.5);
            assert_relative_eq!(m.gamma_stationary(1.0, s), 0.5);
            // r Gamma_v - Gamma_phi at r=-1: (-1)(+0.5) - (+1.0) = -1.5.
            assert_relative_eq!(m.gamma_stationary(-1.0, s), -1.5);
        }
        assert_relative_eq!(m.gamma_stationary(0.0, 0.7), -m.gamma_phi(0.0, 0.7));
        assert_relative_eq!(m.f_phi(1.0) - m.f_v(1.0), -0.5);
        assert_eq!(m.b_v(1.0), 0.0);
        assert_eq!(m.b_v(-1.0), 0.0);
        // sigma = 0 leaves only the drift.
        for r in [-1.5, -0.2, 0.9, 2.0] {
            assert_relative_eq!(m.gamma_v(r, 0.0), m.f_v(r));
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(SourceModel::example(0.0, 0.5, 1.0, 2.0, ExtensionKind::Obstacle).is_err());
        assert!(SourceModel::example(1.0, 0.5, -1.0, 2.0, ExtensionKind::Obstacle).is_err());
        // rho_S < |alpha| violates the drift sign conditions.
        assert!(SourceModel::example(1.0, 0.5, 3.0, 2.0, ExtensionKind::Obstacle).is_err());
        // Pivot beyond rho_S/alpha would flip the sign of H before r0.
        assert!(
            SourceModel::example(1.0, 0.5, 1.0, 2.0, ExtensionKind::Logarithmic { r0: 2.5 })
                .is_err()
        );
    }

    #[test]
    fn obstacle_extension_sign_condition() {
        let m = example_obstacle();
        // r (f_phi - r f_v) < 0 strictly for |r| > 1, far out as well.
        for k in 1..4000 {
            let r = 1.0 + 0.01 * k as f64;
            for r in [r, -r] {
                let v = r * (m.f_phi(r) - m.f_v(r) * r);
                assert!(v < 0.0, "sign condition failed at r={r}: {v}");
            }
        }
    }

    #[test]
    fn log_extension_structure() {
        let m = example_log();
        let h = |r: f64| r * m.f_v(r) - m.f_phi(r);
        // Positive up to the pivot, nonnegative across the interpolation,
        // identically zero beyond twice the pivot.
        for k in 0..=500 {
            let r = 1.0 + 0.5 * k as f64 / 500.0;
            assert!(h(r) > 0.0, "H({r}) = {} not positive", h(r));
            assert!(h(-r) < 0.0);
        }
        for k in 0..=500 {
            let r = 1.5 + 1.5 * k as f64 / 500.0;
            assert!(h(r) >= -1e-14, "H({r}) = {} negative", h(r));
        }
        for r in [3.0, 3.5, 10.0, -4.2] {
            assert_eq!(m.f_v(r), 0.0);
            assert_eq!(m.f_phi(r), 0.0);
        }
        let d0 = m.delta0().unwrap();
        assert!(d0 > 0.4 && d0 <= 0.5, "delta0 = {d0}");
    }

    #[test]
    fn extensions_are_c1() {
        for m in [example_obstacle(), example_log()] {
            let eps = 1e-7;
            for r in [-3.0, -1.5, -1.0, 1.0, 1.25, 1.5, 2.9, 3.0] {
                for f in [SourceModel::f_v, SourceModel::f_phi] {
                    let jump = (f(&m, r + eps) - f(&m, r - eps)).abs();
                    assert!(jump < 1e-5, "value jump at {r}: {jump}");
                    let dl = (f(&m, r) - f(&m, r - eps)) / eps;
                    let dr = (f(&m, r + eps) - f(&m, r)) / eps;
                    assert!((dl - dr).abs() < 1e-4, "slope jump at {r}: {dl} vs {dr}");
                }
            }
        }
    }

    #[test]
    fn interaction_bounds_hold() {
        let rs: Vec<f64> = (0..2001).map(|k| -3.0 + 6.0 * k as f64 / 2000.0).collect();
        let ss: Vec<f64> = (0..41).map(|k| 2.0 * k as f64 / 40.0).collect();
        let m = example_log();
        let c = derive_interaction_constant(&m, 1.0, 2.0, &[0.05, 0.01]).unwrap();
        let worst = sweep_interaction_bound(&m, 1.0, 2.0, c, &rs, &ss, &[0.05, 0.01]).unwrap();
        assert!(worst >= 0.0, "interaction bound violated: {worst}");

        let mo = example_obstacle();
        let worst = sweep_obstacle_interaction_sign(&mo, &rs, &ss, &[0.1, 0.02]).unwrap();
        assert!(worst <= 1e-14, "obstacle interaction sign violated: {worst}");
    }

    #[test]
    fn disabled_model_is_identically_zero() {
        let m = SourceModel::disabled();
        for r in [-2.0, 0.0, 0.5, 1.0, 3.0] {
            assert_eq!(m.gamma_v(r, 1.0), 0.0);
            assert_eq!(m.gamma_phi(r, 1.0), 0.0);
        }
    }
}
