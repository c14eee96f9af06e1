//! Lower bound on the Wasserstein-1 distance between the smeared measure and
//! σ through a 1-Lipschitz witness, and its comparison with `2 I(μ)`.
//!
//! W1 itself is never computed.

use serde::Serialize;

use crate::bounds::fejes_toth_rhs;
use crate::energy::{smeared_energy, SmearedMeasure};
use crate::error::{domain, Result};
use crate::geometry::{distance_to_caps, in_closed_hemisphere, Configuration};
use crate::quadrature::{integrate_sphere_mc, IntegralEstimate, McRun};

fn cap_radius(cfg: &Configuration, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain("eps must be positive", eps));
    }
    let a = eps / (cfg.len() as f64).sqrt();
    if !(a < std::f64::consts::PI) {
        return Err(domain("cap radius eps/sqrt(N) must be below pi", a));
    }
    Ok(a)
}

/// `∫ d(x, ∪ B(x_i, ε/√N)) dσ(x)` by Monte Carlo.
pub fn witness_integral(cfg: &Configuration, eps: f64, run: &McRun) -> Result<IntegralEstimate> {
    let a = cap_radius(cfg, eps)?;
    integrate_sphere_mc(|x| distance_to_caps(x, cfg, a), run)
}

/// The witness integral, a lower bound for `W1(μ, σ)` since the distance to
/// a set is 1-Lipschitz.
pub fn kantorovich_lower_bound(cfg: &Configuration, eps: f64, run: &McRun) -> Result<f64> {
    Ok(witness_integral(cfg, eps, run)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportCheck {
    pub w1_lower: f64,
    pub stderr: f64,
    pub two_i_mu: f64,
    pub two_i_mu_error: f64,
    /// `w1_lower² ≤ 2 I(μ) + 3 · (propagated error)`.
    pub satisfied: bool,
}

/// Both sides of `W1(μ, σ)² ≤ 2 I(μ)`.
pub fn gz_inequality_check(cfg: &Configuration, eps: f64, run: &McRun) -> Result<TransportCheck> {
    let w = witness_integral(cfg, eps, run)?;
    let m = SmearedMeasure::new(cfg.clone(), eps)?;
    let e = smeared_energy(&m, &run.derive(0x5EED))?;
    let two_i_mu = 2.0 * e.value;
    let two_i_mu_error = 2.0 * e.error;
    let err = (2.0 * w.value * w.error).hypot(two_i_mu_error);
    Ok(TransportCheck {
        w1_lower: w.value,
        stderr: w.error,
        two_i_mu,
        two_i_mu_error,
        satisfied: w.value * w.value <= two_i_mu + 3.0 * err,
    })
}

/// Sphere integral of `max(d(x, {x_i}) - ε/√N, 0)` against the triangle
/// bound `(2N - 4) ∫_T Φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleComparison {
    /// `None` when the inequality does not apply; see `skipped`.
    pub integral: Option<f64>,
    pub stderr: Option<f64>,
    pub rhs: Option<f64>,
    pub satisfied: Option<bool>,
    pub skipped: Option<String>,
}

impl TriangleComparison {
    fn skip(reason: &str) -> Self {
        Self {
            integral: None,
            stderr: None,
            rhs: None,
            satisfied: None,
            skipped: Some(reason.to_string()),
        }
    }
}

/// Checks the triangle inequality for `cfg` within `3σ`. Configurations
/// with fewer than four points or lying in a closed hemisphere are skipped.
pub fn triangle_comparison(cfg: &Configuration, eps: f64, run: &McRun) -> Result<TriangleComparison> {
    if cfg.len() < 4 {
        return Ok(TriangleComparison::skip("fewer than 4 points"));
    }
    if in_closed_hemisphere(cfg) {
        return Ok(TriangleComparison::skip(
            "configuration lies in a closed hemisphere",
        ));
    }
    let w = witness_integral(cfg, eps, run)?;
    let rhs = fejes_toth_rhs(cfg.len(), eps)?;
    Ok(TriangleComparison {
        integral: Some(w.value),
        stderr: Some(w.error),
        rhs: Some(rhs),
        satisfied: Some(w.value >= rhs - 3.0 * w.error),
        skipped: None,
    })
}
