//! Constants and bound functions for the linear term of the minimal energy.
//!
//! The linear coefficient obtained from an `ε`-smearing is `u(ε) + v(ε)`:
//! `u` comes from the cap self-energies and cross corrections, `v` from the
//! transport lower bound on `I(μ)` through the Fejes Tóth triangle integral.
//! `v` is a lower bound on the contribution of `N I(μ)`, not its value.
//!
//! The triangle integral in the small-angle limit is
//! `∫_0^{π/6} ∫_ε^{C/cos θ} s (s - ε) ds dθ`. Expanding it into
//! `C³C₁/3 - C²C₂ε/2 + πε³/36` (the bracket used by [`v`]) is exact only
//! while `ε ≤ C`: past that point `C/cos θ < ε` near `θ = 0` and the bracket
//! picks up a spurious positive contribution, where the true integrand is
//! zero. [`clipped_bracket`] evaluates the integral with the clipping, and
//! [`v_clipped`] is the corresponding bound.

use std::f64::consts::{FRAC_PI_6, LN_2, PI};

use serde::Serialize;

use crate::energy::{I_SIGMA, KAPPA};
use crate::error::{domain, Result};
use crate::geometry::{triangle_for, voronoi_boundary_h};
use crate::quadrature::integrate_1d_adaptive;
use crate::special::gamma;

/// `C = sqrt(2π/√3)`: the scaled side of the limiting triangle's half-cell.
pub fn c() -> f64 {
    (2.0 * PI / 3f64.sqrt()).sqrt()
}

/// `C₁ = ∫_0^{π/6} sec³ θ dθ = (2 + 3 atanh(1/2)) / 6`.
pub fn c1() -> f64 {
    (2.0 + 3.0 * 0.5f64.atanh()) / 6.0
}

/// `C₂ = ∫_0^{π/6} sec² θ dθ = 1/√3`.
pub fn c2() -> f64 {
    1.0 / 3f64.sqrt()
}

/// `ε_max = C / cos(π/6) = sqrt(8π / (3√3))`; beyond it the triangle
/// integrand vanishes.
pub fn eps_max() -> f64 {
    c() / FRAC_PI_6.cos()
}

pub fn c_lauritsen() -> f64 {
    LN_2 - 0.75
}

pub fn c_bhs() -> f64 {
    2.0 * LN_2 + 0.5 * (2.0f64 / 3.0).ln() + 3.0 * (PI.sqrt() / gamma(1.0 / 3.0)).ln()
}

pub fn c_tilde() -> f64 {
    let inner = 3f64.powf(0.25) * (2.0 * PI).sqrt() * (2.0 + 3.0 * 0.5f64.atanh()) - 12.0;
    LN_2 - 0.75 + inner * inner / 162.0
}

/// `u(ε) = -1/4 + ln ε - ε²/8`.
pub fn u(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain("u needs eps > 0", eps));
    }
    Ok(-0.25 + eps.ln() - eps * eps / 8.0)
}

/// `u'(ε) = 1/ε - ε/4`.
pub fn u_prime(eps: f64) -> f64 {
    1.0 / eps - 0.25 * eps
}

/// `C³C₁/3 - C²C₂ε/2 + πε³/36`.
pub fn triangle_bracket(eps: f64) -> f64 {
    let c = c();
    c.powi(3) * c1() / 3.0 - c * c * c2() * eps / 2.0 + PI * eps.powi(3) / 36.0
}

fn triangle_bracket_prime(eps: f64) -> f64 {
    let c = c();
    -c * c * c2() / 2.0 + PI * eps * eps / 12.0
}

const V_COEFF: f64 = 9.0 / (2.0 * PI * PI);

/// Whether `ε` lies in `(0, ε_max)`, where [`v`] is given by the bracket.
pub fn in_validity_range(eps: f64) -> bool {
    eps > 0.0 && eps < eps_max()
}

/// `v(ε) = 9/(2π²) · bracket(ε)²` on `(0, ε_max)`; clamped to zero beyond
/// `ε_max` (check [`in_validity_range`] for the flag).
pub fn v(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain("v needs eps > 0", eps));
    }
    if !in_validity_range(eps) {
        return Ok(0.0);
    }
    Ok(V_COEFF * triangle_bracket(eps).powi(2))
}

fn v_prime(eps: f64) -> f64 {
    if !in_validity_range(eps) {
        return 0.0;
    }
    2.0 * V_COEFF * triangle_bracket(eps) * triangle_bracket_prime(eps)
}

/// `∫ sec³ = (sec tan + ln(sec + tan)) / 2`.
fn sec3_antiderivative(t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    let sec = 1.0 / c;
    0.5 * (sec * s / c + (sec + s / c).ln())
}

/// `∫_0^{π/6} ∫_ε^{max(ε, C/cos θ)} s (s - ε) ds dθ`.
pub fn clipped_bracket(eps: f64) -> f64 {
    let c = c();
    if eps <= c {
        return triangle_bracket(eps);
    }
    if eps >= eps_max() {
        return 0.0;
    }
    let t0 = (c / eps).acos();
    c.powi(3) / 3.0 * (sec3_antiderivative(FRAC_PI_6) - sec3_antiderivative(t0))
        - c * c * eps / 2.0 * (FRAC_PI_6.tan() - t0.tan())
        + eps.powi(3) / 6.0 * (FRAC_PI_6 - t0)
}

/// `9/(2π²) · clipped_bracket(ε)²`.
pub fn v_clipped(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain("v needs eps > 0", eps));
    }
    Ok(V_COEFF * clipped_bracket(eps).powi(2))
}

/// Closed-form constants, each cross-checked when built through
/// [`Constants::verified`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub i_sigma: f64,
    pub kappa: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub eps_max: f64,
    pub u2: f64,
    pub v2: f64,
    pub c_tilde: f64,
    pub c_bhs: f64,
    pub c_lauritsen: f64,
}

pub fn constants() -> Constants {
    Constants {
        i_sigma: I_SIGMA,
        kappa: KAPPA,
        c: c(),
        c1: c1(),
        c2: c2(),
        eps_max: eps_max(),
        u2: u(2.0).expect("2 > 0"),
        v2: v(2.0).expect("2 > 0"),
        c_tilde: c_tilde(),
        c_bhs: c_bhs(),
        c_lauritsen: c_lauritsen(),
    }
}

/// Residuals of the cross-checks behind [`constants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantChecks {
    /// `|C₁ - ∫ sec³|` by adaptive quadrature.
    pub c1_residual: f64,
    /// `|C₂ - ∫ sec²|` by adaptive quadrature.
    pub c2_residual: f64,
    /// `|ε_max - sqrt(8π/(3√3))|`.
    pub eps_max_residual: f64,
    /// `|Γ(1/3)Γ(2/3) - 2π/√3|`.
    pub gamma_reflection_residual: f64,
    /// `|C̃ - (u(2) + v(2))|`.
    pub c_tilde_residual: f64,
}

impl Constants {
    pub fn verified() -> Result<(Constants, ConstantChecks)> {
        let k = constants();
        let sec3 = integrate_1d_adaptive(|t| t.cos().powi(-3), 0.0, FRAC_PI_6, 1e-13)?;
        let sec2 = integrate_1d_adaptive(|t| t.cos().powi(-2), 0.0, FRAC_PI_6, 1e-13)?;
        let checks = ConstantChecks {
            c1_residual: (k.c1 - sec3.value).abs(),
            c2_residual: (k.c2 - sec2.value).abs(),
            eps_max_residual: (k.eps_max - (8.0 * PI / (3.0 * 3f64.sqrt())).sqrt()).abs(),
            gamma_reflection_residual: (gamma(1.0 / 3.0) * gamma(2.0 / 3.0) - 2.0 * PI / 3f64.sqrt()).abs(),
            c_tilde_residual: (k.c_tilde - (k.u2 + k.v2)).abs(),
        };
        Ok((k, checks))
    }
}

/// Maximum of a unimodal `f` on `[lo, hi]`: golden-section search, then
/// bisection on the sign of `df`.
fn maximize(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a < 1e-9 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    // widen slightly and bisect on the derivative when it brackets a sign change
    let (mut l, mut r) = ((a - 1e-6).max(lo), (b + 1e-6).min(hi));
    if df(l) > 0.0 && df(r) < 0.0 {
        for _ in 0..200 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            if df(m) > 0.0 {
                l = m;
            } else {
                r = m;
            }
        }
    }
    let x = 0.5 * (l + r);
    (x, f(x))
}

/// Lower end of the search interval for the maximizer.
pub const SEARCH_LO: f64 = 0.1;

/// Argmax and maximum of `u + v` on `(0.1, ε_max)`.
pub fn maximize_linear_coefficient() -> (f64, f64) {
    let f = |e: f64| u(e).expect("e > 0") + v(e).expect("e > 0");
    let df = |e: f64| u_prime(e) + v_prime(e);
    maximize(f, df, SEARCH_LO, eps_max() * (1.0 - 1e-12))
}

/// Argmax and maximum of `u + v_clipped` on `(0.1, ε_max)`.
pub fn maximize_linear_coefficient_clipped() -> (f64, f64) {
    let f = |e: f64| u(e).expect("e > 0") + v_clipped(e).expect("e > 0");
    // the clipped bound has no cheap closed-form derivative; a central
    // difference is enough to refine the golden-section bracket
    let df = |e: f64| {
        let h = 1e-7;
        (f(e + h) - f(e - h)) / (2.0 * h)
    };
    maximize(f, df, SEARCH_LO, eps_max() * (1.0 - 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleMode {
    /// Flat-metric closed form `3/(2π n^{3/2}) · bracket(ε)`.
    SmallAngle,
    /// True spherical triangle, area element `sin r dr dθ`.
    Exact,
}

/// `∫_T Φ(d(x, {a, b, c})) dσ` for the equilateral triangle of area
/// `2π/(n - 2)` and `Φ(s) = max(s - ε/√n, 0)`.
pub fn toth_triangle_integral(n: usize, eps: f64, mode: TriangleMode) -> Result<f64> {
    if n < 4 {
        return Err(domain("triangle integral needs n >= 4", n as f64));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps must be nonnegative", eps));
    }
    let nf = n as f64;
    match mode {
        TriangleMode::SmallAngle => {
            if eps >= eps_max() {
                return Ok(0.0);
            }
            Ok(3.0 / (2.0 * PI * nf.powf(1.5)) * triangle_bracket(eps))
        }
        TriangleMode::Exact => exact_triangle_integral(n, eps),
    }
}

/// `∫_b^h (r - b) sin r dr` for `h > b`, zero otherwise.
///
/// With `δ = h - b` this is `sin b · p(δ) + cos b · q(δ)` where
/// `p = δ sin δ + cos δ - 1` and `q = sin δ - δ cos δ`; both are summed as
/// power series for small `δ` to avoid cancellation.
fn radial_integral(h: f64, b: f64) -> f64 {
    if h <= b {
        return 0.0;
    }
    let d = h - b;
    let (p, q) = if d < 1.0 {
        // p = Σ_{m≥1} (-1)^{m-1} (2m-1) δ^{2m} / (2m)!
        // q = Σ_{m≥1} (-1)^{m-1} 2m δ^{2m+1} / (2m+1)!
        let d2 = d * d;
        let (mut p, mut q) = (0.0, 0.0);
        let mut pow_fact = d2 / 2.0; // δ^{2m} / (2m)!
        for m in 1..=12 {
            let mf = m as f64;
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            p += sign * (2.0 * mf - 1.0) * pow_fact;
            q += sign * 2.0 * mf * pow_fact * d / (2.0 * mf + 1.0);
            pow_fact *= d2 / ((2.0 * mf + 1.0) * (2.0 * mf + 2.0));
        }
        (p, q)
    } else {
        let (sd, cd) = d.sin_cos();
        (d * sd + cd - 1.0, sd - d * cd)
    };
    let (sb, cb) = b.sin_cos();
    sb * p + cb * q
}

fn exact_triangle_integral(n: usize, eps: f64) -> Result<f64> {
    let tri = triangle_for(n)?;
    let b = eps / (n as f64).sqrt();
    let half_angle = 0.5 * tri.interior_angle;
    let alpha = tri.side;
    let h_far = voronoi_boundary_h(half_angle, alpha);
    if b >= h_far {
        return Ok(0.0);
    }
    // h_θ increases with θ; below θ0 the whole radial segment is inside the cap
    let theta0 = if b <= 0.5 * alpha {
        0.0
    } else {
        ((0.5 * alpha).tan() / b.tan()).acos()
    };
    let inner = |theta: f64| radial_integral(voronoi_boundary_h(theta, alpha), b);
    let scale = radial_integral(h_far, b) * (half_angle - theta0);
    let est = integrate_1d_adaptive(inner, theta0, half_angle, 1e-13 * scale.max(f64::MIN_POSITIVE))?;
    // 3 Voronoi cells x 2 mirror halves, normalized area element 1/(4π)
    Ok(6.0 / (4.0 * PI) * est.value)
}

/// `(2n - 4) ∫_T Φ(d(x, {a, b, c})) dσ` on the true spherical triangle.
pub fn fejes_toth_rhs(n: usize, eps: f64) -> Result<f64> {
    Ok((2.0 * n as f64 - 4.0) * toth_triangle_integral(n, eps, TriangleMode::Exact)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub eps: f64,
    pub u: f64,
    pub v: f64,
    pub total: f64,
}

/// `steps` equally spaced rows from `lo` to `hi` inclusive.
pub fn plot_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<GridRow>> {
    if !(lo > 0.0 && lo < hi) {
        return Err(domain("plot grid needs 0 < lo < hi", lo));
    }
    if steps < 2 {
        return Err(domain("plot grid needs at least 2 steps", steps as f64));
    }
    (0..steps)
        .map(|k| {
            let eps = if k + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (steps - 1) as f64
            };
            let (uu, vv) = (u(eps)?, v(eps)?);
            Ok(GridRow {
                eps,
                u: uu,
                v: vv,
                total: uu + vv,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "eps,u,v,total";

/// CSV with LF endings and 17 significant digits per field.
pub fn grid_to_csv(rows: &[GridRow]) -> String {
    let mut out = String::with_capacity(80 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.eps, r.u, r.v, r.total
        ));
    }
    out
}

/// Evaluation of the bound at one `ε` together with the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub eps: f64,
    pub u: f64,
    pub v: f64,
    pub total: f64,
    /// `ε` lies outside `(0, ε_max)` and `v` was clamped to zero.
    pub v_clamped: bool,
    pub eps_star: f64,
    pub total_star: f64,
    /// Same quantities with the clipped triangle integral.
    pub v_clipped: f64,
    pub total_clipped: f64,
    pub eps_star_clipped: f64,
    pub total_star_clipped: f64,
    pub constants: Constants,
}

pub fn bound_report(eps: f64) -> Result<BoundReport> {
    let (uu, vv, vc) = (u(eps)?, v(eps)?, v_clipped(eps)?);
    let (eps_star, total_star) = maximize_linear_coefficient();
    let (eps_star_clipped, total_star_clipped) = maximize_linear_coefficient_clipped();
    Ok(BoundReport {
        eps,
        u: uu,
        v: vv,
        total: uu + vv,
        v_clamped: !in_validity_range(eps),
        eps_star,
        total_star,
        v_clipped: vc,
        total_clipped: uu + vc,
        eps_star_clipped,
        total_star_clipped,
        constants: constants(),
    })
}
