//! Logarithmic energy of point sets and of smeared (cap-averaged) measures.
//!
//! Conventions: `G(x, y) = log(1/|x - y|)` with the natural log and chordal
//! distance; σ is the normalized surface measure, whose energy is
//! `I(σ) = 1/2 - log 2`. The constant `κ` equals `I(σ)`.
//!
//! The cap self-energy returned by [`cap_self_energy`] is the `G`-kernel
//! value. The familiar closed form
//! `-κ + ln sin(a/2) + cot²(a/2) (1/2 + cot²(a/2) ln cos(a/2))` is the same
//! integral for the kernel `log |x - y|`, i.e. its negative.
//!
//! With `μ = (1/N) Σ μ_i - σ` and caps of radius `a = ε/√N`, the exact
//! expansion used here is
//!
//! ```text
//! N² I(μ) = Σ_{i≠j} M_ij + N S(a) - N² I(σ)
//! ```
//!
//! where `M_ij` is the smeared pair energy and `S(a)` the self-energy; the
//! cross term against σ collapses because the potential of σ is the constant
//! `I(σ)`. Sums over index pairs are evaluated row by row in parallel and
//! combined in index order, so results do not depend on the thread count.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::geometry::{geodesic_distance, Configuration, SphericalCap, UnitVector, Vec3};
use crate::quadrature::{cap_pair_energy_quadrature, Kernel, McRun};
use crate::special::compensated_sum;

/// `I(σ) = 1/2 - log 2`.
pub const I_SIGMA: f64 = 0.5 - LN_2;

/// The constant in the same-cap closed form; fixed to `I(σ)`.
pub const KAPPA: f64 = I_SIGMA;

/// Below this radius the cap integrals switch to their Taylor series.
pub const SERIES_RADIUS: f64 = 0.05;

pub fn continuous_energy() -> f64 {
    I_SIGMA
}

#[inline]
fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn require_pairs(cfg: &Configuration) -> Result<()> {
    if cfg.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: cfg.len(),
        });
    }
    Ok(())
}

/// `Σ_{i≠j} log(1/|x_i - x_j|)` over ordered pairs.
pub fn pair_energy(cfg: &Configuration) -> Result<f64> {
    require_pairs(cfg)?;
    let p = cfg.points();
    let rows: Vec<Result<f64>> = (0..p.len())
        .into_par_iter()
        .map(|i| {
            let xi = p[i].as_array();
            let mut acc = 0.0;
            for (j, xj) in p.iter().enumerate().skip(i + 1) {
                let r2 = dist2(xi, xj.as_array());
                if r2 == 0.0 {
                    return Err(Error::CoincidentPoints { i, j });
                }
                acc -= r2.ln();
            }
            // each unordered pair counted twice: 2 * (-1/2) ln r²
            Ok(acc)
        })
        .collect();
    let mut vals = Vec::with_capacity(rows.len());
    for r in rows {
        vals.push(r?);
    }
    Ok(compensated_sum(vals))
}

/// Tangent-plane projection of the Euclidean gradient of [`pair_energy`].
pub fn riemannian_gradient(cfg: &Configuration) -> Result<Vec<Vec3>> {
    require_pairs(cfg)?;
    let p = cfg.points();
    p.par_iter()
        .enumerate()
        .map(|(i, xi)| {
            let x = xi.as_array();
            let mut g = [0.0; 3];
            for (j, xj) in p.iter().enumerate() {
                if j == i {
                    continue;
                }
                let y = xj.as_array();
                let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                if r2 == 0.0 {
                    return Err(Error::CoincidentPoints {
                        i: i.min(j),
                        j: i.max(j),
                    });
                }
                let w = -2.0 / r2;
                g[0] += w * d[0];
                g[1] += w * d[1];
                g[2] += w * d[2];
            }
            let radial = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
            Ok([g[0] - radial * x[0], g[1] - radial * x[1], g[2] - radial * x[2]])
        })
        .collect()
}

/// `ln |x|`, from an error-free evaluation of `|x|² - 1`.
fn ln_norm(x: &Vec3) -> f64 {
    let mut terms = [0.0; 7];
    for k in 0..3 {
        let p = x[k] * x[k];
        terms[k] = p;
        terms[k + 3] = x[k].mul_add(x[k], -p);
    }
    terms[6] = -1.0;
    0.5 * compensated_sum(terms).ln_1p()
}

/// `E(new) - E(old)` summed pair by pair, which keeps its relative accuracy
/// when the two configurations are close.
///
/// Stored unit vectors are off the sphere by about an ulp, and the energy is
/// sensitive to that in the radial direction. The difference is taken for
/// the projected points `x/|x|`, using
/// `|x̂ - ŷ|² = (|x - y|² - (|x| - |y|)²) / (|x| |y|)`, whose second term is
/// far below rounding.
pub(crate) fn energy_difference(old: &[UnitVector], new: &[UnitVector]) -> f64 {
    debug_assert_eq!(old.len(), new.len());
    let n = old.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xo, xn) = (old[i].as_array(), new[i].as_array());
            let di = [xn[0] - xo[0], xn[1] - xo[1], xn[2] - xo[2]];
            let mut acc = 0.0;
            for j in (i + 1)..n {
                let (yo, yn) = (old[j].as_array(), new[j].as_array());
                let dj = [yn[0] - yo[0], yn[1] - yo[1], yn[2] - yo[2]];
                let u = [xo[0] - yo[0], xo[1] - yo[1], xo[2] - yo[2]];
                let v = [xn[0] - yn[0], xn[1] - yn[1], xn[2] - yn[2]];
                // |v|² - |u|² = (v - u)·(v + u), with v - u = di - dj
                let w = [di[0] - dj[0], di[1] - dj[1], di[2] - dj[2]];
                let delta = w[0] * (v[0] + u[0]) + w[1] * (v[1] + u[1]) + w[2] * (v[2] + u[2]);
                let r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                // 2 * (-1/2) ln(|v|²/|u|²)
                acc -= (delta / r2).ln_1p();
            }
            acc
        })
        .collect();
    let radial: Vec<f64> = old
        .iter()
        .zip(new)
        .map(|(o, n)| ln_norm(n.as_array()) - ln_norm(o.as_array()))
        .collect();
    compensated_sum(rows) + (n as f64 - 1.0) * compensated_sum(radial)
}

/// `(cot²(a/2), ln cos(a/2))`, with the log taken through `ln_1p` for
/// accuracy at small radius.
fn half_angle_terms(a: f64) -> (f64, f64) {
    let (s, c) = (0.5 * a).sin_cos();
    let cot2 = (c * c) / (s * s);
    let ln_cos = if s * s < 0.5 {
        0.5 * (-(s * s)).ln_1p()
    } else {
        c.ln()
    };
    (cot2, ln_cos)
}

/// Self-energy `∫∫ G dμ dμ` of the normalized uniform measure on a cap of
/// geodesic radius `a`.
pub fn cap_self_energy(a: f64) -> Result<f64> {
    if !(a > 0.0 && a <= std::f64::consts::PI) {
        return Err(domain("cap radius must lie in (0, pi]", a));
    }
    if a < SERIES_RADIUS {
        let a2 = a * a;
        let poly = 0.25
            + a2 * (1.0 / 12.0
                + a2 * (-1.0 / 1920.0 + a2 * (-19.0 / 362_880.0 + a2 * (-19.0 / 9_676_800.0))));
        return Ok(-a.ln() + poly);
    }
    let (cot2, ln_cos) = half_angle_terms(a);
    let ln_sin = (0.5 * a).sin().ln();
    Ok(KAPPA - ln_sin - cot2 * (0.5 + cot2 * ln_cos))
}

/// `1 + 2 cot²(a/2) ln cos(a/2)`: how much the smeared energy of two
/// disjoint caps of radius `a` exceeds the point-mass value.
pub fn cap_cross_correction(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < std::f64::consts::PI) {
        return Err(domain("cap radius must lie in (0, pi)", a));
    }
    if a < SERIES_RADIUS {
        let a2 = a * a;
        return Ok(a2 * (0.125 + a2 * a2 * (-1.0 / 11_520.0 + a2 * (-1.0 / 161_280.0))));
    }
    let (cot2, ln_cos) = half_angle_terms(a);
    Ok(1.0 + 2.0 * cot2 * ln_cos)
}

/// Exact smeared pair energy of two disjoint caps of radius `a` whose centers
/// are `d` radians apart.
pub fn cap_cross_energy_disjoint(d: f64, a: f64) -> Result<f64> {
    if !(d > 2.0 * a) {
        return Err(Error::Overlap {
            distance: d,
            radius: a,
        });
    }
    let chord = 2.0 * (0.5 * d).sin();
    Ok(-chord.ln() + cap_cross_correction(a)?)
}

/// `μ = (1/N) Σ μ_i - σ` with `μ_i` uniform on `B(x_i, ε/√N)`.
#[derive(Debug, Clone, Serialize)]
pub struct SmearedMeasure {
    config: Configuration,
    eps: f64,
    radius: f64,
}

impl SmearedMeasure {
    pub fn new(config: Configuration, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(domain("eps must be positive", eps));
        }
        let radius = eps / (config.len() as f64).sqrt();
        if !(radius < std::f64::consts::PI) {
            return Err(domain("cap radius eps/sqrt(N) must be below pi", radius));
        }
        Ok(Self { config, eps, radius })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn cap(&self, i: usize) -> SphericalCap {
        SphericalCap::new(self.config.points()[i], self.radius).expect("radius validated")
    }

    /// Total mass `∫ 1 dμ`, by Monte Carlo against each cap and σ.
    pub fn total_mass(&self, run: &McRun) -> Result<f64> {
        // each μ_i and σ are probability measures; sample them to confirm
        let n = self.config.len();
        let mut acc = Vec::with_capacity(n);
        for i in 0..n {
            let cap = self.cap(i);
            let est = crate::quadrature::integrate_sphere_mc(
                |x| if cap.contains(x) { 1.0 / cap.measure() } else { 0.0 },
                &run.derive(i as u64),
            )?;
            acc.push(est.value);
        }
        Ok(compensated_sum(acc) / n as f64 - 1.0)
    }
}

/// Sum of cap-pair energies over ordered pairs, with its Monte-Carlo error.
#[derive(Debug, Clone, Copy, Serialize)]
struct CrossSum {
    total: f64,
    /// Σ over ordered pairs of `G_ij + correction - M_ij` (zero for disjoint pairs).
    deficit: f64,
    error: f64,
    overlapping_pairs: usize,
}

fn cross_sum(m: &SmearedMeasure, run: &McRun) -> Result<CrossSum> {
    let p = m.config.points();
    let n = p.len();
    let a = m.radius;
    let corr = cap_cross_correction(a)?;
    let mut pair_terms = Vec::with_capacity(n * (n - 1) / 2);
    let mut deficits = Vec::new();
    let mut var = 0.0;
    let mut overlapping = 0;
    let mut pair_index = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = geodesic_distance(&p[i], &p[j]);
            let g = -(2.0 * (0.5 * d).sin()).ln();
            if d > 2.0 * a {
                pair_terms.push(g + corr);
            } else {
                let est = cap_pair_energy_quadrature(
                    &m.cap(i),
                    &m.cap(j),
                    Kernel::LogInverse,
                    &run.derive(pair_index),
                )?;
                pair_terms.push(est.value);
                deficits.push(g + corr - est.value);
                var += est.error * est.error;
                overlapping += 1;
            }
            pair_index += 1;
        }
    }
    Ok(CrossSum {
        total: 2.0 * compensated_sum(pair_terms),
        deficit: 2.0 * compensated_sum(deficits),
        error: 2.0 * var.sqrt(),
        overlapping_pairs: overlapping,
    })
}

/// `I(μ)` with the Monte-Carlo error carried by overlapping cap pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmearedEnergy {
    pub value: f64,
    pub error: f64,
    pub overlapping_pairs: usize,
}

/// `I(μ) = (Σ_{i≠j} M_ij + N S(a)) / N² - I(σ)`.
///
/// Disjoint pairs use the exact formula; overlapping pairs are integrated by
/// Monte Carlo with `run` (each pair on its own derived seed).
pub fn smeared_energy(m: &SmearedMeasure, run: &McRun) -> Result<SmearedEnergy> {
    let n = m.config.len() as f64;
    let self_energy = cap_self_energy(m.radius)?;
    let cross = if m.config.len() > 1 {
        cross_sum(m, run)?
    } else {
        CrossSum {
            total: 0.0,
            deficit: 0.0,
            error: 0.0,
            overlapping_pairs: 0,
        }
    };
    Ok(SmearedEnergy {
        value: (cross.total + n * self_energy) / (n * n) - I_SIGMA,
        error: cross.error / (n * n),
        overlapping_pairs: cross.overlapping_pairs,
    })
}

/// All pieces of the finite-N inequality
/// `E ≥ N² I(σ) + N² I(μ) - N S(a) - N(N-1) c(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub n: usize,
    pub eps: f64,
    pub radius: f64,
    /// `E(x_1, ..., x_N)`.
    pub pair_sum: f64,
    /// `N S(a)`.
    pub self_terms: f64,
    /// `Σ_{i≠j} M_ij`.
    pub cross_terms: f64,
    /// `I(μ)`.
    pub smeared: f64,
    pub smeared_error: f64,
    pub kappa: f64,
    /// Right-hand side of the inequality.
    pub rhs: f64,
    /// `pair_sum - rhs`, nonnegative up to `slack_error`.
    pub slack: f64,
    pub slack_error: f64,
    pub overlapping_pairs: usize,
}

pub fn decomposition_lower_bound(cfg: &Configuration, eps: f64, run: &McRun) -> Result<EnergyBreakdown> {
    let m = SmearedMeasure::new(cfg.clone(), eps)?;
    let n = cfg.len();
    let nf = n as f64;
    let a = m.radius;
    let pair_sum = pair_energy(cfg)?;
    let self_energy = cap_self_energy(a)?;
    let corr = cap_cross_correction(a)?;
    let cross = cross_sum(&m, run)?;
    let self_terms = nf * self_energy;
    let smeared = (cross.total + self_terms) / (nf * nf) - I_SIGMA;
    let rhs = nf * nf * I_SIGMA + nf * nf * smeared - self_terms - nf * (nf - 1.0) * corr;
    Ok(EnergyBreakdown {
        n,
        eps,
        radius: a,
        pair_sum,
        self_terms,
        cross_terms: cross.total,
        smeared,
        smeared_error: cross.error / (nf * nf),
        kappa: KAPPA,
        rhs,
        slack: pair_sum - rhs,
        slack_error: cross.error,
        overlapping_pairs: cross.overlapping_pairs,
    })
}

/// The decomposition bound with `I(μ) ≥ 0` dropped:
/// `N² I(σ) - N S(ε/√N) - N(N-1) c(ε/√N)`, a lower bound for every
/// `N`-point energy.
pub fn decomposition_floor(n: usize, eps: f64) -> Result<f64> {
    let nf = n as f64;
    let a = eps / nf.sqrt();
    Ok(nf * nf * I_SIGMA - nf * cap_self_energy(a)? - nf * (nf - 1.0) * cap_cross_correction(a)?)
}
