//! Riemannian gradient descent for the discrete logarithmic energy, and a
//! least-squares estimate of the linear-term constant from minimized energies.
//!
//! Minimized energies are upper estimates of the true minima: the descent
//! finds local minima and no global optimality is claimed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{decomposition_floor, energy_difference, pair_energy, riemannian_gradient, I_SIGMA};
use crate::error::{domain, Error, Result};
use crate::geometry::{sample_uniform_sphere, Configuration, UnitVector, Vec3};

/// Armijo sufficient-decrease constant.
pub const ARMIJO_C: f64 = 1e-4;
/// Backtracking halvings before a step is declared stagnant.
pub const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Random,
    Spiral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stopping threshold on the gradient norm; `None` means `1e-10 · N`.
    pub grad_tol: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    pub init: Init,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            grad_tol: None,
            restarts: 1,
            seed: 0,
            init: Init::Spiral,
        }
    }
}

impl MinimizeOptions {
    pub fn grad_tol_for(&self, n: usize) -> f64 {
        self.grad_tol.unwrap_or(1e-10 * n as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(domain("max_iters must be >= 1", self.max_iters as f64));
        }
        if let Some(t) = self.grad_tol {
            if !(t > 0.0) {
                return Err(domain("grad_tol must be positive", t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// No Armijo step within [`MAX_HALVINGS`] halvings; the energy change is
    /// below what the arithmetic can resolve.
    Stagnated,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub config: Configuration,
    pub energy: f64,
    pub iters: usize,
    pub grad_norm: f64,
    pub termination: Termination,
}

/// Golden-angle spiral: heights `1 - (2k + 1)/n`, azimuth advancing by
/// `π (3 - √5)`.
pub fn init_spiral(n: usize) -> Result<Configuration> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let pts = (0..n)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            UnitVector::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect::<Result<Vec<_>>>()?;
    // distinct heights, so no coincidences
    Ok(Configuration::from_points_unchecked(pts))
}

fn grad_norm(g: &[Vec3]) -> f64 {
    g.iter()
        .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        .sum::<f64>()
        .sqrt()
}

fn step(points: &[UnitVector], g: &[Vec3], t: f64) -> Vec<UnitVector> {
    points
        .iter()
        .zip(g)
        .map(|(p, gi)| {
            let x = p.as_array();
            UnitVector::new(x[0] - t * gi[0], x[1] - t * gi[1], x[2] - t * gi[2]).unwrap_or(*p)
        })
        .collect()
}

/// Projected gradient descent from `cfg0`.
///
/// Each iteration tries a Barzilai–Borwein step, then halves it until the
/// Armijo condition `ΔE ≤ -c t |g|²` holds; points are retracted to the
/// sphere by renormalization. Accepted steps never increase the energy.
pub fn minimize(cfg0: &Configuration, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    opts.validate()?;
    let n = cfg0.len();
    let tol = opts.grad_tol_for(n);
    let mut x = cfg0.points().to_vec();
    let mut g = riemannian_gradient(cfg0)?;
    let mut gn = grad_norm(&g);
    let mut t = 1.0 / (n as f64 * n as f64);
    let mut iters = 0;
    let mut termination = Termination::MaxIters;

    while iters < opts.max_iters {
        if gn <= tol {
            termination = Termination::Converged;
            break;
        }
        let mut accepted = None;
        let mut trial = t;
        for _ in 0..=MAX_HALVINGS {
            let cand = step(&x, &g, trial);
            let delta = energy_difference(&x, &cand);
            if delta <= -ARMIJO_C * trial * gn * gn {
                accepted = Some((cand, delta));
                break;
            }
            trial *= 0.5;
        }
        let Some((next, delta)) = accepted else {
            termination = Termination::Stagnated;
            break;
        };
        assert!(delta <= 0.0, "accepted step increased the energy by {delta}");
        let next_cfg = Configuration::from_points_unchecked(next);
        let g_next = riemannian_gradient(&next_cfg)?;

        // Barzilai–Borwein length |s|² / |s·y| for the next trial
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..n {
            let (a, b) = (x[i].as_array(), next_cfg.points()[i].as_array());
            for k in 0..3 {
                let s = b[k] - a[k];
                ss += s * s;
                sy += s * (g_next[i][k] - g[i][k]);
            }
        }
        t = if sy.abs() > 0.0 && ss > 0.0 {
            (ss / sy.abs()).clamp(1e-12, 1e3)
        } else {
            2.0 * trial
        };

        x = next_cfg.into_points();
        g = g_next;
        gn = grad_norm(&g);
        iters += 1;
    }
    if termination == Termination::MaxIters && gn <= tol {
        termination = Termination::Converged;
    }
    let config = Configuration::from_points_unchecked(x);
    let energy = pair_energy(&config)?;
    Ok(MinimizeResult {
        config,
        energy,
        iters,
        grad_norm: gn,
        termination,
    })
}

fn restart_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Best of `opts.restarts` descents. With `Init::Spiral` the first start is
/// the spiral and the rest are random; restarts run in parallel and the
/// lowest energy wins (ties go to the lower restart index).
pub fn minimize_restarts(n: usize, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    opts.validate()?;
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let restarts = opts.restarts.max(1);
    let results: Vec<Result<MinimizeResult>> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 && opts.init == Init::Spiral {
                init_spiral(n)?
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts.seed, k));
                let pts = (0..n).map(|_| sample_uniform_sphere(&mut rng)).collect();
                Configuration::new(pts)?
            };
            minimize(&start, opts)
        })
        .collect();
    let mut best: Option<MinimizeResult> = None;
    for r in results {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.energy < b.energy) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub termination: Termination,
    /// Decomposition bound at `ε = 2` with `I(μ) ≥ 0` dropped.
    pub floor: f64,
    /// `I(σ) N (N - 1)`, an upper bound for the minimal energy.
    pub tsuji_upper: f64,
    #[serde(skip)]
    pub config: Configuration,
}

/// Minimized energy for each `N`. Fails if any result falls below the
/// decomposition floor at `ε = 2`, which would indicate a bug.
pub fn energy_curve(n_list: &[usize], opts: &MinimizeOptions) -> Result<Vec<CurvePoint>> {
    n_list
        .iter()
        .map(|&n| {
            let r = minimize_restarts(n, opts)?;
            let floor = decomposition_floor(n, 2.0)?;
            if r.energy < floor {
                return Err(domain(
                    "minimized energy fell below the decomposition floor",
                    r.energy,
                ));
            }
            let nf = n as f64;
            Ok(CurvePoint {
                n,
                energy: r.energy,
                grad_norm: r.grad_norm,
                iters: r.iters,
                termination: r.termination,
                floor,
                tsuji_upper: I_SIGMA * nf * (nf - 1.0),
                config: r.config,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub c_log_hat: f64,
    pub correction_coeff: f64,
    pub residual_rms: f64,
    pub n_values: Vec<usize>,
}

/// `(E - I(σ) N² + N ln N / 2) / N`, the per-point linear term.
pub fn linear_term(n: usize, energy: f64) -> f64 {
    let nf = n as f64;
    (energy - I_SIGMA * nf * nf + 0.5 * nf * nf.ln()) / nf
}

/// Least squares of the linear term against `c + d / √N`.
pub fn fit_clog(curve: &[(usize, f64)]) -> Result<FitResult> {
    let mut pts = curve.to_vec();
    pts.sort_by_key(|p| p.0);
    if pts.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::NonFinite("energy curve"));
    }
    if pts.len() >= 2 && pts.first().map(|p| p.0) == pts.last().map(|p| p.0) {
        return Err(Error::RankDeficient);
    }
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(domain("duplicate N in energy curve", 0.0));
    }
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    let xs: Vec<f64> = pts.iter().map(|p| 1.0 / (p.0 as f64).sqrt()).collect();
    let ys: Vec<f64> = pts.iter().map(|&(n, e)| linear_term(n, e)).collect();
    let m = xs.len() as f64;
    let (xm, ym) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if !(sxx > 0.0) {
        return Err(Error::RankDeficient);
    }
    let d = sxy / sxx;
    let c = ym - d * xm;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c - d * x).powi(2)).sum();
    Ok(FitResult {
        c_log_hat: c,
        correction_coeff: d,
        residual_rms: (rss / m).sqrt(),
        n_values: pts.iter().map(|p| p.0).collect(),
    })
}
