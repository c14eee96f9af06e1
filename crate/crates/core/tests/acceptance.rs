//! Acceptance suite. Prints one PASS/FAIL line per criterion, with the
//! individual checks indented below it, and exits nonzero if any check fails.

use std::f64::consts::{LN_2, PI};
use std::time::Instant;

use logenergy::bounds::{
    c1, c2, c_bhs, c_tilde, constants, eps_max, grid_to_csv, maximize_linear_coefficient, plot_grid,
    toth_triangle_integral, u, TriangleMode,
};
use logenergy::energy::{
    cap_cross_correction, cap_cross_energy_disjoint, cap_self_energy, decomposition_lower_bound,
    smeared_energy,
};
use logenergy::geometry::{geodesic_distance, in_closed_hemisphere, triangle_for};
use logenergy::minimizer::{energy_curve, fit_clog, minimize_restarts, MinimizeOptions};
use logenergy::quadrature::{cap_pair_energy_quadrature, integrate_1d_adaptive, Kernel, McRun};
use logenergy::wasserstein::{gz_inequality_check, triangle_comparison};
use logenergy::{Configuration, Rotation, SmearedMeasure, SphericalCap, UnitVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    fn close(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let pass = (got - want).abs() <= tol;
        self.check(name, pass, format!("got {got:.12e}, want {want:.12e} +- {tol:e}"));
    }
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Richardson extrapolation to `a -> 0` of `f(a) = L + k a² + ...` on a
/// halving sequence ending at `a_min`.
fn extrapolate_to_zero(f: impl Fn(f64) -> f64, a_min: f64) -> f64 {
    let (a1, a0) = (2.0 * a_min, a_min);
    let (f1, f0) = (f(a1), f(a0));
    (4.0 * f0 - f1) / 3.0
}

fn random_config(n: usize, rng: &mut ChaCha8Rng) -> Configuration {
    Configuration::random(n, rng).expect("random points are distinct")
}

fn criterion_1(c: &mut Criterion) {
    let k = constants();
    c.close("I(sigma) = 1/2 - log 2", k.i_sigma, 0.5 - LN_2, 1e-15);
    c.close("I(sigma) digits", k.i_sigma, -0.193_147, 1e-6);
    c.close("C_BHS", c_bhs(), -0.055_605_3, 1e-6);
    c.close("C_tilde", c_tilde(), -0.056_845_6, 1e-6);
    c.close("u(2)", u(2.0).unwrap(), -0.056_852_8, 1e-7);
    c.close("eps_max", eps_max(), 2.199_27, 1e-5);
    let sec3 = integrate_1d_adaptive(|t| t.cos().powi(-3), 0.0, PI / 6.0, 1e-14).unwrap();
    let sec2 = integrate_1d_adaptive(|t| t.cos().powi(-2), 0.0, PI / 6.0, 1e-14).unwrap();
    c.close("C1 vs quadrature", c1(), sec3.value, 1e-10);
    c.close("C2 vs quadrature", c2(), sec2.value, 1e-10);
}

fn criterion_2(c: &mut Criterion) {
    let (eps_star, best) = maximize_linear_coefficient();
    c.close("argmax of u+v", eps_star, 2.0, 1e-2);
    c.close("max of u+v", best, -0.056_845_6, 1e-7);
    let u2 = u(2.0).unwrap();
    c.check("max > u(2)", best > u2, format!("{best:.12e} > {u2:.12e}"));
}

fn criterion_3(c: &mut Criterion) {
    let samples = 10_000_000;
    for (k, &a) in [0.05, 0.1, 0.5, 1.0, PI / 2.0, PI].iter().enumerate() {
        let cap = SphericalCap::new(UnitVector::E3, a).unwrap();
        let est = cap_pair_energy_quadrature(
            &cap,
            &cap,
            Kernel::LogInverse,
            &McRun::new(samples, 300 + k as u64),
        )
        .unwrap();
        let s = cap_self_energy(a).unwrap();
        c.check(
            format!("self-energy a={a:.4}"),
            est.agrees_with(s, 3.0),
            format!("closed {s:.8}, oracle {:.8} +- {:.1e}", est.value, est.error),
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut all = true;
    for k in 0..20 {
        let a = rng.random_range(0.05..0.6);
        let d = rng.random_range(2.0 * a + 0.05..PI);
        let x = UnitVector::from_spherical(0.0, 0.0);
        let y = UnitVector::from_spherical(d, rng.random_range(0.0..2.0 * PI));
        let exact = cap_cross_energy_disjoint(geodesic_distance(&x, &y), a).unwrap();
        let est = cap_pair_energy_quadrature(
            &SphericalCap::new(x, a).unwrap(),
            &SphericalCap::new(y, a).unwrap(),
            Kernel::LogInverse,
            &McRun::new(1_000_000, 400 + k),
        )
        .unwrap();
        worst = worst.max((est.value - exact).abs() / est.error);
        all &= est.agrees_with(exact, 3.0);
    }
    c.check(
        "disjoint cross energy, 20 pairs",
        all,
        format!("worst deviation {worst:.2} sigma"),
    );

    let literal = extrapolate_to_zero(|a| cap_self_energy(a).unwrap() + (a / 2.0).ln() - 0.25, 1e-3);
    c.close("self-energy + log(a/2) - 1/4 -> 0", literal, 0.0, 1e-6);
    let corrected = extrapolate_to_zero(|a| cap_self_energy(a).unwrap() + a.ln() - 0.25, 1e-3);
    c.close("self-energy + log(a) - 1/4 -> 0", corrected, 0.0, 1e-6);
    let ratio = extrapolate_to_zero(|a| cap_cross_correction(a).unwrap() / (a * a / 8.0), 1e-3);
    c.close("correction/(a^2/8) -> 1", ratio, 1.0, 1e-6);
}

fn criterion_4(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(5..40);
        let cfg = random_config(n, &mut rng);
        let sep = cfg.min_separation().unwrap();
        // caps of radius just below half the minimal separation
        let eps = 0.45 * sep * (n as f64).sqrt();
        let b = decomposition_lower_bound(&cfg, eps, &McRun::new(1000, 0)).unwrap();
        assert_eq!(b.overlapping_pairs, 0);
        worst = worst.max(b.slack.abs());
    }
    c.check(
        "disjoint slack = 0, 20 configs",
        worst <= 1e-9,
        format!("max |slack| {worst:.2e}"),
    );

    let mut all = true;
    let mut min_z = f64::INFINITY;
    for k in 0..100 {
        let n = [10, 20, 40][k % 3];
        let eps = [1.0, 2.0, 3.0][(k / 3) % 3];
        let cfg = random_config(n, &mut rng);
        let b = decomposition_lower_bound(&cfg, eps, &McRun::new(20_000, 500 + k as u64)).unwrap();
        let z = if b.slack_error > 0.0 {
            b.slack / b.slack_error
        } else if b.slack >= -1e-9 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        min_z = min_z.min(z);
        all &= b.slack >= -3.0 * b.slack_error - 1e-9;
    }
    c.check(
        "slack >= 0 with overlaps, 100 configs",
        all,
        format!("min slack/error {min_z:.2}"),
    );
}

fn criterion_5(c: &mut Criterion) {
    let icosahedron = -6.0 * (5.0 * (16.0f64 / 5.0).ln() + 2.0 * LN_2);
    let cases = [
        (2usize, -2.0 * LN_2, 1e-9, 5usize),
        (3, -3.0 * 3f64.ln(), 1e-9, 5),
        (4, -6.0 * (8.0f64 / 3.0).ln(), 1e-9, 5),
        (12, icosahedron, 1e-7, 10),
    ];
    for (n, want, tol, restarts) in cases {
        let opts = MinimizeOptions {
            restarts,
            seed: n as u64,
            ..Default::default()
        };
        let r = minimize_restarts(n, &opts).unwrap();
        c.close(&format!("N={n}, {restarts} restarts"), r.energy, want, tol);
    }
}

fn criterion_6(c: &mut Criterion) {
    let ns: Vec<usize> = (1..=10).map(|k| 50 * k).collect();
    let opts = MinimizeOptions {
        max_iters: 20_000,
        ..Default::default()
    };
    let curve = energy_curve(&ns, &opts).unwrap();
    let fit = fit_clog(&curve.iter().map(|p| (p.n, p.energy)).collect::<Vec<_>>()).unwrap();
    c.check(
        "c_log_hat in [-0.065, -0.045]",
        (-0.065..=-0.045).contains(&fit.c_log_hat),
        format!(
            "c_log_hat {:.6}, correction {:.4}, residual rms {:.2e}",
            fit.c_log_hat, fit.correction_coeff, fit.residual_rms
        ),
    );
}

fn criterion_7(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut configs: Vec<Configuration> = Vec::new();
    for n in [20usize, 50, 100] {
        let opts = MinimizeOptions {
            max_iters: 3000,
            ..Default::default()
        };
        configs.push(minimize_restarts(n, &opts).unwrap().config);
    }
    for n in [10usize, 30, 60, 100] {
        configs.push(random_config(n, &mut rng));
    }
    configs.push(Configuration::icosahedron());

    let (mut tested, mut skipped, mut ok) = (0, 0, true);
    let mut min_z = f64::INFINITY;
    for (k, cfg) in configs.iter().enumerate() {
        for (j, &eps) in [0.5, 1.0, 2.0].iter().enumerate() {
            let run = McRun::new(200_000, 700 + 3 * k as u64 + j as u64);
            let t = triangle_comparison(cfg, eps, &run).unwrap();
            match t.satisfied {
                Some(s) => {
                    tested += 1;
                    ok &= s;
                    min_z = min_z.min((t.integral.unwrap() - t.rhs.unwrap()) / t.stderr.unwrap());
                }
                None => skipped += 1,
            }
        }
    }
    c.check(
        "triangle inequality, non-hemispheric configs",
        ok && tested > 0,
        format!("{tested} tested, {skipped} skipped, min (lhs-rhs)/sigma {min_z:.2}"),
    );

    let oct = Configuration::octahedron();
    let t = triangle_comparison(&oct, 1.0, &McRun::new(1_000_000, 77)).unwrap();
    let rel = (t.integral.unwrap() / t.rhs.unwrap() - 1.0).abs();
    c.check(
        "octahedron equality within 5%",
        rel < 0.05,
        format!("relative gap {rel:.2e}"),
    );

    let (mut gz_ok, mut mu_ok) = (true, true);
    let mut hemispheric = 0;
    let mut max_ratio: f64 = 0.0;
    for k in 0..100 {
        let n = [10usize, 50, 100][k % 3];
        let eps = [0.5, 1.0, 2.0][(k / 3) % 3];
        let cfg = random_config(n, &mut rng);
        if in_closed_hemisphere(&cfg) {
            hemispheric += 1;
        }
        let r = gz_inequality_check(&cfg, eps, &McRun::new(20_000, 800 + k as u64)).unwrap();
        gz_ok &= r.satisfied;
        mu_ok &= r.two_i_mu >= -3.0 * r.two_i_mu_error;
        max_ratio = max_ratio.max(r.w1_lower * r.w1_lower / r.two_i_mu);
    }
    c.check(
        "W1 lower bound^2 <= 2 I(mu), 100 configs",
        gz_ok,
        format!("max w1^2 / 2I(mu) {max_ratio:.3}, {hemispheric} hemispheric"),
    );
    let m = SmearedMeasure::new(Configuration::icosahedron(), 2.0).unwrap();
    let e = smeared_energy(&m, &McRun::new(100_000, 78)).unwrap();
    mu_ok &= e.value >= -3.0 * e.error;
    c.check("I(mu) >= 0 on all tested measures", mu_ok, "");
}

fn criterion_8(c: &mut Criterion) {
    let mut worst: f64 = 0.0;
    let mut n = 4usize;
    while n <= 1_000_000 {
        worst = worst.max(triangle_for(n).unwrap().lhuilier_residual());
        n = if n < 100 { n + 1 } else { n * 5 / 4 };
    }
    worst = worst.max(triangle_for(1_000_000).unwrap().lhuilier_residual());
    c.check(
        "L'Huilier residual < 1e-12 up to n=1e6",
        worst < 1e-12,
        format!("max residual {worst:.2e}"),
    );

    let side = triangle_for(10_000).unwrap().side * 100.0;
    let rel = (side / 3.809_25 - 1.0).abs();
    c.check(
        "alpha(1e4)*100 within 1% of 3.80925",
        rel < 0.01,
        format!("{side:.6}, relative {rel:.2e}"),
    );

    for eps in [2.0, 1.0] {
        let exact = toth_triangle_integral(10_000, eps, TriangleMode::Exact).unwrap();
        let small = toth_triangle_integral(10_000, eps, TriangleMode::SmallAngle).unwrap();
        let gap = (exact - small).abs() / small;
        c.check(
            format!("exact vs small-angle at n=1e4, eps={eps}"),
            gap < 0.01,
            format!(
                "exact {exact:.6e}, small-angle {small:.6e}, gap {:.2}%",
                100.0 * gap
            ),
        );
    }
}

fn criterion_9(c: &mut Criterion) {
    let csv = || grid_to_csv(&plot_grid(0.5, 2.19, 200).unwrap());
    c.check("plot grid CSV byte-identical", csv() == csv(), "");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = random_config(40, &mut rng).rotated(&Rotation::random(&mut rng));
    let gz =
        || serde_json::to_string(&gz_inequality_check(&cfg, 1.0, &McRun::new(100_000, 99)).unwrap()).unwrap();
    let first = gz();
    c.check("transport JSON byte-identical", first == gz(), "");
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    c.check("transport JSON with one thread", first == single.install(gz), "");

    let opts = MinimizeOptions {
        restarts: 3,
        seed: 5,
        max_iters: 500,
        ..Default::default()
    };
    let mini = || serde_json::to_string(&minimize_restarts(30, &opts).unwrap()).unwrap();
    c.check("minimizer JSON byte-identical", mini() == mini(), "");
}

type Runner = fn(&mut Criterion);

fn main() {
    let suite: [(&str, Runner); 9] = [
        ("constants", criterion_1),
        ("maximization", criterion_2),
        ("cap integrals", criterion_3),
        ("decomposition identity", criterion_4),
        ("known minimizers", criterion_5),
        ("linear-term fit", criterion_6),
        ("inequality suites", criterion_7),
        ("triangle geometry", criterion_8),
        ("reproducibility", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in suite.iter().enumerate() {
        let start = Instant::now();
        let mut c = Criterion::default();
        run(&mut c);
        let pass = c.checks.iter().all(|ch| ch.pass);
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<24} {}  ({:.1} s)",
            k + 1,
            name,
            mark(pass),
            start.elapsed().as_secs_f64()
        );
        for ch in &c.checks {
            println!("    {} {}: {}", mark(ch.pass), ch.name, ch.detail);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        suite.len() - failed,
        suite.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
