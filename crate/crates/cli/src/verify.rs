//! Closed forms against independent quadrature.

use std::f64::consts::{FRAC_PI_6, PI};

use anyhow::Result;
use logenergy::bounds::{c1, c2, c_tilde, u, v};
use logenergy::energy::{cap_cross_energy_disjoint, cap_self_energy, decomposition_lower_bound};
use logenergy::quadrature::{cap_pair_energy_quadrature, integrate_1d_adaptive, Kernel, McRun};
use logenergy::wasserstein::witness_integral;
use logenergy::{Configuration, SphericalCap, UnitVector};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub samples: u64,
    pub seed: u64,
    pub checks: Vec<VerifyCheck>,
    pub all_passed: bool,
}

fn check(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.into(),
        value,
        reference,
        tolerance,
        pass: (value - reference).abs() <= tolerance,
    }
}

/// `sign_flip` negates every closed-form cap integral (negative control).
pub fn run(samples: u64, seed: u64, sign_flip: bool) -> Result<VerifyReport> {
    let s = if sign_flip { -1.0 } else { 1.0 };
    let base = McRun::new(samples, seed);
    let mut checks = Vec::new();

    let sec3 = integrate_1d_adaptive(|t| t.cos().powi(-3), 0.0, FRAC_PI_6, 1e-14)?;
    let sec2 = integrate_1d_adaptive(|t| t.cos().powi(-2), 0.0, FRAC_PI_6, 1e-14)?;
    checks.push(check("C1 closed form vs quadrature", c1(), sec3.value, 1e-10));
    checks.push(check("C2 closed form vs quadrature", c2(), sec2.value, 1e-10));
    checks.push(check(
        "u(2) + v(2) = C_tilde",
        u(2.0)? + v(2.0)?,
        c_tilde(),
        1e-15,
    ));

    for (k, a) in [0.1, 0.5, 1.0, PI / 2.0, PI].into_iter().enumerate() {
        let cap = SphericalCap::new(UnitVector::E3, a)?;
        let est = cap_pair_energy_quadrature(&cap, &cap, Kernel::LogInverse, &base.derive(k as u64))?;
        checks.push(check(
            format!("cap self-energy a={a:.4}"),
            s * cap_self_energy(a)?,
            est.value,
            3.0 * est.error,
        ));
    }

    for (k, (d, a)) in [(0.5, 0.2), (1.0, 0.3), (2.0, 0.6), (3.0, 1.0)]
        .into_iter()
        .enumerate()
    {
        let x = UnitVector::E3;
        let y = UnitVector::from_spherical(d, 0.3);
        let est = cap_pair_energy_quadrature(
            &SphericalCap::new(x, a)?,
            &SphericalCap::new(y, a)?,
            Kernel::LogInverse,
            &base.derive(100 + k as u64),
        )?;
        checks.push(check(
            format!("disjoint cross energy d={d} a={a}"),
            s * cap_cross_energy_disjoint(d, a)?,
            est.value,
            3.0 * est.error,
        ));
    }

    let tetra = Configuration::tetrahedron();
    let b = decomposition_lower_bound(&tetra, 0.5, &base.derive(200))?;
    checks.push(check("decomposition slack, disjoint caps", b.slack, 0.0, 1e-12));

    // one cap of radius π/2: mean of max(θ - π/2, 0) = (π - 2)/4
    let single = Configuration::new(vec![UnitVector::E3])?;
    let w = witness_integral(&single, PI / 2.0, &base.derive(300))?;
    checks.push(check(
        "witness integral, hemisphere cap",
        w.value,
        (PI - 2.0) / 4.0,
        3.0 * w.error,
    ));

    let all_passed = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        samples,
        seed,
        checks,
        all_passed,
    })
}
