//! Points on the unit sphere, distances, spherical caps and the equilateral
//! triangle geometry used by the Fejes Tóth bound.
//!
//! Triangle frame: vertex `a` sits at the north pole, vertex `b` lies on the
//! meridian of azimuth 0, and the azimuth `theta` in [`voronoi_boundary_h`]
//! is measured from that meridian (the side `ab`) towards the angle bisector
//! at `a`. With this convention `theta = 0` hits the midpoint of `ab`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub(crate) type Vec3 = [f64; 3];

#[inline]
pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// A point of S², stored as a unit 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector {
    v: Vec3,
}

impl UnitVector {
    pub const E1: UnitVector = UnitVector { v: [1.0, 0.0, 0.0] };
    pub const E2: UnitVector = UnitVector { v: [0.0, 1.0, 0.0] };
    pub const E3: UnitVector = UnitVector { v: [0.0, 0.0, 1.0] };

    /// Normalizes `(x, y, z)`; fails on zero or non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = norm(&[x, y, z]);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidVector(x, y, z));
        }
        Ok(Self {
            v: [x / n, y / n, z / n],
        })
    }

    /// Spherical coordinates: polar angle from +z, azimuth from +x.
    pub fn from_spherical(polar: f64, azimuth: f64) -> Self {
        let (sp, cp) = polar.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        // already unit length up to rounding; renormalize anyway
        Self::new(sp * ca, sp * sa, cp).expect("trig point is finite")
    }

    pub fn x(&self) -> f64 {
        self.v[0]
    }
    pub fn y(&self) -> f64 {
        self.v[1]
    }
    pub fn z(&self) -> f64 {
        self.v[2]
    }

    pub fn as_array(&self) -> &Vec3 {
        &self.v
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.v, &other.v)
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector {
            v: [-self.v[0], -self.v[1], -self.v[2]],
        }
    }

    /// Applies a 3x3 matrix (assumed orthogonal) and renormalizes.
    pub fn rotate(&self, m: &Rotation) -> UnitVector {
        let r = m.apply(&self.v);
        UnitVector::new(r[0], r[1], r[2]).expect("rotation of a unit vector")
    }

    /// Two unit vectors completing `self` to a right-handed orthonormal frame.
    pub(crate) fn tangent_frame(&self) -> (Vec3, Vec3) {
        let c = &self.v;
        let helper = if c[0].abs() <= c[1].abs() && c[0].abs() <= c[2].abs() {
            [1.0, 0.0, 0.0]
        } else if c[1].abs() <= c[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let e1 = cross(&helper, c);
        let n1 = norm(&e1);
        let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
        let e2 = cross(c, &e1);
        (e1, e2)
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = Error;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        UnitVector::new(v[0], v[1], v[2])
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(u: UnitVector) -> Self {
        u.v
    }
}

/// Orthogonal 3x3 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub fn identity() -> Self {
        Rotation([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Haar-random rotation from a uniformly random unit quaternion.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random::<f64>() * 2.0 * PI;
        let u3: f64 = rng.random::<f64>() * 2.0 * PI;
        let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
        let (w, x, y, z) = (a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos());
        Rotation([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - z * w),
                2.0 * (x * z + y * w),
            ],
            [
                2.0 * (x * y + z * w),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - x * w),
            ],
            [
                2.0 * (x * z - y * w),
                2.0 * (y * z + x * w),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }

    pub(crate) fn apply(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
    }
}

/// Ordered list of distinct points on the sphere.
///
/// A single point is accepted so that one-atom smeared measures can be
/// formed; pair energies require at least two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration {
    points: Vec<UnitVector>,
}

impl Configuration {
    pub fn new(points: Vec<UnitVector>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if chordal_distance(&points[i], &points[j]) == 0.0 {
                    return Err(Error::CoincidentPoints { i, j });
                }
            }
        }
        Ok(Self { points })
    }

    /// Skips the O(N²) coincidence scan. Callers guarantee distinctness.
    pub(crate) fn from_points_unchecked(points: Vec<UnitVector>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn into_points(self) -> Vec<UnitVector> {
        self.points
    }

    pub fn rotated(&self, m: &Rotation) -> Configuration {
        Configuration {
            points: self.points.iter().map(|p| p.rotate(m)).collect(),
        }
    }

    /// `n` independent uniform points.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let pts = (0..n).map(|_| sample_uniform_sphere(rng)).collect();
        Configuration::new(pts)
    }

    /// Smallest pairwise geodesic distance; `None` for a single point.
    pub fn min_separation(&self) -> Option<f64> {
        let p = &self.points;
        let mut best: Option<f64> = None;
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                let d = geodesic_distance(&p[i], &p[j]);
                best = Some(best.map_or(d, |b: f64| b.min(d)));
            }
        }
        best
    }

    /// Regular tetrahedron with vertices `(±1, ±1, ±1)/√3`, even sign count.
    pub fn tetrahedron() -> Configuration {
        Self::from_raw(&[
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ])
    }

    /// `±e_1, ±e_2, ±e_3`.
    pub fn octahedron() -> Configuration {
        Self::from_raw(&[
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ])
    }

    /// Cyclic permutations of `(0, ±1, ±φ)`.
    pub fn icosahedron() -> Configuration {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let mut raw = Vec::with_capacity(12);
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                raw.push([0.0, s1, s2 * phi]);
                raw.push([s1, s2 * phi, 0.0]);
                raw.push([s2 * phi, 0.0, s1]);
            }
        }
        Self::from_raw(&raw)
    }

    fn from_raw(raw: &[Vec3]) -> Configuration {
        let pts = raw
            .iter()
            .map(|v| UnitVector::new(v[0], v[1], v[2]).expect("nonzero vertex"))
            .collect();
        Configuration::from_points_unchecked(pts)
    }
}

/// Geodesic ball `B(center, radius)`, `0 < radius <= pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalCap {
    center: UnitVector,
    radius: f64,
}

impl SphericalCap {
    pub fn new(center: UnitVector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= PI) {
            return Err(domain("cap radius must lie in (0, pi]", radius));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &UnitVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Normalized surface measure of the cap.
    pub fn measure(&self) -> f64 {
        let s = (0.5 * self.radius).sin();
        s * s
    }

    pub fn contains(&self, x: &UnitVector) -> bool {
        geodesic_distance(&self.center, x) <= self.radius
    }
}

/// Equilateral geodesic triangle of area `2 pi / (n - 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalTriangle {
    pub n: usize,
    /// Steradians.
    pub area: f64,
    pub interior_angle: f64,
    /// Geodesic side length.
    pub side: f64,
    /// `n = 3`: the triangle is a hemisphere bounded by a great circle.
    pub degenerate: bool,
}

impl SphericalTriangle {
    /// `|tan(pi / (2 (n - 2))) - sqrt(tan(3 side / 4) tan^3(side / 4))|`.
    pub fn lhuilier_residual(&self) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        let lhs = (PI / (2.0 * (self.n as f64 - 2.0))).tan();
        (lhs - lhuilier_rhs(self.side)).abs()
    }

    pub fn excess(&self) -> f64 {
        3.0 * self.interior_angle - PI
    }
}

fn lhuilier_rhs(side: f64) -> f64 {
    let q = (0.25 * side).tan();
    ((0.75 * side).tan() * q * q * q).sqrt()
}

/// Solves L'Huilier's relation for the side of the equilateral triangle
/// with area `2 pi / (n - 2)`.
pub fn triangle_for(n: usize) -> Result<SphericalTriangle> {
    if n < 3 {
        return Err(domain("triangle needs n >= 3", n as f64));
    }
    let area = 2.0 * PI / (n as f64 - 2.0);
    let interior_angle = (area + PI) / 3.0;
    if n == 3 {
        return Ok(SphericalTriangle {
            n,
            area,
            interior_angle,
            side: 2.0 * PI / 3.0,
            degenerate: true,
        });
    }

    // tan(3s/4) tan^3(s/4) is increasing on (0, 2 pi / 3) and blows up at
    // the right end; compare squares to avoid the square root.
    let target = (0.25 * area).tan().powi(2);
    let g = |s: f64| {
        let q = (0.25 * s).tan();
        (0.75 * s).tan() * q * q * q - target
    };
    let (mut lo, mut hi) = (0.0_f64, 2.0 * PI / 3.0 - 1e-12);
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(Error::RootBracket("L'Huilier side not bracketed"));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut side = 0.5 * (lo + hi);

    // one Newton polish, kept only if it does not worsen the residual
    let dg = {
        let (t3, t1) = ((0.75 * side).tan(), (0.25 * side).tan());
        let (s3, s1) = (1.0 + t3 * t3, 1.0 + t1 * t1);
        0.75 * s3 * t1.powi(3) + 0.75 * t3 * t1 * t1 * s1
    };
    if dg.is_finite() && dg > 0.0 {
        let polished = side - g(side) / dg;
        if g(polished).abs() < g(side).abs() {
            side = polished;
        }
    }
    if !side.is_finite() || side <= 0.0 {
        return Err(Error::RootBracket("L'Huilier root is not positive"));
    }

    Ok(SphericalTriangle {
        n,
        area,
        interior_angle,
        side,
        degenerate: false,
    })
}

/// Great-circle distance, `atan2(|u x v|, u . v)`.
pub fn geodesic_distance(u: &UnitVector, v: &UnitVector) -> f64 {
    let c = cross(&u.v, &v.v);
    norm(&c).atan2(u.dot(v))
}

/// Euclidean distance in R³.
pub fn chordal_distance(u: &UnitVector, v: &UnitVector) -> f64 {
    norm(&sub(&u.v, &v.v))
}

/// Normalized measure `sin^2(a/2)` of a cap of geodesic radius `a`.
pub fn cap_measure(a: f64) -> Result<f64> {
    if !(a > 0.0 && a <= PI) {
        return Err(domain("cap radius must lie in (0, pi]", a));
    }
    let s = (0.5 * a).sin();
    Ok(s * s)
}

/// Geodesic distance from `x` to the nearest point of `cfg`.
pub fn distance_to_set(x: &UnitVector, cfg: &Configuration) -> f64 {
    // argmax of the dot product is the nearest point; the distance itself is
    // taken through atan2 for accuracy
    let nearest = cfg
        .points()
        .iter()
        .max_by(|a, b| a.dot(x).total_cmp(&b.dot(x)))
        .expect("configuration is nonempty");
    geodesic_distance(x, nearest)
}

/// Geodesic distance from `x` to the union of the caps `B(x_i, a)`.
pub fn distance_to_caps(x: &UnitVector, cfg: &Configuration, a: f64) -> f64 {
    (distance_to_set(x, cfg) - a).max(0.0)
}

/// Distance from a triangle vertex to the perpendicular bisector of the
/// adjacent side, along the geodesic leaving the vertex at azimuth `theta`.
pub fn voronoi_boundary_h(theta: f64, alpha: f64) -> f64 {
    ((0.5 * alpha).tan() / theta.cos()).atan()
}

/// Uniform point on S².
pub fn sample_uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> UnitVector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random::<f64>() * 2.0 * PI;
    let r = (1.0 - z * z).max(0.0).sqrt();
    UnitVector::new(r * phi.cos(), r * phi.sin(), z).expect("sampled point is finite")
}

/// Uniform point in a cap: height uniform in `[cos a, 1]`, azimuth uniform.
pub fn sample_uniform_cap<R: Rng + ?Sized>(cap: &SphericalCap, rng: &mut R) -> UnitVector {
    // 1 - z = u * (1 - cos a) with 1 - cos a = 2 sin^2(a/2)
    let depth = 2.0 * cap.measure();
    let one_minus_z = rng.random::<f64>() * depth;
    let z = 1.0 - one_minus_z;
    let r = (one_minus_z * (2.0 - one_minus_z)).max(0.0).sqrt();
    let phi: f64 = rng.random::<f64>() * 2.0 * PI;
    let (e1, e2) = cap.center.tangent_frame();
    let c = cap.center.as_array();
    let (cp, sp) = (r * phi.cos(), r * phi.sin());
    UnitVector::new(
        cp * e1[0] + sp * e2[0] + z * c[0],
        cp * e1[1] + sp * e2[1] + z * c[1],
        cp * e1[2] + sp * e2[2] + z * c[2],
    )
    .expect("sampled point is finite")
}

/// Whether some closed hemisphere contains every point.
///
/// If one does, it can be rotated until its boundary passes through two of
/// the points (or one point and its antipode direction), so it suffices to
/// test the normals `±(x_i × x_j)` and, for degenerate sets, `±x_i`.
pub fn in_closed_hemisphere(cfg: &Configuration) -> bool {
    const TOL: f64 = 1e-12;
    let p = cfg.points();
    let fits = |v: &Vec3| p.iter().all(|x| dot(v, x.as_array()) >= -TOL);
    if p.len() <= 3 {
        // three points always lie on a closed hemisphere (the one bounded by
        // the great circle through two of them, or their common plane)
        return true;
    }
    for x in p {
        let v = *x.as_array();
        if fits(&v) || fits(&[-v[0], -v[1], -v[2]]) {
            return true;
        }
    }
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let c = cross(p[i].as_array(), p[j].as_array());
            let n = norm(&c);
            if n < 1e-14 {
                continue;
            }
            let c = [c[0] / n, c[1] / n, c[2] / n];
            if fits(&c) || fits(&[-c[0], -c[1], -c[2]]) {
                return true;
            }
        }
    }
    false
}
