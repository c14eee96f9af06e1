//! Logarithmic energy on the unit sphere S².
//!
//! Point configurations and their energy, spherical-cap potential integrals,
//! the lower bound for the linear term of the minimal energy, a gradient
//! descent minimizer, and Monte-Carlo/quadrature tools used to check the
//! closed forms.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod minimizer;
pub mod pointset;
pub mod quadrature;
pub mod special;
pub mod wasserstein;

pub use bounds::{BoundReport, Constants, GridRow, TriangleMode};
pub use energy::{EnergyBreakdown, SmearedEnergy, SmearedMeasure, I_SIGMA, KAPPA};
pub use error::{Error, Result};
pub use geometry::{Configuration, Rotation, SphericalCap, SphericalTriangle, UnitVector};
pub use minimizer::{CurvePoint, FitResult, Init, MinimizeOptions, MinimizeResult, Termination};
pub use quadrature::{IntegralEstimate, McRun, Method};
pub use wasserstein::{TransportCheck, TriangleComparison};
