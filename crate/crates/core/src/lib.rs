//! A desk-scale computational laboratory for the Thurston metric on the
//! Teichmüller spaces of the once-punctured torus S₁,₁ and the four-punctured
//! sphere S₀,₄.
//!
//! The crate is organized bottom-up:
//!
//! - [`curves`] — exact integer combinatorics of slopes: Stern–Brocot
//!   enumeration, intersection numbers, Dehn twists, mapping classes, and
//!   curve words in π₁.
//! - [`num`] — arbitrary-precision reals (MPFR-backed), forward-mode jets
//!   over the Fenchel–Nielsen chart, and 2D (co)vectors.
//! - [`holonomy`] — discrete faithful SL(2,ℝ) representations from
//!   Fenchel–Nielsen coordinates, hyperbolic lengths of slope curves via the
//!   Farey trace recursion, and exact length gradients.
//! - [`geom`] — the Thurston metric and norm, the dual convex embedding of
//!   projective measured laminations, facets of the unit sphere, stretch
//!   vectors and stretch-line integration, and the Δ(t) twist-gap formula.
//! - [`lab`] — experiment drivers: the Γ comparison map and its linearity
//!   defect, facet-length asymptotics, longest-facet correspondence,
//!   twist-length ratios, the surface discriminator, and isometry checks.
//! - [`accept`] — the runnable acceptance suite backing both `selftest` and
//!   the integration tests.
//! - [`render`] — SVG output for spheres and facets.

pub mod accept;
pub mod curves;
pub mod geom;
pub mod holonomy;
pub mod lab;
pub mod num;
pub mod render;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("slope (0, 0) is not a curve class")]
    ZeroSlopeInput,
    #[error("slope arithmetic overflowed 128-bit integers")]
    SlopeOverflow,
    #[error("matrix determinant {0} is not ±1")]
    NotUnimodular(i128),
    #[error("curve length must be positive")]
    NonPositiveLength,
    #[error("holonomy invariants cannot be met at {bits} bits: {what}")]
    PrecisionUnderflow { bits: u32, what: String },
    #[error("holonomy corrupt: essential slope {0} has trace magnitude < 2")]
    HolonomyCorrupt(String),
    #[error("points live on different surfaces")]
    SurfaceMismatch,
    #[error("the zero vector has no norm direction")]
    ZeroVector,
    #[error("the zero covector has no ray")]
    ZeroCovector,
    #[error("dual sphere convexity violated at depth {depth} (precision failure)")]
    ConvexityViolation { depth: u32 },
    #[error("facet of {slope} came out empty at {bits} bits (precision failure)")]
    EmptyFacet { slope: String, bits: u32 },
    #[error("enumeration depth {depth} cannot resolve the requested ray")]
    DepthInsufficient { depth: u32 },
    #[error("stretch integration stalled at t = {t}")]
    IntegrationStall { t: f64 },
    #[error("longest-facet query unresolved: candidates within tolerance")]
    Unresolved,
    #[error("linear map is singular within tolerance")]
    SingularMap,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
