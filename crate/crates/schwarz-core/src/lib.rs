//! Dynamics of Schwarz reflections and B-involutions of quadrature
//! multi-domains, together with the circle maps that model them externally
//! (Nielsen reflection maps, anti-Farey maps, factor Bowen-Series maps),
//! dynamical rays and laminations, combinatorial renormalization puzzles,
//! lifted algebraic correspondences, and escape-time renderers for the
//! dynamical and parameter planes.
//!
//! The crate is organised bottom-up:
//!
//! * [`cx`], [`poly`], [`roots`], [`rational`] — extended complex arithmetic,
//!   polynomial/rational-map kernels, simultaneous root finding, univalent
//!   inversion on disks;
//! * [`angle`] — exact rational arithmetic on circle angles;
//! * [`hyperbolic`] — circles orthogonal to the unit circle, (anti-)Möbius
//!   maps, Nielsen maps, the Minkowski-type circle conjugacy, anti-Farey maps
//!   and factor Bowen-Series maps;
//! * [`schwarz`] — quadrature multi-domains, Schwarz reflections,
//!   B-involutions, point classification and connectedness tests;
//! * [`rays`] — reflection-group rays, dynamical rays, landing detection,
//!   laminations and their gap statistics;
//! * [`puzzles`] — combinatorial puzzle pieces, alignment, and the
//!   renormalization distance;
//! * [`correspondence`] — the lifted correspondences on sheeted spheres;
//! * [`render`], [`family`] — deterministic escape-time rendering of
//!   dynamical and parameter planes;
//! * [`verify`] — the named residual check suites used by the CLI.

pub mod angle;
pub mod config;
pub mod correspondence;
pub mod cx;
pub mod error;
pub mod family;
pub mod hyperbolic;
pub mod poly;
pub mod puzzles;
pub mod rational;
pub mod rays;
pub mod render;
pub mod roots;
pub mod schwarz;
pub mod verify;

pub use config::Tolerances;
pub use cx::Cx;
pub use error::Error;
pub use poly::Poly;
pub use rational::RationalMap;
