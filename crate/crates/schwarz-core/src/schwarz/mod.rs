//! Quadrature multi-domains and the piecewise anti-holomorphic maps they
//! carry: Schwarz reflections (`η⁻(z) = 1/z̄` conjugated by the
//! uniformizers) and B-involutions (`η(z) = 1/z` with a domain pairing),
//! plus orbit classification against the fundamental tile and the
//! connectedness test driven by the critical orbits.

mod binv;
mod domain;
mod reflection;

pub use binv::{BInvolution, DiskMembership, JordanDisk};
pub use domain::{QuadratureMultiDomain, SingularKind, SingularPoint, Touch};
pub use reflection::{
    ConnectednessReport, Connectivity, PointClass, SchwarzReflection, UndecidedReason,
};
