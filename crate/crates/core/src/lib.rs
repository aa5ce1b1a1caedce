//! Numerical toolkit for Dehn filling of hyperbolic cusps by Einstein metrics.
//!
//! Modules follow the construction: flat tori and filling curves
//! ([`lattice`]), the model metrics ([`metrics`]), their curvature
//! ([`curvature`]), the linearized Einstein operator on invariant forms
//! ([`modes`]), non-toral ends ([`bieberbach`]) and volume accounting
//! ([`topo`]). [`experiment`] drives sweeps from config files.

pub mod bieberbach;
pub mod curvature;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod lattice;
pub mod metrics;
pub mod modes;
pub mod ode;
pub mod quad;
pub mod topo;

pub use error::{Error, Result};
