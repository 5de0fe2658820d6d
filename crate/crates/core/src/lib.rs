pub mod corpus;
pub mod error;
pub mod jet;
pub mod linalg;
pub mod potential;
pub mod propagator;
pub mod invariants;
pub mod quad;
pub mod scattering;
pub mod spectral;
pub mod real;
pub mod spline;
pub mod tracecheck;
