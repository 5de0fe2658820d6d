use thiserror::Error;

/// Error type shared by every operation in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("derivative order {requested} unavailable (potential provides up to {available})")]
    UnsupportedDerivative { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("integral shows no decay: {0}")]
    Divergence(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("step size underflow at x = {x}: problem too stiff for the integrator")]
    Stiffness { x: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("spectral parameter sits at the branch point λ = 0")]
    BranchPoint,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("density matrix singular: condition number {cond:.3e} (possible embedded resonance)")]
    SingularDensity { cond: f64 },

    #[error("spectral parameter too close to the spectrum: |det B| = {det:.3e}")]
    Resolvent { det: f64 },

    #[error("window not covered by the sampled measure: {0}")]
    Coverage(String),

    #[error("logarithm branch tracking failed: {0}")]
    Tracking(String),

    #[error("asymptotic fit residual {residual:.3e} above tolerance")]
    FitDivergence { residual: f64 },

    #[error("grading error: {0}")]
    Grading(String),

    #[error("potential description: {0}")]
    Schema(String),
}

pub type Result<V> = std::result::Result<V, Error>;
