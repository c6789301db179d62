use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operator is not self-adjoint (defect {defect:.3e}, allowed {allowed:.3e})")]
    NotSelfAdjoint { defect: f64, allowed: f64 },

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("operator is not supported in the requested corner (defect {0:.3e})")]
    Corner(f64),

    #[error("spectral parameter too close to the spectrum: {0}")]
    Spectrum(String),

    #[error("function undefined on the spectrum at {0}")]
    Undefined(f64),

    #[error("grading violation: {0}")]
    Grading(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("parameter outside the convergent range: {0}")]
    Domain(String),

    #[error("continuation failure: {0}")]
    Continuation(String),

    #[error("model construction failed: {0}")]
    Model(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
