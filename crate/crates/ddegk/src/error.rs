use thiserror::Error;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("blow-up: |m| exceeded 1e6 at t = {t}")]
    BlowUp { t: f64 },

    #[error("characteristic root did not converge; last iterate {re} + {im}i")]
    RootFinding { re: f64, im: f64 },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("projection error: {0}")]
    Projection(String),

    #[error("eigenvector matrix is ill-conditioned (condition number {0:e})")]
    Conditioning(f64),

    #[error("BVP solver failed ({message}); best residual {residual:e}")]
    Solver { residual: f64, message: String },

    #[error("CFL condition violated: dt*(nu1/h1 + nu2/h2) = {0} > 1")]
    Cfl(f64),

    #[error("non-finite value produced at step {0}")]
    NonFinite(usize),

    #[error("state ({eta1}, {eta2}) left the grid at t = {t}")]
    GridExit { t: f64, eta1: f64, eta2: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
