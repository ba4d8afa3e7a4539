use thiserror::Error;

/// Errors produced by construction, propagation, and transformation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid time-scale or grid construction input.
    #[error("construction: {0}")]
    Construction(String),

    /// Index outside the valid range of a time scale or grid.
    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// An operation needed a larger grid than the one supplied.
    #[error("grid too small: need at least {need1}x{need2}, got {got1}x{got2}")]
    GridTooSmall {
        need1: usize,
        need2: usize,
        got1: usize,
        got2: usize,
    },

    /// Two grid objects that must share a domain do not.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// Attempt to invert a singular 2x2 matrix / zero-norm quaternion.
    #[error("singular element: {0}")]
    Singular(String),

    /// A transfer matrix 1 + eps*U became singular during propagation.
    #[error("singular transfer matrix at node ({i}, {j}), direction {dir}")]
    SingularTransfer { i: usize, j: usize, dir: u8 },

    /// The spectral parameter was zero (or imaginary where a real value is required).
    #[error("invalid spectral parameter: {0}")]
    Lambda(String),

    /// Geodesic between antipodal unit quaternions is not unique.
    #[error("antipodal unit quaternions: geodesic derivative undefined (delta = pi)")]
    AntipodalGeodesic,

    /// A matrix expected to be a real quaternion has imaginary residue.
    #[error("not a real quaternion: imaginary residue {residue:.3e} exceeds {tol:.3e}")]
    NotRealQuaternion { residue: f64, tol: f64 },

    /// Degenerate geometry where a non-degenerate configuration is required.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// The Darboux projector violated one of its structural constraints.
    #[error("projector: {0}")]
    Projector(String),

    /// Evaluation of the Darboux matrix at its pole.
    #[error("Darboux matrix pole: lambda = i*kappa = {0:.6e}i")]
    DarbouxPole(f64),

    /// Darboux chain parameters collide (repeated kappa).
    #[error("pole collision: repeated kappa = {0}")]
    PoleCollision(f64),

    /// Invalid pipeline configuration; the message names the offending field.
    #[error("config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
