use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared across the toolkit.
///
/// Variants are grouped by how a caller should react: bad input, numeric
/// range/stability problems, oracle refusals, and I/O or parse failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectrum is not normalizable (total weight {total})")]
    NotNormalizable { total: f64 },

    #[error("potential does not bind: lowest l=0 energy {energy} is not below 0")]
    NoBoundState { energy: f64 },

    #[error("grid too coarse: ground energy drifts by {drift:e} between refinements (tolerance {tolerance:e})")]
    GridTooCoarse { drift: f64, tolerance: f64 },

    #[error("normalization deficit {deficit:e} exceeds tolerance {tolerance:e}")]
    NormalizationDeficit { deficit: f64, tolerance: f64 },

    #[error("missing single-particle energy for shell (n={n}, l={l})")]
    MissingEnergy { n: u32, l: u32 },

    #[error("log-domain range exceeded at k={k}")]
    Range { k: usize },

    #[error("table of order {available} is too short, order {required} is needed")]
    TableTooShort { required: usize, available: usize },

    #[error("state vanishes: N={n} exceeds the Schmidt rank S={rank}")]
    VanishingState { n: usize, rank: usize },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("invalid occupation: N*D_j = {nd} lies outside [0, 1]")]
    InvalidOccupation { nd: f64 },

    #[error("oracle refuses S={s}, N={n}: exceeds the exhaustive-enumeration cap (S<={max_s}, N<={max_n})")]
    OracleCap {
        s: usize,
        n: usize,
        max_s: usize,
        max_n: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors that stem from numeric range or stability limits.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotNormalizable { .. }
                | Error::NoBoundState { .. }
                | Error::GridTooCoarse { .. }
                | Error::NormalizationDeficit { .. }
                | Error::Range { .. }
                | Error::TableTooShort { .. }
                | Error::VanishingState { .. }
                | Error::NumericalInstability(_)
                | Error::InvalidOccupation { .. }
        )
    }
}
