use thiserror::Error;

/// Errors produced by the analysis, LP and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid controllability function: {0}")]
    InvalidBeta(String),

    #[error("degenerate denominator in the closed-form bound ({factor} = {value:e})")]
    DegenerateDenominator { factor: &'static str, value: f64 },

    #[error("controllability function is not submultiplicative up to horizon {horizon}")]
    NotSubmultiplicative { horizon: usize },

    #[error("linear program exceeds the size cap ({vars} variables, {rows} rows)")]
    SizeExceeded { vars: usize, rows: usize },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("numerical breakdown in simplex: {0}")]
    NumericalBreakdown(String),

    #[error("oracle LP reported {0}; the feasible set is nonempty by construction")]
    OracleInfeasible(&'static str),

    #[error("optimal control problem infeasible: {0}")]
    OcpInfeasible(String),

    #[error("no OCP backend for this system: {0}")]
    BackendUnavailable(String),

    #[error("no segment with closed-loop cost above the practical-stability floor")]
    NoValidSegments,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that stem from floating-point conditioning rather
    /// than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDenominator { .. }
                | Error::NumericalBreakdown(_)
                | Error::OracleInfeasible(_)
                | Error::NoValidSegments
        )
    }
}
