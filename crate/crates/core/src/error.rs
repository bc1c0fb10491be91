use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A specification field violates its constraint.
    InvalidSpec { field: &'static str, reason: String },
    /// `L^d` exceeds the configured maximum matrix dimension.
    SizeOverflow { sites: u128, max: usize },
    /// Factorization or iteration could not produce a trustworthy answer.
    NumericalFailure(String),
    /// A query outside an operation's precondition.
    InvalidQuery(String),
    /// Data too degenerate to fit (all-zero increments, too few points, ...).
    Degenerate(String),
    /// A failure inside one Monte Carlo realization.
    AtRealization {
        realization: u64,
        energy: Option<f64>,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn spec(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, realization: u64, energy: Option<f64>) -> Self {
        match self {
            e @ Error::AtRealization { .. } => e,
            e => Error::AtRealization {
                realization,
                energy,
                source: Box::new(e),
            },
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalFailure(_) => true,
            Error::AtRealization { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec { field, reason } => write!(f, "invalid {field}: {reason}"),
            Error::SizeOverflow { sites, max } => {
                write!(
                    f,
                    "lattice has {sites} sites, above the maximum matrix dimension {max}"
                )
            }
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::InvalidQuery(msg) => write!(f, "invalid query: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::AtRealization {
                realization,
                energy: Some(e),
                source,
            } => {
                write!(f, "realization {realization}, E = {e}: {source}")
            }
            Error::AtRealization {
                realization,
                energy: None,
                source,
            } => {
                write!(f, "realization {realization}: {source}")
            }
        }
    }
}

impl core::error::Error for Error {}
