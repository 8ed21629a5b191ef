use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand dimensions do not line up.
    Shape { op: &'static str, expected: usize, found: usize },
    /// A NaN or infinity appeared; `op` names the stage that produced it.
    NonFinite { op: &'static str },
    /// Malformed binary input; `offset` is the byte position of the problem.
    Parse { offset: usize, msg: String },
    /// Invalid configuration value.
    Config { key: &'static str, msg: String },
    /// Request exceeds a capability limit (e.g. the exact-Hessian cap).
    Capability { what: &'static str, limit: usize, requested: usize },
    /// Cholesky factorization failed; retry with a larger diagonal jitter.
    Factorization { jitter: f64, suggested: f64 },
    /// A training loop failed at the given step.
    Step { step: usize, source: alloc::boxed::Box<Error> },
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape { op, expected, found }
    }

    pub(crate) fn config(key: &'static str, msg: impl Into<String>) -> Self {
        Error::Config { key, msg: msg.into() }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step { step, source: alloc::boxed::Box::new(e) },
        }
    }

    /// True for errors caused by non-finite arithmetic, possibly wrapped in a step.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::Factorization { .. } => true,
            Error::Step { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, expected, found } => {
                write!(f, "{op}: shape mismatch (expected {expected}, found {found})")
            }
            Error::NonFinite { op } => write!(f, "non-finite value produced by {op}"),
            Error::Parse { offset, msg } => write!(f, "parse error at byte {offset}: {msg}"),
            Error::Config { key, msg } => write!(f, "invalid `{key}`: {msg}"),
            Error::Capability { what, limit, requested } => {
                write!(f, "{what}: requested {requested} exceeds cap {limit}")
            }
            Error::Factorization { jitter, suggested } => {
                write!(f, "kernel matrix not positive definite with jitter {jitter:e}; try {suggested:e}")
            }
            Error::Step { step, source } => write!(f, "step {step}: {source}"),
        }
    }
}

impl core::error::Error for Error {}

/// Returns `NonFinite { op }` unless every value is finite.
#[inline]
pub(crate) fn ensure_finite(op: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

#[inline]
pub(crate) fn ensure_finite_scalar(op: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { op })
    }
}
