use alloc::string::String;

/// Errors raised anywhere in the core crate.
///
/// The variants follow the failure classes callers react to differently: the
/// command-line front end maps `Config` to exit code 2, `Data`/`SplitInfeasible`
/// to 3 and `Numeric` to 4.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("non-finite value in {0}")]
    Numeric(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("value outside domain: {0}")]
    Domain(String),
    #[error("stale or mismatched cache: {0}")]
    State(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("split infeasible: {0}")]
    SplitInfeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl core::fmt::Display, got: impl core::fmt::Display) -> Self {
        use alloc::string::ToString;
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

macro_rules! config_err {
    ($($arg:tt)*) => { $crate::error::Error::Config(alloc::format!($($arg)*)) };
}
macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
pub(crate) use config_err;
pub(crate) use domain_err;
