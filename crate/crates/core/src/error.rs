use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument did not hold.
    InvalidArgument(String),
    /// Two points that must be distinct coincide.
    DegenerateGeometry(String),
    /// An iterative routine did not converge or produced non-finite values.
    Numerical(String),
    /// Water-filling was asked to allocate power over channels that are all dead.
    InfeasibleAllocation,
    /// A surface sector whose masked feeder channel is identically zero.
    DegenerateSector(usize),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DegenerateGeometry(msg) => write!(f, "degenerate geometry: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::InfeasibleAllocation => f.write_str("infeasible power allocation: every channel gain is zero"),
            Error::DegenerateSector(k) => {
                write!(f, "sector {k} has an all-zero masked feeder channel")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
