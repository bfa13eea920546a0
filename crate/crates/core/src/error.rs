use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generator matrix is singular (|det G| = {0:e})")]
    SingularGenerator(f64),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("lattices are not nested: {0}")]
    NotNested(String),

    #[error("no closed-form second moment for this lattice; use a positive sample budget")]
    NoClosedForm,

    #[error("coset enumeration needs {required} entries, cap is {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("vector is not a member of {0}")]
    Membership(&'static str),

    #[error("node mismatch: message for node {message}, dither for node {dither}")]
    NodeMismatch { message: u8, dither: u8 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("relay codeword power constraint not met after {0} attempts")]
    PowerConstraint(u32),
}
