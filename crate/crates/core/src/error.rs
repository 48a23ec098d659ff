use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{n} is not invertible modulo {q}")]
    NotInvertible { n: u64, q: u64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("gcd({a}, {q}) = {g}, expected a unit modulo q")]
    NotCoprime { a: i64, q: u64, g: u64 },

    #[error("no w-split of {n} for w = {w}: n must be at least w")]
    NoSplit { n: u64, w: f64 },

    #[error("Buchstab expansion with r = {r} does not terminate: y^(r+1) <= x (x = {x}, y = {y})")]
    IncompleteExpansion { r: u32, x: f64, y: f64 },

    #[error("identity range too short: z^J = {reach} < n_max = {n_max}")]
    IdentityRange { reach: f64, n_max: u64 },

    #[error("bound index {0} is not one of 1..=4")]
    BoundIndex(u8),

    #[error("trivial regime: {0}")]
    TrivialRegime(String),
}

pub type Result<T> = std::result::Result<T, Error>;
