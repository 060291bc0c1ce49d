//! Error type shared by all computation stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An exhaustive enumeration would exceed the configured point budget.
    #[error("enumeration budget exceeded: {points} points requested, budget is {budget}")]
    BudgetExceeded { points: u128, budget: u128 },

    /// A p-adic pivoting step could not be certified at the working precision.
    #[error("insufficient p-adic working precision: certified {certified} digits, need {needed}")]
    PrecisionInsufficient { certified: u32, needed: u32 },

    /// Normalized representation numbers did not settle within the allowed window.
    #[error("local density at p={p} did not stabilize below exponent {max_exponent}")]
    StabilizationFailure { p: u64, max_exponent: u32 },

    /// A character was paired with an L-value argument of the wrong parity.
    #[error("parity mismatch: chi(-1) = {chi_parity} but s = {s} requires {required}")]
    ParityMismatch { chi_parity: i32, s: u32, required: i32 },

    /// A transcendental factor survived a computation that must end rational.
    #[error("non-cancellation: symbolic constant {value} is not rational")]
    NonCancellation { value: String },

    /// An argument that must be a discriminant (0 or 1 mod 4, nonzero) was not.
    #[error("invalid discriminant: {0}")]
    InvalidDiscriminant(i128),

    /// The odd-rank branch of the bound constant needs rank at least 5.
    #[error("unsupported rank {0} for the odd-rank bound (need m >= 5)")]
    UnsupportedRank(u32),

    /// A coefficient table does not reach far enough for the requested search.
    #[error("table cap {cap} is below the required search cap {required}")]
    CapInsufficient { cap: String, required: String },

    /// No point of a Heegner divisor could be sampled in the search region.
    #[error("no divisor sample found after {attempts} attempts")]
    NoSample { attempts: u32 },

    /// The imaginary part of a Siegel point is too close to singular.
    #[error("ill-conditioned Siegel point: smallest eigenvalue of Im Z is {0}")]
    IllConditioned(f64),

    /// A claimed theta identification failed its numeric divisor check.
    #[error("theta verification failed: {0}")]
    VerificationFailure(String),

    /// Unknown lattice id on the command line or in an API call.
    #[error("unknown lattice id `{0}`")]
    UnknownLattice(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed cache line: {0}")]
    CacheFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
