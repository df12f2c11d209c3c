//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("matrix is asymmetric beyond tolerance (max deviation {max_dev:.3e})")]
    Asymmetric { max_dev: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {lambda_min:.3e})")]
    NotPsd { lambda_min: f64 },
    #[error("cardinality s={s} out of range (0, {n})")]
    SOutOfRange { s: usize, n: usize },
    #[error("side constraints have {rows} rows of A but {len} entries of b")]
    ConstraintShape { rows: usize, len: usize },
    #[error("rank(C) = {rank} < s = {s}")]
    RankDeficient { rank: usize, s: usize },
    #[error("matrix is numerically singular")]
    Singular,
    #[error("scale factor must be positive, got {0}")]
    InvalidScale(f64),
    #[error("up-branch on index {j} with near-zero diagonal {cjj:.3e}")]
    BranchOnZeroDiagonal { j: usize, cjj: f64 },
    #[error("polytope is infeasible")]
    Infeasible,
    #[error("LP iteration limit reached")]
    LpIterationLimit,
    #[error("LP unbounded (inconsistent model)")]
    LpUnbounded,
    #[error("objective is -inf at every candidate start point")]
    DegenerateStart,
    #[error("no integer point satisfies the constraints")]
    NoFeasibleSubset,
    #[error("subset enumeration guard exceeded: C({n},{s}) > {guard}")]
    SubsetGuard { n: usize, s: usize, guard: u64 },
    #[error("no iota satisfies the spectral partition condition")]
    IotaNotFound,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status the CLI maps this error to: 2 for usage/input
    /// problems, 1 for numerical failures at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Asymmetric { .. }
            | Error::NotPsd { .. }
            | Error::SOutOfRange { .. }
            | Error::ConstraintShape { .. }
            | Error::InvalidScale(_)
            | Error::Config(_) => 2,
            _ => 1,
        }
    }
}
