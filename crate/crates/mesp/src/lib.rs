//! Certified bounds and exact solvers for constrained maximum-entropy
//! sampling: pick `s` of `n` jointly Gaussian variables, optionally under
//! linear side constraints, maximizing the log-determinant of their
//! covariance submatrix.
//!
//! The crate provides
//!
//! - the factorization bound (a concave spectral relaxation over a
//!   factorization `C = F F^T`), its complementary form, and the scaled
//!   linx bound, each solved by away-step Frank-Wolfe;
//! - dual certificates: every reported bound comes from a dual-feasible
//!   point, so it stays valid even when the primal solve is inexact;
//! - weighted mixing of the relaxations with a one-dimensional weight
//!   search;
//! - variable fixing from dual margins, iterated fixing, brute-force
//!   enumeration, a greedy/interchange heuristic, and branch-and-bound on
//!   the delete / Schur-complement branching scheme.
//!
//! Start with [`Instance`], then [`exact::compute_bound`] or the examples in
//! `examples/`.

pub mod cli;
pub mod error;
pub mod exact;
pub mod fact_bound;
pub mod instance;
pub mod linalg;
pub mod linx_bound;
pub mod mixing;
pub mod polytope;
mod simplex;
pub mod solver;

pub use error::{Error, Result};
pub use exact::{BoundKind, BoundSpec, GammaMode, SolveResult};
pub use fact_bound::{DFactCertificate, FixReport, IotaResult};
pub use instance::{FactorMethod, Factorization, Instance, SideConstraints};
pub use linx_bound::LinxParams;
pub use mixing::{DmixCertificate, MixComponent, MixWeights};
pub use polytope::{GapLpSolution, Polytope};
pub use solver::{PrimalResult, SolveOpts};
