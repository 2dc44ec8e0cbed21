//! Correlated equilibria of finite normal-form games.
//!
//! - [`game`]: games, strategies, joint-action indexing and decompositions
//!   of correlated strategies into per-player measures.
//! - [`equilibria`]: Nash, correlated-equilibrium and stationarity checks.
//! - [`entropy`]: the closed-form entropy-regularized generalized Nash
//!   equilibrium and its epsilon certificate.
//! - [`lp`]: the correlated-equilibrium polytope and a dense simplex solver.
//! - [`experiment`]: seeded random games, the regularization sweep and
//!   timing against the LP.
//!
//! Costs are minimized throughout.

pub mod entropy;
pub mod equilibria;
pub mod error;
pub mod experiment;
pub mod game;
pub mod lp;
pub mod par;

pub use entropy::{
    certify, epsilon_certificate, solve_closed_form, Certification, EntropySolution,
    EpsilonCertificate, RegularizationWeights,
};
pub use equilibria::{
    check_ce, check_fully_mixed_gne, check_nash, check_regularized_stationarity,
    empirical_suboptimality, Deviation, DeviationReport, StationarityReport,
};
pub use error::{Error, Result};
pub use game::{CorrelatedStrategy, Decomposition, JointStrategy, NormalFormGame};
pub use lp::{build_ce_polytope, LinearProgram, SimplexOptions, SolveOutcome, Status};
pub use par::Execution;
