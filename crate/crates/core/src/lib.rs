//! Exact synthesis of tight differential-privacy and accuracy bounds for
//! finite, discrete randomized algorithms.
//!
//! The pipeline: write a mechanism in a small discrete probabilistic
//! language ([`lang`]), compile it to one decision diagram per output bit
//! with a literal-weight map ([`compile`] over [`bdd`]), and answer
//! `Pr[A(x) = y]` queries by exact-rational weighted model counting. On top
//! of that, [`synthesis`] materializes probability matrices over inference
//! sets and scans privacy/accuracy sets for the maximum likelihood ratio
//! (a tight `e^eps`) and the minimum interval mass (a tight `1 - beta`).
//! [`mechanisms`] provides built-in generators (randomized response, its
//! counting wrapper, and the truncated-geometric above-threshold mechanism)
//! together with their symmetry sets, and [`oracle`] is an independent
//! brute-force evaluator used as ground truth in tests.

pub mod bdd;
pub mod compile;
pub mod lang;
pub mod mechanisms;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod runner;
pub mod synthesis;
mod timing;

pub use rational::Rational;

/// Unified error type across the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] lang::ParseError),
    #[error(transparent)]
    Validate(#[from] lang::ValidateError),
    #[error(transparent)]
    Bdd(#[from] bdd::BddError),
    #[error(transparent)]
    Compile(#[from] compile::CompileError),
    #[error(transparent)]
    Query(#[from] compile::QueryError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Synthesis(#[from] synthesis::SynthesisError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for resource-cap failures (node budgets, state-space guards,
    /// coin caps) as opposed to validation or coverage failures.
    pub fn is_resource_cap(&self) -> bool {
        match self {
            Error::Compile(compile::CompileError::NodeBudgetExceeded { .. }) => true,
            Error::Oracle(oracle::OracleError::CoinCapExceeded { .. }) => true,
            Error::Synthesis(synthesis::SynthesisError::SizeGuard { .. }) => true,
            _ => false,
        }
    }
}
