//! Tests and estimates for the dimension of the non-Gaussian signal subspace of
//! multivariate data, built on the FOBI matrix of fourth moments.
//!
//! The pipeline is: [`scatter::fobi_fit`] estimates the covariance and fourth-moment
//! scatter matrices and the eigenvalues of the standardized matrix `R̂`;
//! [`dimtest::statistics`] measures how far the `p − k` eigenvalues closest to the Gaussian
//! value `p + 2` deviate from it; [`dimtest::asymptotic_test`] and
//! [`bootstrap::bootstrap_test`] turn that into a p-value for `H₀,k`; and
//! [`dimtest::estimate_q`] tests `k = 0, 1, …` until a hypothesis is accepted.

pub mod bootstrap;
pub mod dimtest;
pub mod error;
pub mod io;
pub mod linalg;
pub mod nulldist;
pub mod scatter;
pub mod simulate;

pub use bootstrap::{bootstrap_test, BootstrapConfig};
pub use dimtest::{
    asymptotic_test, estimate_q, statistics, EstimateRule, Method, QEstimate, StatisticBundle,
    TestConfig, TestResult, ThresholdRule,
};
pub use error::{Error, Result};
pub use linalg::{DataMatrix, Matrix, SymMatrix};
pub use nulldist::NullMixture;
pub use scatter::{fobi_fit, FobiDecomposition, Sigma1Mode};
pub use simulate::{run_experiment, ExperimentConfig, ExperimentReport, ModelSpec};

/// Runs `f` on a dedicated pool of `workers` threads, or on the current pool for `None`.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
