//! Marchenko-Pastur analytics, covariance ensemble samplers and Monte Carlo
//! checks of eigenvalue rigidity.
//!
//! Covariance matrices are `S = X*X / n` for an `m x n` matrix `X` with
//! i.i.d. standardized entries and `m >= n`; the limiting spectral law is
//! supported on `[(1 - √(m/n))², (1 + √(m/n))²]`.

pub mod distances;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod interlace;
pub mod linalg;
pub mod mp_law;
pub mod quadrature;
pub mod spectral_stats;
pub mod summary;

pub use distances::{
    kolmogorov_distance, w2_squared, w2_upper_bound, EmpiricalSpectralDistribution,
};
pub use ensembles::{moment_audit, sample_spectrum, EnsembleSpec, EntryDistribution, EntryKind};
pub use error::{Error, Result};
pub use harness::{
    run_experiment, ConfigError, ExperimentConfig, ExperimentKind, ExperimentReport, Harness,
    HarnessError,
};
pub use interlace::{interlace_check, real_counting_deviation, InterlaceReport};
pub use linalg::{eigenvalues, gram_matrix, HermitianMatrix, SampleMatrix, SpectrumSample};
pub use mp_law::{ClassicalLocations, MpLaw};
pub use spectral_stats::{
    bernstein_bound, counting_function, counting_profile, deviation_check, eigenvalue_statistics,
    CountingProfile, ReplicaStatistics, TailScale,
};
