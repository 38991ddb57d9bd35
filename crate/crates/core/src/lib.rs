//! Rank-based spectral tests for structure in symmetric data matrices.
//!
//! A symmetric matrix is rank-transformed entrywise into a rank matrix whose
//! null law does not depend on the data distribution. The standardized
//! leading eigenvalue of that matrix is asymptotically normal under the null
//! and drifts away under block or planted-submatrix alternatives.
//!
//! ```
//! use wwrank::{run_test, sample_two_block, seeded_rng, TiePolicy};
//!
//! let mut rng = seeded_rng(7);
//! let f1 = "normal(1,1)".parse().unwrap();
//! let f2 = "normal(3,1)".parse().unwrap();
//! let (a, _) = sample_two_block(200, &f1, &f2, &mut rng).unwrap();
//! let result = run_test(&a, 0.05, TiePolicy::Error).unwrap();
//! assert!(result.reject);
//! ```

pub mod error;
pub mod experiments;
pub mod hypothesis;
pub mod matrix;
pub mod models;
pub mod parallel;
pub mod rank;
pub mod reproduce;
pub mod rng;
pub mod spectra;
pub mod stats;

pub use error::{Error, Result};
pub use hypothesis::{
    e1f2, eigenvalue_statistic, eigenvector_statistic, run_test, run_test_tailed,
    test_rank_matrix, SeparationEstimate, Tail, TestResult,
};
pub use matrix::{
    load_matrix, read_matrix, save_matrix, write_matrix, MatrixFormat, SymmetricMatrix,
};
pub use models::{
    sample_homogeneous, sample_interpolated_rank, sample_null_rank_matrix,
    sample_planted_submatrix, sample_two_block, BlockAssignment, EntryDistribution, ExtraRanks,
};
pub use parallel::{run_replicates, Execution};
pub use rank::{moments, rank_transform, whiten, RankMatrix, TiePolicy, WwMoments};
pub use rng::{seeded_rng, stream_rng, StreamRng};
pub use spectra::{
    full_spectrum, leading_eigenpair, operator_norm, subspace_distance_sq, EigenPair, EsdSummary,
};
