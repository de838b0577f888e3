//! Exact and edge-sampled counting of δ-temporal motifs.
//!
//! - [`stream`]: temporal edge streams and edge-list ingestion
//! - [`motif`]: motif templates and the δ-instance predicate
//! - [`count`]: exact local and global counts, plus a brute-force oracle
//! - [`estimator`]: edge sampling, Horvitz–Thompson estimates, variance,
//!   confidence intervals and condition diagnostics
//! - [`generators`]: Poisson uniform and Poisson stochastic block models
//! - [`theory`]: closed-form expectations under the uniform model
//! - [`harness`]: reproducible batch experiments with CSV output

pub mod count;
pub mod error;
pub mod estimator;
pub mod generators;
pub mod harness;
pub mod motif;
pub mod parallel;
pub mod stats;
pub mod stream;
pub mod theory;

pub use count::{brute_force_count, exact_count, local_count, LocalCountProfile, MotifCounter};
pub use error::{Error, Result};
pub use estimator::{diagnostics, draw_mask, ht_estimate, replicate_estimates, SampleEstimate, SampleMask};
pub use motif::{matches_instance, DeltaQuery, MotifSpec};
pub use stream::{parse_stream, NodeId, TemporalEdge, TemporalStream};
