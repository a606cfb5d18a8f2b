//! Consensus engine and evaluation harness for crowdsourced line-segment
//! annotations.
//!
//! Line sets are compared with the Dice-H score ([`metric`]), merged into
//! consensus annotations by Hausdorff clustering ([`consensus`]), filtered
//! by annotator Qscores ([`scoring`]) and evaluated against leave-one-out
//! expert references ([`evaluation`]). [`simulator`] produces synthetic
//! contests in the same opinion format that [`io`] reads and writes.

pub mod assignment;
pub mod config;
pub mod consensus;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod metric;
pub mod pipeline;
pub mod scoring;
pub mod simulator;
pub mod stats;

pub use consensus::{build_consensus, ConsensusAnnotation, ConsensusParams, Linkage, Opinion, Split};
pub use error::{Error, Result};
pub use geometry::{segment_hausdorff, LineSegment, Point2};
pub use metric::{dice_h, optimal_matching, SimilarityParams};
pub use scoring::{QscoreLedger, SelectionPolicy, Window};
