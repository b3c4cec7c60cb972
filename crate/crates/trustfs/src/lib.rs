//! Tensorized reliable unsupervised multi-view feature selection (TRUST-FS)
//! for incomplete data with missing variables.
//!
//! The library jointly performs feature selection, missing-value imputation,
//! view weighting, and reliable similarity-graph learning by factorizing the
//! stacked low-dimensional projections of all views with an adaptive-weighted
//! CP decomposition. Cross-view similarity evidence is turned into belief
//! masses via a Dirichlet model, and those belief masses steer how each
//! view's similarity graph borrows structure from the others.
//!
//! Modules:
//! - [`data`]: multi-view datasets, masks, normalization, missing-value
//!   injection, mean imputation, synthetic generation.
//! - [`tensor`]: dense third-order tensor primitives (Khatri-Rao products,
//!   mode-n unfoldings, CP reconstruction, weighted stacking).
//! - [`graph`]: per-view similarity graphs, Laplacians, and the
//!   simplex-constrained column-wise graph update.
//! - [`evidence`]: belief masses and uncertainty from view-similarity
//!   evidence.
//! - [`solver`]: the alternating optimization loop with multiplicative
//!   updates and closed-form view weights.
//! - [`selection`]: feature ranking, k-means, ACC/NMI scoring.
//! - [`experiment`]: sweep/ablation harness and result persistence.

// Index loops here mirror the per-entry update formulas and usually walk
// several arrays in lockstep.
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod evidence;
pub mod experiment;
pub mod graph;
pub mod selection;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
