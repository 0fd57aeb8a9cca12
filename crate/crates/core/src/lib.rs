//! Support recovery of a sparse leading eigenvector from an incomplete, noisy
//! symmetric matrix through the l1-penalized semidefinite relaxation
//!
//! ```text
//! maximize <M, X> - rho ||X||_{1,1}   subject to  X >= 0, tr X = 1,
//! ```
//!
//! with the estimated support read off the diagonal of the optimizer. Alongside
//! the solver the crate provides the primal-dual witness certificate, the
//! closed-form recovery conditions (coherence, concentration constants and
//! condition margins), synthetic instance generation and a Monte Carlo harness.

// `!(x > 0.0)` rejects NaN on purpose; the eigensolver keeps its classical indexing.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod sdp;
pub mod synth;
pub mod theory;
pub mod witness;

pub use error::{Error, Result};
pub use harness::{ExperimentConfig, TrialRecord};
pub use linalg::{sym_eig, EigenDecomposition, Mat, NormReport, SymMatrix};
pub use sdp::{SdpConfig, SdpSolution};
pub use synth::{GroundTruth, Mask, NoiseSpec, Observation};
pub use theory::{ModelParams, TheoryReport};
pub use witness::{WitnessReport, WitnessTriple};
