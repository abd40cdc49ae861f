//! Label ranking with One-Versus-One (OVO) binary classifiers.
//!
//! A [`ovo::LabelRanker`] holds one binary classifier per unordered label
//! pair. At a query point the pairwise duels form a tournament; each label is
//! scored by one plus the number of duels it lost, and the scores are turned
//! into a full ranking of the labels (rank 1 = most probable label).
//!
//! The crate also ships the synthetic posterior models, exact stump ERM and
//! the experiment harness used to study how fast the OVO ranking recovers the
//! posterior-optimal permutation as the training size grows.
//!
//! Conventions used throughout:
//!
//! * labels are 0-based indices in the Rust API (`0..k_count`) and 1-based
//!   in every serialized form (CSV, JSON, CLI output);
//! * ranks are 1-based everywhere;
//! * binary predictions are `i8` signs in `{-1, +1}`, with `sign(0) = +1`.

pub mod error;
pub mod harness;
pub mod learn;
pub mod ovo;
pub mod perm;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
