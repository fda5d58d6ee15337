//! Diversity-driven neural-network ensembles.
//!
//! This crate implements the full training stack for boosted ensembles of
//! small feed-forward networks whose members are pushed apart by an explicit
//! diversity penalty and warm-started from one another by selective
//! layer-wise knowledge transfer:
//!
//! - [`nn`] — a deterministic dense-network engine (forward, backprop,
//!   mini-batch SGD, learning-rate schedules) with a pluggable loss boundary
//!   at the softmax output.
//! - [`loss`] — the weighted diversity-driven loss and its analytic gradient.
//! - [`metrics`] — pairwise and ensemble diversity over soft targets,
//!   similarity matrices, accuracy summaries, and a bias/variance report.
//! - [`transfer`] — layer-wise weight copy from a teacher plus the fold-based
//!   search for the transfer proportion `beta`.
//! - [`boosting`] — the sequential ensemble pipeline: similarity/bias driven
//!   sample reweighting, model voting weights, and ensemble prediction.
//! - [`baselines`] — single model, bagging, AdaBoost.M1/NC, snapshot
//!   ensembles, and sequential distillation, all producing the same
//!   [`boosting::Ensemble`] type.
//! - [`data`] — in-memory datasets, synthetic blob generation, fold
//!   splitting, and normalization.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the CLI live
//! in the companion `edde-cli` crate.
//!
//! Everything is seed-deterministic: identical configuration and seed
//! produce bit-identical trained parameters.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod boosting;
pub mod data;
mod error;
pub mod loss;
pub mod metrics;
pub mod nn;
pub mod seeding;
mod simplex;
pub mod transfer;

pub use error::{Error, Result};
