//! # groklab-core
//!
//! A desk-scale workbench for studying how small autoregressive transformers
//! learn symbolic reasoning tasks, with or without step-by-step trace
//! supervision.
//!
//! The crate covers the full experimental loop:
//!
//! - [`vocab`] / [`kb`] — token vocabulary, attributive and relational
//!   knowledge bases, entity ID/OOD splits, atomic fact enumeration.
//! - [`datagen`] — synthesis of composed examples for four tasks
//!   (comparison, sorting, intersection, composition), trace rendering,
//!   and φ-controlled train/validation/test assembly.
//! - [`model`] — a from-scratch decoder-only transformer with exact
//!   manual backpropagation, hidden-state capture, and greedy decoding.
//! - [`trainer`] — AdamW optimization loop with periodic split evaluation,
//!   checkpointing, and relative-FLOPs accounting.
//! - [`metrics`] — answer / trace / full-sequence scoring and the
//!   unfaithfulness gap.
//! - [`kinetics`] — three-parameter logistic fits to learning curves in
//!   log10(step), normalized rates, and cross-condition trend reports.
//! - [`mech`] — linear probing of hidden states and causal tracing via
//!   activation patching.

pub mod datagen;
pub mod error;
pub mod kb;
pub mod kinetics;
pub mod mech;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod trainer;
pub mod vocab;

pub use error::{Error, Result};
