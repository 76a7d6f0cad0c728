//! Synthesis of composed reasoning examples.
//!
//! One generator per task. Each generator samples queries grounded in a
//! knowledge base, renders the query / trace / answer token sequences from
//! the example's metadata (a single render path, so traces are re-derivable
//! from metadata + KB by construction), tags examples by entity split, and
//! deduplicates on canonical keys so no composed example can leak across
//! train/validation/test.

pub mod assemble;
pub mod comparison;
pub mod composition;
pub mod example;
pub mod intersection;
pub mod render;
pub mod sorting;

pub use assemble::{assemble_dataset, AssembleOptions, Dataset, DatasetManifest, PhiBase};
pub use comparison::gen_comparison;
pub use composition::gen_composition;
pub use example::{
    read_jsonl, write_jsonl, AggHead, Example, IntersectionTemplate, Meta, Mode, SplitTag, Task,
};
pub use intersection::gen_intersection;
pub use sorting::gen_sorting;

/// Generator output: the emitted examples plus exhaustion warnings
/// (a generator that cannot fill its budget reports the shortfall rather
/// than silently duplicating).
#[derive(Debug, Clone, Default)]
pub struct GenOutput {
    pub examples: Vec<Example>,
    pub warnings: Vec<String>,
}

/// Rejection-sampling retry cap, as a multiple of the requested budget.
pub(crate) const RETRY_FACTOR: usize = 100;
