//! The serialized unit of training and evaluation data.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Task family of an example. Atomic facts are single KB lookups; the four
/// composed tasks combine `k` of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    AtomicAttr,
    AtomicRel,
    Comparison,
    Sorting,
    Intersection,
    Composition,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Task::AtomicAttr => "atomic_attr",
            Task::AtomicRel => "atomic_rel",
            Task::Comparison => "comparison",
            Task::Sorting => "sorting",
            Task::Intersection => "intersection",
            Task::Composition => "composition",
        };
        f.write_str(s)
    }
}

/// Entity-split tag: ID (all entities in-distribution), OOD (all held out),
/// MIX (both kinds present).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SplitTag {
    Id,
    Mix,
    Ood,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitTag::Id => "ID",
            SplitTag::Mix => "MIX",
            SplitTag::Ood => "OOD",
        };
        f.write_str(s)
    }
}

/// Supervision format: answer-only targets, or trace-then-answer targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Cot,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Direct => "direct",
            Mode::Cot => "cot",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Mode::Direct),
            "cot" => Ok(Mode::Cot),
            other => Err(Error::input(format!("unknown mode: {other}"))),
        }
    }
}

/// Comparison head: argmax or argmin of the queried attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggHead {
    Max,
    Min,
}

/// Trace layout for intersection. All templates retrieve per-condition
/// candidate lists and end with the answer; they differ in where (and how)
/// the count block summarizing the entities common to all lists appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntersectionTemplate {
    /// Retrieve lists, then answer.
    Ra,
    /// Count hint first, then lists, then answer.
    Cra,
    /// Lists, then count block, then answer.
    Rca,
    /// Lists, then a count block that repeats each common entity once per
    /// list it appears in (counting by repetition instead of a summary).
    RcaStar,
}

impl fmt::Display for IntersectionTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntersectionTemplate::Ra => "ra",
            IntersectionTemplate::Cra => "cra",
            IntersectionTemplate::Rca => "rca",
            IntersectionTemplate::RcaStar => "rca_star",
        })
    }
}

impl std::str::FromStr for IntersectionTemplate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ra" => Ok(IntersectionTemplate::Ra),
            "cra" => Ok(IntersectionTemplate::Cra),
            "rca" => Ok(IntersectionTemplate::Rca),
            "rca_star" | "rca*" => Ok(IntersectionTemplate::RcaStar),
            other => Err(Error::input(format!("unknown template: {other}"))),
        }
    }
}

/// Task-specific metadata. Everything needed to re-derive the trace and
/// answer from the KB lives here; indices refer to KB entity/attribute/
/// relation numbering, not token ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Meta {
    AtomicAttr {
        entity: u32,
        attr: u32,
        value: i64,
    },
    AtomicRel {
        head: u32,
        rel: u32,
        tail: u32,
    },
    Comparison {
        attr: u32,
        /// Queried entities in query order.
        entities: Vec<u32>,
        /// Their attribute values, aligned with `entities`.
        values: Vec<i64>,
        head: AggHead,
        /// Index into `entities` of the unique winner.
        winner: u32,
    },
    Sorting {
        attr: u32,
        entities: Vec<u32>,
        values: Vec<i64>,
        /// Ascending order: `order[i]` is the index of the i-th smallest.
        order: Vec<u32>,
    },
    Intersection {
        /// (attribute, value) conditions in query order.
        conditions: Vec<(u32, i64)>,
        /// The unique satisfying entity.
        answer: u32,
        template: IntersectionTemplate,
    },
    Composition {
        head: u32,
        relations: Vec<u32>,
        /// Intermediate entities `b_1 .. b_{k-1}`.
        bridges: Vec<u32>,
        tail: u32,
    },
}

/// One serialized training/eval item. The full target sequence a model is
/// trained on is `trace ++ answer ++ [eos]`; `trace` is empty in direct mode
/// and for atomic facts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub task: Task,
    pub k: u32,
    pub split: SplitTag,
    pub query: Vec<u32>,
    pub trace: Vec<u32>,
    pub answer: Vec<u32>,
    pub meta: Meta,
}

impl Example {
    /// Canonical deduplication key. Two examples with the same key are the
    /// same query up to presentation order and must not co-exist across
    /// splits.
    pub fn canonical_key(&self) -> String {
        match &self.meta {
            Meta::AtomicAttr { entity, attr, .. } => format!("af:{entity}:{attr}"),
            Meta::AtomicRel { head, rel, .. } => format!("rf:{head}:{rel}"),
            Meta::Comparison {
                attr,
                entities,
                head,
                ..
            } => {
                let mut es = entities.clone();
                es.sort_unstable();
                let head = match head {
                    AggHead::Max => "max",
                    AggHead::Min => "min",
                };
                format!("cmp:{attr}:{head}:{}", join(&es))
            }
            Meta::Sorting { attr, entities, .. } => {
                let mut es = entities.clone();
                es.sort_unstable();
                format!("sort:{attr}:{}", join(&es))
            }
            Meta::Intersection { conditions, .. } => {
                let mut cs = conditions.clone();
                cs.sort_unstable();
                let parts: Vec<String> =
                    cs.iter().map(|(a, v)| format!("a{a}={v}")).collect();
                format!("int:{}", parts.join(","))
            }
            Meta::Composition {
                head,
                relations,
                bridges,
                tail,
            } => {
                // Keyed on (head, first bridge, tail): the same composed
                // triple may not recur with a different relation sequence.
                let b1 = bridges.first().copied().unwrap_or_else(|| {
                    relations.first().map(|_| *tail).unwrap_or(*tail)
                });
                format!("comp:{head}:{b1}:{tail}")
            }
        }
    }

    /// Full teacher-forced token sequence and loss mask. The mask marks the
    /// positions whose tokens are prediction targets: trace, answer and the
    /// closing `eos` (query positions are unmasked).
    pub fn training_tokens(&self, vocab: &Vocabulary) -> (Vec<u32>, Vec<bool>) {
        let mut tokens =
            Vec::with_capacity(self.query.len() + self.trace.len() + self.answer.len() + 1);
        tokens.extend_from_slice(&self.query);
        let target_start = tokens.len();
        tokens.extend_from_slice(&self.trace);
        tokens.extend_from_slice(&self.answer);
        tokens.push(vocab.eos());
        let mut mask = vec![false; tokens.len()];
        for m in mask.iter_mut().skip(target_start) {
            *m = true;
        }
        (tokens, mask)
    }

    /// Length of `trace ++ answer ++ eos`, the generation budget needed to
    /// reproduce the gold target.
    pub fn target_len(&self) -> usize {
        self.trace.len() + self.answer.len() + 1
    }
}

fn join(xs: &[u32]) -> String {
    xs.iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Write examples as JSON Lines, one example per line.
pub fn write_jsonl(path: &Path, examples: &[Example]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for ex in examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Example>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_example() -> impl Strategy<Value = Example> {
        (
            prop::collection::vec(0u32..100, 1..8),
            prop::collection::vec(0u32..100, 0..8),
            prop::collection::vec(0u32..100, 1..4),
            prop::collection::vec(0u32..50, 2..5),
            0u32..20,
        )
            .prop_map(|(query, trace, answer, entities, attr)| {
                let values: Vec<i64> = entities.iter().map(|&e| i64::from(e) * 3).collect();
                Example {
                    task: Task::Comparison,
                    k: entities.len() as u32,
                    split: SplitTag::Id,
                    query,
                    trace,
                    answer,
                    meta: Meta::Comparison {
                        attr,
                        entities,
                        values,
                        head: AggHead::Max,
                        winner: 0,
                    },
                }
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip_is_identity(examples in prop::collection::vec(arb_example(), 0..20)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.jsonl");
            write_jsonl(&path, &examples).unwrap();
            let back = read_jsonl(&path).unwrap();
            prop_assert_eq!(examples, back);
        }

        #[test]
        fn comparison_key_ignores_entity_order(mut entities in prop::collection::vec(0u32..50, 2..6)) {
            let mk = |es: Vec<u32>| Example {
                task: Task::Comparison,
                k: es.len() as u32,
                split: SplitTag::Id,
                query: vec![],
                trace: vec![],
                answer: vec![0],
                meta: Meta::Comparison {
                    attr: 3,
                    values: es.iter().map(|&e| i64::from(e)).collect(),
                    entities: es,
                    head: AggHead::Min,
                    winner: 0,
                },
            };
            let a = mk(entities.clone()).canonical_key();
            entities.reverse();
            let b = mk(entities).canonical_key();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn intersection_key_ignores_condition_order() {
        let mk = |conds: Vec<(u32, i64)>| Example {
            task: Task::Intersection,
            k: conds.len() as u32,
            split: SplitTag::Id,
            query: vec![],
            trace: vec![],
            answer: vec![0],
            meta: Meta::Intersection {
                conditions: conds,
                answer: 1,
                template: IntersectionTemplate::Ra,
            },
        };
        assert_eq!(
            mk(vec![(1, 5), (3, 2)]).canonical_key(),
            mk(vec![(3, 2), (1, 5)]).canonical_key()
        );
    }

    #[test]
    fn max_and_min_have_distinct_keys() {
        let mk = |head| Example {
            task: Task::Comparison,
            k: 2,
            split: SplitTag::Id,
            query: vec![],
            trace: vec![],
            answer: vec![0],
            meta: Meta::Comparison {
                attr: 0,
                entities: vec![1, 2],
                values: vec![3, 4],
                head,
                winner: 0,
            },
        };
        assert_ne!(
            mk(AggHead::Max).canonical_key(),
            mk(AggHead::Min).canonical_key()
        );
    }
}
