//! Token rendering: the single source of truth for query / trace / answer
//! layouts. Generators and the trace re-derivability check both go through
//! these functions.
//!
//! Serializations:
//!
//! - atomic attributive:  `⟨e, a⟩ → ⟨v, eos⟩`
//! - atomic relational:   `⟨e_h, r⟩ → ⟨e_t, eos⟩`
//! - comparison:          `⟨max(a_j), q, e_1..e_k, mask⟩`;
//!   trace `⟨v_1..v_k⟩`, answer `⟨e_winner⟩`
//! - sorting:             `⟨sort, a_j, q, e_1..e_k, mask⟩`;
//!   trace `⟨e_1, v_1, sep, ..., e_k, v_k, sep⟩`, answer ascending entities
//! - intersection:        `⟨intersect, q, a_1, v_1, .., a_k, v_k, mask⟩`;
//!   trace per template, answer `⟨e*⟩`
//! - composition:         `⟨e_h, r_1..r_k⟩`; trace `⟨b_1..b_{k-1}⟩`,
//!   answer `⟨e_t⟩`
//!
//! Candidate lists in intersection traces enumerate matching entities over
//! the whole KB in ascending entity order; the count blocks summarize the
//! entities common to all `k` lists (a single entity for retained queries).

use crate::error::{Error, Result};
use crate::kb::{AttrKB, RelKB};
use crate::vocab::Vocabulary;

use super::example::{AggHead, IntersectionTemplate, Meta, Mode};

/// Query, trace and answer token sequences for one example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub query: Vec<u32>,
    pub trace: Vec<u32>,
    pub answer: Vec<u32>,
}

/// KB handle for rendering; intersection and the attributive tasks read an
/// [`AttrKB`], composition reads a [`RelKB`].
#[derive(Clone, Copy)]
pub enum KbRef<'a> {
    Attr(&'a AttrKB),
    Rel(&'a RelKB),
}

impl<'a> KbRef<'a> {
    fn attr(&self) -> Result<&'a AttrKB> {
        match self {
            KbRef::Attr(kb) => Ok(kb),
            KbRef::Rel(_) => Err(Error::input("expected an attributive KB")),
        }
    }

    fn rel(&self) -> Result<&'a RelKB> {
        match self {
            KbRef::Rel(kb) => Ok(kb),
            KbRef::Attr(_) => Err(Error::input("expected a relational KB")),
        }
    }
}

/// Render an example from its metadata. In [`Mode::Direct`] the trace is
/// empty; the query and answer do not depend on the mode.
pub fn render(meta: &Meta, kb: KbRef<'_>, vocab: &Vocabulary, mode: Mode) -> Result<Rendered> {
    let mut r = render_cot(meta, kb, vocab)?;
    if mode == Mode::Direct {
        r.trace.clear();
    }
    Ok(r)
}

fn render_cot(meta: &Meta, kb: KbRef<'_>, vocab: &Vocabulary) -> Result<Rendered> {
    match meta {
        Meta::AtomicAttr { entity, attr, value } => Ok(Rendered {
            query: vec![vocab.entity(*entity), vocab.attribute(*attr)],
            trace: Vec::new(),
            answer: vec![vocab.value(*value)],
        }),
        Meta::AtomicRel { head, rel, tail } => Ok(Rendered {
            query: vec![vocab.entity(*head), vocab.relation(*rel)],
            trace: Vec::new(),
            answer: vec![vocab.entity(*tail)],
        }),
        Meta::Comparison {
            attr,
            entities,
            head,
            winner,
            ..
        } => {
            let kb = kb.attr()?;
            let head_tok = match head {
                AggHead::Max => vocab.agg_max(*attr)?,
                AggHead::Min => vocab.agg_min(*attr)?,
            };
            let mut query = vec![head_tok, vocab.q()];
            query.extend(entities.iter().map(|&e| vocab.entity(e)));
            query.push(vocab.mask());
            let trace = entities
                .iter()
                .map(|&e| vocab.value(kb.value(e, *attr)))
                .collect();
            Ok(Rendered {
                query,
                trace,
                answer: vec![vocab.entity(entities[*winner as usize])],
            })
        }
        Meta::Sorting {
            attr,
            entities,
            order,
            ..
        } => {
            let kb = kb.attr()?;
            let mut query = vec![vocab.sort_marker()?, vocab.attribute(*attr), vocab.q()];
            query.extend(entities.iter().map(|&e| vocab.entity(e)));
            query.push(vocab.mask());
            let mut trace = Vec::with_capacity(3 * entities.len());
            for &e in entities {
                trace.push(vocab.entity(e));
                trace.push(vocab.value(kb.value(e, *attr)));
                trace.push(vocab.sep());
            }
            let answer = order
                .iter()
                .map(|&i| vocab.entity(entities[i as usize]))
                .collect();
            Ok(Rendered {
                query,
                trace,
                answer,
            })
        }
        Meta::Intersection {
            conditions,
            answer,
            template,
        } => {
            let kb = kb.attr()?;
            let mut query = vec![vocab.intersect_marker()?, vocab.q()];
            for &(a, v) in conditions {
                query.push(vocab.attribute(a));
                query.push(vocab.value(v));
            }
            query.push(vocab.mask());

            let lists: Vec<Vec<u32>> = conditions
                .iter()
                .map(|&(a, v)| candidate_list(kb, a, v))
                .collect();
            let common = intersect_all(&lists);

            let mut retrieval = Vec::new();
            for (&(a, v), list) in conditions.iter().zip(&lists) {
                retrieval.push(vocab.attribute(a));
                retrieval.push(vocab.value(v));
                retrieval.extend(list.iter().map(|&e| vocab.entity(e)));
            }

            let count = vocab.count_marker()?;
            let trace = match template {
                IntersectionTemplate::Ra => retrieval,
                IntersectionTemplate::Cra => {
                    let mut t = vec![count];
                    t.extend(common.iter().map(|&e| vocab.entity(e)));
                    t.extend(retrieval);
                    t
                }
                IntersectionTemplate::Rca => {
                    let mut t = retrieval;
                    t.push(count);
                    t.extend(common.iter().map(|&e| vocab.entity(e)));
                    t
                }
                IntersectionTemplate::RcaStar => {
                    let mut t = retrieval;
                    t.push(count);
                    for &e in &common {
                        let reps = lists.iter().filter(|l| l.binary_search(&e).is_ok()).count();
                        t.extend(std::iter::repeat(vocab.entity(e)).take(reps));
                    }
                    t
                }
            };
            Ok(Rendered {
                query,
                trace,
                answer: vec![vocab.entity(*answer)],
            })
        }
        Meta::Composition {
            head,
            relations,
            bridges,
            tail,
        } => {
            let _ = kb.rel()?;
            let mut query = vec![vocab.entity(*head)];
            query.extend(relations.iter().map(|&r| vocab.relation(r)));
            let trace = bridges.iter().map(|&b| vocab.entity(b)).collect();
            Ok(Rendered {
                query,
                trace,
                answer: vec![vocab.entity(*tail)],
            })
        }
    }
}

/// Entities whose attribute `a` equals `v`, ascending.
pub fn candidate_list(kb: &AttrKB, a: u32, v: i64) -> Vec<u32> {
    (0..kb.n_entities() as u32)
        .filter(|&e| kb.value(e, a) == v)
        .collect()
}

fn intersect_all(lists: &[Vec<u32>]) -> Vec<u32> {
    let Some(first) = lists.first() else {
        return Vec::new();
    };
    first
        .iter()
        .copied()
        .filter(|e| lists[1..].iter().all(|l| l.binary_search(e).is_ok()))
        .collect()
}
