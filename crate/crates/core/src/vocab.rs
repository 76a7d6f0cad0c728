//! Token vocabulary construction and persistence.
//!
//! The vocabulary is a dense, deterministically ordered id space over six
//! contiguous sections:
//!
//! ```text
//! structural | entities | attributes | relations | values | aggregator heads
//! ```
//!
//! Structural tokens always include `q`, `mask`, `sep`, `eos`; the task
//! markers `sort`, `intersect` and `count` are present only when the
//! corresponding task is configured, and the aggregator heads `max(a_j)` /
//! `min(a_j)` (two per attribute, paired in attribute order) only when
//! comparison is configured. Ids start at 0 and every token is unique, so
//! `id_of(tokens[i]) == i` for all `i`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four composed reasoning tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Comparison,
    Sorting,
    Intersection,
    Composition,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Comparison,
        TaskKind::Sorting,
        TaskKind::Intersection,
        TaskKind::Composition,
    ];
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Comparison => "comparison",
            TaskKind::Sorting => "sorting",
            TaskKind::Intersection => "intersection",
            TaskKind::Composition => "composition",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "comparison" => Ok(TaskKind::Comparison),
            "sorting" => Ok(TaskKind::Sorting),
            "intersection" => Ok(TaskKind::Intersection),
            "composition" => Ok(TaskKind::Composition),
            other => Err(Error::input(format!("unknown task: {other}"))),
        }
    }
}

/// Vocabulary build parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabConfig {
    pub n_entities: u32,
    pub n_attributes: u32,
    pub n_relations: u32,
    /// Inclusive integer interval of attribute values.
    pub value_range: (i64, i64),
    pub tasks: BTreeSet<TaskKind>,
}

/// Which section an id belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Structural,
    Entity,
    Attribute,
    Relation,
    Value,
    AggHead,
}

/// Contiguous id ranges per section; disjoint and covering `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sections {
    pub structural: Range<u32>,
    pub entities: Range<u32>,
    pub attributes: Range<u32>,
    pub relations: Range<u32>,
    pub values: Range<u32>,
    pub agg_heads: Range<u32>,
}

/// Dense token vocabulary with section metadata.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    id_of: HashMap<String, u32>,
    sections: Sections,
    value_min: i64,
    // Structural ids resolved once at build time.
    q: u32,
    mask: u32,
    sep: u32,
    eos: u32,
    sort_marker: Option<u32>,
    intersect_marker: Option<u32>,
    count_marker: Option<u32>,
}

/// Build the vocabulary for a task configuration.
///
/// Token order is fixed: structural, entities, attributes, relations,
/// values, aggregator heads. Only tokens needed by the configured tasks are
/// emitted (e.g. `2 * n_attributes` aggregator heads appear only when
/// comparison is configured).
pub fn build_vocab(config: &VocabConfig) -> Result<Vocabulary> {
    let (lo, hi) = config.value_range;
    if lo > hi {
        return Err(Error::config(format!("empty value range [{lo}, {hi}]")));
    }
    if config.n_entities == 0 {
        return Err(Error::config("n_entities must be positive"));
    }
    if config.tasks.contains(&TaskKind::Comparison) && config.n_attributes == 0 {
        return Err(Error::config("comparison requires at least one attribute"));
    }
    if config.tasks.contains(&TaskKind::Composition) && config.n_relations == 0 {
        return Err(Error::config("composition requires at least one relation"));
    }

    let mut tokens: Vec<String> = vec![
        "q".to_string(),
        "mask".to_string(),
        "sep".to_string(),
        "eos".to_string(),
    ];
    if config.tasks.contains(&TaskKind::Sorting) {
        tokens.push("sort".to_string());
    }
    if config.tasks.contains(&TaskKind::Intersection) {
        tokens.push("intersect".to_string());
        tokens.push("count".to_string());
    }
    let structural = 0..tokens.len() as u32;

    let entities = extend(&mut tokens, (0..config.n_entities).map(|i| format!("e{i}")));
    let attributes = extend(&mut tokens, (0..config.n_attributes).map(|j| format!("a{j}")));
    let relations = extend(&mut tokens, (0..config.n_relations).map(|p| format!("r{p}")));
    let values = extend(&mut tokens, (lo..=hi).map(|v| v.to_string()));
    let agg_heads = if config.tasks.contains(&TaskKind::Comparison) {
        extend(
            &mut tokens,
            (0..config.n_attributes).flat_map(|j| [format!("max(a{j})"), format!("min(a{j})")]),
        )
    } else {
        let end = tokens.len() as u32;
        end..end
    };

    let mut id_of = HashMap::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        if id_of.insert(tok.clone(), i as u32).is_some() {
            return Err(Error::config(format!("overlapping token name: {tok}")));
        }
    }

    let get = |name: &str| id_of.get(name).copied();
    Ok(Vocabulary {
        q: get("q").unwrap(),
        mask: get("mask").unwrap(),
        sep: get("sep").unwrap(),
        eos: get("eos").unwrap(),
        sort_marker: get("sort"),
        intersect_marker: get("intersect"),
        count_marker: get("count"),
        tokens,
        id_of,
        sections: Sections {
            structural,
            entities,
            attributes,
            relations,
            values,
            agg_heads,
        },
        value_min: lo,
    })
}

fn extend(tokens: &mut Vec<String>, it: impl Iterator<Item = String>) -> Range<u32> {
    let start = tokens.len() as u32;
    tokens.extend(it);
    start..tokens.len() as u32
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sections(&self) -> &Sections {
        &self.sections
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.id_of.get(token).copied()
    }

    pub fn section_of(&self, id: u32) -> Section {
        let s = &self.sections;
        if s.structural.contains(&id) {
            Section::Structural
        } else if s.entities.contains(&id) {
            Section::Entity
        } else if s.attributes.contains(&id) {
            Section::Attribute
        } else if s.relations.contains(&id) {
            Section::Relation
        } else if s.values.contains(&id) {
            Section::Value
        } else {
            Section::AggHead
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn mask(&self) -> u32 {
        self.mask
    }
    pub fn sep(&self) -> u32 {
        self.sep
    }
    pub fn eos(&self) -> u32 {
        self.eos
    }

    pub fn sort_marker(&self) -> Result<u32> {
        self.sort_marker
            .ok_or_else(|| Error::config("vocabulary built without the sorting task"))
    }

    pub fn intersect_marker(&self) -> Result<u32> {
        self.intersect_marker
            .ok_or_else(|| Error::config("vocabulary built without the intersection task"))
    }

    pub fn count_marker(&self) -> Result<u32> {
        self.count_marker
            .ok_or_else(|| Error::config("vocabulary built without the intersection task"))
    }

    pub fn n_entities(&self) -> u32 {
        self.sections.entities.len() as u32
    }

    pub fn n_attributes(&self) -> u32 {
        self.sections.attributes.len() as u32
    }

    pub fn n_relations(&self) -> u32 {
        self.sections.relations.len() as u32
    }

    pub fn entity(&self, i: u32) -> u32 {
        debug_assert!(i < self.n_entities());
        self.sections.entities.start + i
    }

    pub fn attribute(&self, j: u32) -> u32 {
        debug_assert!(j < self.n_attributes());
        self.sections.attributes.start + j
    }

    pub fn relation(&self, p: u32) -> u32 {
        debug_assert!(p < self.n_relations());
        self.sections.relations.start + p
    }

    /// Id of an integer value token.
    pub fn value(&self, v: i64) -> u32 {
        let off = v - self.value_min;
        debug_assert!(off >= 0 && (off as u32) < self.sections.values.len() as u32);
        self.sections.values.start + off as u32
    }

    /// Aggregator head `max(a_j)`.
    pub fn agg_max(&self, j: u32) -> Result<u32> {
        self.agg_head(j, 0)
    }

    /// Aggregator head `min(a_j)`.
    pub fn agg_min(&self, j: u32) -> Result<u32> {
        self.agg_head(j, 1)
    }

    fn agg_head(&self, j: u32, off: u32) -> Result<u32> {
        let id = self.sections.agg_heads.start + 2 * j + off;
        if self.sections.agg_heads.contains(&id) {
            Ok(id)
        } else {
            Err(Error::config(
                "vocabulary built without comparison aggregator heads",
            ))
        }
    }

    /// Index of an entity id within the entity section.
    pub fn entity_index(&self, id: u32) -> u32 {
        debug_assert_eq!(self.section_of(id), Section::Entity);
        id - self.sections.entities.start
    }

    /// Index of a value id within the value section.
    pub fn value_index(&self, id: u32) -> u32 {
        debug_assert_eq!(self.section_of(id), Section::Value);
        id - self.sections.values.start
    }

    /// Integer represented by a value-section id.
    pub fn value_of(&self, id: u32) -> i64 {
        self.value_min + i64::from(self.value_index(id))
    }

    pub fn value_range(&self) -> (i64, i64) {
        (
            self.value_min,
            self.value_min + self.sections.values.len() as i64 - 1,
        )
    }

    /// Write the vocabulary as plain text: one header line with section
    /// offsets, then one token per line (line number = id).
    pub fn save(&self, path: &Path) -> Result<()> {
        let s = &self.sections;
        let mut out = format!(
            "# structural={}:{} entities={}:{} attributes={}:{} relations={}:{} values={}:{} heads={}:{}\n",
            s.structural.start, s.structural.end,
            s.entities.start, s.entities.end,
            s.attributes.start, s.attributes.end,
            s.relations.start, s.relations.end,
            s.values.start, s.values.end,
            s.agg_heads.start, s.agg_heads.end,
        );
        for tok in &self.tokens {
            out.push_str(tok);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::malformed("vocabulary file", "empty file"))?;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::malformed("vocabulary file", "missing section header"))?;

        let mut ranges: HashMap<&str, Range<u32>> = HashMap::new();
        for field in header.split_whitespace() {
            let (name, span) = field
                .split_once('=')
                .ok_or_else(|| Error::malformed("vocabulary file", format!("bad field {field}")))?;
            let (a, b) = span
                .split_once(':')
                .ok_or_else(|| Error::malformed("vocabulary file", format!("bad span {span}")))?;
            let start: u32 = a
                .parse()
                .map_err(|_| Error::malformed("vocabulary file", format!("bad offset {a}")))?;
            let end: u32 = b
                .parse()
                .map_err(|_| Error::malformed("vocabulary file", format!("bad offset {b}")))?;
            ranges.insert(name, start..end);
        }
        let range = |name: &str| -> Result<Range<u32>> {
            ranges
                .get(name)
                .cloned()
                .ok_or_else(|| Error::malformed("vocabulary file", format!("missing section {name}")))
        };
        let sections = Sections {
            structural: range("structural")?,
            entities: range("entities")?,
            attributes: range("attributes")?,
            relations: range("relations")?,
            values: range("values")?,
            agg_heads: range("heads")?,
        };

        let tokens: Vec<String> = lines.map(str::to_string).collect();
        if tokens.len() as u32 != sections.agg_heads.end {
            return Err(Error::malformed(
                "vocabulary file",
                format!(
                    "token count {} does not match section end {}",
                    tokens.len(),
                    sections.agg_heads.end
                ),
            ));
        }
        let mut id_of = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if id_of.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::malformed(
                    "vocabulary file",
                    format!("duplicate token {tok}"),
                ));
            }
        }
        let value_min = if sections.values.is_empty() {
            0
        } else {
            tokens[sections.values.start as usize]
                .parse()
                .map_err(|_| Error::malformed("vocabulary file", "non-integer value token"))?
        };
        let get = |name: &str| id_of.get(name).copied();
        let q = get("q").ok_or_else(|| Error::malformed("vocabulary file", "missing q token"))?;
        let mask =
            get("mask").ok_or_else(|| Error::malformed("vocabulary file", "missing mask token"))?;
        let sep =
            get("sep").ok_or_else(|| Error::malformed("vocabulary file", "missing sep token"))?;
        let eos =
            get("eos").ok_or_else(|| Error::malformed("vocabulary file", "missing eos token"))?;
        Ok(Vocabulary {
            q,
            mask,
            sep,
            eos,
            sort_marker: get("sort"),
            intersect_marker: get("intersect"),
            count_marker: get("count"),
            tokens,
            id_of,
            sections,
            value_min,
        })
    }

    /// Render a token-id sequence as a readable string (debugging / reports).
    pub fn render(&self, ids: &[u32]) -> String {
        ids.iter()
            .map(|&id| self.token(id))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(e: u32, a: u32, r: u32, range: (i64, i64), tasks: &[TaskKind]) -> VocabConfig {
        VocabConfig {
            n_entities: e,
            n_attributes: a,
            n_relations: r,
            value_range: range,
            tasks: tasks.iter().copied().collect(),
        }
    }

    #[test]
    fn comparison_vocab_has_expected_tokens() {
        let v = build_vocab(&cfg(3, 1, 0, (0, 100), &[TaskKind::Comparison])).unwrap();
        for tok in ["e0", "e1", "e2", "a0", "max(a0)", "min(a0)", "q", "mask", "eos"] {
            assert!(v.id_of(tok).is_some(), "missing {tok}");
        }
        assert_eq!(v.sections().values.len(), 101);
        assert!(v.id_of("sort").is_none());
    }

    #[test]
    fn minimal_vocab_is_dense_from_zero() {
        let v = build_vocab(&cfg(1, 1, 0, (0, 0), &[])).unwrap();
        // q mask sep eos | e0 | a0 | (no relations) | "0" | (no heads)
        assert_eq!(v.len(), 7);
        assert_eq!(v.sections().structural, 0..4);
        assert_eq!(v.sections().agg_heads.len(), 0);
        for (i, tok) in v.tokens().iter().enumerate() {
            assert_eq!(v.id_of(tok), Some(i as u32));
        }
    }

    #[test]
    fn section_sizes_by_enumeration() {
        // Counted from the ordering rule: 4 structural + 1000 E + 20 A + 0 R
        // + 21 V + 40 heads.
        let v = build_vocab(&cfg(1000, 20, 0, (0, 20), &[TaskKind::Comparison])).unwrap();
        assert_eq!(v.sections().values.len(), 21);
        assert_eq!(v.sections().agg_heads.len(), 40);
        assert_eq!(v.len(), 4 + 1000 + 20 + 21 + 40);
    }

    #[test]
    fn sections_are_disjoint_and_cover() {
        let v = build_vocab(
            &cfg(5, 3, 2, (-2, 2), &TaskKind::ALL),
        )
        .unwrap();
        let s = v.sections();
        let ranges = [
            &s.structural,
            &s.entities,
            &s.attributes,
            &s.relations,
            &s.values,
            &s.agg_heads,
        ];
        let mut covered = 0u32;
        for r in ranges {
            assert_eq!(r.start, covered, "sections must be contiguous in order");
            covered = r.end;
        }
        assert_eq!(covered as usize, v.len());
    }

    #[test]
    fn value_token_mapping_round_trips() {
        let v = build_vocab(&cfg(2, 1, 0, (-20, 20), &[TaskKind::Comparison])).unwrap();
        for x in -20..=20 {
            let id = v.value(x);
            assert_eq!(v.value_of(id), x);
            assert_eq!(v.token(id), x.to_string());
        }
    }

    #[test]
    fn rejects_empty_value_range() {
        assert!(build_vocab(&cfg(1, 1, 0, (3, 2), &[])).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.txt");
        let v = build_vocab(&cfg(7, 3, 2, (-5, 5), &TaskKind::ALL)).unwrap();
        v.save(&path).unwrap();
        let w = Vocabulary::load(&path).unwrap();
        assert_eq!(v.tokens(), w.tokens());
        assert_eq!(v.sections(), w.sections());
        assert_eq!(w.value_of(w.value(-3)), -3);
        assert_eq!(w.agg_max(2).unwrap(), v.agg_max(2).unwrap());
    }
}
