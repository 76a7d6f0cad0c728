//! Knowledge bases and entity splits.
//!
//! Two ground-truth stores back all queries: an attributive KB mapping
//! (entity, attribute) to an integer value, and a relational KB holding one
//! (near-)functional map per relation, realized as a random permutation of
//! the entity set with optional uniform edge subsampling. All builders are
//! pure functions of `(seed, config)` and reproduce bit-identically.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::datagen::example::{Example, Meta, SplitTag, Task};
use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::vocab::Vocabulary;

/// Distance sentinel for unreachable entity pairs.
pub const UNREACHABLE: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// Values drawn uniformly from the configured range.
    Nonnegative,
    /// Magnitude drawn uniformly from `[0, hi]`, then a uniform random sign;
    /// requires a range symmetric around zero.
    Symmetric,
}

/// Entity × attribute value matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrKB {
    values: Array2<i64>,
    value_range: (i64, i64),
    sign_mode: SignMode,
}

#[derive(Serialize, Deserialize)]
struct AttrKbFile {
    n_entities: usize,
    n_attributes: usize,
    value_range: (i64, i64),
    sign_mode: SignMode,
    /// Row-major (entity-major) value matrix.
    values: Vec<i64>,
}

/// Sample an attributive KB: entries drawn uniformly from `value_range`
/// (for [`SignMode::Symmetric`], a uniform magnitude with a random sign).
pub fn build_attr_kb(
    seed: u64,
    n_entities: usize,
    n_attributes: usize,
    value_range: (i64, i64),
    sign_mode: SignMode,
) -> Result<AttrKB> {
    let (lo, hi) = value_range;
    if lo > hi {
        return Err(Error::config(format!("empty value range [{lo}, {hi}]")));
    }
    if n_entities == 0 || n_attributes == 0 {
        return Err(Error::config("attr KB requires entities and attributes"));
    }
    if sign_mode == SignMode::Symmetric && lo != -hi {
        return Err(Error::config(format!(
            "symmetric mode requires a range symmetric around zero, got [{lo}, {hi}]"
        )));
    }
    let mut rng = rng_for(seed, "attr_kb");
    let mut values = Array2::zeros((n_entities, n_attributes));
    for e in 0..n_entities {
        for a in 0..n_attributes {
            values[(e, a)] = match sign_mode {
                SignMode::Nonnegative => rng.gen_range(lo..=hi),
                SignMode::Symmetric => {
                    let magnitude = rng.gen_range(0..=hi);
                    let negative = rng.gen_bool(0.5);
                    if negative {
                        -magnitude
                    } else {
                        magnitude
                    }
                }
            };
        }
    }
    Ok(AttrKB {
        values,
        value_range,
        sign_mode,
    })
}

impl AttrKB {
    /// Assemble a KB from an explicit matrix. Used by the intersection
    /// generator, which co-constructs the KB with its queries.
    pub(crate) fn from_matrix(
        values: Array2<i64>,
        value_range: (i64, i64),
        sign_mode: SignMode,
    ) -> Result<AttrKB> {
        let (lo, hi) = value_range;
        if values.iter().any(|&v| v < lo || v > hi) {
            return Err(Error::config("matrix entry outside value range"));
        }
        Ok(AttrKB {
            values,
            value_range,
            sign_mode,
        })
    }

    pub fn n_entities(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.values.ncols()
    }

    pub fn value(&self, entity: u32, attr: u32) -> i64 {
        self.values[(entity as usize, attr as usize)]
    }

    pub fn value_range(&self) -> (i64, i64) {
        self.value_range
    }

    pub fn sign_mode(&self) -> SignMode {
        self.sign_mode
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = AttrKbFile {
            n_entities: self.n_entities(),
            n_attributes: self.n_attributes(),
            value_range: self.value_range,
            sign_mode: self.sign_mode,
            values: self.values.iter().copied().collect(),
        };
        std::fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<AttrKB> {
        let file: AttrKbFile = serde_json::from_slice(&std::fs::read(path)?)?;
        let values = Array2::from_shape_vec((file.n_entities, file.n_attributes), file.values)
            .map_err(|e| Error::malformed("attr KB file", e.to_string()))?;
        AttrKB::from_matrix(values, file.value_range, file.sign_mode)
    }
}

/// Relational KB: one permutation-derived map per relation plus the
/// all-pairs shortest-path table of the induced directed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelKB {
    /// `maps[r][e]` is the tail of the retained edge `(e, r, ·)`, if any.
    maps: Vec<Vec<Option<u32>>>,
    /// Retained edges in (relation, head) order.
    edges: Vec<(u32, u32, u32)>,
    /// All-pairs shortest-path distances; [`UNREACHABLE`] when no path exists.
    dist: Array2<u16>,
}

#[derive(Serialize, Deserialize)]
struct RelKbFile {
    n_entities: usize,
    /// Per relation, tail id per head (-1 when the edge was subsampled away).
    relations: Vec<Vec<i64>>,
}

/// Sample a relational KB: each relation is a uniform random permutation of
/// the entity set, optionally subsampled to `edge_budget` retained edges.
pub fn build_rel_kb(
    seed: u64,
    n_entities: usize,
    n_relations: usize,
    edge_budget: Option<usize>,
) -> Result<RelKB> {
    if n_entities == 0 {
        return Err(Error::config("rel KB requires entities"));
    }
    if n_relations == 0 {
        return Err(Error::config("rel KB requires at least one relation"));
    }
    if n_entities >= UNREACHABLE as usize {
        return Err(Error::config("entity count exceeds distance-table domain"));
    }
    let total = n_entities * n_relations;
    if let Some(budget) = edge_budget {
        if budget > total {
            return Err(Error::config(format!(
                "edge budget {budget} exceeds {n_entities}x{n_relations} edges"
            )));
        }
    }

    let mut rng = rng_for(seed, "rel_kb");
    let mut maps: Vec<Vec<Option<u32>>> = Vec::with_capacity(n_relations);
    for _ in 0..n_relations {
        let mut perm: Vec<u32> = (0..n_entities as u32).collect();
        perm.shuffle(&mut rng);
        maps.push(perm.into_iter().map(Some).collect());
    }

    if let Some(budget) = edge_budget {
        if budget < total {
            let keep = rand::seq::index::sample(&mut rng, total, budget);
            let mut retain = vec![false; total];
            for i in keep {
                retain[i] = true;
            }
            for (r, map) in maps.iter_mut().enumerate() {
                for (e, tail) in map.iter_mut().enumerate() {
                    if !retain[r * n_entities + e] {
                        *tail = None;
                    }
                }
            }
        }
    }

    Ok(RelKB::from_maps(maps))
}

impl RelKB {
    fn from_maps(maps: Vec<Vec<Option<u32>>>) -> RelKB {
        let n = maps[0].len();
        let mut edges = Vec::new();
        for (r, map) in maps.iter().enumerate() {
            for (e, tail) in map.iter().enumerate() {
                if let Some(t) = tail {
                    edges.push((e as u32, r as u32, *t));
                }
            }
        }
        let dist = all_pairs_distances(n, &maps);
        RelKB { maps, edges, dist }
    }

    pub fn n_entities(&self) -> usize {
        self.maps[0].len()
    }

    pub fn n_relations(&self) -> usize {
        self.maps.len()
    }

    /// Tail of the retained edge `(head, relation, ·)`, if present.
    pub fn follow(&self, head: u32, relation: u32) -> Option<u32> {
        self.maps[relation as usize][head as usize]
    }

    pub fn edges(&self) -> &[(u32, u32, u32)] {
        &self.edges
    }

    /// Graph distance from `a` to `b` ([`UNREACHABLE`] when disconnected).
    pub fn dist(&self, a: u32, b: u32) -> u16 {
        self.dist[(a as usize, b as usize)]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = RelKbFile {
            n_entities: self.n_entities(),
            relations: self
                .maps
                .iter()
                .map(|m| m.iter().map(|t| t.map_or(-1, i64::from)).collect())
                .collect(),
        };
        std::fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RelKB> {
        let file: RelKbFile = serde_json::from_slice(&std::fs::read(path)?)?;
        if file.relations.is_empty() {
            return Err(Error::malformed("rel KB file", "no relations"));
        }
        let mut maps = Vec::with_capacity(file.relations.len());
        for rel in &file.relations {
            if rel.len() != file.n_entities {
                return Err(Error::malformed("rel KB file", "ragged relation map"));
            }
            let map: Vec<Option<u32>> = rel
                .iter()
                .map(|&t| {
                    if t < 0 {
                        None
                    } else {
                        Some(t as u32)
                    }
                })
                .collect();
            if map
                .iter()
                .flatten()
                .any(|&t| t as usize >= file.n_entities)
            {
                return Err(Error::malformed("rel KB file", "tail id out of range"));
            }
            maps.push(map);
        }
        Ok(RelKB::from_maps(maps))
    }
}

/// BFS from every node over the union of relation edges.
fn all_pairs_distances(n: usize, maps: &[Vec<Option<u32>>]) -> Array2<u16> {
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for map in maps {
        for (e, tail) in map.iter().enumerate() {
            if let Some(t) = tail {
                adjacency[e].push(*t);
            }
        }
    }
    let mut dist = Array2::from_elem((n, n), UNREACHABLE);
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        dist[(start, start)] = 0;
        queue.clear();
        queue.push_back(start as u32);
        while let Some(u) = queue.pop_front() {
            let du = dist[(start, u as usize)];
            for &v in &adjacency[u as usize] {
                if dist[(start, v as usize)] == UNREACHABLE {
                    dist[(start, v as usize)] = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

/// Disjoint partition of the entity set into ID and OOD subsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntitySplit {
    pub id_entities: Vec<u32>,
    pub ood_entities: Vec<u32>,
    pub ratio: f64,
    id_mask: Vec<bool>,
}

/// Uniform random partition with `round(ratio * n)` ID entities.
pub fn split_entities(seed: u64, n_entities: usize, ratio: f64) -> Result<EntitySplit> {
    if !(0.0 < ratio && ratio < 1.0) {
        return Err(Error::config(format!("split ratio {ratio} outside (0, 1)")));
    }
    let n_id = (ratio * n_entities as f64).round() as usize;
    if n_id == n_entities {
        return Err(Error::config(format!(
            "ratio {ratio} leaves the OOD set empty for {n_entities} entities"
        )));
    }
    if n_id == 0 {
        return Err(Error::config(format!(
            "ratio {ratio} leaves the ID set empty for {n_entities} entities"
        )));
    }
    let mut ids: Vec<u32> = (0..n_entities as u32).collect();
    ids.shuffle(&mut rng_for(seed, "entity_split"));
    let mut id_entities: Vec<u32> = ids[..n_id].to_vec();
    let mut ood_entities: Vec<u32> = ids[n_id..].to_vec();
    id_entities.sort_unstable();
    ood_entities.sort_unstable();
    let mut id_mask = vec![false; n_entities];
    for &e in &id_entities {
        id_mask[e as usize] = true;
    }
    Ok(EntitySplit {
        id_entities,
        ood_entities,
        ratio,
        id_mask,
    })
}

impl EntitySplit {
    pub fn n_entities(&self) -> usize {
        self.id_mask.len()
    }

    pub fn is_id(&self, entity: u32) -> bool {
        self.id_mask[entity as usize]
    }

    /// Split tag of a group of entities: ID iff all ID, OOD iff all OOD,
    /// MIX otherwise.
    pub fn tag_of(&self, entities: &[u32]) -> SplitTag {
        let n_id = entities.iter().filter(|&&e| self.is_id(e)).count();
        if n_id == entities.len() {
            SplitTag::Id
        } else if n_id == 0 {
            SplitTag::Ood
        } else {
            SplitTag::Mix
        }
    }

    pub fn entities_in(&self, tag: SplitTag) -> &[u32] {
        match tag {
            SplitTag::Id => &self.id_entities,
            SplitTag::Ood => &self.ood_entities,
            SplitTag::Mix => panic!("MIX is not a sampling pool of entities"),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<EntitySplit> {
        let mut split: EntitySplit = serde_json::from_slice(&std::fs::read(path)?)?;
        let n = split.id_entities.len() + split.ood_entities.len();
        split.id_mask = vec![false; n];
        for &e in &split.id_entities {
            if e as usize >= n {
                return Err(Error::malformed("entity split file", "id out of range"));
            }
            split.id_mask[e as usize] = true;
        }
        Ok(split)
    }
}

/// One training example per (entity, attribute) cell: `⟨e, a⟩ → ⟨v⟩`
/// (with `eos` appended at sequence-build time). Facts cover all entities;
/// the split tag is inherited from the entity and is metadata only.
pub fn enumerate_atomic_attr_facts(
    kb: &AttrKB,
    vocab: &Vocabulary,
    split: &EntitySplit,
) -> Vec<Example> {
    let mut out = Vec::with_capacity(kb.n_entities() * kb.n_attributes());
    for e in 0..kb.n_entities() as u32 {
        let tag = if split.is_id(e) { SplitTag::Id } else { SplitTag::Ood };
        for a in 0..kb.n_attributes() as u32 {
            let v = kb.value(e, a);
            out.push(Example {
                task: Task::AtomicAttr,
                k: 1,
                split: tag,
                query: vec![vocab.entity(e), vocab.attribute(a)],
                trace: Vec::new(),
                answer: vec![vocab.value(v)],
                meta: Meta::AtomicAttr {
                    entity: e,
                    attr: a,
                    value: v,
                },
            });
        }
    }
    out
}

/// One training example per retained edge: `⟨e_h, r⟩ → ⟨e_t⟩`. Split tag is
/// inherited from the head entity.
pub fn enumerate_atomic_rel_facts(
    kb: &RelKB,
    vocab: &Vocabulary,
    split: &EntitySplit,
) -> Vec<Example> {
    kb.edges()
        .iter()
        .map(|&(head, rel, tail)| {
            let tag = if split.is_id(head) { SplitTag::Id } else { SplitTag::Ood };
            Example {
                task: Task::AtomicRel,
                k: 1,
                split: tag,
                query: vec![vocab.entity(head), vocab.relation(rel)],
                trace: Vec::new(),
                answer: vec![vocab.entity(tail)],
                meta: Meta::AtomicRel { head, rel, tail },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{build_vocab, TaskKind, VocabConfig};

    fn vocab(e: u32, a: u32, r: u32, range: (i64, i64)) -> Vocabulary {
        build_vocab(&VocabConfig {
            n_entities: e,
            n_attributes: a,
            n_relations: r,
            value_range: range,
            tasks: TaskKind::ALL.into_iter().collect(),
        })
        .unwrap()
    }

    #[test]
    fn attr_kb_is_reproducible_and_in_range() {
        let a = build_attr_kb(9, 1000, 20, (0, 20), SignMode::Nonnegative).unwrap();
        let b = build_attr_kb(9, 1000, 20, (0, 20), SignMode::Nonnegative).unwrap();
        assert_eq!(a, b);
        let mut n = 0usize;
        for e in 0..1000 {
            for attr in 0..20 {
                let v = a.value(e, attr);
                assert!((0..=20).contains(&v));
                n += 1;
            }
        }
        assert_eq!(n, 20_000);
    }

    #[test]
    fn degenerate_range_yields_constant_matrix() {
        let kb = build_attr_kb(1, 1, 1, (5, 5), SignMode::Nonnegative).unwrap();
        assert_eq!(kb.value(0, 0), 5);
    }

    #[test]
    fn symmetric_mode_mean_near_zero() {
        // Generator: magnitude uniform on {0..20}, then a uniform sign.
        // Per-sample variance = sum(m^2)/21 = 2870/21; with 500 samples the
        // mean's 3-sigma band is 3*sqrt(var/500).
        let kb = build_attr_kb(3, 100, 5, (-20, 20), SignMode::Symmetric).unwrap();
        let n = 500.0;
        let var = 2870.0 / 21.0;
        let mut sum = 0.0;
        for e in 0..100 {
            for a in 0..5 {
                let v = kb.value(e, a);
                assert!((-20..=20).contains(&v));
                sum += v as f64;
            }
        }
        let mean = sum / n;
        assert!(mean.abs() <= 3.0 * (var / n).sqrt(), "mean {mean} outside 3 sigma");
    }

    #[test]
    fn symmetric_mode_rejects_asymmetric_range() {
        assert!(build_attr_kb(3, 10, 2, (0, 20), SignMode::Symmetric).is_err());
    }

    #[test]
    fn rel_kb_permutation_and_distances() {
        let kb = build_rel_kb(11, 4, 1, None).unwrap();
        // With full budget the single relation is a permutation.
        let mut tails: Vec<u32> = (0..4).map(|e| kb.follow(e, 0).unwrap()).collect();
        tails.sort_unstable();
        assert_eq!(tails, vec![0, 1, 2, 3]);
        for a in 0..4 {
            for b in 0..4 {
                let d = kb.dist(a, b);
                assert!(d <= 3 || d == UNREACHABLE);
            }
        }
    }

    #[test]
    fn single_entity_rel_kb() {
        let kb = build_rel_kb(5, 1, 1, None).unwrap();
        assert_eq!(kb.follow(0, 0), Some(0));
        assert_eq!(kb.dist(0, 0), 0);
    }

    #[test]
    fn full_budget_edge_count() {
        let kb = build_rel_kb(13, 1000, 20, None).unwrap();
        assert_eq!(kb.edges().len(), 20_000);
    }

    #[test]
    fn distances_match_bfs_oracle() {
        // Independent oracle: repeated edge relaxation (Bellman-Ford style),
        // no queue, deliberately different from the implementation.
        let kb = build_rel_kb(21, 30, 3, Some(70)).unwrap();
        let n = kb.n_entities();
        let mut oracle = vec![vec![u32::MAX; n]; n];
        for (i, row) in oracle.iter_mut().enumerate() {
            row[i] = 0;
        }
        for _ in 0..n {
            let mut changed = false;
            for &(h, _, t) in kb.edges() {
                for s in 0..n {
                    let via = oracle[s][h as usize].saturating_add(1);
                    if via < oracle[s][t as usize] {
                        oracle[s][t as usize] = via;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for a in 0..n {
            for b in 0..n {
                let got = kb.dist(a as u32, b as u32);
                let want = oracle[a][b];
                if want == u32::MAX {
                    assert_eq!(got, UNREACHABLE, "({a},{b})");
                } else {
                    assert_eq!(u32::from(got), want, "({a},{b})");
                }
            }
        }
    }

    #[test]
    fn edge_budget_validation() {
        assert!(build_rel_kb(1, 10, 2, Some(21)).is_err());
        let kb = build_rel_kb(1, 10, 2, Some(7)).unwrap();
        assert_eq!(kb.edges().len(), 7);
    }

    #[test]
    fn split_sizes_match_ratio() {
        let s = split_entities(7, 1000, 0.9).unwrap();
        assert_eq!(s.id_entities.len(), 900);
        assert_eq!(s.ood_entities.len(), 100);
        let s = split_entities(7, 2, 0.5).unwrap();
        assert_eq!((s.id_entities.len(), s.ood_entities.len()), (1, 1));
    }

    #[test]
    fn split_partitions_exhaustively() {
        let s = split_entities(3, 10, 0.9).unwrap();
        let mut all: Vec<u32> = s.id_entities.iter().chain(&s.ood_entities).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for e in &s.id_entities {
            assert!(!s.ood_entities.contains(e));
        }
    }

    #[test]
    fn split_rejects_empty_ood() {
        assert!(split_entities(1, 2, 0.9).is_err());
        assert!(split_entities(1, 10, 0.96).is_err());
    }

    #[test]
    fn atomic_attr_fact_shape() {
        let v = vocab(1000, 20, 1, (0, 20));
        let kb = build_attr_kb(9, 1000, 20, (0, 20), SignMode::Nonnegative).unwrap();
        let split = split_entities(9, 1000, 0.9).unwrap();
        let facts = enumerate_atomic_attr_facts(&kb, &v, &split);
        assert_eq!(facts.len(), 20_000);
        let f = &facts[0];
        assert_eq!(f.query, vec![v.entity(0), v.attribute(0)]);
        assert_eq!(f.answer, vec![v.value(kb.value(0, 0))]);
        assert!(f.trace.is_empty());
    }

    #[test]
    fn atomic_rel_fact_shape() {
        let v = vocab(10, 1, 2, (0, 5));
        let kb = build_rel_kb(4, 10, 2, None).unwrap();
        let split = split_entities(4, 10, 0.8).unwrap();
        let facts = enumerate_atomic_rel_facts(&kb, &v, &split);
        assert_eq!(facts.len(), 20);
        for f in &facts {
            let (h, r) = match f.meta {
                Meta::AtomicRel { head, rel, .. } => (head, rel),
                _ => unreachable!(),
            };
            assert_eq!(f.query, vec![v.entity(h), v.relation(r)]);
            assert_eq!(f.answer.len(), 1);
        }
    }
}
