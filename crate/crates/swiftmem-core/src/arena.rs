//! Contiguous embedding storage and exact cosine ranking.
//!
//! All episode embeddings live in one flat `f32` buffer, `dimension` values
//! per slot. Similarity is exact cosine accumulated in `f64`; there is no
//! approximate-NN structure — retrieval speed comes from candidate-set
//! narrowing, and consolidation (see [`crate::consolidate`]) keeps slots of
//! semantically related episodes physically adjacent.

use alloc::vec::Vec;

use crate::episode::EpisodeId;
use crate::error::{CoreError, Result};
use crate::math;

/// Flat embedding buffer plus slot maps.
///
/// Episode ids are dense (the store hands them out monotonically), so the
/// inverse map is a plain vector indexed by id.
#[derive(Debug, Clone)]
pub struct EmbeddingArena {
    data: Vec<f32>,
    slot_to_episode: Vec<EpisodeId>,
    episode_to_slot: Vec<Option<usize>>,
    /// Cached L2 norm per slot, same order as `slot_to_episode`.
    norms: Vec<f64>,
    dimension: usize,
}

impl EmbeddingArena {
    pub fn new(dimension: usize) -> Self {
        Self {
            data: Vec::new(),
            slot_to_episode: Vec::new(),
            episode_to_slot: Vec::new(),
            norms: Vec::new(),
            dimension,
        }
    }

    pub fn len(&self) -> usize {
        self.slot_to_episode.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_to_episode.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Append an embedding; returns the assigned slot.
    pub fn add(&mut self, id: EpisodeId, embedding: &[f32]) -> Result<usize> {
        if embedding.len() != self.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.dimension,
                got: embedding.len(),
            });
        }
        if self.slot_of(id).is_some() {
            return Err(CoreError::DuplicateEpisode(id.0));
        }
        let norm = l2_norm(embedding);
        if norm == 0.0 {
            return Err(CoreError::ZeroNorm);
        }
        let slot = self.slot_to_episode.len();
        self.data.extend_from_slice(embedding);
        self.slot_to_episode.push(id);
        self.norms.push(norm);
        if self.episode_to_slot.len() <= id.index() {
            self.episode_to_slot.resize(id.index() + 1, None);
        }
        self.episode_to_slot[id.index()] = Some(slot);
        Ok(slot)
    }

    #[inline]
    pub fn slot_of(&self, id: EpisodeId) -> Option<usize> {
        self.episode_to_slot.get(id.index()).copied().flatten()
    }

    pub fn episode_at(&self, slot: usize) -> Option<EpisodeId> {
        self.slot_to_episode.get(slot).copied()
    }

    /// The stored embedding of an episode.
    pub fn embedding(&self, id: EpisodeId) -> Option<&[f32]> {
        self.slot_of(id).map(|slot| self.slice(slot))
    }

    #[inline]
    fn slice(&self, slot: usize) -> &[f32] {
        &self.data[slot * self.dimension..(slot + 1) * self.dimension]
    }

    /// Top-k candidates by cosine similarity to `query`, descending, ties
    /// broken by ascending episode id. Candidates not present in the arena
    /// are skipped.
    pub fn rank<I>(&self, query: &[f32], candidates: I, top_k: usize) -> Result<Vec<(EpisodeId, f64)>>
    where
        I: IntoIterator<Item = EpisodeId>,
    {
        if query.len() != self.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.dimension,
                got: query.len(),
            });
        }
        let query_norm = l2_norm(query);
        if query_norm == 0.0 {
            return Err(CoreError::ZeroNorm);
        }
        let mut best = TopK::new(top_k);
        for id in candidates {
            let Some(slot) = self.slot_of(id) else {
                debug_assert!(false, "rank candidate {id} not in arena");
                continue;
            };
            let score = dot(query, self.slice(slot)) / (query_norm * self.norms[slot]);
            best.offer(id, score);
        }
        Ok(best.into_sorted())
    }

    /// [`rank`](Self::rank) over every stored episode, as a sequential scan
    /// of the arena (no per-candidate slot lookups). This is the exhaustive
    /// baseline that query-aware retrieval is measured against.
    pub fn rank_all(&self, query: &[f32], top_k: usize) -> Result<Vec<(EpisodeId, f64)>> {
        if query.len() != self.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.dimension,
                got: query.len(),
            });
        }
        let query_norm = l2_norm(query);
        if query_norm == 0.0 {
            return Err(CoreError::ZeroNorm);
        }
        let mut best = TopK::new(top_k);
        for slot in 0..self.len() {
            let score = dot(query, self.slice(slot)) / (query_norm * self.norms[slot]);
            best.offer(self.slot_to_episode[slot], score);
        }
        Ok(best.into_sorted())
    }

    /// Re-slot the arena to `order`, which must be a permutation of the
    /// stored episode ids. Returns how many episodes changed slot.
    pub fn set_order(&mut self, order: &[EpisodeId]) -> Result<usize> {
        if order.len() != self.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.len(),
                got: order.len(),
            });
        }
        let mut seen = alloc::collections::BTreeSet::new();
        for id in order {
            if self.slot_of(*id).is_none() {
                return Err(CoreError::NotFound(id.0));
            }
            if !seen.insert(*id) {
                return Err(CoreError::DuplicateEpisode(id.0));
            }
        }
        Ok(self.reorder(order))
    }

    /// Rebuild the buffer so episodes appear in `order`. Ids absent from
    /// `order` are dropped; `order` must cover exactly the stored episodes.
    /// Returns how many episodes changed slot.
    pub(crate) fn reorder(&mut self, order: &[EpisodeId]) -> usize {
        debug_assert_eq!(order.len(), self.len());
        let mut data = Vec::with_capacity(self.data.len());
        let mut norms = Vec::with_capacity(self.norms.len());
        let mut episode_to_slot = alloc::vec![None; self.episode_to_slot.len()];
        let mut moved = 0usize;
        for (new_slot, id) in order.iter().enumerate() {
            let old_slot = self.slot_of(*id).expect("order covers stored episodes");
            if old_slot != new_slot {
                moved += 1;
            }
            data.extend_from_slice(self.slice(old_slot));
            norms.push(self.norms[old_slot]);
            episode_to_slot[id.index()] = Some(new_slot);
        }
        self.data = data;
        self.norms = norms;
        self.slot_to_episode = order.to_vec();
        self.episode_to_slot = episode_to_slot;
        moved
    }

    /// Slot maps are mutually inverse; used by tests.
    pub fn check_maps_consistent(&self) -> bool {
        let occupied = self.episode_to_slot.iter().filter(|s| s.is_some()).count();
        occupied == self.slot_to_episode.len()
            && self
                .slot_to_episode
                .iter()
                .enumerate()
                .all(|(slot, id)| self.slot_of(*id) == Some(slot))
    }
}

/// Keeps the `k` best `(id, score)` pairs seen so far, best first.
struct TopK {
    best: Vec<(EpisodeId, f64)>,
    k: usize,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            best: Vec::with_capacity(k.min(1024) + 1),
            k,
        }
    }

    #[inline]
    fn offer(&mut self, id: EpisodeId, score: f64) {
        if self.k == 0 {
            return;
        }
        if self.best.len() == self.k {
            let worst = *self.best.last().unwrap();
            if !ranks_higher(score, id, worst.1, worst.0) {
                return;
            }
            self.best.pop();
        }
        let pos = self
            .best
            .partition_point(|(bid, bscore)| ranks_higher(*bscore, *bid, score, id));
        self.best.insert(pos, (id, score));
    }

    fn into_sorted(self) -> Vec<(EpisodeId, f64)> {
        self.best
    }
}

#[inline]
fn ranks_higher(score_a: f64, id_a: EpisodeId, score_b: f64, id_b: EpisodeId) -> bool {
    match score_a.partial_cmp(&score_b) {
        Some(core::cmp::Ordering::Greater) => true,
        Some(core::cmp::Ordering::Less) => false,
        _ => id_a < id_b,
    }
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| *x as f64 * *y as f64)
        .sum()
}

#[inline]
fn l2_norm(v: &[f32]) -> f64 {
    math::sqrt(v.iter().map(|x| *x as f64 * *x as f64).sum())
}

/// Cosine similarity of two equal-length vectors, accumulated in `f64`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CoreError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(CoreError::ZeroNorm);
    }
    Ok(dot(a, b) / (na * nb))
}
