//! Tag clustering and embedding-tag co-consolidation.
//!
//! Clusters are the weakly-connected components of the tag graph (DAG edges
//! viewed undirected, optionally joined by tag co-occurrence edges).
//! Consolidation rewrites the embedding arena so episodes of the same
//! cluster — and within a cluster, the same tag — sit in adjacent slots,
//! which improves cache locality when a tag-routed candidate set is ranked.
//! The rewrite never changes any embedding bytes, so every query ranks
//! identically before and after.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::Serialize;

use crate::arena::EmbeddingArena;
use crate::config::StoreConfig;
use crate::dag::TagDag;
use crate::episode::EpisodeId;
use crate::tag::TagId;

/// One weakly-connected component of the tag graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TagCluster {
    pub id: usize,
    /// Sorted member tags.
    pub members: Vec<TagId>,
    /// Member with the most attached episodes (ties: lexicographically
    /// smallest tag).
    pub centroid_tag: TagId,
    /// Intra-cluster undirected edge count over the maximum possible
    /// `m * (m - 1) / 2`; singletons score 1.0 by convention.
    pub cohesion: f64,
}

/// Physical location of one tag's embeddings after consolidation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutEntry {
    pub tag: TagId,
    /// First slot of the tag's extent (inclusive).
    pub o_start: usize,
    /// End of the tag's extent (exclusive).
    pub o_end: usize,
    /// Cluster the tag belongs to.
    pub cluster: usize,
    /// Number of the tag's episode slots inside `[o_start, o_end)`.
    pub count: usize,
}

/// Outcome of one consolidation pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsolidationReport {
    pub layout: Vec<LayoutEntry>,
    /// Episodes whose slot changed.
    pub moved: usize,
    pub fragmentation_before: f64,
    pub fragmentation_after: f64,
}

/// Inputs to the consolidation decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsolidationStats {
    /// Episode-weighted mean cluster cohesion.
    pub cohesion: f64,
    /// One minus the mean largest-contiguous-run fraction over tags.
    pub fragmentation: f64,
    /// `(cohesion + fragmentation) / 2`.
    pub score: f64,
    pub cluster_count: usize,
}

/// Undirected clustering edges: DAG relations plus, when `cooccur_min > 0`,
/// pairs of tags sharing at least `cooccur_min` episodes.
fn clustering_edges(dag: &TagDag, cooccur_min: usize) -> BTreeSet<(TagId, TagId)> {
    let mut edges: BTreeSet<(TagId, TagId)> = BTreeSet::new();
    for (tag, node) in dag.iter() {
        for child in &node.children {
            edges.insert(ordered_pair(tag, child));
        }
    }
    if cooccur_min > 0 {
        let mut by_episode: BTreeMap<EpisodeId, Vec<&TagId>> = BTreeMap::new();
        for (tag, node) in dag.iter() {
            for ep in &node.episodes {
                by_episode.entry(*ep).or_default().push(tag);
            }
        }
        let mut pair_counts: BTreeMap<(TagId, TagId), usize> = BTreeMap::new();
        for tags in by_episode.values() {
            for i in 0..tags.len() {
                for j in (i + 1)..tags.len() {
                    *pair_counts.entry(ordered_pair(tags[i], tags[j])).or_default() += 1;
                }
            }
        }
        for (pair, count) in pair_counts {
            if count >= cooccur_min {
                edges.insert(pair);
            }
        }
    }
    edges
}

fn ordered_pair(a: &TagId, b: &TagId) -> (TagId, TagId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Partition the tags into weakly-connected components. Clusters are sorted
/// by their smallest member and numbered in that order, so the partition is
/// deterministic for a given graph.
pub fn cluster_tags(dag: &TagDag, cooccur_min: usize) -> Vec<TagCluster> {
    let edges = clustering_edges(dag, cooccur_min);
    let mut adjacency: BTreeMap<&TagId, Vec<&TagId>> = BTreeMap::new();
    for (a, b) in &edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }

    let mut seen: BTreeSet<&TagId> = BTreeSet::new();
    let mut clusters: Vec<Vec<TagId>> = Vec::new();
    for (tag, _) in dag.iter() {
        if seen.contains(tag) {
            continue;
        }
        let mut members: Vec<TagId> = Vec::new();
        let mut stack: Vec<&TagId> = alloc::vec![tag];
        seen.insert(tag);
        while let Some(t) = stack.pop() {
            members.push(t.clone());
            for next in adjacency.get(t).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters.sort_by(|a, b| a[0].cmp(&b[0]));

    clusters
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let member_set: BTreeSet<&TagId> = members.iter().collect();
            let intra_edges = edges
                .iter()
                .filter(|(a, b)| member_set.contains(a) && member_set.contains(b))
                .count();
            let m = members.len();
            let cohesion = if m < 2 {
                1.0
            } else {
                intra_edges as f64 / (m * (m - 1) / 2) as f64
            };
            let centroid_tag = members
                .iter()
                .max_by(|a, b| {
                    let ea = dag.get(a).map(|n| n.episodes.len()).unwrap_or(0);
                    let eb = dag.get(b).map(|n| n.episodes.len()).unwrap_or(0);
                    // prefer more episodes, then the smaller tag
                    ea.cmp(&eb).then_with(|| b.cmp(a))
                })
                .expect("clusters are nonempty")
                .clone();
            TagCluster {
                id,
                members,
                centroid_tag,
                cohesion,
            }
        })
        .collect()
}

/// Mean cluster cohesion weighted by each cluster's episode count (the size
/// of the union of its members' episode sets); 0.0 when no cluster has
/// episodes.
pub fn weighted_cohesion(clusters: &[TagCluster], dag: &TagDag) -> f64 {
    let mut total_weight = 0usize;
    let mut acc = 0.0f64;
    for cluster in clusters {
        let mut episodes: BTreeSet<EpisodeId> = BTreeSet::new();
        for tag in &cluster.members {
            if let Some(node) = dag.get(tag) {
                episodes.extend(node.episodes.iter().copied());
            }
        }
        let weight = episodes.len();
        total_weight += weight;
        acc += cluster.cohesion * weight as f64;
    }
    if total_weight == 0 {
        0.0
    } else {
        acc / total_weight as f64
    }
}

/// Longest run of consecutive slot numbers in a sorted slot list.
fn longest_run(sorted_slots: &[usize]) -> usize {
    let mut best = 0usize;
    let mut run = 0usize;
    let mut prev: Option<usize> = None;
    for &slot in sorted_slots {
        run = match prev {
            Some(p) if slot == p + 1 => run + 1,
            _ => 1,
        };
        best = best.max(run);
        prev = Some(slot);
    }
    best
}

/// Fragmentation of an explicit per-tag slot assignment: one minus the mean
/// largest-contiguous-run fraction. Tags without slots are excluded; with
/// no slotted tags at all the arena counts as unfragmented.
fn fragmentation_of(slots_by_tag: &[Vec<usize>]) -> f64 {
    let mut tags = 0usize;
    let mut acc = 0.0f64;
    for slots in slots_by_tag {
        if slots.is_empty() {
            continue;
        }
        debug_assert!(slots.windows(2).all(|w| w[0] < w[1]));
        tags += 1;
        acc += longest_run(slots) as f64 / slots.len() as f64;
    }
    if tags == 0 {
        0.0
    } else {
        1.0 - acc / tags as f64
    }
}

fn current_slots_by_tag(arena: &EmbeddingArena, dag: &TagDag) -> Vec<Vec<usize>> {
    dag.iter()
        .map(|(_, node)| {
            let mut slots: Vec<usize> = node
                .episodes
                .iter()
                .filter_map(|ep| arena.slot_of(*ep))
                .collect();
            slots.sort_unstable();
            slots
        })
        .collect()
}

/// Fragmentation of the arena as currently laid out.
pub fn fragmentation(arena: &EmbeddingArena, dag: &TagDag) -> f64 {
    fragmentation_of(&current_slots_by_tag(arena, dag))
}

/// Compute the consolidation decision inputs for the current layout.
pub fn consolidation_stats(
    arena: &EmbeddingArena,
    dag: &TagDag,
    cooccur_min: usize,
) -> ConsolidationStats {
    let clusters = cluster_tags(dag, cooccur_min);
    let cohesion = weighted_cohesion(&clusters, dag);
    let frag = fragmentation(arena, dag);
    ConsolidationStats {
        cohesion,
        fragmentation: frag,
        score: consolidation_score(cohesion, frag),
        cluster_count: clusters.len(),
    }
}

/// Scoring function balancing cohesion and fragmentation, in `[0, 1]`.
pub fn consolidation_score(cohesion: f64, fragmentation: f64) -> f64 {
    (cohesion + fragmentation) / 2.0
}

/// Consolidation pays off when the arena is fragmented enough and the
/// clusters are cohesive enough; both thresholds are inclusive.
pub fn should_consolidate(stats: &ConsolidationStats, config: &StoreConfig) -> bool {
    stats.fragmentation >= config.fragmentation_min && stats.cohesion >= config.cohesion_min
}

/// Rebuild the arena ordered by `(cluster, tag, episode id)`. An episode
/// under several tags is placed once, under its lexicographically smallest
/// tag; untagged episodes keep their relative order at the end. When the
/// canonical order would *increase* fragmentation (possible when tags share
/// many episodes), the rebuild is skipped and the report shows `moved: 0`.
pub fn consolidate(
    arena: &mut EmbeddingArena,
    dag: &TagDag,
    cooccur_min: usize,
) -> ConsolidationReport {
    let clusters = cluster_tags(dag, cooccur_min);
    let cluster_of: BTreeMap<&TagId, usize> = clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |t| (t, c.id)))
        .collect();

    // owner = lexicographically smallest tag of each episode
    let mut owner: BTreeMap<EpisodeId, &TagId> = BTreeMap::new();
    for (tag, node) in dag.iter() {
        for ep in &node.episodes {
            owner.entry(*ep).or_insert(tag);
        }
    }

    let mut tagged: Vec<(usize, &TagId, EpisodeId)> = Vec::new();
    let mut untagged: Vec<EpisodeId> = Vec::new();
    for slot in 0..arena.len() {
        let id = arena.episode_at(slot).expect("slot in range");
        match owner.get(&id) {
            Some(tag) => tagged.push((cluster_of[*tag], *tag, id)),
            None => untagged.push(id),
        }
    }
    tagged.sort_unstable();
    untagged.sort_unstable();

    let order: Vec<EpisodeId> = tagged
        .iter()
        .map(|(_, _, id)| *id)
        .chain(untagged.iter().copied())
        .collect();

    let fragmentation_before = fragmentation(arena, dag);

    // fragmentation the canonical order would produce
    let new_slot: BTreeMap<EpisodeId, usize> =
        order.iter().enumerate().map(|(s, id)| (*id, s)).collect();
    let canonical_slots: Vec<Vec<usize>> = dag
        .iter()
        .map(|(_, node)| {
            let mut slots: Vec<usize> = node
                .episodes
                .iter()
                .filter_map(|ep| new_slot.get(ep).copied())
                .collect();
            slots.sort_unstable();
            slots
        })
        .collect();
    let fragmentation_canonical = fragmentation_of(&canonical_slots);

    let (moved, fragmentation_after) = if fragmentation_canonical > fragmentation_before {
        (0, fragmentation_before)
    } else {
        (arena.reorder(&order), fragmentation_canonical)
    };

    let mut layout = Vec::new();
    for (tag, node) in dag.iter() {
        let mut slots: Vec<usize> = node
            .episodes
            .iter()
            .filter_map(|ep| arena.slot_of(*ep))
            .collect();
        if slots.is_empty() {
            continue;
        }
        slots.sort_unstable();
        layout.push(LayoutEntry {
            tag: tag.clone(),
            o_start: slots[0],
            o_end: slots[slots.len() - 1] + 1,
            cluster: cluster_of[tag],
            count: slots.len(),
        });
    }

    ConsolidationReport {
        layout,
        moved,
        fragmentation_before,
        fragmentation_after,
    }
}
