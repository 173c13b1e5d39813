//! Hierarchical tag DAG.
//!
//! Tags form a directed acyclic graph whose edges point from broader
//! concepts to more specific ones (`pets -> dogs -> dog_walking`). Each
//! node carries the episodes attached to that tag plus the tag's own
//! embedding. Acyclicity is maintained online: a relation that would close
//! a directed cycle is rejected (not an error — noisy tagger output must
//! never abort ingestion) and the graph is left untouched.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::episode::EpisodeId;
use crate::error::{CoreError, Result};
use crate::tag::TagId;

/// One DAG vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TagNode {
    pub tag: TagId,
    pub episodes: BTreeSet<EpisodeId>,
    pub parents: BTreeSet<TagId>,
    pub children: BTreeSet<TagId>,
    pub embedding: Vec<f32>,
}

/// Why a relation was not added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// The edge would close a directed cycle.
    WouldCycle,
    /// The edge already exists.
    Duplicate,
}

/// Outcome of [`TagDag::add_relation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationOutcome {
    Accepted,
    Rejected(RejectReason),
}

/// The tag graph: nodes keyed by tag, edges stored as reciprocal
/// parent/child sets on both endpoints.
#[derive(Debug, Clone)]
pub struct TagDag {
    nodes: BTreeMap<TagId, TagNode>,
    edge_count: usize,
    dimension: usize,
}

impl TagDag {
    pub fn new(dimension: usize) -> Self {
        Self {
            nodes: BTreeMap::new(),
            edge_count: 0,
            dimension,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Mean parent-set size; equals mean child-set size by the handshake
    /// identity (every edge contributes one parent and one child slot).
    pub fn avg_parents(&self) -> f64 {
        if self.nodes.is_empty() {
            0.0
        } else {
            self.edge_count as f64 / self.nodes.len() as f64
        }
    }

    pub fn avg_children(&self) -> f64 {
        self.avg_parents()
    }

    pub fn contains(&self, tag: &TagId) -> bool {
        self.nodes.contains_key(tag)
    }

    pub fn get(&self, tag: &TagId) -> Option<&TagNode> {
        self.nodes.get(tag)
    }

    /// Nodes in lexicographic tag order.
    pub fn iter(&self) -> impl Iterator<Item = (&TagId, &TagNode)> {
        self.nodes.iter()
    }

    /// Create the node if new, otherwise refresh its embedding. Episode
    /// associations and relations survive an upsert.
    pub fn upsert_tag(&mut self, tag: TagId, embedding: Vec<f32>) -> Result<()> {
        if embedding.len() != self.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.dimension,
                got: embedding.len(),
            });
        }
        match self.nodes.get_mut(&tag) {
            Some(node) => node.embedding = embedding,
            None => {
                self.nodes.insert(
                    tag.clone(),
                    TagNode {
                        tag,
                        episodes: BTreeSet::new(),
                        parents: BTreeSet::new(),
                        children: BTreeSet::new(),
                        embedding,
                    },
                );
            }
        }
        Ok(())
    }

    /// Associate an episode with an existing tag.
    pub fn attach_episode(&mut self, tag: &TagId, id: EpisodeId) -> Result<()> {
        let node = self
            .nodes
            .get_mut(tag)
            .ok_or_else(|| CoreError::UnknownTag(String::from(tag.as_str())))?;
        node.episodes.insert(id);
        Ok(())
    }

    /// Add a broader -> more-specific edge. The edge is rejected (without
    /// modifying the graph) when it already exists or would close a cycle.
    pub fn add_relation(&mut self, parent: &TagId, child: &TagId) -> Result<RelationOutcome> {
        if parent == child {
            return Err(CoreError::SelfLoop(String::from(parent.as_str())));
        }
        for tag in [parent, child] {
            if !self.nodes.contains_key(tag) {
                return Err(CoreError::UnknownTag(String::from(tag.as_str())));
            }
        }
        if self.nodes[parent].children.contains(child) {
            return Ok(RelationOutcome::Rejected(RejectReason::Duplicate));
        }
        if self.reaches(child, parent) {
            return Ok(RelationOutcome::Rejected(RejectReason::WouldCycle));
        }
        self.nodes.get_mut(parent).unwrap().children.insert(child.clone());
        self.nodes.get_mut(child).unwrap().parents.insert(parent.clone());
        self.edge_count += 1;
        Ok(RelationOutcome::Accepted)
    }

    /// Whether `to` is reachable from `from` along child edges.
    fn reaches(&self, from: &TagId, to: &TagId) -> bool {
        let mut seen: BTreeSet<&TagId> = BTreeSet::new();
        let mut stack: Vec<&TagId> = Vec::new();
        stack.push(from);
        while let Some(tag) = stack.pop() {
            if tag == to {
                return true;
            }
            if seen.insert(tag) {
                stack.extend(self.nodes[tag].children.iter());
            }
        }
        false
    }

    /// Breadth-first expansion from the seeds along child edges, at most
    /// `depth` steps. Output is in BFS level order, deduplicated; unknown
    /// seeds are skipped. With `include_parents`, the seeds' direct parents
    /// are appended after the traversal.
    pub fn expand_tags(&self, seeds: &[TagId], depth: usize, include_parents: bool) -> Vec<TagId> {
        self.expand_tags_counted(seeds, depth, include_parents).0
    }

    /// Expansion plus the number of nodes visited by the traversal.
    pub fn expand_tags_counted(
        &self,
        seeds: &[TagId],
        depth: usize,
        include_parents: bool,
    ) -> (Vec<TagId>, usize) {
        let mut out: Vec<TagId> = Vec::new();
        let mut seen: BTreeSet<TagId> = BTreeSet::new();
        let mut queue: VecDeque<(TagId, usize)> = VecDeque::new();
        let mut visits = 0usize;
        for seed in seeds {
            if self.contains(seed) && seen.insert(seed.clone()) {
                out.push(seed.clone());
                queue.push_back((seed.clone(), 0));
            }
        }
        while let Some((tag, level)) = queue.pop_front() {
            visits += 1;
            if level == depth {
                continue;
            }
            for child in &self.nodes[&tag].children {
                if seen.insert(child.clone()) {
                    out.push(child.clone());
                    queue.push_back((child.clone(), level + 1));
                }
            }
        }
        if include_parents {
            let mut parents: BTreeSet<TagId> = BTreeSet::new();
            for seed in seeds {
                if let Some(node) = self.nodes.get(seed) {
                    parents.extend(node.parents.iter().cloned());
                }
            }
            for parent in parents {
                if seen.insert(parent.clone()) {
                    out.push(parent);
                }
            }
        }
        (out, visits)
    }

    /// Union of the episode sets of the given tags, sorted ascending and
    /// deduplicated; unknown tags are skipped.
    pub fn episodes_for(&self, tags: &[TagId]) -> Vec<EpisodeId> {
        let mut out: Vec<EpisodeId> = Vec::new();
        for tag in tags {
            if let Some(node) = self.nodes.get(tag) {
                out.extend(node.episodes.iter().copied());
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Graphviz DOT rendering, nodes and edges in lexicographic order.
    pub fn dump_dot(&self) -> String {
        use core::fmt::Write;
        let mut out = String::from("digraph tags {\n");
        for (tag, node) in &self.nodes {
            let _ = writeln!(out, "  \"{}\" [episodes={}];", tag, node.episodes.len());
        }
        for (tag, node) in &self.nodes {
            for child in &node.children {
                let _ = writeln!(out, "  \"{}\" -> \"{}\";", tag, child);
            }
        }
        out.push_str("}\n");
        out
    }

    /// Every edge is stored on both endpoints; used by tests and the
    /// acceptance suite.
    pub fn check_reciprocity(&self) -> bool {
        for (tag, node) in &self.nodes {
            for child in &node.children {
                match self.nodes.get(child) {
                    Some(c) if c.parents.contains(tag) => {}
                    _ => return false,
                }
            }
            for parent in &node.parents {
                match self.nodes.get(parent) {
                    Some(p) if p.children.contains(tag) => {}
                    _ => return false,
                }
            }
        }
        let child_slots: usize = self.nodes.values().map(|n| n.children.len()).sum();
        let parent_slots: usize = self.nodes.values().map(|n| n.parents.len()).sum();
        child_slots == self.edge_count && parent_slots == self.edge_count
    }
}
