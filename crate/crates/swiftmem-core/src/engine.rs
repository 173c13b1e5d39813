//! The engine ties the episode store and the three indexes together.
//!
//! All mutation flows through one ingestion path: `store_episode` validates
//! and embeds everything that can fail first, then updates the temporal
//! index, the embedding arena, and the tag DAG, and publishes the episode
//! record last. Retrieval is read-only: a [`QueryPlan`] narrows candidates
//! by routed tags and/or parsed time intervals, the arena ranks what
//! survives, and an exhaustive per-user scan is kept as the measurable
//! baseline.
//!
//! Concurrency contract: one writer, any number of readers. The engine has
//! no interior mutability besides event counters, so `&Engine` is safe to
//! share across reader threads.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use crate::adapters::{Embedder, OfflineEmbedder, TagProposal};
use crate::arena::EmbeddingArena;
use crate::clock::{Clock, NoopClock};
use crate::config::StoreConfig;
use crate::consolidate::{self, ConsolidationReport, ConsolidationStats};
use crate::dag::{RejectReason, RelationOutcome, TagDag};
use crate::episode::{Episode, EpisodeId, MemoryStore};
use crate::error::{CoreError, Result};
use crate::query::{parse_temporal, route_tags_counted, QueryPlan, RetrievalResult, StageTimings};
use crate::tag::TagId;
use crate::temporal::TemporalIndex;

/// Episode store plus temporal, tag, and embedding indexes behind one
/// ingestion and retrieval surface.
pub struct Engine {
    store: MemoryStore,
    temporal: TemporalIndex,
    dag: TagDag,
    arena: EmbeddingArena,
    embedder: Box<dyn Embedder>,
    clock: Box<dyn Clock>,
    rejected_cycles: usize,
    fallback_scans: AtomicUsize,
}

impl core::fmt::Debug for Engine {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Engine")
            .field("episodes", &self.store.len())
            .field("tags", &self.dag.len())
            .field("edges", &self.dag.edge_count())
            .finish_non_exhaustive()
    }
}

/// Counts and index health for `stats` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineStats {
    pub episodes: usize,
    pub users: usize,
    pub tags: usize,
    pub edges: usize,
    pub avg_parents: f64,
    pub avg_children: f64,
    pub fragmentation: f64,
    pub cohesion: f64,
    pub clusters: usize,
    pub per_user: Vec<(String, usize)>,
    pub rejected_cycles: usize,
    pub fallback_scans: usize,
}

impl Engine {
    /// Engine with the deterministic offline embedder.
    pub fn new(config: StoreConfig) -> Result<Self> {
        let embedder = OfflineEmbedder::new(config.dimension);
        Self::with_embedder(config, Box::new(embedder))
    }

    pub fn with_embedder(config: StoreConfig, embedder: Box<dyn Embedder>) -> Result<Self> {
        config.validate()?;
        if embedder.dimension() != config.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: config.dimension,
                got: embedder.dimension(),
            });
        }
        let dimension = config.dimension;
        Ok(Self {
            store: MemoryStore::new(config)?,
            temporal: TemporalIndex::new(),
            dag: TagDag::new(dimension),
            arena: EmbeddingArena::new(dimension),
            embedder,
            clock: Box::new(NoopClock),
            rejected_cycles: 0,
            fallback_scans: AtomicUsize::new(0),
        })
    }

    /// Install a real clock so stage timings are measured.
    pub fn set_clock(&mut self, clock: Box<dyn Clock>) {
        self.clock = clock;
    }

    pub fn config(&self) -> &StoreConfig {
        self.store.config()
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn temporal(&self) -> &TemporalIndex {
        &self.temporal
    }

    pub fn dag(&self) -> &TagDag {
        &self.dag
    }

    pub fn arena(&self) -> &EmbeddingArena {
        &self.arena
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn episodes(&self) -> impl Iterator<Item = &Episode> {
        self.store.iter()
    }

    pub fn get_episode(&self, id: EpisodeId) -> Result<&Episode> {
        self.store.get(id)
    }

    pub fn rejected_cycles(&self) -> usize {
        self.rejected_cycles
    }

    pub fn fallback_scans(&self) -> usize {
        self.fallback_scans.load(Ordering::Relaxed)
    }

    /// Store one episode and update every index before it becomes visible.
    /// Tags must already be canonical; new tags are embedded from their
    /// text (underscores as spaces).
    pub fn store_episode(
        &mut self,
        user: &str,
        content: &str,
        timestamp: i64,
        embedding: Vec<f32>,
        tags: Vec<TagId>,
    ) -> Result<EpisodeId> {
        self.store.check_insert(timestamp, &embedding, &tags)?;
        // everything fallible happens before any index is touched
        let mut new_tag_embeddings: Vec<(TagId, Vec<f32>)> = Vec::new();
        for tag in &tags {
            if !self.dag.contains(tag) {
                new_tag_embeddings.push((tag.clone(), self.embedder.embed(&tag.as_text())?));
            }
        }

        let id = self.store.next_id();
        self.temporal
            .insert(user, timestamp, id)
            .expect("fresh id cannot collide");
        self.arena.add(id, &embedding).expect("validated embedding");
        for (tag, tag_embedding) in new_tag_embeddings {
            self.dag.upsert_tag(tag, tag_embedding)?;
        }
        for tag in &tags {
            self.dag.attach_episode(tag, id)?;
        }
        let stored = self
            .store
            .insert(String::from(user), String::from(content), timestamp, embedding, tags)?;
        debug_assert_eq!(stored, id);
        Ok(id)
    }

    /// Embed `content` and store it with a tagger proposal, applying the
    /// proposed relations afterwards. Returns the id and how many proposed
    /// relations were rejected as cycles.
    pub fn ingest(
        &mut self,
        user: &str,
        content: &str,
        timestamp: i64,
        proposal: &TagProposal,
    ) -> Result<(EpisodeId, usize)> {
        let embedding = self.embedder.embed(content)?;
        let id = self.store_episode(user, content, timestamp, embedding, proposal.tags.clone())?;
        let mut rejected = 0usize;
        for (parent, child) in &proposal.relations {
            if self.add_relation(parent, child)? == RelationOutcome::Rejected(RejectReason::WouldCycle)
            {
                rejected += 1;
            }
        }
        Ok((id, rejected))
    }

    /// Add a broader -> narrower tag relation; cycle rejections are counted
    /// but never fail ingestion.
    pub fn add_relation(&mut self, parent: &TagId, child: &TagId) -> Result<RelationOutcome> {
        let outcome = self.dag.add_relation(parent, child)?;
        if outcome == RelationOutcome::Rejected(RejectReason::WouldCycle) {
            self.rejected_cycles += 1;
        }
        Ok(outcome)
    }

    /// Build a query plan with the configured router width and expansion
    /// depth.
    pub fn plan(&self, query: &str, user: &str, reference_now: i64) -> Result<QueryPlan> {
        let config = self.store.config();
        self.plan_with(
            query,
            user,
            reference_now,
            config.tags_per_query,
            config.max_expansion_depth,
        )
    }

    /// Build a query plan with explicit router width `k` and expansion
    /// depth.
    pub fn plan_with(
        &self,
        query: &str,
        user: &str,
        reference_now: i64,
        k: usize,
        depth: usize,
    ) -> Result<QueryPlan> {
        let mut timings = StageTimings::default();

        let t = self.clock.now_micros();
        let embedding = self.embedder.embed(query)?;
        timings.embed_us = self.clock.now_micros().saturating_sub(t);

        let t = self.clock.now_micros();
        let intervals = parse_temporal(query, reference_now);
        timings.parse_us = self.clock.now_micros().saturating_sub(t);

        let t = self.clock.now_micros();
        let (seed_tags, router_sims) = route_tags_counted(&embedding, &self.dag, k);
        timings.route_us = self.clock.now_micros().saturating_sub(t);

        let t = self.clock.now_micros();
        let seeds: Vec<TagId> = seed_tags.iter().map(|(tag, _)| tag.clone()).collect();
        let (expanded_tags, expansion_visits) =
            self.dag
                .expand_tags_counted(&seeds, depth, self.store.config().expand_parents);
        timings.expand_us = self.clock.now_micros().saturating_sub(t);

        Ok(QueryPlan {
            raw: String::from(query),
            user: String::from(user),
            embedding,
            intervals,
            seed_tags,
            expanded_tags,
            router_sims,
            expansion_visits,
            timings,
        })
    }

    /// Execute a plan: narrow candidates by tags and/or time, then rank.
    ///
    /// Candidate rule: tag-routed episodes of the plan's user, intersected
    /// with the merged time intervals when present. A dimension that is
    /// absent from the plan simply does not constrain; when *neither*
    /// dimension produced anything, the user's full episode set is scanned
    /// (counted as a fallback) so retrieval never silently under-performs
    /// the baseline.
    pub fn retrieve(&self, plan: QueryPlan, top_k: usize) -> Result<RetrievalResult> {
        let mut timings = plan.timings;

        let t = self.clock.now_micros();
        let has_tags = !plan.seed_tags.is_empty();
        let has_time = !plan.intervals.is_empty();
        let mut used_fallback = false;
        let candidates: Vec<EpisodeId> = match (has_tags, has_time) {
            (true, true) => {
                let tagged = self.dag.episodes_for(&plan.expanded_tags);
                self.temporal
                    .multi_range_query(&plan.user, &plan.intervals)
                    .into_iter()
                    .filter(|id| tagged.binary_search(id).is_ok())
                    .collect()
            }
            (true, false) => self
                .dag
                .episodes_for(&plan.expanded_tags)
                .into_iter()
                .filter(|id| {
                    self.store
                        .get(*id)
                        .map(|e| e.user == plan.user)
                        .unwrap_or(false)
                })
                .collect(),
            (false, true) => self.temporal.multi_range_query(&plan.user, &plan.intervals),
            (false, false) => {
                used_fallback = true;
                self.fallback_scans.fetch_add(1, Ordering::Relaxed);
                self.temporal.user_episodes(&plan.user)
            }
        };
        timings.filter_us = self.clock.now_micros().saturating_sub(t);

        let t = self.clock.now_micros();
        let hits = self.arena.rank(&plan.embedding, candidates.iter().copied(), top_k)?;
        timings.rank_us = self.clock.now_micros().saturating_sub(t);

        timings.total_us = timings.embed_us
            + timings.parse_us
            + timings.route_us
            + timings.expand_us
            + timings.filter_us
            + timings.rank_us;

        Ok(RetrievalResult {
            hits,
            candidates_examined: candidates.len(),
            used_fallback,
            plan,
            timings,
        })
    }

    /// Plan and execute in one step with the configured defaults.
    pub fn query(
        &self,
        query: &str,
        user: &str,
        reference_now: i64,
        top_k: usize,
    ) -> Result<RetrievalResult> {
        let plan = self.plan(query, user, reference_now)?;
        self.retrieve(plan, top_k)
    }

    /// The exhaustive baseline: score every episode of the user, no
    /// narrowing. `candidates_examined` is always the user's episode count.
    pub fn retrieve_exhaustive(
        &self,
        query: &str,
        user: &str,
        top_k: usize,
    ) -> Result<RetrievalResult> {
        let mut timings = StageTimings::default();

        let t = self.clock.now_micros();
        let embedding = self.embedder.embed(query)?;
        timings.embed_us = self.clock.now_micros().saturating_sub(t);

        let t = self.clock.now_micros();
        let user_count = self.temporal.user_len(user);
        let hits = if user_count == self.arena.len() {
            // single-user store: scan the arena sequentially
            self.arena.rank_all(&embedding, top_k)?
        } else {
            self.arena
                .rank(&embedding, self.temporal.user_episodes(user), top_k)?
        };
        timings.rank_us = self.clock.now_micros().saturating_sub(t);
        timings.total_us = timings.embed_us + timings.rank_us;

        Ok(RetrievalResult {
            hits,
            candidates_examined: user_count,
            used_fallback: false,
            plan: QueryPlan {
                raw: String::from(query),
                user: String::from(user),
                embedding,
                intervals: Vec::new(),
                seed_tags: Vec::new(),
                expanded_tags: Vec::new(),
                router_sims: 0,
                expansion_visits: 0,
                timings: StageTimings::default(),
            },
            timings,
        })
    }

    pub fn consolidation_stats(&self) -> ConsolidationStats {
        consolidate::consolidation_stats(&self.arena, &self.dag, self.store.config().cooccur_min)
    }

    /// Whether the configured thresholds say a consolidation pass pays off.
    pub fn should_consolidate(&self) -> bool {
        consolidate::should_consolidate(&self.consolidation_stats(), self.store.config())
    }

    /// Re-layout the embedding arena by semantic cluster.
    pub fn consolidate(&mut self) -> ConsolidationReport {
        consolidate::consolidate(&mut self.arena, &self.dag, self.store.config().cooccur_min)
    }

    /// Restore a persisted arena layout; `order` must be a permutation of
    /// the stored episode ids.
    pub fn restore_layout(&mut self, order: &[EpisodeId]) -> Result<usize> {
        self.arena.set_order(order)
    }

    pub fn stats(&self) -> EngineStats {
        let consolidation = self.consolidation_stats();
        EngineStats {
            episodes: self.store.len(),
            users: self.temporal.users().count(),
            tags: self.dag.len(),
            edges: self.dag.edge_count(),
            avg_parents: self.dag.avg_parents(),
            avg_children: self.dag.avg_children(),
            fragmentation: consolidation.fragmentation,
            cohesion: consolidation.cohesion,
            clusters: consolidation.cluster_count,
            per_user: self
                .temporal
                .per_user_counts()
                .map(|(u, n)| (String::from(u), n))
                .collect(),
            rejected_cycles: self.rejected_cycles,
            fallback_scans: self.fallback_scans(),
        }
    }
}
