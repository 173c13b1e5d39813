//! Seeded synthetic workload generator and benchmark harness.
//!
//! The corpus is a clustered conversational store: `tags` topic base
//! vectors (unit, random), episodes assigned to topics with Zipf-skewed
//! popularity, episode embeddings = topic base + noise, timestamps spread
//! uniformly over one year and ingested in chronological order. Every query
//! is generated from a target episode: its embedding is the target's plus
//! noise, so the query routes to the target's topic and the target is the
//! natural best hit. A fixed seed reproduces the corpus, the plans, and the
//! candidate counts exactly; only wall-clock timings vary between runs.
//!
//! Latency is measured around plan + retrieve (search only; no generation
//! stage exists here). The exhaustive baseline scores every episode of the
//! querying user. Indexed and exhaustive measurements are interleaved per
//! query so background load distorts both sides equally.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use swiftmem_core::{
    CoreError, Embedder, Engine, EpisodeId, OfflineEmbedder, StoreConfig, TagId, TimeInterval,
};

use crate::clock::StdClock;

/// 2023-01-01T00:00:00Z; corpus timestamps span one year from here.
pub const CORPUS_START_MS: i64 = 1_672_531_200_000;
const CORPUS_SPAN_MS: i64 = 365 * 86_400_000;
/// Reference "now" used when planning bench queries (just past the corpus).
pub const BENCH_NOW_MS: i64 = CORPUS_START_MS + 366 * 86_400_000;

const ZIPF_EXPONENT: f64 = 1.1;
const EPISODE_NOISE: f64 = 0.6;
const QUERY_NOISE: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct BenchOptions {
    pub episodes: usize,
    pub tags: usize,
    pub users: usize,
    pub queries: usize,
    pub seed: u64,
    pub top_k: usize,
    /// Router width (`k` seed tags per query).
    pub tags_per_query: usize,
    pub max_expansion_depth: usize,
    pub dimension: usize,
    pub workers: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            tags: 100,
            users: 1,
            queries: 200,
            seed: 42,
            top_k: 10,
            tags_per_query: 5,
            max_expansion_depth: 2,
            dimension: 384,
            workers: 1,
        }
    }
}

/// One synthetic query: embedding registered under `text`, generated from
/// `target`.
#[derive(Debug, Clone)]
pub struct BenchQuery {
    pub text: String,
    pub user: String,
    pub target: EpisodeId,
    pub target_ts: i64,
}

/// A generated corpus loaded into an engine, plus its query workload.
pub struct BenchSetup {
    pub engine: Engine,
    pub queries: Vec<BenchQuery>,
    pub options: BenchOptions,
}

/// Embedder that serves pre-registered exact strings from a table and
/// defers everything else to the offline hasher. The table is shared so
/// the harness can keep registering query vectors after the engine has
/// taken ownership of its embedder.
#[derive(Clone)]
struct TableEmbedder {
    table: Arc<RwLock<HashMap<String, Vec<f32>>>>,
    fallback: OfflineEmbedder,
    dimension: usize,
}

impl TableEmbedder {
    fn new(dimension: usize) -> Self {
        Self {
            table: Arc::new(RwLock::new(HashMap::new())),
            fallback: OfflineEmbedder::new(dimension),
            dimension,
        }
    }

    fn register(&self, text: String, embedding: Vec<f32>) {
        self.table.write().unwrap().insert(text, embedding);
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>, CoreError> {
        if let Some(v) = self.table.read().unwrap().get(text) {
            return Ok(v.clone());
        }
        self.fallback.embed(text)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng, dimension: usize) -> Vec<f32> {
    loop {
        let v: Vec<f64> = (0..dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| (x / norm) as f32).collect();
        }
    }
}

/// `base + scale * (random unit direction)`, renormalized.
fn jitter(rng: &mut ChaCha8Rng, base: &[f32], scale: f64) -> Vec<f32> {
    let noise = random_unit_vector(rng, base.len());
    let mixed: Vec<f64> = base
        .iter()
        .zip(&noise)
        .map(|(b, n)| *b as f64 + scale * *n as f64)
        .collect();
    let norm = mixed.iter().map(|x| x * x).sum::<f64>().sqrt();
    mixed.iter().map(|x| (x / norm) as f32).collect()
}

/// Zipf(`ZIPF_EXPONENT`) cumulative distribution over `n` ranks.
fn zipf_cumulative(n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-ZIPF_EXPONENT)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn sample_index(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let r: f64 = rng.gen();
    cumulative.partition_point(|c| *c < r).min(cumulative.len() - 1)
}

/// Generate the corpus and load it into a fresh engine.
pub fn build_corpus(options: &BenchOptions) -> BenchSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let config = StoreConfig {
        dimension: options.dimension,
        tags_per_query: options.tags_per_query,
        max_expansion_depth: options.max_expansion_depth,
        ..StoreConfig::default()
    };

    let embedder = TableEmbedder::new(options.dimension);
    let topic_tags: Vec<TagId> = (0..options.tags)
        .map(|t| TagId::parse(&format!("topic{t}")).unwrap())
        .collect();
    let bases: Vec<Vec<f32>> = (0..options.tags)
        .map(|_| random_unit_vector(&mut rng, options.dimension))
        .collect();
    for (tag, base) in topic_tags.iter().zip(&bases) {
        embedder.register(tag.as_text(), base.clone());
    }

    let mut engine = Engine::with_embedder(config, Box::new(embedder.clone())).unwrap();
    engine.set_clock(Box::new(StdClock::new()));

    if options.episodes == 0 {
        return BenchSetup {
            engine,
            queries: Vec::new(),
            options: options.clone(),
        };
    }

    // episode skeletons, then chronological ingestion order
    let cumulative = zipf_cumulative(options.tags);
    let mut skeleton: Vec<(i64, usize, usize)> = (0..options.episodes)
        .map(|_| {
            let topic = sample_index(&cumulative, &mut rng);
            let ts = CORPUS_START_MS + rng.gen_range(0..CORPUS_SPAN_MS);
            let user = rng.gen_range(0..options.users.max(1));
            (ts, topic, user)
        })
        .collect();
    skeleton.sort_unstable();

    // choose query targets: a uniformly random topic, then a uniformly
    // random episode of that topic, so the workload covers fat and thin
    // topics alike
    let mut by_topic: Vec<Vec<usize>> = vec![Vec::new(); options.tags];
    for (index, (_, topic, _)) in skeleton.iter().enumerate() {
        by_topic[*topic].push(index);
    }
    let occupied: Vec<usize> = (0..options.tags).filter(|t| !by_topic[*t].is_empty()).collect();
    let target_indices: Vec<usize> = (0..options.queries)
        .map(|_| {
            let topic = occupied[rng.gen_range(0..occupied.len())];
            let members = &by_topic[topic];
            members[rng.gen_range(0..members.len())]
        })
        .collect();

    let wanted: std::collections::HashSet<usize> = target_indices.iter().copied().collect();
    let mut target_embeddings: HashMap<usize, Vec<f32>> = HashMap::new();
    for (index, (ts, topic, user)) in skeleton.iter().enumerate() {
        let embedding = jitter(&mut rng, &bases[*topic], EPISODE_NOISE);
        if wanted.contains(&index) {
            target_embeddings.insert(index, embedding.clone());
        }
        let content = format!("topic {topic} episode {index}");
        engine
            .store_episode(
                &format!("user{user}"),
                &content,
                *ts,
                embedding,
                vec![topic_tags[*topic].clone()],
            )
            .unwrap();
    }

    let queries: Vec<BenchQuery> = target_indices
        .iter()
        .enumerate()
        .map(|(qi, index)| {
            let vector = jitter(&mut rng, &target_embeddings[index], QUERY_NOISE);
            let text = format!("bench query {qi}");
            embedder.register(text.clone(), vector);
            let target = EpisodeId(*index as u64);
            let episode = engine.get_episode(target).unwrap();
            BenchQuery {
                text,
                user: episode.user.clone(),
                target,
                target_ts: episode.timestamp,
            }
        })
        .collect();

    BenchSetup {
        engine,
        queries,
        options: options.clone(),
    }
}

/// Everything measured for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub indexed_us: u64,
    pub exhaustive_us: u64,
    pub candidates: usize,
    /// `|indexed hits ∩ exhaustive hits| / top_k`.
    pub recall_vs_exhaustive: f64,
    /// Whether the generating target episode was retrieved.
    pub target_hit: bool,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LatencyStats {
    pub mean_us: f64,
    pub p50_us: u64,
    pub p95_us: u64,
}

impl LatencyStats {
    fn of(samples: &[u64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let percentile = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round()) as usize];
        Self {
            mean_us: sorted.iter().sum::<u64>() as f64 / sorted.len() as f64,
            p50_us: percentile(0.50),
            p95_us: percentile(0.95),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CandidateStats {
    pub mean: f64,
    pub p50: usize,
    pub p95: usize,
}

impl CandidateStats {
    fn of(samples: &[usize]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let percentile = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round()) as usize];
        Self {
            mean: sorted.iter().sum::<usize>() as f64 / sorted.len() as f64,
            p50: percentile(0.50),
            p95: percentile(0.95),
        }
    }
}

/// Consolidation block of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsolidationBench {
    pub fragmentation_before: f64,
    pub fragmentation_after: f64,
    pub moved: usize,
    pub indexed_before: LatencyStats,
    pub indexed_after: LatencyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub episodes: usize,
    pub tags: usize,
    pub users: usize,
    pub queries: usize,
    pub seed: u64,
    pub top_k: usize,
    pub indexed: LatencyStats,
    pub exhaustive: LatencyStats,
    pub candidates: CandidateStats,
    /// Exhaustive mean latency over indexed mean latency.
    pub speedup: f64,
    /// Mean `|hits(retrieve) ∩ hits(exhaustive)| / top_k`.
    pub recall_at_k: f64,
    pub fallback_scans: usize,
    pub consolidation: Option<ConsolidationBench>,
}

fn measure_one(engine: &Engine, query: &BenchQuery, top_k: usize) -> QueryOutcome {
    let started = Instant::now();
    let plan = engine.plan(&query.text, &query.user, BENCH_NOW_MS).unwrap();
    let indexed = engine.retrieve(plan, top_k).unwrap();
    let indexed_us = started.elapsed().as_micros() as u64;

    let started = Instant::now();
    let exhaustive = engine
        .retrieve_exhaustive(&query.text, &query.user, top_k)
        .unwrap();
    let exhaustive_us = started.elapsed().as_micros() as u64;

    let exhaustive_ids: std::collections::BTreeSet<EpisodeId> =
        exhaustive.hits.iter().map(|(id, _)| *id).collect();
    let overlap = indexed
        .hits
        .iter()
        .filter(|(id, _)| exhaustive_ids.contains(id))
        .count();
    QueryOutcome {
        indexed_us,
        exhaustive_us,
        candidates: indexed.candidates_examined,
        recall_vs_exhaustive: overlap as f64 / top_k.max(1) as f64,
        target_hit: indexed.hits.iter().any(|(id, _)| *id == query.target),
        used_fallback: indexed.used_fallback,
    }
}

/// Measure every query; outcomes are returned in query order regardless of
/// the worker count.
pub fn measure_queries(setup: &BenchSetup) -> Vec<QueryOutcome> {
    let workers = setup.options.workers.max(1);
    if workers == 1 || setup.queries.len() < 2 {
        return setup
            .queries
            .iter()
            .map(|q| measure_one(&setup.engine, q, setup.options.top_k))
            .collect();
    }
    let chunk_size = setup.queries.len().div_ceil(workers);
    let mut outcomes: Vec<Option<QueryOutcome>> = vec![None; setup.queries.len()];
    std::thread::scope(|scope| {
        let engine = &setup.engine;
        let top_k = setup.options.top_k;
        let mut handles = Vec::new();
        for (chunk_index, chunk) in setup.queries.chunks(chunk_size).enumerate() {
            handles.push((
                chunk_index * chunk_size,
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|q| measure_one(engine, q, top_k))
                        .collect::<Vec<_>>()
                }),
            ));
        }
        for (offset, handle) in handles {
            for (i, outcome) in handle.join().unwrap().into_iter().enumerate() {
                outcomes[offset + i] = Some(outcome);
            }
        }
    });
    outcomes.into_iter().map(|o| o.unwrap()).collect()
}

fn summarize(setup: &BenchSetup, outcomes: &[QueryOutcome]) -> BenchReport {
    let indexed_samples: Vec<u64> = outcomes.iter().map(|o| o.indexed_us).collect();
    let exhaustive_samples: Vec<u64> = outcomes.iter().map(|o| o.exhaustive_us).collect();
    let candidate_samples: Vec<usize> = outcomes.iter().map(|o| o.candidates).collect();
    let indexed = LatencyStats::of(&indexed_samples);
    let exhaustive = LatencyStats::of(&exhaustive_samples);
    let recall_at_k = if outcomes.is_empty() {
        0.0
    } else {
        outcomes.iter().map(|o| o.recall_vs_exhaustive).sum::<f64>() / outcomes.len() as f64
    };
    BenchReport {
        episodes: setup.engine.len(),
        tags: setup.engine.dag().len(),
        users: setup.options.users,
        queries: outcomes.len(),
        seed: setup.options.seed,
        top_k: setup.options.top_k,
        speedup: if indexed.mean_us > 0.0 {
            exhaustive.mean_us / indexed.mean_us
        } else {
            0.0
        },
        indexed,
        exhaustive,
        candidates: CandidateStats::of(&candidate_samples),
        recall_at_k,
        fallback_scans: setup.engine.fallback_scans(),
        consolidation: None,
    }
}

/// Run the benchmark workload.
pub fn run_bench(setup: &BenchSetup) -> BenchReport {
    let outcomes = measure_queries(setup);
    summarize(setup, &outcomes)
}

/// Run the workload, consolidate, run it again; the report carries the
/// before/after block.
pub fn run_bench_with_consolidation(setup: &mut BenchSetup) -> BenchReport {
    let before_outcomes = measure_queries(setup);
    let mut report = summarize(setup, &before_outcomes);
    let consolidation = setup.engine.consolidate();
    let after_outcomes = measure_queries(setup);
    let after_samples: Vec<u64> = after_outcomes.iter().map(|o| o.indexed_us).collect();
    report.consolidation = Some(ConsolidationBench {
        fragmentation_before: consolidation.fragmentation_before,
        fragmentation_after: consolidation.fragmentation_after,
        moved: consolidation.moved,
        indexed_before: report.indexed,
        indexed_after: LatencyStats::of(&after_samples),
    });
    report
}

// --- temporal-hint ablation -------------------------------------------------

/// Half-width of the "correct" interval injected around the target episode.
pub const HINT_WINDOW_MS: i64 = 3 * 86_400_000;

#[derive(Debug, Clone, Serialize)]
pub struct AblationOptions {
    pub hint_ratios: Vec<f64>,
    /// Inject only the distractor interval (the correct one is withheld).
    pub distractor_only: bool,
}

impl Default for AblationOptions {
    fn default() -> Self {
        Self {
            hint_ratios: vec![0.0, 0.5, 1.0],
            distractor_only: false,
        }
    }
}

/// Ablation table row for one hint ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub hint_ratio: f64,
    pub mean_candidates: f64,
    pub mean_latency_us: f64,
    /// Fraction of queries whose generating episode was retrieved.
    pub evidence_recall: f64,
    pub recall_vs_exhaustive: f64,
}

/// The two intervals injected for a hinted query: one containing the
/// target's timestamp and one deterministic distractor elsewhere.
pub fn hint_intervals(query_index: usize, target_ts: i64, seed: u64) -> (TimeInterval, TimeInterval) {
    let correct = TimeInterval::new(target_ts - HINT_WINDOW_MS, target_ts + HINT_WINDOW_MS)
        .expect("window is positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (query_index as u64).wrapping_mul(0x9e37_79b9));
    let mut start = CORPUS_START_MS + rng.gen_range(0..CORPUS_SPAN_MS);
    if (start - target_ts).abs() < 2 * HINT_WINDOW_MS {
        // keep the distractor disjoint from the correct window
        start = CORPUS_START_MS
            + (start - CORPUS_START_MS + CORPUS_SPAN_MS / 2) % CORPUS_SPAN_MS;
    }
    let distractor = TimeInterval::new(start, start + 2 * HINT_WINDOW_MS).expect("positive window");
    (correct, distractor)
}

/// Run the benchmark queries at each hint ratio. At ratio `r`, the first
/// `round(r * queries)` queries carry explicit intervals (correct +
/// distractor, merged downstream by the engine); ratio 0 is the plain
/// benchmark.
pub fn run_ablation(setup: &BenchSetup, options: &AblationOptions) -> Vec<AblationRow> {
    let top_k = setup.options.top_k;
    // exhaustive hit sets are hint-independent; compute once
    let exhaustive_hits: Vec<std::collections::BTreeSet<EpisodeId>> = setup
        .queries
        .iter()
        .map(|q| {
            setup
                .engine
                .retrieve_exhaustive(&q.text, &q.user, top_k)
                .unwrap()
                .hits
                .into_iter()
                .map(|(id, _)| id)
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    for &ratio in &options.hint_ratios {
        let hinted_count = (ratio * setup.queries.len() as f64).round() as usize;
        let mut candidates_sum = 0usize;
        let mut latency_sum = 0u64;
        let mut evidence_hits = 0usize;
        let mut recall_sum = 0.0f64;
        for (qi, query) in setup.queries.iter().enumerate() {
            let started = Instant::now();
            let mut plan = setup
                .engine
                .plan(&query.text, &query.user, BENCH_NOW_MS)
                .unwrap();
            if qi < hinted_count {
                let (correct, distractor) =
                    hint_intervals(qi, query.target_ts, setup.options.seed);
                plan.intervals = if options.distractor_only {
                    vec![distractor]
                } else {
                    vec![correct, distractor]
                };
            }
            let result = setup.engine.retrieve(plan, top_k).unwrap();
            latency_sum += started.elapsed().as_micros() as u64;
            candidates_sum += result.candidates_examined;
            if result.hits.iter().any(|(id, _)| *id == query.target) {
                evidence_hits += 1;
            }
            let overlap = result
                .hits
                .iter()
                .filter(|(id, _)| exhaustive_hits[qi].contains(id))
                .count();
            recall_sum += overlap as f64 / top_k.max(1) as f64;
        }
        let n = setup.queries.len().max(1) as f64;
        rows.push(AblationRow {
            hint_ratio: ratio,
            mean_candidates: candidates_sum as f64 / n,
            mean_latency_us: latency_sum as f64 / n,
            evidence_recall: evidence_hits as f64 / n,
            recall_vs_exhaustive: recall_sum / n,
        });
    }
    rows
}
