//! Acceptance suite: one test per criterion, one printed verdict line
//! each (run with `--nocapture` to see them).
//!
//! Timing-sensitive criteria share a global lock so they never measure
//! while another acceptance test is burning CPU. For the cleanest numbers
//! run `cargo test -p swiftmem --test acceptance -- --test-threads=1
//! --nocapture`.

use std::collections::BTreeSet;
use std::sync::{Mutex, MutexGuard, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swiftmem::bench::{
    build_corpus, hint_intervals, measure_queries, run_ablation, AblationOptions, BenchOptions,
    BenchSetup, BENCH_NOW_MS,
};
use swiftmem::snapshot::{load_snapshot, save_snapshot, SnapshotError};
use swiftmem_core::{
    cosine, merge_intervals, Engine, EpisodeId, OfflineEmbedder, OfflineTagger, QueryPlan,
    RelationOutcome, StoreConfig, TagDag, TagId, Tagger, TemporalIndex, TimeInterval,
};

/// Serializes every acceptance test; timing-sensitive ones must not
/// overlap with CPU-heavy ones.
fn lock() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Shared large benchmark corpus (A3, A4, A5, A6): N=100k, 500 tags,
/// k=5, depth=2, one user, fixed seed.
fn large_corpus() -> MutexGuard<'static, BenchSetup> {
    static CORPUS: OnceLock<Mutex<BenchSetup>> = OnceLock::new();
    CORPUS
        .get_or_init(|| Mutex::new(build_corpus(&large_options(100_000))))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn large_options(episodes: usize) -> BenchOptions {
    BenchOptions {
        episodes,
        tags: 500,
        users: 1,
        queries: 250,
        seed: 42,
        top_k: 10,
        tags_per_query: 5,
        max_expansion_depth: 2,
        dimension: 384,
        workers: 1,
    }
}

fn mean(samples: impl Iterator<Item = u64>) -> f64 {
    let v: Vec<u64> = samples.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<u64>() as f64 / v.len() as f64
}

// ---------------------------------------------------------------------------
// randomized corpora for A1/A9: real text through the offline providers
// ---------------------------------------------------------------------------

const WORDS: &[&str] = &[
    "dog", "walking", "marina", "bowling", "camping", "yosemite", "pottery", "studio", "python",
    "programming", "machine", "learning", "career", "mentor", "garden", "harbor", "piano",
    "recital", "sourdough", "bakery", "ferry", "seagull", "orchid", "greenhouse", "chess",
    "sailing", "tomato", "coffee", "autumn", "maple",
];

const DATE_PHRASES: &[&str] = &[
    "on March 16, 2022",
    "in 2022",
    "between May 2023 and June 2023",
    "in May 2023",
    "on 2023-11-02",
    "",
    "",
    "",
];

fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..9);
    (0..n)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Build one randomized store through the full ingestion path (offline
/// embedder + offline tagger), with timestamps spanning 2021-2024.
fn random_store(rng: &mut ChaCha8Rng) -> Engine {
    let dimension = *[16usize, 32, 64].iter().nth(rng.gen_range(0..3)).unwrap();
    let config = StoreConfig {
        dimension,
        tags_per_query: rng.gen_range(1..=6),
        max_expansion_depth: rng.gen_range(0..=3),
        ..StoreConfig::default()
    };
    let mut engine = Engine::new(config).unwrap();
    let users = ["ana", "bob", "cho"];
    let episodes = rng.gen_range(5..80);
    // 2021-01-01 .. 2024-01-01
    let (t0, t1) = (1_609_459_200_000i64, 1_704_067_200_000i64);
    for _ in 0..episodes {
        let content = random_sentence(rng);
        let user = users[rng.gen_range(0..users.len())];
        let ts = rng.gen_range(t0..t1);
        let proposal = OfflineTagger.generate_tags(&content).unwrap();
        engine.ingest(user, &content, ts, &proposal).unwrap();
    }
    engine
}

fn random_query(rng: &mut ChaCha8Rng) -> (String, String) {
    let mut text = random_sentence(rng);
    let date = DATE_PHRASES[rng.gen_range(0..DATE_PHRASES.len())];
    if !date.is_empty() {
        text.push(' ');
        text.push_str(date);
    }
    let user = ["ana", "bob", "cho", "ghost"][rng.gen_range(0..4)];
    (text, user.to_string())
}

// ---------------------------------------------------------------------------
// the brute-force retrieval oracle (independent of the engine's query path)
// ---------------------------------------------------------------------------

fn oracle_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| *x as f64 * *x as f64).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| *x as f64 * *x as f64).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Top-k tags by full sort over every tag embedding.
fn oracle_route(engine: &Engine, query_embedding: &[f32], k: usize) -> Vec<TagId> {
    let mut scored: Vec<(TagId, f64)> = engine
        .dag()
        .iter()
        .filter(|(_, node)| node.embedding.iter().any(|v| *v != 0.0))
        .map(|(tag, node)| (tag.clone(), oracle_cosine(query_embedding, &node.embedding)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored.into_iter().map(|(tag, _)| tag).collect()
}

/// Child-closure up to `depth` by repeated level expansion.
fn oracle_expand(engine: &Engine, seeds: &[TagId], depth: usize) -> BTreeSet<TagId> {
    let mut reached: BTreeSet<TagId> = seeds.iter().cloned().collect();
    let mut frontier: Vec<TagId> = seeds.to_vec();
    for _ in 0..depth {
        let mut next = Vec::new();
        for tag in frontier {
            if let Some(node) = engine.dag().get(&tag) {
                for child in &node.children {
                    if reached.insert(child.clone()) {
                        next.push(child.clone());
                    }
                }
            }
        }
        frontier = next;
    }
    reached
}

/// Linear time-filter ∘ tag-membership filter ∘ exact cosine full sort,
/// mirroring the documented candidate rule (absent dimensions do not
/// constrain; when both are absent the user's whole set is scanned).
fn oracle_retrieve(engine: &Engine, plan: &QueryPlan, top_k: usize) -> Vec<(EpisodeId, f64)> {
    let seeds = oracle_route(engine, &plan.embedding, engine.config().tags_per_query);
    let expanded = oracle_expand(engine, &seeds, engine.config().max_expansion_depth);
    let tag_dim = !seeds.is_empty();
    let time_dim = !plan.intervals.is_empty();
    let mut scored: Vec<(EpisodeId, f64)> = engine
        .episodes()
        .filter(|e| e.user == plan.user)
        .filter(|e| !time_dim || plan.intervals.iter().any(|iv| iv.contains(e.timestamp)))
        .filter(|e| !tag_dim || e.tags.iter().any(|t| expanded.contains(t)))
        .map(|e| (e.id, oracle_cosine(&plan.embedding, &e.embedding)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(top_k);
    scored
}

fn assert_hits_match(
    context: &str,
    got: &[(EpisodeId, f64)],
    expected: &[(EpisodeId, f64)],
) {
    let got_ids: Vec<u64> = got.iter().map(|(id, _)| id.0).collect();
    let expected_ids: Vec<u64> = expected.iter().map(|(id, _)| id.0).collect();
    assert_eq!(got_ids, expected_ids, "{context}: id sequences differ");
    for ((_, gs), (_, es)) in got.iter().zip(expected) {
        assert!((gs - es).abs() <= 1e-9, "{context}: scores {gs} vs {es}");
    }
}

/// A1: retrieve equals the brute-force pipeline oracle over >= 1,000
/// randomized (corpus, query) cases.
#[test]
fn a1_retrieval_matches_brute_force_oracle() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA1);
    let mut cases = 0usize;
    for corpus_index in 0..100 {
        let engine = random_store(&mut rng);
        for query_index in 0..10 {
            let (text, user) = random_query(&mut rng);
            let top_k = rng.gen_range(1..15);
            let plan = engine.plan(&text, &user, BENCH_NOW_MS).unwrap();
            let expected = oracle_retrieve(&engine, &plan, top_k);
            let result = engine.retrieve(plan, top_k).unwrap();
            assert_hits_match(
                &format!("corpus {corpus_index} query {query_index} ({text})"),
                &result.hits,
                &expected,
            );
            cases += 1;
        }
    }
    assert!(cases >= 1000);
    println!("A1 PASS retrieval == oracle on {cases} randomized cases (ids exact, scores <= 1e-9)");
}

/// A2: range and multi-range queries over a 10k-episode store equal
/// brute-force filtering; interval merging preserves point membership
/// over 10k random interval lists.
#[test]
fn a2_temporal_queries_match_brute_force() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let users = ["u0", "u1", "u2"];
    let mut index = TemporalIndex::new();
    let mut all: Vec<(String, i64, EpisodeId)> = Vec::new();
    for i in 0..10_000u64 {
        let user = users[rng.gen_range(0..users.len())];
        let ts = rng.gen_range(0..5_000_000i64);
        index.insert(user, ts, EpisodeId(i)).unwrap();
        all.push((user.to_string(), ts, EpisodeId(i)));
    }
    let brute = |user: &str, windows: &[TimeInterval]| -> Vec<EpisodeId> {
        let mut hits: Vec<(i64, EpisodeId)> = all
            .iter()
            .filter(|(u, ts, _)| u == user && windows.iter().any(|w| w.contains(*ts)))
            .map(|(_, ts, id)| (*ts, *id))
            .collect();
        hits.sort();
        hits.into_iter().map(|(_, id)| id).collect()
    };
    for _ in 0..500 {
        let user = users[rng.gen_range(0..users.len())];
        let start = rng.gen_range(0..5_000_000i64);
        let window = TimeInterval::new(start, start + rng.gen_range(1..500_000)).unwrap();
        assert_eq!(index.range_query(user, window), brute(user, &[window]));
    }
    for _ in 0..500 {
        let user = users[rng.gen_range(0..users.len())];
        let windows: Vec<TimeInterval> = (0..rng.gen_range(1..6))
            .map(|_| {
                let start = rng.gen_range(0..5_000_000i64);
                TimeInterval::new(start, start + rng.gen_range(1..800_000)).unwrap()
            })
            .collect();
        assert_eq!(index.multi_range_query(user, &windows), brute(user, &windows));
    }
    // merge: point-membership equivalence over 10k random lists
    for _ in 0..10_000 {
        let windows: Vec<TimeInterval> = (0..rng.gen_range(0..8))
            .map(|_| {
                let start = rng.gen_range(0..900i64);
                TimeInterval::new(start, start + rng.gen_range(1..120)).unwrap()
            })
            .collect();
        let merged = merge_intervals(&windows);
        for pair in merged.windows(2) {
            assert!(pair[0].end < pair[1].start, "not minimal: {merged:?}");
        }
        for t in 0..1050i64 {
            assert_eq!(
                windows.iter().any(|w| w.contains(t)),
                merged.iter().any(|w| w.contains(t)),
                "point {t} changed membership: {windows:?} -> {merged:?}"
            );
        }
    }
    println!("A2 PASS 1000 range/multi-range queries == brute force; merge point-safe on 10k lists");
}

/// A3: on the seeded synthetic corpus (N=100k, 500 tags, k=5, depth 2),
/// indexed search is at least 10x faster than exhaustive on average and
/// examines at most 20% of the store per query on average.
#[test]
fn a3_indexed_search_is_sublinear_at_100k() {
    let _guard = lock();
    let setup = large_corpus();
    let outcomes = measure_queries(&setup);
    let indexed_mean = mean(outcomes.iter().map(|o| o.indexed_us));
    let exhaustive_mean = mean(outcomes.iter().map(|o| o.exhaustive_us));
    let candidate_mean =
        outcomes.iter().map(|o| o.candidates).sum::<usize>() as f64 / outcomes.len() as f64;
    let n = setup.engine.len() as f64;
    let speedup = exhaustive_mean / indexed_mean;
    let fraction = candidate_mean / n;
    assert!(
        speedup >= 10.0,
        "A3 FAIL speedup {speedup:.1}x < 10x (indexed {indexed_mean:.0}us, exhaustive {exhaustive_mean:.0}us)"
    );
    assert!(
        fraction <= 0.20,
        "A3 FAIL candidates {candidate_mean:.0} = {:.1}% of N > 20%",
        fraction * 100.0
    );
    println!(
        "A3 PASS speedup {speedup:.1}x (>=10x), candidates {:.2}% of N (<=20%) [indexed {indexed_mean:.0}us exhaustive {exhaustive_mean:.0}us]",
        fraction * 100.0
    );
}

/// A4: from N=10k to N=100k, indexed mean latency grows at most 3x while
/// exhaustive grows at least 8x.
#[test]
fn a4_latency_scaling_is_flat_vs_linear() {
    let _guard = lock();
    let small_setup = build_corpus(&large_options(10_000));
    let small = measure_queries(&small_setup);
    drop(small_setup);
    let setup = large_corpus();
    let large = measure_queries(&setup);

    let small_indexed = mean(small.iter().map(|o| o.indexed_us));
    let small_exhaustive = mean(small.iter().map(|o| o.exhaustive_us));
    let large_indexed = mean(large.iter().map(|o| o.indexed_us));
    let large_exhaustive = mean(large.iter().map(|o| o.exhaustive_us));

    let indexed_growth = large_indexed / small_indexed;
    let exhaustive_growth = large_exhaustive / small_exhaustive;
    assert!(
        indexed_growth <= 3.0,
        "A4 FAIL indexed grew {indexed_growth:.2}x > 3x ({small_indexed:.0}us -> {large_indexed:.0}us)"
    );
    assert!(
        exhaustive_growth >= 8.0,
        "A4 FAIL exhaustive grew only {exhaustive_growth:.2}x < 8x ({small_exhaustive:.0}us -> {large_exhaustive:.0}us)"
    );
    println!(
        "A4 PASS indexed x{indexed_growth:.2} (<=3) vs exhaustive x{exhaustive_growth:.2} (>=8) from 10k to 100k"
    );
}

/// A5: consolidation preserves every hit list exactly, strictly decreases
/// fragmentation, and does not regress mean search latency beyond 1.1x.
#[test]
fn a5_consolidation_preserves_results_and_defragments() {
    let _guard = lock();
    let mut setup = large_corpus();
    let top_k = setup.options.top_k;

    // hits and indexed latency in one pass; exhaustive is irrelevant here
    let sweep = |setup: &BenchSetup| -> (Vec<Vec<(EpisodeId, f64)>>, Vec<u64>) {
        let mut hits = Vec::new();
        let mut latencies = Vec::new();
        for q in &setup.queries {
            let started = std::time::Instant::now();
            let plan = setup.engine.plan(&q.text, &q.user, BENCH_NOW_MS).unwrap();
            let result = setup.engine.retrieve(plan, top_k).unwrap();
            latencies.push(started.elapsed().as_micros() as u64);
            hits.push(result.hits);
        }
        (hits, latencies)
    };

    let (before_hits, before_latencies) = sweep(&setup);
    let report = setup.engine.consolidate();
    let (after_hits, after_latencies) = sweep(&setup);

    for (i, (before, after)) in before_hits.iter().zip(&after_hits).enumerate() {
        assert_hits_match(&format!("query {i} pre/post consolidation"), after, before);
    }
    assert!(
        report.fragmentation_after < report.fragmentation_before,
        "A5 FAIL fragmentation did not strictly decrease: {} -> {}",
        report.fragmentation_before,
        report.fragmentation_after
    );
    let before_mean = mean(before_latencies.iter().copied());
    let after_mean = mean(after_latencies.iter().copied());
    assert!(
        after_mean <= before_mean * 1.1,
        "A5 FAIL post-consolidation latency {after_mean:.0}us > 1.1x pre {before_mean:.0}us"
    );
    println!(
        "A5 PASS hits identical; fragmentation {:.3} -> {:.3}; latency {before_mean:.0}us -> {after_mean:.0}us (<=1.1x)",
        report.fragmentation_before, report.fragmentation_after
    );
}

/// A6: with hint ratios 0, 0.5, 1.0, mean candidates and mean latency are
/// non-increasing and evidence recall is non-decreasing.
#[test]
fn a6_temporal_hints_shrink_work_and_help_recall() {
    let _guard = lock();
    let setup = large_corpus();
    let rows = run_ablation(
        &setup,
        &AblationOptions {
            hint_ratios: vec![0.0, 0.5, 1.0],
            distractor_only: false,
        },
    );
    for pair in rows.windows(2) {
        assert!(
            pair[1].mean_candidates <= pair[0].mean_candidates,
            "A6 FAIL candidates rose with hint ratio: {rows:?}"
        );
        assert!(
            pair[1].mean_latency_us <= pair[0].mean_latency_us,
            "A6 FAIL latency rose with hint ratio: {rows:?}"
        );
        assert!(
            pair[1].evidence_recall >= pair[0].evidence_recall,
            "A6 FAIL recall fell with hint ratio: {rows:?}"
        );
    }
    println!(
        "A6 PASS candidates {:.0}/{:.0}/{:.0}, latency {:.0}/{:.0}/{:.0}us, recall {:.3}/{:.3}/{:.3}",
        rows[0].mean_candidates,
        rows[1].mean_candidates,
        rows[2].mean_candidates,
        rows[0].mean_latency_us,
        rows[1].mean_latency_us,
        rows[2].mean_latency_us,
        rows[0].evidence_recall,
        rows[1].evidence_recall,
        rows[2].evidence_recall
    );
}

/// A7: 10k randomized DAG mutations never create a cycle (topological
/// order checked after every accepted mutation) and reciprocity always
/// holds.
#[test]
fn a7_dag_stays_acyclic_under_random_mutation() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA7);
    let mut dag = TagDag::new(4);
    let mut names: Vec<TagId> = Vec::new();
    let mut edges: Vec<(TagId, TagId)> = Vec::new();
    let mut episode = 0u64;
    let mut accepted_ops = 0usize;

    let topo_exists = |names: &[TagId], edges: &[(TagId, TagId)]| -> bool {
        use std::collections::BTreeMap;
        let mut indegree: BTreeMap<&TagId, usize> = names.iter().map(|n| (n, 0)).collect();
        let mut adjacency: BTreeMap<&TagId, Vec<&TagId>> = BTreeMap::new();
        for (p, c) in edges {
            *indegree.get_mut(c).unwrap() += 1;
            adjacency.entry(p).or_default().push(c);
        }
        let mut queue: Vec<&TagId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(n, _)| *n)
            .collect();
        let mut emitted = 0usize;
        while let Some(n) = queue.pop() {
            emitted += 1;
            for c in adjacency.get(n).into_iter().flatten() {
                let d = indegree.get_mut(c).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push(c);
                }
            }
        }
        emitted == names.len()
    };

    for op in 0..10_000 {
        match rng.gen_range(0..3) {
            0 => {
                let tag = TagId::parse(&format!("t{}", rng.gen_range(0..400))).unwrap();
                if !dag.contains(&tag) {
                    names.push(tag.clone());
                }
                dag.upsert_tag(tag, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
                accepted_ops += 1;
            }
            1 if names.len() >= 2 => {
                let a = names[rng.gen_range(0..names.len())].clone();
                let b = names[rng.gen_range(0..names.len())].clone();
                if a == b {
                    continue;
                }
                if dag.add_relation(&a, &b).unwrap() == RelationOutcome::Accepted {
                    edges.push((a, b));
                    accepted_ops += 1;
                    assert!(
                        topo_exists(&names, &edges),
                        "A7 FAIL cycle after op {op} ({} edges)",
                        edges.len()
                    );
                }
            }
            _ if !names.is_empty() => {
                let tag = &names[rng.gen_range(0..names.len())];
                dag.attach_episode(tag, EpisodeId(episode)).unwrap();
                episode += 1;
                accepted_ops += 1;
            }
            _ => {}
        }
        assert!(dag.check_reciprocity(), "A7 FAIL reciprocity broken after op {op}");
    }
    assert!(topo_exists(&names, &edges));
    println!(
        "A7 PASS {accepted_ops} accepted mutations, {} edges, acyclic + reciprocal throughout",
        dag.edge_count()
    );
}

/// A8: route_tags equals the full-sort top-k oracle over 500 random tag
/// sets x 100 queries.
#[test]
fn a8_router_equals_full_sort_oracle() {
    let _guard = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA8);
    let dimension = 8;
    let mut checked = 0usize;
    for set_index in 0..500 {
        let mut dag = TagDag::new(dimension);
        let tag_count = rng.gen_range(1..60);
        for t in 0..tag_count {
            let embedding: Vec<f32> =
                (0..dimension).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            dag.upsert_tag(TagId::parse(&format!("t{t}")).unwrap(), embedding)
                .unwrap();
        }
        let queries = if set_index < 5 { 100 } else { 1 };
        for _ in 0..queries {
            let query: Vec<f32> = (0..dimension).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let k = rng.gen_range(1..=8);
            let routed = swiftmem_core::query::route_tags(&query, &dag, k);

            let mut oracle: Vec<(TagId, f64)> = dag
                .iter()
                .map(|(tag, node)| (tag.clone(), oracle_cosine(&query, &node.embedding)))
                .collect();
            oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            oracle.truncate(k);

            assert_eq!(routed.len(), oracle.len());
            for (r, o) in routed.iter().zip(&oracle) {
                assert_eq!(r.0, o.0, "A8 FAIL tag order differs");
                assert!((r.1 - o.1).abs() < 1e-12);
            }
            checked += 1;
        }
    }
    println!("A8 PASS router == full-sort oracle on {checked} routings over 500 tag sets");
}

/// A9: snapshot -> load -> re-run the A1-style query set with identical
/// results; corrupt files report CorruptSnapshot with a line number.
#[test]
fn a9_persistence_round_trip_preserves_query_results() {
    let _guard = lock();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);
    for corpus_index in 0..10 {
        let engine = random_store(&mut rng);
        let queries: Vec<(String, String)> = (0..20).map(|_| random_query(&mut rng)).collect();
        let path = dir.path().join(format!("store{corpus_index}.jsonl"));
        save_snapshot(&engine, &path).unwrap();
        let dimension = engine.config().dimension;
        let loaded = load_snapshot(
            &path,
            engine.config().clone(),
            Box::new(OfflineEmbedder::new(dimension)),
        )
        .unwrap();
        for (text, user) in &queries {
            let expected = engine
                .retrieve(engine.plan(text, user, BENCH_NOW_MS).unwrap(), 10)
                .unwrap();
            let got = loaded
                .retrieve(loaded.plan(text, user, BENCH_NOW_MS).unwrap(), 10)
                .unwrap();
            assert_hits_match(&format!("reloaded corpus {corpus_index}: {text}"), &got.hits, &expected.hits);
            assert_eq!(got.candidates_examined, expected.candidates_examined);
        }
    }

    // corruption cases carry line numbers
    let engine = random_store(&mut rng);
    let path = dir.path().join("corrupt.jsonl");
    save_snapshot(&engine, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();

    let dimension = engine.config().dimension;
    let truncated = lines[..lines.len() - 1].join("\n") + "\n";
    std::fs::write(&path, truncated).unwrap();
    match load_snapshot(&path, StoreConfig::default(), Box::new(OfflineEmbedder::new(dimension))) {
        Err(SnapshotError::Corrupt { line, .. }) => assert!(line >= 1),
        other => panic!("A9 FAIL truncated file not reported corrupt: {other:?}"),
    }

    let mut garbled: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    garbled[1] = "$$$ not json".to_string();
    std::fs::write(&path, garbled.join("\n") + "\n").unwrap();
    match load_snapshot(&path, StoreConfig::default(), Box::new(OfflineEmbedder::new(dimension))) {
        Err(SnapshotError::Corrupt { line, .. }) => assert_eq!(line, 2),
        other => panic!("A9 FAIL garbage line not reported corrupt: {other:?}"),
    }

    println!("A9 PASS 200 queries identical after snapshot round trip; corrupt files report line numbers");
}
