//! `swiftmem` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (missing store,
//! corrupt snapshot, unreadable input). Every subcommand accepts `--json`
//! for machine-readable output.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use swiftmem_core::{
    Embedder, Engine, OfflineEmbedder, OfflineTagger, StoreConfig, Tagger, TimeInterval,
};

use crate::bench::{
    build_corpus, run_ablation, run_bench, run_bench_with_consolidation, AblationOptions,
    BenchOptions,
};
use crate::clock::StdClock;
use crate::ingest::ingest_file;
use crate::remote::{HttpEmbedder, HttpTagger};
use crate::snapshot::{load_snapshot, save_snapshot, snapshot_dimension, SnapshotError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "swiftmem",
    about = "Query-aware conversational memory: temporal + tag + embedding indexes",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// Key = value config file (TOML); flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a JSONL conversation file into a store snapshot.
    Ingest {
        #[command(flatten)]
        common: CommonOpts,
        /// Input conversations (JSONL).
        #[arg(long)]
        input: PathBuf,
        /// Store snapshot to create or extend.
        #[arg(long)]
        store: PathBuf,
        /// Tagging provider.
        #[arg(long, default_value = "offline", value_parser = ["offline", "remote"])]
        tagger: String,
        /// Embedding provider.
        #[arg(long, default_value = "offline", value_parser = ["offline", "remote"])]
        embedder: String,
        /// Model name passed to remote providers.
        #[arg(long, default_value = "default-model")]
        model: String,
    },
    /// Query a store.
    Query {
        #[command(flatten)]
        common: CommonOpts,
        /// Store snapshot to load.
        #[arg(long)]
        store: PathBuf,
        /// The query text.
        query: String,
        /// User whose episodes are searched.
        #[arg(long)]
        user: String,
        /// Number of hits to return.
        #[arg(long)]
        top_k: Option<usize>,
        /// Seed tags the router selects.
        #[arg(long)]
        k: Option<usize>,
        /// Tag expansion depth.
        #[arg(long)]
        depth: Option<usize>,
        /// Restrict to timestamps >= this bound (ISO date or epoch ms),
        /// overriding parsed intervals.
        #[arg(long)]
        since: Option<String>,
        /// Restrict to timestamps < this bound (ISO date or epoch ms),
        /// overriding parsed intervals.
        #[arg(long)]
        until: Option<String>,
        /// Run the exhaustive baseline instead of indexed retrieval.
        #[arg(long)]
        exhaustive: bool,
        /// Reference time for relative dates (epoch ms; defaults to now).
        #[arg(long)]
        now: Option<i64>,
        #[arg(long, default_value = "offline", value_parser = ["offline", "remote"])]
        embedder: String,
        #[arg(long, default_value = "default-model")]
        model: String,
    },
    /// Cluster tags and re-layout the embedding arena.
    Consolidate {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        store: PathBuf,
        /// Consolidate even when the thresholds say it will not pay off.
        #[arg(long)]
        force: bool,
    },
    /// Run the synthetic benchmark workload.
    Bench {
        #[command(flatten)]
        common: CommonOpts,
        /// Corpus size.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Number of topic tags.
        #[arg(long, default_value_t = 100)]
        tags: usize,
        #[arg(long, default_value_t = 1)]
        users: usize,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Router width (seed tags per query).
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 384)]
        dimension: usize,
        /// Query worker threads (1 keeps timing stats deterministic).
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Also measure a consolidation pass (before/after block).
        #[arg(long)]
        consolidate: bool,
    },
    /// Temporal-hint ablation over the synthetic workload.
    AblateTemporal {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        tags: usize,
        #[arg(long, default_value_t = 1)]
        users: usize,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 384)]
        dimension: usize,
        /// Comma-separated hint ratios in [0, 1].
        #[arg(long, default_value = "0,0.5,1.0", value_delimiter = ',')]
        hint_ratio: Vec<f64>,
        /// Inject only the distractor interval.
        #[arg(long)]
        distractor_only: bool,
    },
    /// Print store statistics.
    Stats {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        store: PathBuf,
    },
    /// Emit the tag DAG as Graphviz DOT.
    DumpDag {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        store: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<SnapshotError> for CliError {
    fn from(e: SnapshotError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<swiftmem_core::CoreError> for CliError {
    fn from(e: swiftmem_core::CoreError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<StoreConfig, CliError> {
    let Some(path) = path else {
        return Ok(StoreConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    let config: StoreConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn make_embedder(mode: &str, model: &str, dimension: usize) -> Result<Box<dyn Embedder>, CliError> {
    match mode {
        "remote" => Ok(Box::new(
            HttpEmbedder::from_env(model, dimension).map_err(|e| CliError::Usage(e.to_string()))?,
        )),
        _ => Ok(Box::new(OfflineEmbedder::new(dimension))),
    }
}

fn make_tagger(mode: &str, model: &str) -> Result<Box<dyn Tagger>, CliError> {
    match mode {
        "remote" => Ok(Box::new(
            HttpTagger::from_env(model).map_err(|e| CliError::Usage(e.to_string()))?,
        )),
        _ => Ok(Box::new(OfflineTagger)),
    }
}

/// Load a store, building the embedder at the dimension the snapshot
/// header declares.
fn open_store(
    path: &Path,
    config: StoreConfig,
    embedder_mode: &str,
    model: &str,
) -> Result<Engine, CliError> {
    if !path.exists() {
        return Err(CliError::Data(format!("store {} does not exist", path.display())));
    }
    let dimension = snapshot_dimension(path)?;
    let embedder = make_embedder(embedder_mode, model, dimension)?;
    let mut engine = load_snapshot(path, config, embedder)?;
    engine.set_clock(Box::new(StdClock::new()));
    Ok(engine)
}

/// ISO date (start of that UTC day) or raw epoch milliseconds.
fn parse_time_bound(raw: &str) -> Result<i64, CliError> {
    if let Ok(ms) = raw.parse::<i64>() {
        return Ok(ms);
    }
    let date = NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|_| CliError::Usage(format!("cannot parse time bound `{raw}`")))?;
    Ok(date
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp_millis())
}

/// Print without panicking when stdout goes away (e.g. piped to head).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn print_json<T: Serialize>(value: &T) {
    out!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Ingest {
            common,
            input,
            store,
            tagger,
            embedder,
            model,
        } => {
            let config = load_config(common.config.as_deref())?;
            let embedder = make_embedder(&embedder, &model, config.dimension)?;
            let tagger = make_tagger(&tagger, &model)?;
            let mut engine = if store.exists() {
                load_snapshot(&store, config, embedder)?
            } else {
                Engine::with_embedder(config, embedder).map_err(|e| CliError::Usage(e.to_string()))?
            };
            engine.set_clock(Box::new(StdClock::new()));
            if !input.exists() {
                return Err(CliError::Data(format!("input {} does not exist", input.display())));
            }
            let summary = ingest_file(&mut engine, &input, tagger.as_ref())?;
            save_snapshot(&engine, &store)?;
            if common.json {
                print_json(&summary);
            } else {
                out!(
                    "ingested {} episodes from {} conversations into {}",
                    summary.episodes,
                    summary.conversations,
                    store.display()
                );
                out!(
                    "tags: {}  relations: {}  rejected cycles: {}  tagger fallbacks: {}",
                    summary.tags, summary.edges, summary.rejected_cycles, summary.tagger_fallbacks
                );
                for (line, reason) in &summary.skipped_lines {
                    out!("skipped line {line}: {reason}");
                }
                out!("skipped lines: {}", summary.skipped_lines.len());
            }
            Ok(EXIT_OK)
        }

        Command::Query {
            common,
            store,
            query,
            user,
            top_k,
            k,
            depth,
            since,
            until,
            exhaustive,
            now,
            embedder,
            model,
        } => {
            let mut config = load_config(common.config.as_deref())?;
            if let Some(k) = k {
                config.tags_per_query = k;
            }
            if let Some(depth) = depth {
                config.max_expansion_depth = depth;
            }
            let top_k = top_k.unwrap_or(config.top_k_results);
            let engine = open_store(&store, config, &embedder, &model)?;
            let reference_now = now.unwrap_or_else(|| chrono::Utc::now().timestamp_millis());

            let result = if exhaustive {
                engine.retrieve_exhaustive(&query, &user, top_k)?
            } else {
                let mut plan = engine.plan(&query, &user, reference_now)?;
                let override_interval = match (&since, &until) {
                    (None, None) => None,
                    (s, u) => {
                        let start = s.as_deref().map(parse_time_bound).transpose()?.unwrap_or(0);
                        let end = u
                            .as_deref()
                            .map(parse_time_bound)
                            .transpose()?
                            .unwrap_or(i64::MAX);
                        Some(TimeInterval::new(start, end).map_err(|e| CliError::Usage(e.to_string()))?)
                    }
                };
                if let Some(interval) = override_interval {
                    plan.intervals = vec![interval];
                }
                engine.retrieve(plan, top_k)?
            };

            if common.json {
                print_json(&result);
            } else {
                out!("{} hits", result.hits.len());
                for (rank, (id, score)) in result.hits.iter().enumerate() {
                    let episode = engine.get_episode(*id)?;
                    let preview: String = episode.content.chars().take(72).collect();
                    out!("{:>3}. #{id} {score:.4}  [{}] {preview}", rank + 1, episode.timestamp);
                }
                let plan = &result.plan;
                out!(
                    "plan: intervals {:?}, seeds {:?}, expanded {} tags",
                    plan.intervals
                        .iter()
                        .map(|iv| (iv.start, iv.end))
                        .collect::<Vec<_>>(),
                    plan.seed_tags
                        .iter()
                        .map(|(t, s)| format!("{t}:{s:.3}"))
                        .collect::<Vec<_>>(),
                    plan.expanded_tags.len()
                );
                out!(
                    "candidates examined: {} of {} ({}){}",
                    result.candidates_examined,
                    engine.temporal().user_len(&user),
                    if exhaustive { "exhaustive" } else { "indexed" },
                    if result.used_fallback { ", fallback scan" } else { "" }
                );
                let t = &result.timings;
                out!(
                    "timings (us): embed {} parse {} route {} expand {} filter {} rank {} total {}",
                    t.embed_us, t.parse_us, t.route_us, t.expand_us, t.filter_us, t.rank_us, t.total_us
                );
            }
            Ok(EXIT_OK)
        }

        Command::Consolidate { common, store, force } => {
            let config = load_config(common.config.as_deref())?;
            let mut engine = open_store(&store, config, "offline", "")?;
            let stats = engine.consolidation_stats();
            if !force && !engine.should_consolidate() {
                if common.json {
                    print_json(&serde_json::json!({
                        "skipped": true,
                        "stats": stats,
                    }));
                } else {
                    out!(
                        "skipped: fragmentation {:.3} / cohesion {:.3} below thresholds (use --force)",
                        stats.fragmentation, stats.cohesion
                    );
                }
                return Ok(EXIT_OK);
            }
            let report = engine.consolidate();
            save_snapshot(&engine, &store)?;
            if common.json {
                print_json(&report);
            } else {
                out!(
                    "moved {} embeddings; fragmentation {:.3} -> {:.3}; {} layout extents",
                    report.moved,
                    report.fragmentation_before,
                    report.fragmentation_after,
                    report.layout.len()
                );
            }
            Ok(EXIT_OK)
        }

        Command::Bench {
            common,
            n,
            tags,
            users,
            queries,
            seed,
            top_k,
            k,
            depth,
            dimension,
            workers,
            consolidate,
        } => {
            load_config(common.config.as_deref())?; // corpus parameters come from flags
            if n > 0 && tags == 0 {
                return Err(CliError::Usage("--tags must be >= 1 when --n > 0".to_string()));
            }
            let options = BenchOptions {
                episodes: n,
                tags,
                users,
                queries,
                seed,
                top_k,
                tags_per_query: k,
                max_expansion_depth: depth,
                dimension,
                workers,
            };
            let mut setup = build_corpus(&options);
            let report = if consolidate {
                run_bench_with_consolidation(&mut setup)
            } else {
                run_bench(&setup)
            };
            if common.json {
                print_json(&report);
            } else {
                out!(
                    "corpus: {} episodes, {} tags, {} users, seed {}",
                    report.episodes, report.tags, report.users, report.seed
                );
                out!(
                    "indexed   : mean {:9.1} us  p50 {:7} us  p95 {:7} us",
                    report.indexed.mean_us, report.indexed.p50_us, report.indexed.p95_us
                );
                out!(
                    "exhaustive: mean {:9.1} us  p50 {:7} us  p95 {:7} us",
                    report.exhaustive.mean_us, report.exhaustive.p50_us, report.exhaustive.p95_us
                );
                out!(
                    "speedup {:.1}x  candidates mean {:.1} (p95 {})  recall@{} {:.3}  fallbacks {}",
                    report.speedup,
                    report.candidates.mean,
                    report.candidates.p95,
                    report.top_k,
                    report.recall_at_k,
                    report.fallback_scans
                );
                out!("(baseline is this process's own exhaustive scan, not an external system)");
                if let Some(block) = &report.consolidation {
                    out!(
                        "consolidation: moved {}  fragmentation {:.3} -> {:.3}  indexed mean {:.1} -> {:.1} us",
                        block.moved,
                        block.fragmentation_before,
                        block.fragmentation_after,
                        block.indexed_before.mean_us,
                        block.indexed_after.mean_us
                    );
                }
            }
            Ok(EXIT_OK)
        }

        Command::AblateTemporal {
            common,
            n,
            tags,
            users,
            queries,
            seed,
            top_k,
            k,
            depth,
            dimension,
            hint_ratio,
            distractor_only,
        } => {
            load_config(common.config.as_deref())?; // corpus parameters come from flags
            for ratio in &hint_ratio {
                if !(0.0..=1.0).contains(ratio) {
                    return Err(CliError::Usage(format!("hint ratio {ratio} not in [0, 1]")));
                }
            }
            let options = BenchOptions {
                episodes: n,
                tags,
                users,
                queries,
                seed,
                top_k,
                tags_per_query: k,
                max_expansion_depth: depth,
                dimension,
                workers: 1,
            };
            let setup = build_corpus(&options);
            let rows = run_ablation(
                &setup,
                &AblationOptions {
                    hint_ratios: hint_ratio,
                    distractor_only,
                },
            );
            if common.json {
                print_json(&rows);
            } else {
                out!("ratio   candidates   latency(us)   evidence   vs-exhaustive");
                for row in &rows {
                    out!(
                        "{:<7.2} {:>10.1} {:>13.1} {:>10.3} {:>15.3}",
                        row.hint_ratio,
                        row.mean_candidates,
                        row.mean_latency_us,
                        row.evidence_recall,
                        row.recall_vs_exhaustive
                    );
                }
            }
            Ok(EXIT_OK)
        }

        Command::Stats { common, store } => {
            let config = load_config(common.config.as_deref())?;
            let engine = open_store(&store, config, "offline", "")?;
            let stats = engine.stats();
            if common.json {
                print_json(&stats);
            } else {
                out!("episodes: {}", stats.episodes);
                out!("users: {}", stats.users);
                out!("tags: {}  relations: {}", stats.tags, stats.edges);
                out!(
                    "avg parents: {:.3}  avg children: {:.3}",
                    stats.avg_parents, stats.avg_children
                );
                out!(
                    "fragmentation: {:.3}  cohesion: {:.3}  clusters: {}",
                    stats.fragmentation, stats.cohesion, stats.clusters
                );
                for (user, count) in &stats.per_user {
                    out!("  {user}: {count} episodes");
                }
                out!(
                    "rejected cycles: {}  fallback scans: {}",
                    stats.rejected_cycles, stats.fallback_scans
                );
            }
            Ok(EXIT_OK)
        }

        Command::DumpDag { common, store } => {
            let config = load_config(common.config.as_deref())?;
            let engine = open_store(&store, config, "offline", "")?;
            let _ = common.json; // DOT is already machine-readable
            {
                use std::io::Write;
                let _ = write!(std::io::stdout(), "{}", engine.dag().dump_dot());
            }
            Ok(EXIT_OK)
        }
    }
}
