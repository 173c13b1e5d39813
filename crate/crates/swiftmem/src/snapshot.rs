//! Line-delimited JSON snapshots of a memory store.
//!
//! Line 1 is the header `{"format":"swiftmem-snapshot","version":1,"d":..,
//! "count":..}`; every following line is one episode `{"id":..,"user":..,
//! "content":..,"ts":..,"tags":[..],"emb":[..]}`, UTF-8 with `\n` endings.
//! Embedding floats use the shortest decimal form that round-trips
//! exactly, so a load reproduces every episode bit for bit. Episode lines
//! appear in embedding-arena slot order, which both preserves ids (they
//! are explicit in each record) and lets a consolidated layout survive the
//! round trip; ids must be exactly `0..count`.
//!
//! Indexes are not serialized; they are rebuilt deterministically from the
//! episode records on load. Tag embeddings are re-derived from the tag
//! text, and broader->narrower tag relations are re-inferred by word-prefix
//! containment within each episode's tag set (exactly the relations the
//! offline tagger produces, so offline-tagged stores round-trip to an
//! identical DAG; relations proposed by a remote model without a lexical
//! trace do not survive).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use swiftmem_core::{Embedder, Engine, StoreConfig, TagId};

pub const SNAPSHOT_FORMAT: &str = "swiftmem-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt snapshot at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Engine(#[from] swiftmem_core::CoreError),
}

impl SnapshotError {
    fn corrupt(line: usize, reason: impl Into<String>) -> Self {
        Self::Corrupt {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    d: usize,
    count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct EpisodeRecord {
    id: u64,
    user: String,
    content: String,
    ts: i64,
    tags: Vec<String>,
    emb: Vec<f32>,
}

/// Write the store to `path`; returns the number of episode records.
pub fn save_snapshot(engine: &Engine, path: &Path) -> Result<usize, SnapshotError> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let header = Header {
        format: SNAPSHOT_FORMAT.to_string(),
        version: SNAPSHOT_VERSION,
        d: engine.config().dimension,
        count: engine.len(),
    };
    serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    let mut count = 0usize;
    // slot order, so a consolidated layout survives the round trip
    for slot in 0..engine.arena().len() {
        let id = engine.arena().episode_at(slot).expect("slot in range");
        let episode = engine.get_episode(id).expect("arena id is stored");
        let record = EpisodeRecord {
            id: episode.id.0,
            user: episode.user.clone(),
            content: episode.content.clone(),
            ts: episode.timestamp,
            tags: episode.tags.iter().map(|t| t.as_str().to_string()).collect(),
            emb: episode.embedding.clone(),
        };
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

/// Read just the embedding dimension from a snapshot header.
pub fn snapshot_dimension(path: &Path) -> Result<usize, SnapshotError> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| SnapshotError::corrupt(1, "missing header"))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| SnapshotError::corrupt(1, format!("bad header: {e}")))?;
    Ok(header.d)
}

/// Load a snapshot and rebuild all three indexes. `config.dimension` is
/// overridden by the header; the embedder must match that dimension.
pub fn load_snapshot(
    path: &Path,
    mut config: StoreConfig,
    embedder: Box<dyn Embedder>,
) -> Result<Engine, SnapshotError> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header_line = lines
        .next()
        .ok_or_else(|| SnapshotError::corrupt(1, "missing header"))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| SnapshotError::corrupt(1, format!("bad header: {e}")))?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(SnapshotError::corrupt(
            1,
            format!("unknown format `{}`", header.format),
        ));
    }
    if header.version != SNAPSHOT_VERSION {
        return Err(SnapshotError::corrupt(
            1,
            format!("unsupported version {}", header.version),
        ));
    }
    config.dimension = header.d;
    let mut engine = Engine::with_embedder(config, embedder)?;

    // records arrive in arena-slot order; ids must be exactly 0..count
    let mut records: Vec<(usize, EpisodeRecord)> = Vec::with_capacity(header.count);
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        let line = line?;
        if line.trim().is_empty() {
            return Err(SnapshotError::corrupt(line_no, "blank line"));
        }
        let record: EpisodeRecord = serde_json::from_str(&line)
            .map_err(|e| SnapshotError::corrupt(line_no, format!("bad episode: {e}")))?;
        if record.id >= header.count as u64 {
            return Err(SnapshotError::corrupt(
                line_no,
                format!("id {} out of range for count {}", record.id, header.count),
            ));
        }
        if record.emb.len() != header.d {
            return Err(SnapshotError::corrupt(
                line_no,
                format!("embedding has {} values, header says {}", record.emb.len(), header.d),
            ));
        }
        records.push((line_no, record));
    }
    if records.len() != header.count {
        return Err(SnapshotError::corrupt(
            records.len() + 1,
            format!("header promised {} episodes, found {}", header.count, records.len()),
        ));
    }
    let slot_order: Vec<swiftmem_core::EpisodeId> = records
        .iter()
        .map(|(_, r)| swiftmem_core::EpisodeId(r.id))
        .collect();

    // the store assigns ids sequentially, so insert in id order
    records.sort_by_key(|(_, r)| r.id);
    for (expected, (line_no, record)) in records.into_iter().enumerate() {
        if record.id != expected as u64 {
            return Err(SnapshotError::corrupt(
                line_no,
                format!("duplicate or missing id near {}", record.id),
            ));
        }
        let tags: Vec<TagId> = record
            .tags
            .iter()
            .map(|t| TagId::parse(t))
            .collect::<Result<_, _>>()
            .map_err(|e| SnapshotError::corrupt(line_no, e.to_string()))?;
        engine
            .store_episode(&record.user, &record.content, record.ts, record.emb, tags.clone())
            .map_err(|e| SnapshotError::corrupt(line_no, e.to_string()))?;
        // re-infer word-prefix relations within this episode's tag set
        for child in &tags {
            for parent in &tags {
                if is_word_prefix(parent, child) {
                    engine.add_relation(parent, child)?;
                }
            }
        }
    }
    engine
        .restore_layout(&slot_order)
        .expect("validated permutation");
    Ok(engine)
}

/// `parent` is a strict word-level prefix of `child` (`machine` of
/// `machine_learning`).
fn is_word_prefix(parent: &TagId, child: &TagId) -> bool {
    let parent_words: Vec<&str> = parent.words().collect();
    let child_words: Vec<&str> = child.words().collect();
    parent_words.len() < child_words.len()
        && child_words[..parent_words.len()] == parent_words[..]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Read;
    use swiftmem_core::{EpisodeId, OfflineEmbedder};

    fn test_config(d: usize) -> StoreConfig {
        StoreConfig {
            dimension: d,
            ..StoreConfig::default()
        }
    }

    fn offline(d: usize) -> Box<dyn Embedder> {
        Box::new(OfflineEmbedder::new(d))
    }

    #[test]
    fn empty_store_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let engine = Engine::new(test_config(8)).unwrap();
        let count = save_snapshot(&engine, &path).unwrap();
        assert_eq!(count, 0);
        let mut text = String::new();
        File::open(&path).unwrap().read_to_string(&mut text).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with(r#"{"format":"swiftmem-snapshot","version":1,"d":8,"count":0}"#));
    }

    #[test]
    fn round_trip_reproduces_every_episode_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 16;
        let mut engine = Engine::new(test_config(d)).unwrap();
        let users = ["ana", "bob"];
        for i in 0..100u64 {
            let content = format!("episode {i} about topic {}", i % 7);
            let embedding: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let tags = vec![
                TagId::parse(&format!("topic{}", i % 7)).unwrap(),
                TagId::parse("shared").unwrap(),
            ];
            engine
                .store_episode(
                    users[(i % 2) as usize],
                    &content,
                    rng.gen_range(0..1_000_000),
                    embedding,
                    tags,
                )
                .unwrap();
        }
        save_snapshot(&engine, &path).unwrap();
        let loaded = load_snapshot(&path, test_config(d), offline(d)).unwrap();

        assert_eq!(loaded.len(), engine.len());
        for original in engine.episodes() {
            let restored = loaded.get_episode(original.id).unwrap();
            assert_eq!(restored, original);
        }
    }

    #[test]
    fn get_after_round_trip_returns_identical_episode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let d = 8;
        let mut engine = Engine::new(test_config(d)).unwrap();
        let embedding = vec![0.25f32, -0.5, 0.125, 1.0, 0.0, 0.75, -0.375, 2.0];
        engine
            .store_episode("u", "hello there", 12345, embedding, vec![])
            .unwrap();
        save_snapshot(&engine, &path).unwrap();
        let loaded = load_snapshot(&path, test_config(d), offline(d)).unwrap();
        assert_eq!(
            loaded.get_episode(EpisodeId(0)).unwrap(),
            engine.get_episode(EpisodeId(0)).unwrap()
        );
    }

    #[test]
    fn truncated_file_is_reported_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let d = 8;
        let mut engine = Engine::new(test_config(d)).unwrap();
        for i in 0..5u64 {
            engine
                .store_episode("u", &format!("e{i}"), i as i64, vec![1.0; d], vec![])
                .unwrap();
        }
        save_snapshot(&engine, &path).unwrap();
        let full = std::fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = full.lines().take(4).collect();
        std::fs::write(&path, truncated.join("\n") + "\n").unwrap();

        let err = load_snapshot(&path, test_config(d), offline(d)).unwrap_err();
        match err {
            SnapshotError::Corrupt { line, reason } => {
                assert_eq!(line, 4);
                assert!(reason.contains("promised 5"), "{reason}");
            }
            other => panic!("expected Corrupt, got {other}"),
        }
    }

    #[test]
    fn garbage_line_reports_its_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let d = 4;
        let mut engine = Engine::new(test_config(d)).unwrap();
        for i in 0..3u64 {
            engine
                .store_episode("u", "x", i as i64, vec![1.0; d], vec![])
                .unwrap();
        }
        save_snapshot(&engine, &path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text = text.replacen("{\"id\":1", "{\"id\":1,oops", 1);
        std::fs::write(&path, text).unwrap();
        match load_snapshot(&path, test_config(d), offline(d)).unwrap_err() {
            SnapshotError::Corrupt { line, .. } => assert_eq!(line, 3),
            other => panic!("expected Corrupt, got {other}"),
        }
    }

    #[test]
    fn bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        std::fs::write(&path, "{\"format\":\"something-else\",\"version\":1,\"d\":4,\"count\":0}\n")
            .unwrap();
        match load_snapshot(&path, test_config(4), offline(4)).unwrap_err() {
            SnapshotError::Corrupt { line, reason } => {
                assert_eq!(line, 1);
                assert!(reason.contains("something-else"));
            }
            other => panic!("expected Corrupt, got {other}"),
        }
    }

    #[test]
    fn word_prefix_relations_are_reinferred_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let d = 8;
        let mut engine = Engine::new(test_config(d)).unwrap();
        engine
            .store_episode(
                "u",
                "machine learning notes",
                1,
                vec![1.0; d],
                vec![
                    TagId::parse("machine").unwrap(),
                    TagId::parse("machine_learning").unwrap(),
                ],
            )
            .unwrap();
        save_snapshot(&engine, &path).unwrap();
        let loaded = load_snapshot(&path, test_config(d), offline(d)).unwrap();
        let node = loaded.dag().get(&TagId::parse("machine").unwrap()).unwrap();
        assert!(node.children.contains(&TagId::parse("machine_learning").unwrap()));
    }
}
