//! Conversation-file ingestion.
//!
//! Input is JSONL: one conversation per line, `{"user": .., "session": ..,
//! "turns": [{"speaker": .., "text": .., "timestamp": ..}, ..]}` with
//! timestamps in epoch milliseconds, non-decreasing within a session.
//! Consecutive turn pairs (typically user + agent) become one episode; an
//! unpaired trailing turn becomes an episode on its own. Malformed lines
//! are skipped and reported, never fatal.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use swiftmem_core::{adapters, Engine, TagProposal, Tagger};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub text: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub user: String,
    #[serde(default)]
    pub session: Option<String>,
    pub turns: Vec<Turn>,
}

impl ConversationRecord {
    fn validate(&self) -> Result<(), String> {
        for pair in self.turns.windows(2) {
            if pair[1].timestamp < pair[0].timestamp {
                return Err(format!(
                    "timestamps must be non-decreasing within a session ({} after {})",
                    pair[1].timestamp, pair[0].timestamp
                ));
            }
        }
        Ok(())
    }
}

/// What happened during one `ingest` run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestSummary {
    pub conversations: usize,
    pub episodes: usize,
    pub tags: usize,
    pub edges: usize,
    pub rejected_cycles: usize,
    pub tagger_fallbacks: usize,
    pub skipped_lines: Vec<(usize, String)>,
}

/// Tag content, downgrading any tagger failure to the embedding-similarity
/// + offline fallback.
fn propose_tags(
    engine: &Engine,
    tagger: &dyn Tagger,
    content: &str,
    fallbacks: &mut usize,
) -> Result<TagProposal, swiftmem_core::CoreError> {
    match tagger.generate_tags(content) {
        Ok(proposal) => Ok(proposal),
        Err(err) => {
            log::warn!("tagger failed ({err}); falling back to offline extraction");
            *fallbacks += 1;
            adapters::fallback_proposal(content, engine.dag(), engine.embedder())
        }
    }
}

/// Ingest a JSONL conversation file. Each turn pair becomes one episode
/// timestamped at its first turn; the tagger output is applied as tags and
/// relations.
pub fn ingest_file(
    engine: &mut Engine,
    path: &Path,
    tagger: &dyn Tagger,
) -> std::io::Result<IngestSummary> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut summary = IngestSummary::default();

    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ConversationRecord = match serde_json::from_str(&line) {
            Ok(record) => record,
            Err(err) => {
                summary.skipped_lines.push((line_no, err.to_string()));
                continue;
            }
        };
        if let Err(reason) = record.validate() {
            summary.skipped_lines.push((line_no, reason));
            continue;
        }
        summary.conversations += 1;
        for pair in record.turns.chunks(2) {
            let content = pair
                .iter()
                .map(|t| format!("{}: {}", t.speaker, t.text))
                .collect::<Vec<_>>()
                .join("\n");
            let timestamp = pair[0].timestamp;
            let proposal =
                match propose_tags(engine, tagger, &content, &mut summary.tagger_fallbacks) {
                    Ok(p) => p,
                    Err(err) => {
                        summary
                            .skipped_lines
                            .push((line_no, format!("untaggable turn pair: {err}")));
                        continue;
                    }
                };
            match engine.ingest(&record.user, &content, timestamp, &proposal) {
                Ok((_, rejected)) => {
                    summary.episodes += 1;
                    summary.rejected_cycles += rejected;
                }
                Err(err) => {
                    summary
                        .skipped_lines
                        .push((line_no, format!("episode rejected: {err}")));
                }
            }
        }
    }
    summary.tags = engine.dag().len();
    summary.edges = engine.dag().edge_count();
    Ok(summary)
}
