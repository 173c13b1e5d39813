//! Standard-library companion to `swiftmem-core`: snapshot persistence,
//! HTTP tagging/embedding providers with offline fallback, conversation
//! ingestion, and the benchmark harness behind the `swiftmem` CLI.

pub mod bench;
pub mod cli;
pub mod clock;
pub mod ingest;
pub mod remote;
pub mod snapshot;

pub use bench::{AblationOptions, AblationRow, BenchOptions, BenchReport};
pub use clock::StdClock;
pub use ingest::{ConversationRecord, IngestSummary, Turn};
pub use remote::{HttpEmbedder, HttpTagger, RemoteConfig};
pub use snapshot::{load_snapshot, save_snapshot, SnapshotError};

pub use swiftmem_core as core;
