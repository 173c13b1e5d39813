//! Core indexing and retrieval engine for conversational episode memory.
//!
//! Episodes (one user/agent exchange each) are stored once and referenced by
//! three cooperating indexes:
//!
//! - a [`TemporalIndex`] of per-user timestamp-sorted timelines for
//!   logarithmic time-range queries,
//! - a [`TagDag`] of hierarchical topic tags (edges point from broader to
//!   more specific concepts) for semantic candidate narrowing,
//! - an [`EmbeddingArena`] holding all episode embeddings contiguously for
//!   exact cosine ranking and cluster-based physical re-layout.
//!
//! [`Engine`] wires the three together: `store_episode` updates every index
//! before an episode becomes visible, and `retrieve` executes
//! plan-then-fetch retrieval (temporal intervals ∩ routed tags, then exact
//! top-k ranking over the surviving candidates).
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature and enable `libm` for freestanding targets. File formats,
//! HTTP providers, and the CLI live in the companion `swiftmem` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("swiftmem-core needs either the `std` or the `libm` feature for float math");

pub mod adapters;
pub mod arena;
pub mod clock;
pub mod config;
pub mod consolidate;
pub mod dag;
pub mod engine;
pub mod episode;
pub mod error;
pub mod query;
pub mod tag;
pub mod temporal;

pub use adapters::{Embedder, OfflineEmbedder, OfflineTagger, TagProposal, Tagger};
pub use arena::{cosine, EmbeddingArena};
pub use clock::{Clock, NoopClock};
pub use config::StoreConfig;
pub use consolidate::{ConsolidationReport, ConsolidationStats, LayoutEntry, TagCluster};
pub use dag::{RelationOutcome, TagDag, TagNode};
pub use engine::{Engine, EngineStats};
pub use episode::{Episode, EpisodeId, MemoryStore};
pub use error::{CoreError, Result};
pub use query::{parse_temporal, route_tags, QueryPlan, RetrievalResult, StageTimings};
pub use tag::TagId;
pub use temporal::{merge_intervals, TemporalIndex, TimeInterval};

pub(crate) mod math {
    #[cfg(feature = "std")]
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }

    #[cfg(all(not(feature = "std"), feature = "libm"))]
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
}
