//! Canonical episode store.
//!
//! An episode is one conversational exchange (user utterance plus agent
//! response) with its user, timestamp, embedding, and tags. Ids are dense
//! monotone integers assigned at ingestion: after `n` stores the ids are
//! exactly `0..n`. The store is append-only; every index references
//! episodes by id through this module.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::config::StoreConfig;
use crate::error::{CoreError, Result};
use crate::tag::TagId;

/// Identifier of one stored episode. Unique within a store, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpisodeId(pub u64);

impl EpisodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EpisodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One conversational exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: EpisodeId,
    pub user: String,
    pub content: String,
    /// Milliseconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub embedding: Vec<f32>,
    /// Sorted, deduplicated.
    pub tags: Vec<TagId>,
}

/// Append-only episode map plus configuration.
#[derive(Debug, Clone)]
pub struct MemoryStore {
    episodes: Vec<Episode>,
    config: StoreConfig,
}

impl MemoryStore {
    pub fn new(config: StoreConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            episodes: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    /// Number of stored episodes.
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// The id the next stored episode will receive.
    pub fn next_id(&self) -> EpisodeId {
        EpisodeId(self.episodes.len() as u64)
    }

    /// Validate an insertion without mutating anything.
    pub fn check_insert(
        &self,
        timestamp: i64,
        embedding: &[f32],
        tags: &[TagId],
    ) -> Result<()> {
        if embedding.len() != self.config.dimension {
            return Err(CoreError::DimensionMismatch {
                expected: self.config.dimension,
                got: embedding.len(),
            });
        }
        if embedding.iter().all(|v| *v == 0.0) {
            return Err(CoreError::ZeroNorm);
        }
        if timestamp < 0 {
            return Err(CoreError::InvalidTimestamp(timestamp));
        }
        let _ = tags; // tags are validated by construction of TagId
        Ok(())
    }

    /// Append a validated episode. Tags are sorted and deduplicated.
    pub fn insert(
        &mut self,
        user: String,
        content: String,
        timestamp: i64,
        embedding: Vec<f32>,
        mut tags: Vec<TagId>,
    ) -> Result<EpisodeId> {
        self.check_insert(timestamp, &embedding, &tags)?;
        tags.sort_unstable();
        tags.dedup();
        let id = self.next_id();
        self.episodes.push(Episode {
            id,
            user,
            content,
            timestamp,
            embedding,
            tags,
        });
        Ok(id)
    }

    pub fn get(&self, id: EpisodeId) -> Result<&Episode> {
        self.episodes.get(id.index()).ok_or(CoreError::NotFound(id.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Episode> {
        self.episodes.iter()
    }
}
