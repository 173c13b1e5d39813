//! Store-wide tuning knobs.

use alloc::format;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Configuration shared by the store, the indexes, and the query engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreConfig {
    /// Embedding dimension for episodes, tags, and queries.
    pub dimension: usize,
    /// Number of seed tags the router selects per query.
    pub tags_per_query: usize,
    /// Maximum depth of child-edge expansion from the seed tags.
    pub max_expansion_depth: usize,
    /// Default number of hits a retrieval returns.
    pub top_k_results: usize,
    /// Minimum episode-weighted mean cluster cohesion before consolidation
    /// is considered worthwhile.
    pub cohesion_min: f64,
    /// Minimum arena fragmentation before consolidation is considered
    /// worthwhile.
    pub fragmentation_min: f64,
    /// Also include the seed tags' direct parents (one level) when
    /// expanding. Off by default: expansion normally moves toward more
    /// specific tags only.
    pub expand_parents: bool,
    /// When > 0, tags co-occurring in at least this many episodes are
    /// treated as connected for clustering. 0 disables co-occurrence edges.
    pub cooccur_min: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            dimension: 384,
            tags_per_query: 5,
            max_expansion_depth: 2,
            top_k_results: 10,
            cohesion_min: 0.3,
            fragmentation_min: 0.25,
            expand_parents: false,
            cooccur_min: 0,
        }
    }
}

impl StoreConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(CoreError::InvalidConfig(format!(
                "dimension must be >= 1, got {}",
                self.dimension
            )));
        }
        if self.tags_per_query == 0 {
            return Err(CoreError::InvalidConfig(format!(
                "tags_per_query must be >= 1, got {}",
                self.tags_per_query
            )));
        }
        for (name, value) in [
            ("cohesion_min", self.cohesion_min),
            ("fragmentation_min", self.fragmentation_min),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CoreError::InvalidConfig(format!(
                    "{name} must be in [0, 1], got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        StoreConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_zero_dimension() {
        let cfg = StoreConfig {
            dimension: 0,
            ..StoreConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(CoreError::InvalidConfig(_))));
    }

    #[test]
    fn rejects_out_of_range_thresholds() {
        let cfg = StoreConfig {
            fragmentation_min: 1.5,
            ..StoreConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
