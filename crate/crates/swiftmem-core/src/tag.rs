//! Tag identifiers.
//!
//! A tag is a lowercase `[a-z0-9]` word, or up to three such words joined by
//! underscores (`machine_learning`, `italian_cuisine`). Tags arriving from
//! providers are normalized with [`TagId::normalize`]; tags that reach the
//! store or DAG must already satisfy the strict grammar.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Interned tag identifier matching `[a-z0-9]+(_[a-z0-9]+){0,2}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TagId(String);

impl TagId {
    /// Parse a string that must already be in canonical form.
    pub fn parse(raw: &str) -> Result<Self> {
        if is_valid(raw) {
            Ok(Self(raw.to_owned()))
        } else {
            Err(CoreError::InvalidTag(raw.to_owned()))
        }
    }

    /// Coerce free-form provider output into a valid tag: lowercase,
    /// whitespace and hyphens become underscores, other characters are
    /// dropped, runs of underscores collapse. Returns `None` when nothing
    /// valid remains or the result exceeds three words.
    pub fn normalize(raw: &str) -> Option<Self> {
        let mut out = String::with_capacity(raw.len());
        for ch in raw.trim().chars() {
            if ch.is_ascii_alphanumeric() {
                out.extend(ch.to_lowercase());
            } else if ch.is_whitespace() || ch == '-' || ch == '_' {
                if !out.is_empty() && !out.ends_with('_') {
                    out.push('_');
                }
            }
            // anything else (punctuation, non-ascii) is dropped
        }
        while out.ends_with('_') {
            out.pop();
        }
        if is_valid(&out) {
            Some(Self(out))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The tag with underscores replaced by spaces, the form handed to the
    /// embedder when a tag embedding is needed.
    pub fn as_text(&self) -> String {
        self.0.replace('_', " ")
    }

    /// Words of the tag, in order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split('_')
    }
}

fn is_valid(s: &str) -> bool {
    if s.is_empty() {
        return false;
    }
    let mut words = 0usize;
    for word in s.split('_') {
        if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()) {
            return false;
        }
        words += 1;
    }
    words <= 3
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for TagId {
    fn deserialize<D>(deserializer: D) -> core::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw = String::deserialize(deserializer)?;
        TagId::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Parse a set of canonical tags, rejecting the first invalid one.
pub fn parse_tags(raw: &[String]) -> Result<Vec<TagId>> {
    raw.iter().map(|t| TagId::parse(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_canonical_forms() {
        for ok in ["pets", "dog_walking", "italian_cuisine", "a1_b2_c3", "2022"] {
            assert!(TagId::parse(ok).is_ok(), "{ok} should parse");
        }
    }

    #[test]
    fn rejects_bad_forms() {
        for bad in ["", "Pets", "dog walking", "_x", "x_", "a__b", "a_b_c_d", "émotion"] {
            assert!(TagId::parse(bad).is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn normalize_coerces_provider_output() {
        assert_eq!(TagId::normalize("Machine Learning").unwrap().as_str(), "machine_learning");
        assert_eq!(TagId::normalize("  self-acceptance ").unwrap().as_str(), "self_acceptance");
        assert_eq!(TagId::normalize("Python (coding)").unwrap().as_str(), "python_coding");
        assert!(TagId::normalize("a b c d").is_none(), "four words dropped");
        assert!(TagId::normalize("!!!").is_none());
    }

    #[test]
    fn tag_text_restores_spaces() {
        assert_eq!(TagId::parse("dog_walking").unwrap().as_text(), "dog walking");
    }
}
