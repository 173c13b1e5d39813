//! Tagging and embedding providers.
//!
//! The [`Embedder`] and [`Tagger`] traits decouple the engine from any
//! particular model. This module ships the deterministic offline
//! implementations (a signed feature-hashing embedder and a frequency-based
//! tagger) so every test and benchmark runs hermetically; HTTP-backed
//! providers live in the companion crate and fall back to these on failure.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use crate::arena::cosine;
use crate::dag::TagDag;
use crate::error::{CoreError, Result};
use crate::math;
use crate::tag::TagId;

/// Turns text into a fixed-dimension unit vector.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f32>>;
    fn dimension(&self) -> usize;
}

/// Extracts tags and broader->narrower relations from episode content.
pub trait Tagger: Send + Sync {
    fn generate_tags(&self, content: &str) -> Result<TagProposal>;
}

/// Validated tagger output: tags plus (parent, child) relations whose
/// endpoints are both proposed tags.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TagProposal {
    pub tags: Vec<TagId>,
    pub relations: Vec<(TagId, TagId)>,
}

impl TagProposal {
    /// Normalize raw provider output: tags are coerced to the tag grammar
    /// (invalid ones dropped, order kept, duplicates removed); relations
    /// survive only when both endpoints are kept tags and differ.
    pub fn from_raw<S: AsRef<str>>(tags: &[S], relations: &[(S, S)]) -> Self {
        let mut kept: Vec<TagId> = Vec::new();
        let mut seen: BTreeSet<TagId> = BTreeSet::new();
        for raw in tags {
            if let Some(tag) = TagId::normalize(raw.as_ref()) {
                if seen.insert(tag.clone()) {
                    kept.push(tag);
                }
            }
        }
        let mut rels: Vec<(TagId, TagId)> = Vec::new();
        let mut seen_rels: BTreeSet<(TagId, TagId)> = BTreeSet::new();
        for (parent, child) in relations {
            let (Some(p), Some(c)) = (
                TagId::normalize(parent.as_ref()),
                TagId::normalize(child.as_ref()),
            ) else {
                continue;
            };
            if p != c && seen.contains(&p) && seen.contains(&c) && seen_rels.insert((p.clone(), c.clone())) {
                rels.push((p, c));
            }
        }
        Self {
            tags: kept,
            relations: rels,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;
/// Fixed seed; changing it changes every offline embedding.
const HASH_SEED: u64 = 0x5357_4946_544d_454d;

fn fnv1a_seeded(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET ^ HASH_SEED;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Lowercased alphanumeric runs.
fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Deterministic embedder: token unigrams and adjacent bigrams are hashed
/// into `dimension` signed buckets, then L2-normalized. Identical bytes
/// produce identical vectors on every platform.
#[derive(Debug, Clone)]
pub struct OfflineEmbedder {
    dimension: usize,
}

impl OfflineEmbedder {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }
}

impl Embedder for OfflineEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        if text.trim().is_empty() {
            return Err(CoreError::EmptyText);
        }
        fn bump(buckets: &mut [f64], bytes: &[u8]) {
            let hash = fnv1a_seeded(bytes);
            let bucket = (hash % buckets.len() as u64) as usize;
            buckets[bucket] += if hash >> 63 == 0 { 1.0 } else { -1.0 };
        }

        let tokens = tokenize(text);
        let mut buckets = alloc::vec![0.0f64; self.dimension];
        for token in &tokens {
            bump(&mut buckets, token.as_bytes());
        }
        for pair in tokens.windows(2) {
            let mut feature = String::with_capacity(pair[0].len() + pair[1].len() + 1);
            feature.push_str(&pair[0]);
            feature.push(' ');
            feature.push_str(&pair[1]);
            bump(&mut buckets, feature.as_bytes());
        }
        let mut sum_sq: f64 = buckets.iter().map(|v| v * v).sum();
        if sum_sq == 0.0 {
            // no tokens (e.g. punctuation-only) or total sign cancellation:
            // fall back to hashing the raw trimmed text
            bump(&mut buckets, text.trim().as_bytes());
            sum_sq = buckets.iter().map(|v| v * v).sum();
            if sum_sq == 0.0 {
                buckets[(fnv1a_seeded(text.trim().as_bytes()) % self.dimension as u64) as usize] = 1.0;
                sum_sq = 1.0;
            }
        }
        let norm = math::sqrt(sum_sq);
        Ok(buckets.iter().map(|v| (*v / norm) as f32).collect())
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Deterministic tagger: after stopword removal, the most frequent token
/// unigrams and adjacent bigrams (ties broken lexicographically) become
/// tags, capped at [`OfflineTagger::MAX_TAGS`]. A selected bigram `a_b`
/// whose first word `a` was also selected yields the relation `a -> a_b`.
#[derive(Debug, Clone, Default)]
pub struct OfflineTagger;

impl OfflineTagger {
    pub const MAX_TAGS: usize = 8;
}

impl Tagger for OfflineTagger {
    fn generate_tags(&self, content: &str) -> Result<TagProposal> {
        if content.trim().is_empty() {
            return Err(CoreError::EmptyContent);
        }
        let tokens = tokenize(content);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for token in &tokens {
            if !is_stopword(token) {
                *counts.entry(token.clone()).or_default() += 1;
            }
        }
        for pair in tokens.windows(2) {
            if !is_stopword(&pair[0]) && !is_stopword(&pair[1]) {
                let mut bigram = String::with_capacity(pair[0].len() + pair[1].len() + 1);
                bigram.push_str(&pair[0]);
                bigram.push('_');
                bigram.push_str(&pair[1]);
                *counts.entry(bigram).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&String, &usize)> = counts.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let selected: Vec<String> = ranked
            .into_iter()
            .take(Self::MAX_TAGS)
            .map(|(token, _)| token.clone())
            .collect();

        let mut relations: Vec<(String, String)> = Vec::new();
        for bigram in &selected {
            if let Some((first, _)) = bigram.split_once('_') {
                if selected.iter().any(|t| t == first) {
                    relations.push((first.to_owned(), bigram.clone()));
                }
            }
        }
        Ok(TagProposal::from_raw(&selected, &relations))
    }
}

/// Tag recovery path for when a remote tagger fails: deterministic offline
/// extraction, enriched with existing DAG tags whose embeddings are close
/// to the content embedding.
pub fn fallback_proposal(
    content: &str,
    dag: &TagDag,
    embedder: &dyn Embedder,
) -> Result<TagProposal> {
    /// Existing tags at least this similar to the content are adopted.
    const SIMILAR_TAG_MIN: f64 = 0.5;

    let mut proposal = OfflineTagger.generate_tags(content)?;
    let content_embedding = embedder.embed(content)?;
    for (tag, node) in dag.iter() {
        if node.embedding.iter().all(|v| *v == 0.0) {
            continue;
        }
        if cosine(&content_embedding, &node.embedding)? >= SIMILAR_TAG_MIN
            && !proposal.tags.contains(tag)
        {
            proposal.tags.push(tag.clone());
        }
    }
    Ok(proposal)
}

fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Fixed English stopword list (alphabetical; binary-searched). Versioned
/// with the crate, never fetched.
const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "cannot", "could", "did", "do", "does", "doing", "down", "during", "each",
    "few", "for", "from", "further", "had", "has", "have", "having", "he", "her", "here",
    "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it",
    "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now",
    "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
    "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would",
    "you", "your", "yours", "yourself", "yourselves",
];
