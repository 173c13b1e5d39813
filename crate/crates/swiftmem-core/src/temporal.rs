//! Per-user sorted timelines with a global episode lookup.
//!
//! Each user owns a contiguous sequence of `(timestamp, episode id)` pairs
//! kept sorted ascending (ties broken by id). Range queries locate both
//! bounds by binary search; insertion binary-searches the position and
//! shifts the tail, which is cheap in practice because episodes arrive in
//! near-chronological order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::episode::EpisodeId;
use crate::error::{CoreError, Result};

/// Half-open time interval `[start, end)` in epoch milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start: i64,
    pub end: i64,
}

impl TimeInterval {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start < end {
            Ok(Self { start, end })
        } else {
            Err(CoreError::InvalidInterval { start, end })
        }
    }

    #[inline]
    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

/// Merge intervals into the minimal sorted set of non-overlapping,
/// non-adjacent intervals covering the same points. Adjacent intervals
/// (`a.end == b.start`) merge into one.
pub fn merge_intervals(intervals: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut sorted: Vec<TimeInterval> = intervals.to_vec();
    sorted.sort_unstable_by_key(|iv| (iv.start, iv.end));
    let mut merged: Vec<TimeInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => {
                last.end = last.end.max(iv.end);
            }
            _ => merged.push(iv),
        }
    }
    merged
}

type TimelineEntry = (i64, EpisodeId);

/// Per-user sorted timelines plus a global `episode -> (user, timestamp)`
/// lookup. The two views always contain exactly the same episode ids.
#[derive(Debug, Clone, Default)]
pub struct TemporalIndex {
    timelines: BTreeMap<String, Vec<TimelineEntry>>,
    lookup: BTreeMap<EpisodeId, (String, i64)>,
}

impl TemporalIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total number of indexed episodes.
    pub fn len(&self) -> usize {
        self.lookup.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookup.is_empty()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.timelines.keys().map(String::as_str)
    }

    /// Episode count per user, in user order.
    pub fn per_user_counts(&self) -> impl Iterator<Item = (&str, usize)> {
        self.timelines.iter().map(|(u, tl)| (u.as_str(), tl.len()))
    }

    /// Where an episode lives: `(user, timestamp)`.
    pub fn locate(&self, id: EpisodeId) -> Option<(&str, i64)> {
        self.lookup.get(&id).map(|(u, t)| (u.as_str(), *t))
    }

    /// Insert one episode, keeping the user's timeline sorted.
    pub fn insert(&mut self, user: &str, timestamp: i64, id: EpisodeId) -> Result<()> {
        if self.lookup.contains_key(&id) {
            return Err(CoreError::DuplicateEpisode(id.0));
        }
        let timeline = self.timelines.entry(String::from(user)).or_default();
        let entry = (timestamp, id);
        let pos = timeline.partition_point(|e| *e < entry);
        timeline.insert(pos, entry);
        self.lookup.insert(id, (String::from(user), timestamp));
        Ok(())
    }

    /// Ids with `interval.start <= timestamp < interval.end`, ascending by
    /// `(timestamp, id)`. Unknown users yield an empty list.
    pub fn range_query(&self, user: &str, interval: TimeInterval) -> Vec<EpisodeId> {
        self.range_query_counted(user, interval).0
    }

    /// Like [`range_query`](Self::range_query) but also reports how many
    /// element comparisons the two bound searches performed.
    pub fn range_query_counted(
        &self,
        user: &str,
        interval: TimeInterval,
    ) -> (Vec<EpisodeId>, usize) {
        let Some(timeline) = self.timelines.get(user) else {
            return (Vec::new(), 0);
        };
        let mut comparisons = 0usize;
        let lo = partition_point_counted(timeline, |e| e.0 < interval.start, &mut comparisons);
        let hi = partition_point_counted(timeline, |e| e.0 < interval.end, &mut comparisons);
        let ids = timeline[lo..hi].iter().map(|e| e.1).collect();
        (ids, comparisons)
    }

    /// Union of range queries over the merged intervals, ascending by
    /// `(timestamp, id)` and free of duplicates.
    pub fn multi_range_query(&self, user: &str, intervals: &[TimeInterval]) -> Vec<EpisodeId> {
        let merged = merge_intervals(intervals);
        let mut out = Vec::new();
        for interval in merged {
            out.extend(self.range_query(user, interval));
        }
        // merged intervals are disjoint and sorted, so `out` already is
        out
    }

    /// The user's most recent `n` episode ids, most recent first.
    pub fn recent(&self, user: &str, n: usize) -> Vec<EpisodeId> {
        let Some(timeline) = self.timelines.get(user) else {
            return Vec::new();
        };
        let start = timeline.len().saturating_sub(n);
        timeline[start..].iter().rev().map(|e| e.1).collect()
    }

    /// Every episode id of a user, ascending by `(timestamp, id)`.
    pub fn user_episodes(&self, user: &str) -> Vec<EpisodeId> {
        self.timelines
            .get(user)
            .map(|tl| tl.iter().map(|e| e.1).collect())
            .unwrap_or_default()
    }

    /// Number of episodes a user owns.
    pub fn user_len(&self, user: &str) -> usize {
        self.timelines.get(user).map(Vec::len).unwrap_or(0)
    }
}

fn partition_point_counted(
    entries: &[TimelineEntry],
    pred: impl Fn(&TimelineEntry) -> bool,
    comparisons: &mut usize,
) -> usize {
    let mut lo = 0usize;
    let mut hi = entries.len();
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        *comparisons += 1;
        if pred(&entries[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
