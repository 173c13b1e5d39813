//! Query planning: temporal extraction and tag routing.
//!
//! A natural-language query is turned into a [`QueryPlan`] carrying three
//! independent signals: explicit time intervals parsed from the text, the
//! top-k tags most similar to the query embedding, and the query embedding
//! itself. Execution of a plan lives in [`crate::engine`].

use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Datelike, Months, NaiveDate};
use serde::Serialize;

use crate::arena::cosine;
use crate::dag::TagDag;
use crate::episode::EpisodeId;
use crate::tag::TagId;
use crate::temporal::TimeInterval;

/// Parsed and routed form of one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPlan {
    pub raw: String,
    pub user: String,
    pub embedding: Vec<f32>,
    /// Explicit time intervals found in the query (possibly none).
    pub intervals: Vec<TimeInterval>,
    /// Routed seed tags with similarity, descending (ties: tag ascending).
    pub seed_tags: Vec<(TagId, f64)>,
    /// Seeds plus DAG expansion, BFS order.
    pub expanded_tags: Vec<TagId>,
    /// Similarity computations the router performed (at most `|V|`).
    pub router_sims: usize,
    /// Nodes the expansion traversal visited.
    pub expansion_visits: usize,
    /// Planning-stage costs (embed, parse, route, expand); the retrieval
    /// stages stay zero until the plan is executed.
    pub timings: StageTimings,
}

/// Per-stage wall-clock costs in microseconds. Zero when the engine has no
/// real clock installed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StageTimings {
    pub embed_us: u64,
    pub parse_us: u64,
    pub route_us: u64,
    pub expand_us: u64,
    pub filter_us: u64,
    pub rank_us: u64,
    pub total_us: u64,
}

/// Ranked hits plus everything needed to audit how they were found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalResult {
    /// `(episode, cosine score)` descending, ties by ascending id.
    pub hits: Vec<(EpisodeId, f64)>,
    /// Episodes actually scored by the ranker.
    pub candidates_examined: usize,
    /// True when neither tags nor intervals narrowed the search and the
    /// user's full episode set was scanned.
    pub used_fallback: bool,
    pub plan: QueryPlan,
    pub timings: StageTimings,
}

/// Select the `k` tags with the highest cosine similarity to the query
/// embedding, descending, ties broken by ascending tag. The cumulative-
/// similarity objective is separable, so the per-tag top-k is exact.
pub fn route_tags(query_embedding: &[f32], dag: &TagDag, k: usize) -> Vec<(TagId, f64)> {
    route_tags_counted(query_embedding, dag, k).0
}

/// [`route_tags`] plus the number of similarity computations performed.
pub fn route_tags_counted(
    query_embedding: &[f32],
    dag: &TagDag,
    k: usize,
) -> (Vec<(TagId, f64)>, usize) {
    let query_norm = {
        let sum: f64 = query_embedding.iter().map(|x| *x as f64 * *x as f64).sum();
        crate::math::sqrt(sum)
    };
    if query_norm == 0.0 {
        return (Vec::new(), 0);
    }
    let mut scored: Vec<(&TagId, f64)> = Vec::with_capacity(dag.len());
    let mut sims = 0usize;
    for (tag, node) in dag.iter() {
        if node.embedding.len() != query_embedding.len() {
            continue;
        }
        let mut dot = 0.0f64;
        let mut tag_sum = 0.0f64;
        for (q, t) in query_embedding.iter().zip(&node.embedding) {
            dot += *q as f64 * *t as f64;
            tag_sum += *t as f64 * *t as f64;
        }
        if tag_sum == 0.0 {
            // tags with an unusable embedding can never be routed to
            continue;
        }
        sims += 1;
        scored.push((tag, dot / (query_norm * crate::math::sqrt(tag_sum))));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    (scored.into_iter().map(|(tag, sim)| (tag.clone(), sim)).collect(), sims)
}

const MS_PER_DAY: i64 = 86_400_000;

/// Extract explicit temporal expressions into half-open `[start, end)`
/// intervals, each widened to its natural granularity (day, month, or
/// year). Recognized forms:
///
/// - ISO dates: `2022-03-16`
/// - `March 16, 2022` (comma optional), `March 2022`, bare years
///   1900-2100
/// - `between <date> and <date>` as one spanning interval
/// - `last week` / `last month` / `last year` relative to `reference_now`
///
/// Text with no temporal content yields an empty list, never an error.
pub fn parse_temporal(query: &str, reference_now: i64) -> Vec<TimeInterval> {
    let tokens: Vec<String> = query
        .split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect();

    let mut intervals = Vec::new();
    let mut i = 0usize;
    while i < tokens.len() {
        // between <date> and <date>
        if tokens[i] == "between" {
            if let Some((len_a, a)) = match_date(&tokens[i + 1..]) {
                let after_a = i + 1 + len_a;
                if tokens.get(after_a).map(String::as_str) == Some("and") {
                    if let Some((len_b, b)) = match_date(&tokens[after_a + 1..]) {
                        if let Ok(span) = TimeInterval::new(a.start, b.end) {
                            intervals.push(span);
                            i = after_a + 1 + len_b;
                            continue;
                        }
                    }
                }
            }
        }
        // last week / month / year
        if tokens[i] == "last" {
            if let Some(unit) = tokens.get(i + 1) {
                if let Some(interval) = relative_interval(unit, reference_now) {
                    intervals.push(interval);
                    i += 2;
                    continue;
                }
            }
        }
        if let Some((len, interval)) = match_date(&tokens[i..]) {
            intervals.push(interval);
            i += len;
            continue;
        }
        i += 1;
    }
    intervals
}

/// Try to match a date expression at the start of `tokens`; returns the
/// number of tokens consumed and the widened interval.
fn match_date(tokens: &[String]) -> Option<(usize, TimeInterval)> {
    let first = tokens.first()?;

    if let Some(month) = month_number(first) {
        // Month D, YYYY
        if let (Some(day), Some(year)) = (
            tokens.get(1).and_then(|t| t.parse::<u32>().ok()),
            tokens.get(2).and_then(|t| parse_year(t)),
        ) {
            if (1..=31).contains(&day) {
                if let Some(interval) = day_interval(year, month, day) {
                    return Some((3, interval));
                }
            }
        }
        // Month YYYY
        if let Some(year) = tokens.get(1).and_then(|t| parse_year(t)) {
            return Some((2, month_interval(year, month)?));
        }
        return None;
    }

    // ISO YYYY-MM-DD
    if let Some(interval) = parse_iso_date(first) {
        return Some((1, interval));
    }

    // bare year
    if let Some(year) = parse_year(first) {
        return Some((1, year_interval(year)?));
    }

    None
}

fn parse_iso_date(token: &str) -> Option<TimeInterval> {
    let mut parts = token.split('-');
    let year: i32 = parts.next()?.parse().ok()?;
    let month: u32 = parts.next()?.parse().ok()?;
    let day: u32 = parts.next()?.parse().ok()?;
    if parts.next().is_some() || !(1900..=2100).contains(&year) {
        return None;
    }
    day_interval(year, month, day)
}

/// Years outside 1900-2100 are treated as ordinary numbers, not dates.
fn parse_year(token: &str) -> Option<i32> {
    if token.len() != 4 {
        return None;
    }
    let year: i32 = token.parse().ok()?;
    (1900..=2100).contains(&year).then_some(year)
}

fn month_number(token: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september",
        "october", "november", "december",
    ];
    MONTHS
        .iter()
        .position(|m| *m == token || (token.len() == 3 && m.starts_with(token)))
        .map(|i| i as u32 + 1)
}

fn ms_of(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp_millis()
}

fn day_interval(year: i32, month: u32, day: u32) -> Option<TimeInterval> {
    let date = NaiveDate::from_ymd_opt(year, month, day)?;
    let start = ms_of(date);
    TimeInterval::new(start, start + MS_PER_DAY).ok()
}

fn month_interval(year: i32, month: u32) -> Option<TimeInterval> {
    let start = NaiveDate::from_ymd_opt(year, month, 1)?;
    let end = start.checked_add_months(Months::new(1))?;
    TimeInterval::new(ms_of(start), ms_of(end)).ok()
}

fn year_interval(year: i32) -> Option<TimeInterval> {
    let start = NaiveDate::from_ymd_opt(year, 1, 1)?;
    let end = NaiveDate::from_ymd_opt(year + 1, 1, 1)?;
    TimeInterval::new(ms_of(start), ms_of(end)).ok()
}

/// `last week` is the 7 days before the start of today (UTC); `last month`
/// and `last year` are the previous calendar month and year.
fn relative_interval(unit: &str, reference_now: i64) -> Option<TimeInterval> {
    let today = DateTime::from_timestamp_millis(reference_now)?.date_naive();
    match unit {
        "week" => {
            let end = ms_of(today);
            TimeInterval::new(end - 7 * MS_PER_DAY, end).ok()
        }
        "month" => {
            let this_month = NaiveDate::from_ymd_opt(today.year(), today.month(), 1)?;
            let prev_month = this_month.checked_sub_months(Months::new(1))?;
            TimeInterval::new(ms_of(prev_month), ms_of(this_month)).ok()
        }
        "year" => {
            let jan1 = NaiveDate::from_ymd_opt(today.year(), 1, 1)?;
            let prev_jan1 = NaiveDate::from_ymd_opt(today.year() - 1, 1, 1)?;
            TimeInterval::new(ms_of(prev_jan1), ms_of(jan1)).ok()
        }
        _ => None,
    }
}
