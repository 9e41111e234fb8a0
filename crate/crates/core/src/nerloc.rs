//! Location spans from BIO tag sequences, token-level exact and partial F1,
//! and location frequency tables.
//!
//! Scoring is token level. A token counts as a predicted positive when its
//! predicted tag is `B-LOC` or `I-LOC`, and as a gold positive when its gold
//! tag is. It is a true positive under the exact rule when both tags are
//! location tags and equal, and under the partial rule when both are location
//! tags of either kind.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{BioTag, TokenTagSequence, TweetRecord};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NerError {
    #[error("tweet {0:?} is in the gold file but not in the predictions")]
    MissingPrediction(String),
    #[error("tweet {0:?} is in the predictions but not in the gold file")]
    UnexpectedPrediction(String),
    #[error("tweet {id:?}: {gold} gold tokens but {pred} predicted tokens")]
    LengthMismatch {
        id: String,
        gold: usize,
        pred: usize,
    },
    #[error("duplicate tweet id {0:?}")]
    DuplicateId(String),
}

/// A maximal `B-LOC (I-LOC)*` run. `end` is inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationSpan {
    pub tweet_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    Exact,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NerScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mode: ScoreMode,
}

/// Most frequent normalized locations, descending by count, ties broken
/// lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationFrequency {
    pub entries: Vec<(String, usize)>,
}

impl LocationFrequency {
    pub fn locations(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("location\tcount\n");
        for (loc, count) in &self.entries {
            out.push_str(&format!("{loc}\t{count}\n"));
        }
        out
    }
}

/// Extracts location spans. An `I-LOC` that does not continue a span (first
/// token, or after `O`) opens a new span.
pub fn spans_from_tags(seq: &TokenTagSequence) -> Vec<LocationSpan> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let close = |start: usize, end: usize, spans: &mut Vec<LocationSpan>| {
        spans.push(LocationSpan {
            tweet_id: seq.tweet_id.clone(),
            start,
            end,
            surface: seq.tokens[start..=end].join(" "),
        });
    };
    for (i, tag) in seq.tags.iter().enumerate() {
        match (tag, open) {
            (BioTag::BLoc, Some(s)) => {
                close(s, i - 1, &mut spans);
                open = Some(i);
            }
            (BioTag::BLoc, None) | (BioTag::ILoc, None) => open = Some(i),
            (BioTag::ILoc, Some(_)) => {}
            (BioTag::Out, Some(s)) => {
                close(s, i - 1, &mut spans);
                open = None;
            }
            (BioTag::Out, None) => {}
        }
    }
    if let Some(s) = open {
        close(s, seq.len() - 1, &mut spans);
    }
    spans
}

/// IOB2 tags of length `len` encoding `spans`.
pub fn tags_from_spans(spans: &[LocationSpan], len: usize) -> Vec<BioTag> {
    let mut tags = vec![BioTag::Out; len];
    for s in spans {
        tags[s.start] = BioTag::BLoc;
        for t in &mut tags[s.start + 1..=s.end] {
            *t = BioTag::ILoc;
        }
    }
    tags
}

/// Pairs gold and predicted sequences by tweet id, in gold order.
fn align<'a>(
    gold: &'a [TokenTagSequence],
    pred: &'a [TokenTagSequence],
) -> Result<Vec<(&'a TokenTagSequence, &'a TokenTagSequence)>, NerError> {
    let mut by_id: HashMap<&str, &TokenTagSequence> = HashMap::with_capacity(pred.len());
    for p in pred {
        if by_id.insert(&p.tweet_id, p).is_some() {
            return Err(NerError::DuplicateId(p.tweet_id.clone()));
        }
    }
    let mut seen = HashSet::with_capacity(gold.len());
    let mut pairs = Vec::with_capacity(gold.len());
    for g in gold {
        if !seen.insert(g.tweet_id.as_str()) {
            return Err(NerError::DuplicateId(g.tweet_id.clone()));
        }
        let p = by_id
            .get(g.tweet_id.as_str())
            .ok_or_else(|| NerError::MissingPrediction(g.tweet_id.clone()))?;
        if p.len() != g.len() {
            return Err(NerError::LengthMismatch {
                id: g.tweet_id.clone(),
                gold: g.len(),
                pred: p.len(),
            });
        }
        pairs.push((g, *p));
    }
    if let Some(extra) = pred.iter().find(|p| !seen.contains(p.tweet_id.as_str())) {
        return Err(NerError::UnexpectedPrediction(extra.tweet_id.clone()));
    }
    Ok(pairs)
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    true_pos: usize,
    pred_pos: usize,
    gold_pos: usize,
}

fn count(
    gold: &[TokenTagSequence],
    pred: &[TokenTagSequence],
    mode: ScoreMode,
) -> Result<Counts, NerError> {
    let mut c = Counts::default();
    for (g, p) in align(gold, pred)? {
        for (&gt, &pt) in g.tags.iter().zip(&p.tags) {
            let both = gt.is_location() && pt.is_location();
            let hit = match mode {
                ScoreMode::Exact => both && gt == pt,
                ScoreMode::Partial => both,
            };
            c.true_pos += usize::from(hit);
            c.pred_pos += usize::from(pt.is_location());
            c.gold_pos += usize::from(gt.is_location());
        }
    }
    Ok(c)
}

fn score(c: Counts, mode: ScoreMode) -> NerScore {
    // no location tokens on either side counts as perfect agreement
    if c.pred_pos == 0 && c.gold_pos == 0 {
        return NerScore {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            mode,
        };
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.true_pos, c.pred_pos);
    let recall = ratio(c.true_pos, c.gold_pos);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    NerScore {
        precision,
        recall,
        f1,
        mode,
    }
}

/// Token-level F1 where the predicted tag must equal the gold location tag.
pub fn exact_f1(
    gold: &[TokenTagSequence],
    pred: &[TokenTagSequence],
) -> Result<NerScore, NerError> {
    Ok(score(
        count(gold, pred, ScoreMode::Exact)?,
        ScoreMode::Exact,
    ))
}

/// Token-level F1 where any location tag matches any gold location tag.
pub fn partial_f1(
    gold: &[TokenTagSequence],
    pred: &[TokenTagSequence],
) -> Result<NerScore, NerError> {
    Ok(score(
        count(gold, pred, ScoreMode::Partial)?,
        ScoreMode::Partial,
    ))
}

/// Case-folded surface form with whitespace runs collapsed to one space.
pub fn normalize_location(surface: &str) -> String {
    surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Counts normalized surface forms and returns the `k` most frequent.
pub fn location_frequencies(spans: &[LocationSpan], k: usize) -> LocationFrequency {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in spans {
        let key = normalize_location(&s.surface);
        if !key.is_empty() {
            *counts.entry(key).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = counts.into_iter().collect();
    // BTreeMap order is lexicographic; a stable sort by count keeps it on ties
    entries.sort_by_key(|e| std::cmp::Reverse(e.1));
    entries.truncate(k);
    LocationFrequency { entries }
}

/// Records owning at least one span whose normalized surface equals the
/// normalized `location`. Input order is kept.
pub fn filter_by_location(
    records: &[TweetRecord],
    spans: &[LocationSpan],
    location: &str,
) -> Vec<TweetRecord> {
    filter_by_locations(records, spans, &[location])
}

/// Records mentioning any of `locations`.
pub fn filter_by_locations<S: AsRef<str>>(
    records: &[TweetRecord],
    spans: &[LocationSpan],
    locations: &[S],
) -> Vec<TweetRecord> {
    let wanted: HashSet<String> = locations
        .iter()
        .map(|l| normalize_location(l.as_ref()))
        .collect();
    let ids: HashSet<&str> = spans
        .iter()
        .filter(|s| wanted.contains(&normalize_location(&s.surface)))
        .map(|s| s.tweet_id.as_str())
        .collect();
    records
        .iter()
        .filter(|r| ids.contains(r.id.as_str()))
        .cloned()
        .collect()
}
