use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::assemble::topic_order;
use super::{
    assign_confidence, cluster, extract_topics, reduce, EmbeddingMatrix, ReductionConfig,
    ReductionMethod, Result, Topic, TopicAssignment, TopicError,
};
use crate::corpus::TweetRecord;
use crate::nerloc::{filter_by_location, filter_by_locations, location_frequencies, LocationSpan};
use crate::textprep::{clean_topics, CleanProfile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "location")]
pub enum ExperimentMode {
    /// Every relevant tweet of the corpus.
    AllRelevant,
    /// Tweets mentioning any of the most frequent locations.
    FrequentLocations,
    /// Tweets mentioning one location.
    SingleLocation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopicConfig {
    pub reduction: ReductionConfig,
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_samples: Option<usize>,
    /// Topics beyond this many (by size) are not reported; their documents
    /// are assigned `-1`.
    pub max_topics: usize,
    pub top_words: usize,
    /// How many locations count as frequent.
    pub frequent_locations: usize,
}

impl Default for TopicConfig {
    fn default() -> Self {
        TopicConfig {
            reduction: ReductionConfig::default(),
            min_cluster_size: 10,
            min_samples: None,
            max_topics: 12,
            top_words: 10,
            frequent_locations: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    #[serde(flatten)]
    pub mode: ExperimentMode,
    pub n_documents: usize,
    /// Clusters found before the topic cap.
    pub n_clusters: usize,
    pub n_noise: usize,
    /// Normalized locations that selected the corpus (location modes only).
    pub locations: Vec<String>,
    pub topics: Vec<Topic>,
    pub assignments: Vec<TopicAssignment>,
}

/// Filters the corpus by `mode`, cleans it, reduces the matching embedding
/// rows, clusters them and assembles topics. Tweets labeled `0` are never
/// included. Location modes need `spans`; without them they select nothing.
pub fn run_experiment(
    records: &[TweetRecord],
    embeddings: &EmbeddingMatrix,
    spans: &[LocationSpan],
    mode: &ExperimentMode,
    profile: &CleanProfile,
    cfg: &TopicConfig,
) -> Result<ExperimentResult> {
    let relevant: Vec<TweetRecord> = records
        .iter()
        .filter(|r| r.label != Some(0))
        .cloned()
        .collect();
    let (selected, locations) = match mode {
        ExperimentMode::AllRelevant => (relevant, Vec::new()),
        ExperimentMode::FrequentLocations => {
            let top = location_frequencies(spans, cfg.frequent_locations.max(1));
            let locs: Vec<String> = top.locations().map(str::to_string).collect();
            (filter_by_locations(&relevant, spans, &locs), locs)
        }
        ExperimentMode::SingleLocation(loc) => (
            filter_by_location(&relevant, spans, loc),
            vec![crate::nerloc::normalize_location(loc)],
        ),
    };

    let empty = |locations| ExperimentResult {
        mode: mode.clone(),
        n_documents: 0,
        n_clusters: 0,
        n_noise: 0,
        locations,
        topics: Vec::new(),
        assignments: Vec::new(),
    };
    if selected.is_empty() {
        return Ok(empty(locations));
    }
    let neighbours = cfg.reduction.n_neighbours;
    if cfg.reduction.method == ReductionMethod::NeighborEmbedding && selected.len() <= neighbours {
        return Err(TopicError::TooFewDocuments {
            n: selected.len(),
            n_neighbours: neighbours,
        });
    }

    let row_of: HashMap<&str, usize> = embeddings
        .row_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let rows = selected
        .iter()
        .map(|r| {
            row_of
                .get(r.id.as_str())
                .copied()
                .ok_or_else(|| TopicError::MissingEmbedding(r.id.clone()))
        })
        .collect::<Result<Vec<usize>>>()?;
    let ids: Vec<String> = selected.iter().map(|r| r.id.clone()).collect();
    let cleaned: Vec<String> = crate::par::map(&selected, |r| clean_topics(&r.text, profile));

    let reduced = reduce(&embeddings.select(&rows), &cfg.reduction)?;
    let min_samples = cfg.min_samples.unwrap_or(cfg.min_cluster_size);
    let assignment = cluster(&reduced, cfg.min_cluster_size, min_samples)?;

    let mut topics = extract_topics(&assignment, &ids, &cleaned, cfg.top_words);
    topics.truncate(cfg.max_topics);
    let mut topic_of_cluster = vec![-1i64; assignment.n_clusters];
    for (topic_id, c) in topic_order(&assignment).into_iter().enumerate() {
        if topic_id < cfg.max_topics {
            topic_of_cluster[c] = topic_id as i64;
        }
    }
    let assignments = assign_confidence(&reduced, &assignment)
        .into_iter()
        .map(|mut a| {
            if a.topic_id >= 0 {
                a.topic_id = topic_of_cluster[a.topic_id as usize];
                if a.topic_id < 0 {
                    a.confidence = 0.0;
                }
            }
            a
        })
        .collect();

    Ok(ExperimentResult {
        mode: mode.clone(),
        n_documents: selected.len(),
        n_clusters: assignment.n_clusters,
        n_noise: assignment.noise_count(),
        locations,
        topics,
        assignments,
    })
}
