//! Topic modeling over document embeddings.
//!
//! The pipeline reduces the embeddings to a few dimensions ([`reduce`]),
//! clusters them with HDBSCAN ([`cluster`]), scores cluster vocabularies
//! with class-based TF-IDF ([`ctfidf`]) and assembles ranked topics with a
//! per-document confidence ([`extract_topics`], [`assign_confidence`]).
//! [`run_experiment`] composes the whole thing for the three corpus
//! selections: all relevant tweets, tweets mentioning a frequent location,
//! and tweets mentioning one location.

mod assemble;
mod ctfidf;
mod experiment;
mod hdbscan;
mod reduce;

use serde::{Deserialize, Serialize};

pub use crate::corpus::EmbeddingMatrix;
pub use assemble::{assign_confidence, extract_topics, medoid};
pub use ctfidf::{ctfidf, ClusterTermScores};
pub use experiment::{run_experiment, ExperimentMode, ExperimentResult, TopicConfig};
pub use hdbscan::cluster;
pub use reduce::{pca, reduce};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopicError {
    #[error("invalid reduction config: {0}")]
    InvalidConfig(String),
    #[error(
        "{n} documents is too few for n_neighbours = {n_neighbours}; \
         lower n_neighbours below {n} or supply more documents"
    )]
    TooFewDocuments { n: usize, n_neighbours: usize },
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("no embedding row for tweet {0:?}")]
    MissingEmbedding(String),
    #[error("min_cluster_size must be at least 2, got {0}")]
    MinClusterSize(usize),
}

pub type Result<T> = std::result::Result<T, TopicError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMethod {
    /// Fuzzy k-NN graph layout with attractive/repulsive descent.
    NeighborEmbedding,
    /// Projection on the leading principal axes.
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReductionConfig {
    pub n_neighbours: usize,
    pub n_components: usize,
    pub seed: u64,
    pub method: ReductionMethod,
    /// Layout optimization epochs (neighbor embedding only).
    pub n_epochs: usize,
    /// Minimum distance between embedded points (neighbor embedding only).
    pub min_dist: f64,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            n_neighbours: 15,
            n_components: 5,
            seed: 0,
            method: ReductionMethod::NeighborEmbedding,
            n_epochs: 200,
            min_dist: 0.1,
        }
    }
}

/// HDBSCAN output. Labels are `-1` for noise, otherwise `0..n_clusters`,
/// numbered in order of each cluster's first member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<i64>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }

    /// Member indices per cluster label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: usize,
    /// Descending by score, ties by term.
    pub keywords: Vec<Keyword>,
    pub member_ids: Vec<String>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub tweet_id: String,
    /// `-1` for noise.
    pub topic_id: i64,
    /// In `(0, 1]` for members, `0` for noise.
    pub confidence: f64,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}
