//! Batch toolkit for disaster-related social media corpora.
//!
//! The crate turns tweet corpora plus externally produced model artifacts
//! (classifier posteriors, BIO tag predictions, sentence embeddings) into
//! three kinds of result:
//!
//! * relevance predictions from a weighted late fusion of several
//!   classifiers, with the fusion weights searched by derivative-free
//!   optimizers ([`fusion`]);
//! * location mentions extracted from `B-LOC`/`I-LOC` tag sequences, with
//!   exact and partial token-level F1 scoring and frequency tables
//!   ([`nerloc`]);
//! * topic summaries built from reduced embeddings, density clustering and
//!   class-based TF-IDF keyword scores ([`topics`]).
//!
//! [`corpus`] holds the on-disk formats and validating loaders, [`textprep`]
//! the text cleaning profiles and [`report`] the serializable outputs.
//!
//! Inner loops that evaluate many independent candidates run through
//! [`par`], which uses rayon when the `parallel` feature is enabled (the
//! default) and plain iterators otherwise. Results are identical either way.

pub mod corpus;
pub mod fusion;
pub mod nerloc;
pub mod par;
pub mod report;
pub mod seed;
pub mod synthetic;
pub mod textprep;
pub mod topics;

pub use corpus::{
    BioTag, CorpusError, DatasetSplit, EmbeddingMatrix, ScoreMatrix, SplitName, TokenTagSequence,
    TweetRecord,
};
pub use fusion::{
    FusionError, FusionResult, ObjectiveKind, ObjectiveReport, OptimizerConfig, OptimizerMethod,
    WeightVector,
};
pub use nerloc::{LocationFrequency, LocationSpan, NerError, NerScore, ScoreMode};
pub use textprep::{CleanProfile, ProfileKind, StopWords};
pub use topics::{
    ClusterAssignment, ReductionConfig, ReductionMethod, Topic, TopicAssignment, TopicError,
};
