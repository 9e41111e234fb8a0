//! Serializable pipeline outputs: the combined JSON report and the TSV
//! tables written next to it.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fusion::{ObjectiveKind, ObjectiveReport};
use crate::nerloc::{LocationFrequency, NerScore};
use crate::topics::{ExperimentResult, Topic, TopicAssignment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, InputDigest>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub error: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionStage {
    pub method: String,
    pub threshold: f64,
    pub objective: ObjectiveKind,
    pub model_names: Vec<String>,
    pub n_rows: usize,
    pub result: ObjectiveReport,
    pub simple_fusion: ObjectiveReport,
    pub individual: Vec<ModelScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerStage {
    pub n_sequences: usize,
    pub exact: NerScore,
    pub partial: NerScore,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stages {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionStage>,
    /// Every search method side by side, best first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize: Option<Vec<FusionStage>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ner: Option<NerStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locations: Option<LocationFrequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topics: Option<Vec<ExperimentResult>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub provenance: Provenance,
    pub stages: Stages,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("non-finite or missing number at {0}")]
    NonFinite(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineReport {
    /// Checks that every numeric field is finite. Non-finite floats
    /// serialize to `null`, and no field of a valid report is ever `null`.
    pub fn validate(&self) -> Result<(), ReportError> {
        fn walk(v: &serde_json::Value, path: &mut String) -> Result<(), ReportError> {
            match v {
                serde_json::Value::Null => Err(ReportError::NonFinite(path.clone())),
                serde_json::Value::Array(items) => {
                    for (i, item) in items.iter().enumerate() {
                        let len = path.len();
                        path.push_str(&format!("[{i}]"));
                        walk(item, path)?;
                        path.truncate(len);
                    }
                    Ok(())
                }
                serde_json::Value::Object(map) => {
                    for (k, item) in map {
                        let len = path.len();
                        path.push('.');
                        path.push_str(k);
                        walk(item, path)?;
                        path.truncate(len);
                    }
                    Ok(())
                }
                _ => Ok(()),
            }
        }
        walk(&serde_json::to_value(self)?, &mut String::from("$"))
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// One bar of a keyword chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub topic_id: usize,
    pub rank: usize,
    pub term: String,
    pub score: f64,
}

pub fn plot_rows(topics: &[Topic]) -> Vec<PlotRow> {
    let mut rows: Vec<PlotRow> = topics
        .iter()
        .flat_map(|t| {
            t.keywords.iter().enumerate().map(move |(rank, k)| PlotRow {
                topic_id: t.topic_id,
                rank: rank + 1,
                term: k.term.clone(),
                score: k.score,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.topic_id, r.rank));
    rows
}

/// `topic_id\trank\tterm\tscore`, sorted by topic then rank (1-based).
pub fn format_plot_data(topics: &[Topic]) -> String {
    let mut out = String::from("topic_id\trank\tterm\tscore\n");
    for r in plot_rows(topics) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.topic_id, r.rank, r.term, r.score
        ));
    }
    out
}

pub fn emit_plot_data(topics: &[Topic], path: &Path) -> io::Result<()> {
    fs::write(path, format_plot_data(topics))
}

pub fn parse_plot_data(contents: &str) -> Result<Vec<PlotRow>, String> {
    let mut lines = contents.lines();
    if lines.next() != Some("topic_id\trank\tterm\tscore") {
        return Err("missing plot data header".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split('\t').collect();
            let bad = || format!("line {}: malformed row {line:?}", i + 2);
            if cells.len() != 4 {
                return Err(bad());
            }
            Ok(PlotRow {
                topic_id: cells[0].parse().map_err(|_| bad())?,
                rank: cells[1].parse().map_err(|_| bad())?,
                term: cells[2].to_string(),
                score: cells[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// `tweet_id\ttopic_id\tconfidence`.
pub fn format_assignments(assignments: &[TopicAssignment]) -> String {
    let mut out = String::from("tweet_id\ttopic_id\tconfidence\n");
    for a in assignments {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            a.tweet_id, a.topic_id, a.confidence
        ));
    }
    out
}

/// `model\tweight`.
pub fn format_weights(model_names: &[String], weights: &[f64]) -> String {
    let mut out = String::from("model\tweight\n");
    for (m, w) in model_names.iter().zip(weights) {
        out.push_str(&format!("{m}\t{w}\n"));
    }
    out
}
