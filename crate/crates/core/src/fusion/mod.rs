//! Weighted late fusion of per-model class-1 posteriors and derivative-free
//! search of the fusion weights.
//!
//! The fused score of a tweet is `S = w_1 C_1 + ... + w_M C_M`, where `C_n`
//! is the posterior of model `n` and the weights are non-negative and sum to
//! one. Weight search minimizes the validation error `e = 1 - A`, where `A`
//! is by default the accuracy of the fused score thresholded at 0.5
//! ([`ObjectiveKind::ThresholdedAccuracy`]). The literal weighted-posterior
//! reading of the accuracy term is available as
//! [`ObjectiveKind::WeightedPosterior`].
//!
//! Searches run in the box `[0, 1]^M`; every candidate is normalized to the
//! simplex before it is scored. Whatever the method, equal weights and all
//! `M` one-hot vectors are scored first, so the result is never worse than
//! simple fusion or the best single model.

mod grid;
mod nelder_mead;
mod powell;
mod pso;
mod search;

use serde::{Deserialize, Serialize};

pub use crate::corpus::ScoreMatrix;
pub use grid::{grid_points, GRID_MAX_MODELS};
pub use nelder_mead::NelderMeadParams;
pub use powell::PowellParams;
pub use pso::PsoParams;

use search::Search;

/// Decision threshold on the fused score.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Grid resolution used by the `grid` method and as the validation oracle.
pub const DEFAULT_GRID_STEP: f64 = 0.05;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FusionError {
    #[error("weight vector has {weights} entries but the score matrix has {models} models")]
    DimensionMismatch { weights: usize, models: usize },
    #[error("{labels} labels for {rows} score rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("label {label} at row {row} is not 0 or 1")]
    InvalidLabel { row: usize, label: u8 },
    #[error("grid search over {models} models refused (at most {GRID_MAX_MODELS})")]
    GridTooLarge { models: usize },
    #[error("grid step {0} must lie in (0, 0.5]")]
    InvalidStep(f64),
    #[error("iteration budget must be at least 1")]
    ZeroBudget,
}

pub type Result<T> = std::result::Result<T, FusionError>;

/// Fusion weights, one per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn equal(m: usize) -> Self {
        WeightVector(vec![1.0 / m as f64; m])
    }

    pub fn one_hot(m: usize, j: usize) -> Self {
        let mut w = vec![0.0; m];
        w[j] = 1.0;
        WeightVector(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Projects onto the simplex: negative or non-finite entries become 0,
    /// then the vector is divided by its sum. An all-zero vector maps to
    /// equal weights. Vectors already on the simplex (sum within 1e-12 of 1)
    /// are returned unchanged, so normalizing is idempotent.
    pub fn normalized(&self) -> WeightVector {
        WeightVector(normalize(&self.0))
    }

    /// Euclidean distance to equal weights.
    pub fn distance_to_equal(&self) -> f64 {
        let e = 1.0 / self.len() as f64;
        self.0.iter().map(|w| (w - e) * (w - e)).sum::<f64>().sqrt()
    }
}

pub(crate) fn normalize(raw: &[f64]) -> Vec<f64> {
    let clean: Vec<f64> = raw
        .iter()
        .map(|&w| if w.is_finite() && w > 0.0 { w } else { 0.0 })
        .collect();
    let sum: f64 = clean.iter().sum();
    // within rounding of the simplex already: dividing again would only
    // shuffle the last bits
    if (sum - 1.0).abs() <= 1e-12 && clean.as_slice() == raw {
        return clean;
    }
    if sum <= 0.0 || !sum.is_finite() {
        return vec![1.0 / raw.len() as f64; raw.len()];
    }
    clean.into_iter().map(|w| w / sum).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionResult {
    pub fused_scores: Vec<f64>,
    /// `1` iff the fused score is at least `threshold`.
    pub predictions: Vec<u8>,
    pub threshold: f64,
}

/// How the accuracy term of the error `1 - A` is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Fraction of rows whose thresholded fused score matches the label.
    #[default]
    ThresholdedAccuracy,
    /// Mean fused posterior assigned to the true class.
    WeightedPosterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    /// Always exactly `1 - accuracy`.
    pub error: f64,
    pub accuracy: f64,
    /// Normalized weights that achieved `error`.
    pub weights: WeightVector,
    /// Number of candidate weight vectors scored (1 for a plain evaluation).
    pub evaluations: usize,
}

impl ObjectiveReport {
    fn from_accuracy(accuracy: f64, weights: WeightVector, evaluations: usize) -> Self {
        ObjectiveReport {
            error: 1.0 - accuracy,
            accuracy,
            weights,
            evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerMethod {
    Pso,
    NelderMead,
    Powell,
    Grid,
}

impl OptimizerMethod {
    pub const ALL: [OptimizerMethod; 4] = [
        OptimizerMethod::Pso,
        OptimizerMethod::NelderMead,
        OptimizerMethod::Powell,
        OptimizerMethod::Grid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerMethod::Pso => "pso",
            OptimizerMethod::NelderMead => "nelder-mead",
            OptimizerMethod::Powell => "powell",
            OptimizerMethod::Grid => "grid",
        }
    }

    /// Default `iteration_budget`: swarm iterations for PSO, simplex steps
    /// for Nelder-Mead, direction-set sweeps for Powell. Ignored by grid.
    pub fn default_budget(self) -> usize {
        match self {
            OptimizerMethod::Pso => 100,
            OptimizerMethod::NelderMead => 2000,
            OptimizerMethod::Powell => 60,
            OptimizerMethod::Grid => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub seed: u64,
    pub iteration_budget: usize,
    pub threshold: f64,
    pub objective: ObjectiveKind,
    pub pso: PsoParams,
    pub nelder_mead: NelderMeadParams,
    pub powell: PowellParams,
    pub grid_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::new(OptimizerMethod::Powell, 0)
    }
}

impl OptimizerConfig {
    pub fn new(method: OptimizerMethod, seed: u64) -> Self {
        OptimizerConfig {
            method,
            seed,
            iteration_budget: method.default_budget(),
            threshold: DEFAULT_THRESHOLD,
            objective: ObjectiveKind::default(),
            pso: PsoParams::default(),
            nelder_mead: NelderMeadParams::default(),
            powell: PowellParams::default(),
            grid_step: DEFAULT_GRID_STEP,
        }
    }
}

fn check_weights(scores: &ScoreMatrix, w: &WeightVector) -> Result<()> {
    if w.len() != scores.n_models() {
        return Err(FusionError::DimensionMismatch {
            weights: w.len(),
            models: scores.n_models(),
        });
    }
    Ok(())
}

fn check_labels(scores: &ScoreMatrix, labels: &[u8]) -> Result<()> {
    if labels.len() != scores.n_rows() {
        return Err(FusionError::LabelCount {
            labels: labels.len(),
            rows: scores.n_rows(),
        });
    }
    if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(FusionError::InvalidLabel { row, label });
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weighted sum of the model posteriors per row, thresholded.
pub fn fuse(scores: &ScoreMatrix, w: &WeightVector, threshold: f64) -> Result<FusionResult> {
    check_weights(scores, w)?;
    let w = w.normalized();
    let fused_scores: Vec<f64> = scores.rows().map(|row| dot(row, w.as_slice())).collect();
    let predictions = fused_scores
        .iter()
        .map(|&s| u8::from(s >= threshold))
        .collect();
    Ok(FusionResult {
        fused_scores,
        predictions,
        threshold,
    })
}

/// Fusion with equal weights `1/M`.
pub fn simple_fusion(scores: &ScoreMatrix, threshold: f64) -> FusionResult {
    fuse(scores, &WeightVector::equal(scores.n_models()), threshold)
        .expect("equal weights always match the model count")
}

/// Validation error of `w` under the default thresholded-accuracy objective.
pub fn objective(
    scores: &ScoreMatrix,
    labels: &[u8],
    w: &WeightVector,
    threshold: f64,
) -> Result<ObjectiveReport> {
    objective_with(
        scores,
        labels,
        w,
        threshold,
        ObjectiveKind::ThresholdedAccuracy,
    )
}

pub fn objective_with(
    scores: &ScoreMatrix,
    labels: &[u8],
    w: &WeightVector,
    threshold: f64,
    kind: ObjectiveKind,
) -> Result<ObjectiveReport> {
    check_weights(scores, w)?;
    check_labels(scores, labels)?;
    let w = w.normalized();
    let accuracy = accuracy(scores, labels, w.as_slice(), threshold, kind);
    Ok(ObjectiveReport::from_accuracy(accuracy, w, 1))
}

/// Accuracy term for already-normalized weights.
pub(crate) fn accuracy(
    scores: &ScoreMatrix,
    labels: &[u8],
    w: &[f64],
    threshold: f64,
    kind: ObjectiveKind,
) -> f64 {
    let n = scores.n_rows() as f64;
    match kind {
        ObjectiveKind::ThresholdedAccuracy => {
            let correct = scores
                .rows()
                .zip(labels)
                .filter(|(row, &y)| u8::from(dot(row, w) >= threshold) == y)
                .count();
            correct as f64 / n
        }
        ObjectiveKind::WeightedPosterior => {
            let total: f64 = scores
                .rows()
                .zip(labels)
                .map(|(row, &y)| {
                    let s = dot(row, w);
                    if y == 1 {
                        s
                    } else {
                        1.0 - s
                    }
                })
                .sum();
            total / n
        }
    }
}

/// Searches fusion weights minimizing the validation error.
///
/// Deterministic for a given `config` (including `config.seed`). Running
/// out of iteration budget is not an error: the best candidate seen so far
/// is returned. Among candidates with equal error the one closest to equal
/// weights wins, then the one evaluated first.
pub fn optimize_weights(
    scores: &ScoreMatrix,
    labels: &[u8],
    config: &OptimizerConfig,
) -> Result<ObjectiveReport> {
    check_labels(scores, labels)?;
    if config.iteration_budget == 0 {
        return Err(FusionError::ZeroBudget);
    }
    let m = scores.n_models();
    if config.method == OptimizerMethod::Grid && m > GRID_MAX_MODELS {
        return Err(FusionError::GridTooLarge { models: m });
    }
    let mut search = Search::new(scores, labels, config.threshold, config.objective);
    let mut seeds = vec![WeightVector::equal(m).0];
    if m > 1 {
        seeds.extend((0..m).map(|j| WeightVector::one_hot(m, j).0));
    }
    search.evaluate_batch(&seeds);
    if m > 1 {
        match config.method {
            OptimizerMethod::Pso => pso::run(
                &mut search,
                &config.pso,
                config.iteration_budget,
                config.seed,
            ),
            OptimizerMethod::NelderMead => nelder_mead::run(
                &mut search,
                &config.nelder_mead,
                config.iteration_budget,
                config.seed,
            ),
            OptimizerMethod::Powell => powell::run(
                &mut search,
                &config.powell,
                config.iteration_budget,
                config.seed,
            ),
            OptimizerMethod::Grid => {
                let points = grid::grid_points(m, config.grid_step)?;
                search.evaluate_batch(&points);
            }
        }
    }
    Ok(search.into_report())
}

/// Exhaustive search over the simplex grid with spacing `1/ceil(1/step)`.
/// Refuses more than [`GRID_MAX_MODELS`] models.
pub fn grid_oracle(scores: &ScoreMatrix, labels: &[u8], step: f64) -> Result<ObjectiveReport> {
    grid_oracle_with(
        scores,
        labels,
        step,
        DEFAULT_THRESHOLD,
        ObjectiveKind::default(),
    )
}

pub fn grid_oracle_with(
    scores: &ScoreMatrix,
    labels: &[u8],
    step: f64,
    threshold: f64,
    kind: ObjectiveKind,
) -> Result<ObjectiveReport> {
    check_labels(scores, labels)?;
    let points = grid::grid_points(scores.n_models(), step)?;
    let mut search = Search::new(scores, labels, threshold, kind);
    search.evaluate_batch(&points);
    Ok(search.into_report())
}
