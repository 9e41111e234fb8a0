use std::cmp::Ordering;

use super::{accuracy, normalize, ObjectiveKind, ObjectiveReport, ScoreMatrix, WeightVector};
use crate::par;

/// A scored candidate. Ordering: lower error, then closer to equal weights.
/// Only strict improvements replace the incumbent, so among full ties the
/// earliest evaluation wins.
#[derive(Debug, Clone)]
pub(super) struct Candidate {
    pub weights: Vec<f64>,
    pub accuracy: f64,
    pub error: f64,
    pub spread: f64,
}

impl Candidate {
    /// Ranking key without the evaluation order; used to compare raw
    /// positions inside one optimizer.
    pub fn key(&self) -> (f64, f64) {
        (self.error, self.spread)
    }

    fn beats(&self, other: &Candidate) -> bool {
        compare_keys(self.key(), other.key()) == Ordering::Less
    }
}

pub(super) fn compare_keys(a: (f64, f64), b: (f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
}

/// Objective evaluator that remembers the best candidate ever scored.
pub(super) struct Search<'a> {
    scores: &'a ScoreMatrix,
    labels: &'a [u8],
    threshold: f64,
    kind: ObjectiveKind,
    best: Option<Candidate>,
    evaluations: usize,
}

impl<'a> Search<'a> {
    pub fn new(
        scores: &'a ScoreMatrix,
        labels: &'a [u8],
        threshold: f64,
        kind: ObjectiveKind,
    ) -> Self {
        Search {
            scores,
            labels,
            threshold,
            kind,
            best: None,
            evaluations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.scores.n_models()
    }

    fn score(&self, raw: &[f64]) -> Candidate {
        let weights = normalize(raw);
        let accuracy = accuracy(
            self.scores,
            self.labels,
            &weights,
            self.threshold,
            self.kind,
        );
        let e = 1.0 / weights.len() as f64;
        let spread = weights
            .iter()
            .map(|w| (w - e) * (w - e))
            .sum::<f64>()
            .sqrt();
        Candidate {
            weights,
            accuracy,
            error: 1.0 - accuracy,
            spread,
        }
    }

    fn offer(&mut self, c: &Candidate) {
        if self.best.as_ref().is_none_or(|b| c.beats(b)) {
            self.best = Some(c.clone());
        }
    }

    /// Scores one raw (unnormalized) point.
    pub fn evaluate(&mut self, raw: &[f64]) -> Candidate {
        let c = self.score(raw);
        self.evaluations += 1;
        self.offer(&c);
        c
    }

    /// Scores independent points, in parallel when enabled. The best-so-far
    /// update runs in input order, so the outcome does not depend on threads.
    pub fn evaluate_batch(&mut self, raws: &[Vec<f64>]) -> Vec<Candidate> {
        let scored = {
            let this = &*self;
            par::map(raws, |r| this.score(r))
        };
        self.evaluations += raws.len();
        for c in &scored {
            self.offer(c);
        }
        scored
    }

    pub fn best_error(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.error)
    }

    pub fn into_report(self) -> ObjectiveReport {
        let best = self.best.expect("at least one candidate is always scored");
        ObjectiveReport {
            error: best.error,
            accuracy: best.accuracy,
            weights: WeightVector(best.weights),
            evaluations: self.evaluations,
        }
    }
}
