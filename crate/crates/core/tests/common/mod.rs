//! Brute-force reference implementations used as test oracles. Each one is
//! written from the definition, independently of the library code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use floodpipe::{BioTag, EmbeddingMatrix, ScoreMatrix, TokenTagSequence};

fn tag_index(t: BioTag) -> usize {
    match t {
        BioTag::BLoc => 0,
        BioTag::ILoc => 1,
        BioTag::Out => 2,
    }
}

/// 3×3 confusion matrix indexed `[gold][pred]` over (B-LOC, I-LOC, O),
/// pairing sequences by id.
pub fn confusion(gold: &[TokenTagSequence], pred: &[TokenTagSequence]) -> [[usize; 3]; 3] {
    let mut m = [[0usize; 3]; 3];
    for g in gold {
        let p = pred
            .iter()
            .find(|p| p.tweet_id == g.tweet_id)
            .expect("aligned fixture");
        for k in 0..g.tags.len() {
            m[tag_index(g.tags[k])][tag_index(p.tags[k])] += 1;
        }
    }
    m
}

/// (precision, recall, f1) recounted from the confusion matrix.
pub fn brute_f1(
    gold: &[TokenTagSequence],
    pred: &[TokenTagSequence],
    exact: bool,
) -> (f64, f64, f64) {
    let m = confusion(gold, pred);
    let tp = if exact {
        m[0][0] + m[1][1]
    } else {
        m[0][0] + m[0][1] + m[1][0] + m[1][1]
    };
    let pred_pos: usize = (0..3).map(|g| m[g][0] + m[g][1]).sum();
    let gold_pos: usize = (0..3).map(|p| m[0][p] + m[1][p]).sum();
    if pred_pos + gold_pos == 0 {
        return (1.0, 1.0, 1.0);
    }
    let precision = if pred_pos == 0 {
        0.0
    } else {
        tp as f64 / pred_pos as f64
    };
    let recall = if gold_pos == 0 {
        0.0
    } else {
        tp as f64 / gold_pos as f64
    };
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (pred_pos + gold_pos) as f64
    };
    (precision, recall, f1)
}

/// c-TF-IDF straight from the formula, one term at a time.
pub fn brute_ctfidf(
    docs: &BTreeMap<i64, String>,
    vocabulary: &BTreeSet<String>,
) -> BTreeMap<i64, BTreeMap<String, f64>> {
    let in_vocab = |text: &String| -> Vec<String> {
        text.split_whitespace()
            .filter(|t| vocabulary.contains(*t))
            .map(str::to_string)
            .collect()
    };
    let tokens: BTreeMap<i64, Vec<String>> = docs.iter().map(|(&c, t)| (c, in_vocab(t))).collect();
    let total_tokens: usize = tokens.values().map(Vec::len).sum();
    let a = total_tokens as f64 / docs.len() as f64;
    let mut out = BTreeMap::new();
    for (&c, toks) in &tokens {
        let mut scores = BTreeMap::new();
        for term in vocabulary {
            let tf = toks.iter().filter(|t| *t == term).count();
            if tf == 0 {
                continue;
            }
            let f: usize = tokens
                .values()
                .map(|ts| ts.iter().filter(|t| *t == term).count())
                .sum();
            scores.insert(term.clone(), tf as f64 * (1.0 + a / f as f64).ln());
        }
        out.insert(c, scores);
    }
    out
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Mean silhouette coefficient over all points (labels are group ids).
pub fn silhouette(points: &EmbeddingMatrix, labels: &[usize]) -> f64 {
    let n = points.n_rows();
    let groups: BTreeSet<usize> = labels.iter().copied().collect();
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |g: usize| {
            let (sum, cnt) = (0..n)
                .filter(|&j| j != i && labels[j] == g)
                .fold((0.0, 0usize), |(s, c), j| {
                    (s + euclid(points.row(i), points.row(j)), c + 1)
                });
            if cnt == 0 {
                0.0
            } else {
                sum / cnt as f64
            }
        };
        let a = mean_to(labels[i]);
        let b = groups
            .iter()
            .filter(|&&g| g != labels[i])
            .map(|&g| mean_to(g))
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Fraction of points whose cluster's majority ground-truth group equals
/// their own group. Noise (`-1`) counts as impure.
pub fn purity(labels: &[i64], truth: &[usize]) -> f64 {
    let mut votes: BTreeMap<i64, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&l, &t) in labels.iter().zip(truth) {
        if l >= 0 {
            *votes.entry(l).or_default().entry(t).or_default() += 1;
        }
    }
    let majority: usize = votes
        .values()
        .map(|v| v.values().max().copied().unwrap_or(0))
        .sum();
    majority as f64 / labels.len() as f64
}

/// Thresholded accuracy of weights `w` (assumed normalized), row by row.
pub fn brute_accuracy(scores: &ScoreMatrix, labels: &[u8], w: &[f64], threshold: f64) -> f64 {
    let mut right = 0usize;
    for (i, &y) in labels.iter().enumerate() {
        let mut s = 0.0;
        for (j, wj) in w.iter().enumerate() {
            s += wj * scores.get(i, j);
        }
        if u8::from(s >= threshold) == y {
            right += 1;
        }
    }
    right as f64 / labels.len() as f64
}

/// Pairwise Euclidean distances.
pub fn distances(points: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    (0..points.n_rows())
        .map(|i| {
            (0..points.n_rows())
                .map(|j| euclid(points.row(i), points.row(j)))
                .collect()
        })
        .collect()
}
