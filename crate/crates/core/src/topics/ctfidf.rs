use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Result, TopicError};
use crate::par;

/// Term scores per cluster. Only terms occurring in a cluster are listed.
pub type ClusterTermScores = BTreeMap<i64, BTreeMap<String, f64>>;

/// Class-based TF-IDF over whitespace-tokenized cluster texts:
///
/// `score(t, c) = tf(t, c) * ln(1 + A / f(t))`
///
/// where `tf(t, c)` counts `t` in cluster `c`, `f(t)` counts `t` across all
/// clusters and `A` is the mean number of vocabulary tokens per cluster.
/// Tokens outside `vocabulary` are ignored everywhere.
pub fn ctfidf(
    docs_by_cluster: &BTreeMap<i64, String>,
    vocabulary: &BTreeSet<String>,
) -> Result<ClusterTermScores> {
    if vocabulary.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    let clusters: Vec<(&i64, &String)> = docs_by_cluster.iter().collect();
    let counts: Vec<HashMap<&str, usize>> = par::map(&clusters, |(_, text)| {
        let mut tf: HashMap<&str, usize> = HashMap::new();
        for tok in text.split_whitespace() {
            if vocabulary.contains(tok) {
                *tf.entry(tok).or_default() += 1;
            }
        }
        tf
    });

    let mut total: HashMap<&str, usize> = HashMap::new();
    let mut tokens = 0usize;
    for tf in &counts {
        for (&t, &c) in tf {
            *total.entry(t).or_default() += c;
            tokens += c;
        }
    }
    let avg = tokens as f64 / clusters.len().max(1) as f64;

    let scored: Vec<BTreeMap<String, f64>> = par::map(&counts, |tf| {
        tf.iter()
            .map(|(&t, &c)| {
                let idf = (1.0 + avg / total[t] as f64).ln();
                (t.to_string(), c as f64 * idf)
            })
            .collect()
    });
    Ok(clusters
        .into_iter()
        .map(|(&id, _)| id)
        .zip(scored)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn single_cluster_uniform_terms() {
        let docs = BTreeMap::from([(0, "fiume acqua pioggia".to_string())]);
        let s = ctfidf(&docs, &vocab(&["fiume", "acqua", "pioggia"])).unwrap();
        let values: Vec<f64> = s[&0].values().copied().collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]));
        // tf 1, A 3, f 1
        assert!((values[0] - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn exclusive_term_beats_shared_term() {
        let docs = BTreeMap::from([
            (0, "frana comune".to_string()),
            (1, "neve comune".to_string()),
        ]);
        let s = ctfidf(&docs, &vocab(&["frana", "neve", "comune"])).unwrap();
        // A = 2: frana -> ln(3), comune -> ln(2)
        assert!((s[&0]["frana"] - 3f64.ln()).abs() < 1e-15);
        assert!((s[&0]["comune"] - 2f64.ln()).abs() < 1e-15);
        assert!(s[&0]["frana"] > s[&0]["comune"]);
        assert!(!s[&0].contains_key("neve"));
    }

    #[test]
    fn empty_vocabulary_is_an_error() {
        let docs = BTreeMap::from([(0, "fiume".to_string())]);
        assert_eq!(
            ctfidf(&docs, &BTreeSet::new()),
            Err(TopicError::EmptyVocabulary)
        );
    }
}
