use std::collections::{BTreeMap, BTreeSet};

use super::{ctfidf, dist, ClusterAssignment, EmbeddingMatrix, Keyword, Topic, TopicAssignment};
use crate::par;

/// Cluster labels ordered by size descending, then by first member index.
pub(crate) fn topic_order(assignment: &ClusterAssignment) -> Vec<usize> {
    let members = assignment.members();
    let mut order: Vec<usize> = (0..assignment.n_clusters).collect();
    order.sort_by_key(|&c| {
        (
            std::cmp::Reverse(members[c].len()),
            members[c].first().copied(),
        )
    });
    order
}

/// One topic per cluster, largest first (`topic_id` 0). Keywords are the
/// `top_k_words` best c-TF-IDF terms of the cluster's concatenated cleaned
/// texts. Noise documents do not contribute to any topic.
pub fn extract_topics(
    assignment: &ClusterAssignment,
    ids: &[String],
    cleaned: &[String],
    top_k_words: usize,
) -> Vec<Topic> {
    assert_eq!(
        ids.len(),
        assignment.labels.len(),
        "one id per assigned document"
    );
    assert_eq!(
        cleaned.len(),
        assignment.labels.len(),
        "one text per assigned document"
    );
    if assignment.n_clusters == 0 {
        return Vec::new();
    }
    let members = assignment.members();
    let mut docs_by_cluster: BTreeMap<i64, String> = BTreeMap::new();
    let mut vocabulary = BTreeSet::new();
    for (c, docs) in members.iter().enumerate() {
        let text: Vec<&str> = docs.iter().map(|&i| cleaned[i].as_str()).collect();
        let text = text.join(" ");
        vocabulary.extend(text.split_whitespace().map(str::to_string));
        docs_by_cluster.insert(c as i64, text);
    }
    let scores = ctfidf(&docs_by_cluster, &vocabulary).unwrap_or_default();

    topic_order(assignment)
        .into_iter()
        .enumerate()
        .map(|(topic_id, c)| {
            let mut keywords: Vec<Keyword> = scores
                .get(&(c as i64))
                .into_iter()
                .flatten()
                .map(|(t, &s)| Keyword {
                    term: t.clone(),
                    score: s,
                })
                .collect();
            keywords.sort_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then_with(|| a.term.cmp(&b.term))
            });
            keywords.truncate(top_k_words);
            Topic {
                topic_id,
                keywords,
                member_ids: members[c].iter().map(|&i| ids[i].clone()).collect(),
                size: members[c].len(),
            }
        })
        .collect()
}

/// Member minimizing the summed distance to the other members; ties go to
/// the earliest member.
pub fn medoid(points: &EmbeddingMatrix, members: &[usize]) -> usize {
    let totals = par::map(members, |&i| {
        members
            .iter()
            .map(|&j| dist(points.row(i), points.row(j)))
            .sum::<f64>()
    });
    let best = (0..members.len())
        .min_by(|&a, &b| totals[a].total_cmp(&totals[b]).then(a.cmp(&b)))
        .expect("clusters are nonempty");
    members[best]
}

/// Soft membership `exp(-d / s)`, with `d` the distance to the cluster
/// medoid and `s` the mean medoid distance of the other members. Noise gets
/// topic `-1` and confidence 0. `topic_id` is the cluster label.
pub fn assign_confidence(
    reduced: &EmbeddingMatrix,
    assignment: &ClusterAssignment,
) -> Vec<TopicAssignment> {
    let mut confidence = vec![0.0; assignment.labels.len()];
    for members in assignment.members() {
        let center = medoid(reduced, &members);
        let d: Vec<f64> = members
            .iter()
            .map(|&i| dist(reduced.row(i), reduced.row(center)))
            .collect();
        let others = members.len() - 1;
        let scale = if others == 0 {
            0.0
        } else {
            d.iter().sum::<f64>() / others as f64
        };
        for (&i, &di) in members.iter().zip(&d) {
            confidence[i] = if scale > 0.0 {
                (-di / scale).exp().max(f64::MIN_POSITIVE)
            } else {
                1.0
            };
        }
    }
    reduced
        .row_ids()
        .iter()
        .zip(&assignment.labels)
        .zip(confidence)
        .map(|((id, &label), c)| TopicAssignment {
            tweet_id: id.clone(),
            topic_id: label,
            confidence: if label < 0 { 0.0 } else { c },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_clusters_no_topics() {
        let a = ClusterAssignment {
            labels: vec![-1, -1],
            n_clusters: 0,
        };
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(extract_topics(&a, &ids, &ids, 5).is_empty());
    }

    #[test]
    fn disjoint_vocabularies_stay_separate() {
        let texts = [
            "fiume esondato argine",
            "argine fiume",
            "esondato fiume",
            "neve valanga",
            "valanga rifugio neve",
        ];
        let cleaned: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
        let ids: Vec<String> = (0..5).map(|i| format!("t{i}")).collect();
        let a = ClusterAssignment {
            labels: vec![1, 1, 1, 0, 0],
            n_clusters: 2,
        };
        let topics = extract_topics(&a, &ids, &cleaned, 10);
        assert_eq!(topics.len(), 2);
        assert_eq!(topics[0].size, 3);
        assert_eq!(topics[0].member_ids, ["t0", "t1", "t2"]);
        let flood = ["fiume", "esondato", "argine"];
        let snow = ["neve", "valanga", "rifugio"];
        assert!(topics[0]
            .keywords
            .iter()
            .all(|k| flood.contains(&k.term.as_str())));
        assert!(topics[1]
            .keywords
            .iter()
            .all(|k| snow.contains(&k.term.as_str())));
        assert_eq!(topics[0].keywords[0].term, "fiume");
    }

    #[test]
    fn medoid_has_top_confidence() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.2, 0.1],
            vec![5.0, 5.0],
        ];
        let emb =
            EmbeddingMatrix::from_rows((0..4).map(|i| i.to_string()).collect(), &rows).unwrap();
        let a = ClusterAssignment {
            labels: vec![0, 0, 0, -1],
            n_clusters: 1,
        };
        let conf = assign_confidence(&emb, &a);
        let center = medoid(&emb, &[0, 1, 2]);
        assert_eq!(conf[center].confidence, 1.0);
        for c in &conf[..3] {
            assert!(c.confidence > 0.0 && c.confidence <= conf[center].confidence);
        }
        assert_eq!((conf[3].topic_id, conf[3].confidence), (-1, 0.0));
    }
}
