mod common;

use std::collections::{BTreeMap, BTreeSet};

use floodpipe::nerloc::spans_from_tags;
use floodpipe::synthetic::{flood_corpus, gaussian_blobs, random_centers, uniform_points};
use floodpipe::textprep::TOPICS_MIN_WORD_LEN;
use floodpipe::topics::{
    assign_confidence, cluster, ctfidf, extract_topics, reduce, run_experiment, ExperimentMode,
    TopicConfig,
};
use floodpipe::{
    CleanProfile, ClusterAssignment, EmbeddingMatrix, ReductionConfig, ReductionMethod, StopWords,
    TopicError,
};
use proptest::prelude::*;

fn pca_cfg(k: usize) -> ReductionConfig {
    ReductionConfig {
        method: ReductionMethod::Pca,
        n_components: k,
        ..ReductionConfig::default()
    }
}

fn three_blobs(seed: u64) -> (EmbeddingMatrix, Vec<usize>) {
    let centers = random_centers(3, 50, 1.0, seed);
    gaussian_blobs(&centers, 50, 0.5, seed + 1)
}

#[test]
fn full_rank_pca_preserves_distances() {
    for seed in 0..3 {
        let emb = uniform_points(40, 6, seed);
        let before = common::distances(&emb);
        let after = common::distances(&reduce(&emb, &pca_cfg(6)).unwrap());
        for (a, b) in before.iter().flatten().zip(after.iter().flatten()) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn three_blobs_stay_separated() {
    for method in [ReductionMethod::NeighborEmbedding, ReductionMethod::Pca] {
        let (emb, truth) = three_blobs(4);
        let cfg = ReductionConfig {
            method,
            seed: 9,
            ..ReductionConfig::default()
        };
        let reduced = reduce(&emb, &cfg).unwrap();
        assert_eq!((reduced.n_rows(), reduced.dim()), (150, 5));
        let s = common::silhouette(&reduced, &truth);
        assert!(s > 0.5, "{method:?}: silhouette {s}");
    }
}

#[test]
fn duplicate_rows_reduce_identically() {
    let (emb, _) = three_blobs(6);
    let mut rows: Vec<Vec<f64>> = emb.rows().map(<[f64]>::to_vec).collect();
    rows[17] = rows[3].clone();
    rows[120] = rows[3].clone();
    let ids = (0..rows.len()).map(|i| i.to_string()).collect();
    let emb = EmbeddingMatrix::from_rows(ids, &rows).unwrap();
    for method in [ReductionMethod::NeighborEmbedding, ReductionMethod::Pca] {
        let cfg = ReductionConfig {
            method,
            ..ReductionConfig::default()
        };
        let r = reduce(&emb, &cfg).unwrap();
        assert_eq!(r.row(3), r.row(17), "{method:?}");
        assert_eq!(r.row(3), r.row(120), "{method:?}");
    }
}

#[test]
fn reduction_is_seeded() {
    let (emb, _) = three_blobs(2);
    let cfg = ReductionConfig::default();
    assert_eq!(reduce(&emb, &cfg).unwrap(), reduce(&emb, &cfg).unwrap());
    let other = ReductionConfig { seed: 1, ..cfg };
    assert_ne!(reduce(&emb, &cfg).unwrap(), reduce(&emb, &other).unwrap());
}

#[test]
fn too_few_rows_asks_for_fewer_neighbours() {
    let emb = uniform_points(15, 8, 0);
    let err = reduce(&emb, &ReductionConfig::default()).unwrap_err();
    assert_eq!(
        err,
        TopicError::TooFewDocuments {
            n: 15,
            n_neighbours: 15
        }
    );
    assert!(err.to_string().contains("lower n_neighbours"));
}

#[test]
fn two_blobs_two_clusters() {
    for seed in 0..5 {
        let centers = vec![vec![0.0; 5], vec![20.0; 5]];
        let (emb, truth) = gaussian_blobs(&centers, 30, 1.0, seed);
        let a = cluster(&emb, 10, 10).unwrap();
        assert_eq!(a.n_clusters, 2, "seed {seed}");
        assert!(common::purity(&a.labels, &truth) >= 0.95, "seed {seed}");
    }
}

#[test]
fn five_points_are_noise() {
    let a = cluster(&uniform_points(5, 3, 1), 10, 10).unwrap();
    assert_eq!(a.labels, [-1; 5]);
    assert_eq!(a.n_clusters, 0);
}

#[test]
fn clustering_ignores_row_order() {
    let centers = random_centers(3, 4, 6.0, 12);
    let (emb, _) = gaussian_blobs(&centers, 25, 1.0, 13);
    let a = cluster(&emb, 8, 8).unwrap();
    let perm: Vec<usize> = (0..emb.n_rows()).rev().collect();
    let b = cluster(&emb.select(&perm), 8, 8).unwrap();
    assert_eq!(a.n_clusters, b.n_clusters);
    let partition = |labels: &[i64], idx: &dyn Fn(usize) -> usize| {
        let mut groups: BTreeMap<i64, BTreeSet<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().insert(idx(i));
        }
        groups.into_values().collect::<BTreeSet<_>>()
    };
    assert_eq!(
        partition(&a.labels, &|i| i),
        partition(&b.labels, &|i| perm[i])
    );
}

fn toy_texts() -> (Vec<String>, Vec<String>) {
    let texts = [
        "fiume argine esondato acqua",
        "argine fiume acqua",
        "esondato fiume",
        "neve valanga rifugio",
        "valanga neve",
        "rifugio neve acqua",
        "frana strada",
        "strada chiusa frana",
    ];
    let ids = (0..texts.len()).map(|i| format!("d{i}")).collect();
    (ids, texts.iter().map(|s| s.to_string()).collect())
}

#[test]
fn relabeling_clusters_permutes_topics_only() {
    let (ids, texts) = toy_texts();
    let a = ClusterAssignment {
        labels: vec![0, 0, 0, 1, 1, 1, 2, -1],
        n_clusters: 3,
    };
    let b = ClusterAssignment {
        labels: vec![2, 2, 2, 0, 0, 0, 1, -1],
        n_clusters: 3,
    };
    let pairs = |asg: &ClusterAssignment| {
        extract_topics(asg, &ids, &texts, 5)
            .into_iter()
            .map(|t| {
                let members: BTreeSet<String> = t.member_ids.into_iter().collect();
                let words: Vec<(String, u64)> = t
                    .keywords
                    .into_iter()
                    .map(|k| (k.term, k.score.to_bits()))
                    .collect();
                (members, words)
            })
            .collect::<BTreeSet<_>>()
    };
    assert_eq!(pairs(&a), pairs(&b));
}

fn corpus_strategy() -> impl Strategy<Value = (BTreeMap<i64, String>, BTreeSet<String>)> {
    (1usize..=5, 1usize..=500).prop_flat_map(|(k, v)| {
        prop::collection::vec(prop::collection::vec(0..v + 20, 0..200), k).prop_map(move |docs| {
            let vocab: BTreeSet<String> = (0..v).map(|i| format!("t{i}")).collect();
            // indices past v produce out-of-vocabulary tokens
            let docs = docs
                .into_iter()
                .enumerate()
                .map(|(c, toks)| {
                    let text: Vec<String> = toks.into_iter().map(|i| format!("t{i}")).collect();
                    (c as i64 * 3 - 1, text.join(" "))
                })
                .collect();
            (docs, vocab)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ctfidf_matches_brute_force((docs, vocab) in corpus_strategy()) {
        let fast = ctfidf(&docs, &vocab).unwrap();
        let slow = common::brute_ctfidf(&docs, &vocab);
        prop_assert_eq!(fast.len(), slow.len());
        for (c, terms) in &slow {
            let got = &fast[c];
            prop_assert_eq!(got.len(), terms.len());
            for (t, s) in terms {
                prop_assert!((got[t] - s).abs() <= 1e-12, "{} {}: {} vs {}", c, t, got[t], s);
            }
        }
    }

    #[test]
    fn member_confidence_in_unit_interval(seed in 0u64..1000, k in 1usize..4) {
        let centers = random_centers(k, 3, 8.0, seed);
        let (emb, _) = gaussian_blobs(&centers, 12, 1.0, seed + 7);
        let a = cluster(&emb, 5, 5).unwrap();
        let conf = assign_confidence(&emb, &a);
        for (c, &l) in conf.iter().zip(&a.labels) {
            prop_assert_eq!(c.topic_id, l);
            if l < 0 {
                prop_assert_eq!(c.confidence, 0.0);
            } else {
                prop_assert!(c.confidence > 0.0 && c.confidence <= 1.0);
            }
        }
    }
}

fn flood_setup() -> (
    floodpipe::synthetic::FloodCorpus,
    Vec<floodpipe::LocationSpan>,
    CleanProfile,
) {
    let c = flood_corpus(240, 60, 16, 5);
    let spans = c.pred_tags.iter().flat_map(spans_from_tags).collect();
    (c, spans, CleanProfile::topics(StopWords::italian()))
}

#[test]
fn flood_corpus_topics() {
    let (c, spans, profile) = flood_setup();
    let cfg = TopicConfig::default();
    let r = run_experiment(
        &c.records,
        &c.embeddings,
        &spans,
        &ExperimentMode::AllRelevant,
        &profile,
        &cfg,
    )
    .unwrap();
    assert_eq!(r.n_documents, 240);
    assert_eq!(
        r.topics.len(),
        4,
        "{:?}",
        r.topics.iter().map(|t| t.size).collect::<Vec<_>>()
    );
    assert_eq!(r.assignments.len(), 240);
    let stop = StopWords::italian();
    for (i, t) in r.topics.iter().enumerate() {
        assert_eq!(t.topic_id, i);
        assert_eq!(t.size, t.member_ids.len());
        assert!(t.size >= cfg.min_cluster_size);
        assert!(t.keywords.windows(2).all(|w| w[0].score >= w[1].score));
        for k in &t.keywords {
            assert!(k.term.chars().count() >= TOPICS_MIN_WORD_LEN && !stop.contains(&k.term));
        }
    }
    // each topic is led by one theme's vocabulary
    for t in &r.topics {
        let theme = floodpipe::synthetic::FLOOD_THEMES
            .iter()
            .position(|words| words.contains(&t.keywords[0].term.as_str()))
            .expect("lead keyword from a theme");
        let own = t.keywords[..5]
            .iter()
            .filter(|k| floodpipe::synthetic::FLOOD_THEMES[theme].contains(&k.term.as_str()))
            .count();
        assert!(own >= 4, "{:?}", t.keywords);
    }

    let again = run_experiment(
        &c.records,
        &c.embeddings,
        &spans,
        &ExperimentMode::AllRelevant,
        &profile,
        &cfg,
    )
    .unwrap();
    assert_eq!(
        serde_json::to_string(&r).unwrap(),
        serde_json::to_string(&again).unwrap()
    );
}

#[test]
fn location_modes() {
    let (c, spans, profile) = flood_setup();
    let cfg = TopicConfig {
        reduction: ReductionConfig {
            n_neighbours: 10,
            ..ReductionConfig::default()
        },
        min_cluster_size: 5,
        ..TopicConfig::default()
    };
    let genova = ExperimentMode::SingleLocation("Genova".into());
    let r = run_experiment(&c.records, &c.embeddings, &spans, &genova, &profile, &cfg).unwrap();
    assert_eq!(r.locations, ["genova"]);
    assert!(r.n_documents > 40 && r.n_documents < 240);
    assert!(!r.topics.is_empty());

    let freq = run_experiment(
        &c.records,
        &c.embeddings,
        &spans,
        &ExperimentMode::FrequentLocations,
        &profile,
        &cfg,
    )
    .unwrap();
    assert!(freq.n_documents >= r.n_documents);
    assert!(freq.locations.contains(&"genova".to_string()));

    let nowhere = ExperimentMode::SingleLocation("Atlantide".into());
    let empty =
        run_experiment(&c.records, &c.embeddings, &spans, &nowhere, &profile, &cfg).unwrap();
    assert_eq!((empty.n_documents, empty.topics.len()), (0, 0));

    let parma = ExperimentMode::SingleLocation("parma".into());
    let tight = TopicConfig {
        reduction: ReductionConfig {
            n_neighbours: 100,
            ..ReductionConfig::default()
        },
        ..TopicConfig::default()
    };
    let err =
        run_experiment(&c.records, &c.embeddings, &spans, &parma, &profile, &tight).unwrap_err();
    assert!(matches!(
        err,
        TopicError::TooFewDocuments {
            n_neighbours: 100,
            ..
        }
    ));
}

#[test]
fn topic_cap_moves_extra_documents_to_noise() {
    let (c, spans, profile) = flood_setup();
    let cfg = TopicConfig {
        max_topics: 2,
        ..TopicConfig::default()
    };
    let r = run_experiment(
        &c.records,
        &c.embeddings,
        &spans,
        &ExperimentMode::AllRelevant,
        &profile,
        &cfg,
    )
    .unwrap();
    assert_eq!(r.topics.len(), 2);
    assert!(r.n_clusters > 2);
    let kept: usize = r.topics.iter().map(|t| t.size).sum();
    let assigned = r.assignments.iter().filter(|a| a.topic_id >= 0).count();
    assert_eq!(kept, assigned);
    assert!(r.assignments.iter().all(|a| a.topic_id < 2));
}
