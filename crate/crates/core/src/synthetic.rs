//! Seeded synthetic fixtures.
//!
//! Everything here is a pure function of its arguments, so tests, benches
//! and the bundled example data set can regenerate identical inputs.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::corpus::{BioTag, EmbeddingMatrix, ScoreMatrix, TokenTagSequence, TweetRecord};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:04}")).collect()
}

/// `k` centers in `dim` dimensions with coordinates drawn from
/// `N(0, scale²)`.
pub fn random_centers(k: usize, dim: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, scale).expect("finite scale");
    (0..k)
        .map(|_| (0..dim).map(|_| normal.sample(&mut r)).collect())
        .collect()
}

/// Isotropic Gaussian blobs, `per_blob` points around each center, points
/// listed blob by blob. Returns the matrix and the blob index of each row.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    per_blob: usize,
    spread: f64,
    seed: u64,
) -> (EmbeddingMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(centers.len() * per_blob);
    let mut truth = Vec::with_capacity(rows.capacity());
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            rows.push(
                c.iter()
                    .map(|&x| x + spread * gauss(&mut r))
                    .collect::<Vec<f64>>(),
            );
            truth.push(b);
        }
    }
    let emb = EmbeddingMatrix::from_rows(ids("p", rows.len()), &rows).expect("finite blobs");
    (emb, truth)
}

/// Uniform points in the unit cube.
pub fn uniform_points(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| r.random()).collect())
        .collect();
    EmbeddingMatrix::from_rows(ids("u", n), &rows).expect("finite points")
}

/// Validation scores with their gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionFixture {
    pub scores: ScoreMatrix,
    pub labels: Vec<u8>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn labels(r: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| r.random_range(0..2u8)).collect()
}

/// Posteriors `sigmoid(±(skill + noise))`, signed towards the true label.
/// Higher skill means fewer errors.
pub fn skilled_fixture(n: usize, skills: &[f64], seed: u64) -> FusionFixture {
    let mut r = rng(seed);
    let labels = labels(&mut r, n);
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            let sign = if y == 1 { 1.0 } else { -1.0 };
            skills
                .iter()
                .map(|&s| sigmoid(sign * (s + gauss(&mut r))))
                .collect()
        })
        .collect();
    FusionFixture {
        scores: ScoreMatrix::from_rows(&rows).expect("posteriors in [0, 1]"),
        labels,
    }
}

/// A fixture with `n` rows, `m` models and skills drawn from `[0, 1.5)`.
pub fn random_fusion_fixture(n: usize, m: usize, seed: u64) -> FusionFixture {
    let mut r = rng(seed ^ 0x5eed);
    let skills: Vec<f64> = (0..m).map(|_| r.random_range(0.0..1.5)).collect();
    skilled_fixture(n, &skills, seed)
}

/// Three models that are each confidently right everywhere except on their
/// own tenth of the rows, where they lean mildly the wrong way. The slices
/// are disjoint, so every model alone reaches exactly 90% accuracy.
pub fn complementary_ensemble(n: usize, seed: u64) -> FusionFixture {
    let mut r = rng(seed);
    let labels = labels(&mut r, n);
    let slice = n / 10;
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            (0..3)
                .map(|j| {
                    let wrong = i >= j * slice && i < (j + 1) * slice;
                    let margin = if wrong {
                        -r.random_range(0.05..0.15)
                    } else {
                        r.random_range(0.15..0.45)
                    };
                    if y == 1 {
                        0.5 + margin
                    } else {
                        0.5 - margin
                    }
                })
                .collect()
        })
        .collect();
    FusionFixture {
        scores: ScoreMatrix::from_rows(&rows).expect("posteriors in [0, 1]"),
        labels,
    }
}

/// Model 0 separates the classes by a hair (0.51 vs 0.49); the others are
/// uniform noise. Only weights concentrated on model 0 classify every row.
pub fn dominant_model_fixture(n: usize, m: usize, seed: u64) -> FusionFixture {
    let mut r = rng(seed);
    let labels = labels(&mut r, n);
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            let mut row = vec![if y == 1 { 0.51 } else { 0.49 }];
            row.extend((1..m).map(|_| r.random::<f64>()));
            row
        })
        .collect();
    FusionFixture {
        scores: ScoreMatrix::from_rows(&rows).expect("posteriors in [0, 1]"),
        labels,
    }
}

fn random_tags(r: &mut ChaCha8Rng, len: usize) -> Vec<BioTag> {
    const TAGS: [BioTag; 3] = [BioTag::BLoc, BioTag::ILoc, BioTag::Out];
    (0..len)
        .map(|_| *TAGS.choose(r).expect("nonempty"))
        .collect()
}

/// Aligned gold/prediction sequences with arbitrary tags (orphan `I-LOC`
/// included). Predictions copy gold with a per-token flip rate.
pub fn random_tag_pairs(
    n: usize,
    max_len: usize,
    flip_rate: f64,
    seed: u64,
) -> (Vec<TokenTagSequence>, Vec<TokenTagSequence>) {
    let mut r = rng(seed);
    let mut gold = Vec::with_capacity(n);
    let mut pred = Vec::with_capacity(n);
    for id in ids("s", n) {
        let len = r.random_range(1..=max_len.max(1));
        let tokens: Vec<String> = (0..len).map(|i| format!("w{i}")).collect();
        let g = random_tags(&mut r, len);
        let noise = random_tags(&mut r, len);
        let p: Vec<BioTag> = g
            .iter()
            .zip(noise)
            .map(|(&t, n)| if r.random_bool(flip_rate) { n } else { t })
            .collect();
        gold.push(TokenTagSequence::new(id.clone(), tokens.clone(), g).expect("aligned"));
        pred.push(TokenTagSequence::new(id, tokens, p).expect("aligned"));
    }
    (gold, pred)
}

/// A labeled flood-themed tweet corpus with everything the pipeline reads:
/// model posteriors, gold and predicted location tags, and embeddings.
#[derive(Debug, Clone)]
pub struct FloodCorpus {
    pub records: Vec<TweetRecord>,
    pub gold_tags: Vec<TokenTagSequence>,
    pub pred_tags: Vec<TokenTagSequence>,
    pub scores: ScoreMatrix,
    pub embeddings: EmbeddingMatrix,
    /// Theme index per tweet; `None` for irrelevant tweets.
    pub themes: Vec<Option<usize>>,
}

pub const FLOOD_THEMES: [&[&str]; 4] = [
    &[
        "alluvione",
        "esondazione",
        "fiume",
        "argini",
        "acqua",
        "allagamenti",
        "fango",
        "piena",
        "torrente",
        "cantine",
    ],
    &[
        "frana",
        "smottamento",
        "strada",
        "chiusa",
        "collina",
        "detriti",
        "crollo",
        "carreggiata",
        "massi",
        "provinciale",
    ],
    &[
        "allerta",
        "pioggia",
        "temporale",
        "nubifragio",
        "meteo",
        "rossa",
        "precipitazioni",
        "bollettino",
        "vento",
        "grandine",
    ],
    &[
        "soccorsi",
        "volontari",
        "vigili",
        "fuoco",
        "evacuati",
        "sfollati",
        "protezione",
        "civile",
        "elicottero",
        "famiglie",
    ],
];

const OFF_TOPIC: [&str; 10] = [
    "calcio", "partita", "pizza", "concerto", "vacanza", "musica", "spiaggia", "cinema", "serie",
    "ricetta",
];

const FILLERS: [&str; 12] = [
    "a", "di", "la", "il", "che", "per", "e", "ora", "con", "del", "sono", "tutti",
];

/// Locations with their sampling weight and the themes they lean towards.
const PLACES: [(&str, u32, &[usize]); 8] = [
    ("Genova", 9, &[0, 3]),
    ("Firenze", 5, &[0, 1, 2, 3]),
    ("Livorno", 4, &[0, 2]),
    ("Cinque Terre", 3, &[1, 2]),
    ("Olbia", 3, &[0, 3]),
    ("Val di Vara", 2, &[1]),
    ("Benevento", 2, &[0, 2]),
    ("Parma", 1, &[2]),
];

const MODELS: [(&str, f64); 3] = [("bert", 2.0), ("roberta", 1.6), ("distilbert", 1.2)];

/// Builds `n_relevant` flood tweets spread over [`FLOOD_THEMES`] plus
/// `n_irrelevant` off-topic ones. Tweets are whitespace tokenized, so the
/// tag sequences flatten back to the text exactly.
pub fn flood_corpus(n_relevant: usize, n_irrelevant: usize, dim: usize, seed: u64) -> FloodCorpus {
    let mut r = rng(seed);
    let place_weights: Vec<u32> = PLACES.iter().map(|p| p.1).collect();
    let place_dist =
        rand::distr::weighted::WeightedIndex::new(&place_weights).expect("positive weights");
    let centers = random_centers(FLOOD_THEMES.len() + 1, dim, 3.0, seed ^ 0xc0ffee);

    let n = n_relevant + n_irrelevant;
    let mut order: Vec<bool> = (0..n).map(|i| i < n_relevant).collect();
    for i in (1..n).rev() {
        order.swap(i, r.random_range(0..=i));
    }

    let mut records = Vec::with_capacity(n);
    let mut gold_tags = Vec::with_capacity(n);
    let mut pred_tags = Vec::with_capacity(n);
    let mut themes = Vec::with_capacity(n);
    let mut emb_rows = Vec::with_capacity(n);
    let mut score_rows = Vec::with_capacity(n);

    for (id, relevant) in ids("t", n).into_iter().zip(order) {
        let place = if r.random_bool(if relevant { 0.85 } else { 0.3 }) {
            Some(PLACES[place_dist.sample(&mut r)])
        } else {
            None
        };
        let theme = relevant.then(|| match place {
            Some((_, _, leans)) if r.random_bool(0.8) => *leans.choose(&mut r).expect("nonempty"),
            _ => r.random_range(0..FLOOD_THEMES.len()),
        });
        let vocab: &[&str] = theme.map_or(&OFF_TOPIC[..], |t| FLOOD_THEMES[t]);

        let mut tokens: Vec<String> = Vec::new();
        let mut tags: Vec<BioTag> = Vec::new();
        let push = |tokens: &mut Vec<String>, tags: &mut Vec<BioTag>, t: &str, tag| {
            tokens.push(t.to_string());
            tags.push(tag);
        };
        if r.random_bool(0.15) {
            push(&mut tokens, &mut tags, "@protciv", BioTag::Out);
        }
        let n_words = r.random_range(3..=6);
        for k in 0..n_words {
            let mut w = vocab.choose(&mut r).expect("nonempty").to_string();
            if k == 0 && r.random_bool(0.5) {
                w[..1].make_ascii_uppercase();
            }
            push(&mut tokens, &mut tags, &w, BioTag::Out);
            if r.random_bool(0.4) {
                push(
                    &mut tokens,
                    &mut tags,
                    FILLERS.choose(&mut r).expect("nonempty"),
                    BioTag::Out,
                );
            }
        }
        if let Some((name, _, _)) = place {
            let at = r.random_range(1..=tokens.len());
            let prep = if r.random_bool(0.5) { "a" } else { "in" };
            tokens.insert(at, prep.to_string());
            tags.insert(at, BioTag::Out);
            for (k, part) in name.split(' ').enumerate() {
                tokens.insert(at + 1 + k, part.to_string());
                tags.insert(at + 1 + k, if k == 0 { BioTag::BLoc } else { BioTag::ILoc });
            }
        }
        if r.random_bool(0.2) {
            push(
                &mut tokens,
                &mut tags,
                &format!("https://t.co/{}", r.random_range(1000..9999)),
                BioTag::Out,
            );
        }
        if r.random_bool(0.1) {
            push(&mut tokens, &mut tags, "🌧", BioTag::Out);
        }
        if r.random_bool(0.3) {
            let last = tokens.len() - 1;
            if !tokens[last].starts_with("http") {
                tokens[last].push('!');
            }
        }

        let mut pred = tags.clone();
        for t in pred.iter_mut() {
            match *t {
                BioTag::BLoc if r.random_bool(0.06) => *t = BioTag::ILoc,
                BioTag::BLoc | BioTag::ILoc if r.random_bool(0.05) => *t = BioTag::Out,
                BioTag::Out if r.random_bool(0.01) => *t = BioTag::BLoc,
                _ => {}
            }
        }

        let text = tokens.join(" ");
        let label = u8::from(relevant);
        let center = &centers[theme.unwrap_or(FLOOD_THEMES.len())];
        emb_rows.push(
            center
                .iter()
                .map(|&c| c + 0.7 * gauss(&mut r))
                .collect::<Vec<f64>>(),
        );
        let sign = if relevant { 1.0 } else { -1.0 };
        score_rows.push(
            MODELS
                .iter()
                .map(|&(_, skill)| sigmoid(sign * (skill + gauss(&mut r))))
                .collect::<Vec<f64>>(),
        );
        gold_tags.push(TokenTagSequence::new(id.clone(), tokens.clone(), tags).expect("aligned"));
        pred_tags.push(TokenTagSequence::new(id.clone(), tokens, pred).expect("aligned"));
        records.push(TweetRecord {
            id,
            text,
            label: Some(label),
        });
        themes.push(theme);
    }

    let row_ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let scores = ScoreMatrix::new(
        row_ids.clone(),
        MODELS.iter().map(|m| m.0.to_string()).collect(),
        score_rows.concat(),
    )
    .expect("posteriors in [0, 1]");
    let embeddings = EmbeddingMatrix::from_rows(row_ids, &emb_rows).expect("finite embeddings");
    FloodCorpus {
        records,
        gold_tags,
        pred_tags,
        scores,
        embeddings,
        themes,
    }
}
