//! Acceptance gate. Runs without the libtest harness and prints one
//! `PASS` or `FAIL` line per criterion; the process fails if any does.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use floodpipe::corpus::{load_embeddings, load_labels, load_lett, load_rctp, load_scores};
use floodpipe::fusion::{grid_oracle, objective, optimize_weights, DEFAULT_THRESHOLD};
use floodpipe::nerloc::{exact_f1, partial_f1, spans_from_tags};
use floodpipe::synthetic::{
    complementary_ensemble, flood_corpus, gaussian_blobs, random_centers, random_fusion_fixture,
    random_tag_pairs, uniform_points,
};
use floodpipe::topics::{cluster, ctfidf, reduce, run_experiment, ExperimentMode, TopicConfig};
use floodpipe::{
    CleanProfile, EmbeddingMatrix, OptimizerConfig, OptimizerMethod, ReductionConfig,
    ReductionMethod, SplitName, StopWords, TokenTagSequence, WeightVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    if ok {
        Ok(detail.into())
    } else {
        Err(detail.into())
    }
}

const SEARCHERS: [OptimizerMethod; 3] = [
    OptimizerMethod::Pso,
    OptimizerMethod::NelderMead,
    OptimizerMethod::Powell,
];

/// Twenty fixtures with M in {2, 3} and N between 20 and 96.
fn fusion_fixtures() -> Vec<floodpipe::synthetic::FusionFixture> {
    (0..20u64)
        .map(|k| random_fusion_fixture(20 + 4 * k as usize, 2 + (k % 2) as usize, 500 + k))
        .collect()
}

fn fusion_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for (k, f) in fusion_fixtures().iter().enumerate() {
        let oracle = grid_oracle(&f.scores, &f.labels, 0.05).map_err(|e| e.to_string())?;
        for method in SEARCHERS {
            let r = optimize_weights(
                &f.scores,
                &f.labels,
                &OptimizerConfig::new(method, k as u64),
            )
            .map_err(|e| e.to_string())?;
            worst = worst.max(r.error - oracle.error);
            if r.error > oracle.error + 0.01 {
                return Err(format!(
                    "fixture {k} {}: error {} vs grid {}",
                    method.name(),
                    r.error,
                    oracle.error
                ));
            }
        }
    }
    let took = start.elapsed();
    check(
        took < Duration::from_secs(10),
        format!("worst gap to grid {worst:+.4}, {:.2} s", took.as_secs_f64()),
    )
}

fn seeding_dominance() -> Outcome {
    for (k, f) in fusion_fixtures().iter().enumerate() {
        let m = f.scores.n_models();
        let mut bound = objective(
            &f.scores,
            &f.labels,
            &WeightVector::equal(m),
            DEFAULT_THRESHOLD,
        )
        .map_err(|e| e.to_string())?
        .error;
        for j in 0..m {
            let e = objective(
                &f.scores,
                &f.labels,
                &WeightVector::one_hot(m, j),
                DEFAULT_THRESHOLD,
            )
            .map_err(|e| e.to_string())?
            .error;
            bound = bound.min(e);
        }
        for method in OptimizerMethod::ALL {
            let r = optimize_weights(
                &f.scores,
                &f.labels,
                &OptimizerConfig::new(method, k as u64),
            )
            .map_err(|e| e.to_string())?;
            if r.error > bound {
                return Err(format!(
                    "fixture {k} {}: {} > {bound}",
                    method.name(),
                    r.error
                ));
            }
        }
    }
    Ok(format!(
        "20 fixtures, {} methods",
        OptimizerMethod::ALL.len()
    ))
}

fn fusion_beats_best_single() -> Outcome {
    let f = complementary_ensemble(300, 11);
    let best = (0..3)
        .map(|j| {
            objective(
                &f.scores,
                &f.labels,
                &WeightVector::one_hot(3, j),
                DEFAULT_THRESHOLD,
            )
            .unwrap()
            .accuracy
        })
        .fold(0.0, f64::max);
    let mut parts = Vec::new();
    for method in SEARCHERS {
        let r = optimize_weights(&f.scores, &f.labels, &OptimizerConfig::new(method, 0))
            .map_err(|e| e.to_string())?;
        if r.accuracy <= best {
            return Err(format!(
                "{} accuracy {} vs best single {best}",
                method.name(),
                r.accuracy
            ));
        }
        parts.push(format!("{} {:.4}", method.name(), r.accuracy));
    }
    Ok(format!("best single {best:.4}; {}", parts.join(", ")))
}

fn worked_example() -> TokenTagSequence {
    let tokens = "Allagamento in via Prati della Farnesina"
        .split(' ')
        .map(str::to_string)
        .collect();
    let tags = "O O B-LOC I-LOC I-LOC I-LOC"
        .split(' ')
        .map(|t| t.parse().unwrap())
        .collect();
    TokenTagSequence::new("ex", tokens, tags).unwrap()
}

fn ner_scorer() -> Outcome {
    for seed in 0..100u64 {
        let (gold, pred) = random_tag_pairs(
            1 + (seed as usize % 25),
            15,
            (seed % 10) as f64 / 10.0,
            seed,
        );
        let exact = exact_f1(&gold, &pred).map_err(|e| e.to_string())?;
        let partial = partial_f1(&gold, &pred).map_err(|e| e.to_string())?;
        for (score, is_exact) in [(&exact, true), (&partial, false)] {
            let (p, r, f) = common::brute_f1(&gold, &pred, is_exact);
            let gap = (score.precision - p)
                .abs()
                .max((score.recall - r).abs())
                .max((score.f1 - f).abs());
            if gap > 1e-12 {
                return Err(format!("fixture {seed}: gap {gap:e} against recount"));
            }
        }
        if partial.f1 < exact.f1 {
            return Err(format!(
                "fixture {seed}: partial {} < exact {}",
                partial.f1, exact.f1
            ));
        }
    }
    let ex = vec![worked_example()];
    let (e, p) = (
        exact_f1(&ex, &ex).unwrap().f1,
        partial_f1(&ex, &ex).unwrap().f1,
    );
    check(
        e == 1.0 && p == 1.0,
        format!("100 fixtures within 1e-12; worked example {e}/{p}"),
    )
}

fn ctfidf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for case in 0..60 {
        let k = rng.random_range(1..=5);
        let v = rng.random_range(1..=500);
        let vocab: BTreeSet<String> = (0..v).map(|i| format!("t{i}")).collect();
        let docs: BTreeMap<i64, String> = (0..k)
            .map(|c| {
                let len = rng.random_range(0..200);
                // ids past the vocabulary give out-of-vocabulary tokens
                let words: Vec<String> = (0..len)
                    .map(|_| format!("t{}", rng.random_range(0..v + 20)))
                    .collect();
                (c as i64, words.join(" "))
            })
            .collect();
        let fast = ctfidf(&docs, &vocab).map_err(|e| format!("case {case}: {e}"))?;
        let slow = common::brute_ctfidf(&docs, &vocab);
        if fast.len() != slow.len() {
            return Err(format!(
                "case {case}: {} clusters vs {}",
                fast.len(),
                slow.len()
            ));
        }
        for (c, terms) in &slow {
            for (t, s) in terms {
                let got = fast
                    .get(c)
                    .and_then(|m| m.get(t))
                    .copied()
                    .unwrap_or(f64::NAN);
                let gap = (got - s).abs();
                if gap.is_nan() || gap > 1e-12 {
                    return Err(format!("case {case} cluster {c} term {t}: {got} vs {s}"));
                }
                worst = worst.max(gap);
            }
        }
    }
    Ok(format!("60 corpora, max gap {worst:e}"))
}

fn experiment_json(seed: u64) -> String {
    let c = flood_corpus(240, 60, 16, 5);
    let spans: Vec<_> = c.pred_tags.iter().flat_map(spans_from_tags).collect();
    let profile = CleanProfile::topics(StopWords::italian());
    let mut cfg = TopicConfig::default();
    cfg.reduction.seed = seed;
    let r = run_experiment(
        &c.records,
        &c.embeddings,
        &spans,
        &ExperimentMode::AllRelevant,
        &profile,
        &cfg,
    )
    .unwrap();
    serde_json::to_string(&r).unwrap()
}

fn clustering() -> Outcome {
    let mut worst = 1.0f64;
    for seed in 0..5 {
        let centers = vec![vec![0.0; 5], vec![20.0; 5]];
        let (emb, truth) = gaussian_blobs(&centers, 30, 1.0, seed);
        let a = cluster(&emb, 10, 10).map_err(|e| e.to_string())?;
        let purity = common::purity(&a.labels, &truth);
        worst = worst.min(purity);
        if a.n_clusters != 2 || purity < 0.95 {
            return Err(format!(
                "two blobs seed {seed}: K = {}, purity {purity}",
                a.n_clusters
            ));
        }
    }
    let five = cluster(&uniform_points(5, 3, 1), 10, 10).map_err(|e| e.to_string())?;
    if five.labels.iter().any(|&l| l != -1) {
        return Err(format!("five points labelled {:?}", five.labels));
    }
    let runs: Vec<String> = (0..3).map(|_| experiment_json(42)).collect();
    check(
        runs[0] == runs[1] && runs[1] == runs[2],
        format!("two blobs K = 2, min purity {worst:.3}; 5 points all noise; 3 runs identical"),
    )
}

fn reduction() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let emb = uniform_points(40, 6, seed);
        let cfg = ReductionConfig {
            method: ReductionMethod::Pca,
            n_components: 6,
            ..ReductionConfig::default()
        };
        let before = common::distances(&emb);
        let after = common::distances(&reduce(&emb, &cfg).map_err(|e| e.to_string())?);
        for (a, b) in before.iter().flatten().zip(after.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst > 1e-9 {
        return Err(format!("pca distance drift {worst:e}"));
    }
    let (emb, truth) = gaussian_blobs(&random_centers(3, 50, 1.0, 4), 50, 0.5, 5);
    let mut rows: Vec<Vec<f64>> = emb.rows().map(<[f64]>::to_vec).collect();
    rows[17] = rows[3].clone();
    let dup = EmbeddingMatrix::from_rows((0..rows.len()).map(|i| i.to_string()).collect(), &rows)
        .unwrap();
    let mut sil = Vec::new();
    for method in [ReductionMethod::NeighborEmbedding, ReductionMethod::Pca] {
        let cfg = ReductionConfig {
            method,
            seed: 9,
            ..ReductionConfig::default()
        };
        let reduced = reduce(&emb, &cfg).map_err(|e| e.to_string())?;
        let s = common::silhouette(&reduced, &truth);
        if reduced.dim() != 5 || s <= 0.5 {
            return Err(format!(
                "{method:?}: {} dims, silhouette {s}",
                reduced.dim()
            ));
        }
        sil.push(format!("{s:.3}"));
        let r = reduce(&dup, &cfg).map_err(|e| e.to_string())?;
        if r.row(3) != r.row(17) {
            return Err(format!("{method:?}: duplicate rows diverge"));
        }
    }
    Ok(format!(
        "pca drift {worst:e}; silhouette {}; duplicates identical",
        sil.join("/")
    ))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

fn run_report(out: &Path) -> Result<Duration, String> {
    let config = fixture_dir().join("floodpipe.toml");
    let argv = [
        "floodpipe",
        "report",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let start = Instant::now();
    let code = floodpipe_cli::run_cli_with(argv, None, &mut stdout, &mut stderr);
    if code != 0 {
        return Err(format!("exit {code}: {}", String::from_utf8_lossy(&stderr)));
    }
    Ok(start.elapsed())
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let t1 = run_report(&a)?;
    let t2 = run_report(&b)?;
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    if fa.len() < 5 {
        return Err(format!("only {} output files", fa.len()));
    }
    if let Some(name) = fa.keys().find(|k| fa.get(*k) != fb.get(*k)) {
        return Err(format!("{name} differs between runs"));
    }
    let slowest = t1.max(t2);
    check(
        fa.keys().eq(fb.keys()) && slowest < Duration::from_secs(60),
        format!(
            "{} files byte-identical, slowest run {:.2} s",
            fa.len(),
            slowest.as_secs_f64()
        ),
    )
}

fn load_any(loader: &str, path: &Path) -> Result<(), String> {
    let r = match loader {
        "lett" => load_lett(path, SplitName::Dev).map(drop),
        "scores" => load_scores(path).map(drop),
        "embeddings" => load_embeddings(path).map(drop),
        "rctp" => load_rctp(path, SplitName::Dev, true).map(drop),
        "labels" => load_labels(path).map(drop),
        other => panic!("unknown loader {other}"),
    };
    r.map_err(|e| e.to_string())
}

fn loader_robustness() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/malformed");
    let manifest = fs::read_to_string(dir.join("manifest.tsv")).map_err(|e| e.to_string())?;
    let mut n = 0;
    for row in manifest.lines().skip(1) {
        let cells: Vec<&str> = row.split('\t').collect();
        let path = dir.join(cells[0]);
        let result = catch_unwind(AssertUnwindSafe(|| load_any(cells[1], &path)))
            .map_err(|_| format!("{}: loader panicked", cells[0]))?;
        let msg = match result {
            Ok(()) => return Err(format!("{}: accepted", cells[0])),
            Err(m) => m,
        };
        let at = match cells[2] {
            "-" => format!("{}: ", path.display()),
            line => format!("{}:{line}: ", path.display()),
        };
        if !msg.starts_with(&at) || msg.contains('\n') {
            return Err(format!("{}: diagnostic {msg:?}", cells[0]));
        }
        n += 1;
    }
    check(
        n >= 19,
        format!("{n} malformed files diagnosed at their location"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("fusion oracle equivalence", fusion_oracle),
        ("seeding dominance", seeding_dominance),
        ("fusion beats best single model", fusion_beats_best_single),
        ("ner scorer correctness", ner_scorer),
        ("c-tf-idf oracle equivalence", ctfidf_oracle),
        ("clustering sanity", clustering),
        ("reduction contract", reduction),
        ("end-to-end determinism", end_to_end),
        ("loader robustness", loader_robustness),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
