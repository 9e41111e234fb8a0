//! Regenerates the bundled synthetic fixture set.
//!
//! ```text
//! cargo run -p floodpipe-cli --example make_fixtures [DIR]
//! ```
//!
//! `DIR` defaults to `crates/cli/fixtures/synthetic`. The output is a pure
//! function of the constants below.

use std::path::PathBuf;

use floodpipe::corpus::{write_embeddings, write_lett, write_rctp, write_scores};
use floodpipe::synthetic::flood_corpus;

const SEED: u64 = 2024;
const RELEVANT: usize = 240;
const IRRELEVANT: usize = 60;
const DIM: usize = 16;

const CONFIG: &str = r#"# Run settings for the bundled synthetic fixtures. Paths are relative to
# this file; command-line flags override anything set here.
seed = 2024

[inputs]
corpus = "corpus.tsv"
scores = "scores.tsv"
gold = "gold.conll"
pred = "pred.conll"
embeddings = "embeddings.tsv"

[fusion]
method = "powell"
threshold = 0.5

[ner]
top = 10

[topics]
modes = ["all", "frequent", "location"]
location = "Genova"
max_topics = 12
top_words = 10
min_cluster_size = 10

[topics.reduction]
method = "neighbor"
n_neighbours = 15
n_components = 5
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic"));
    std::fs::create_dir_all(&dir)?;
    let c = flood_corpus(RELEVANT, IRRELEVANT, DIM, SEED);
    write_rctp(&dir.join("corpus.tsv"), &c.records)?;
    write_scores(&dir.join("scores.tsv"), &c.scores)?;
    write_lett(&dir.join("gold.conll"), &c.gold_tags)?;
    write_lett(&dir.join("pred.conll"), &c.pred_tags)?;
    write_embeddings(&dir.join("embeddings.tsv"), &c.embeddings)?;
    std::fs::write(dir.join("floodpipe.toml"), CONFIG)?;
    println!("wrote {} tweets to {}", c.records.len(), dir.display());
    Ok(())
}
