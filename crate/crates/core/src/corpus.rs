//! Data model and validating loaders for the tweet corpora and the model
//! artifact files.
//!
//! All formats are UTF-8, `\t`-separated and `\n`-terminated:
//!
//! * relevance corpus: header `id\ttext[\tlabel]`, one tweet per line;
//! * tagged corpus: CoNLL style, a `# id: <tweet_id>` line, then one
//!   `token\ttag` line per word, tweets separated by a blank line;
//! * score matrix: header `id\t<model_1>\t...\t<model_M>`, one class-1
//!   posterior in `[0, 1]` per cell;
//! * embedding matrix: header `id\tdim_0\t...\tdim_{D-1}`, finite values.
//!
//! Ids are opaque strings. Loaders report counts but never assume a
//! particular dataset size.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl CorpusError {
    fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        CorpusError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn invalid(path: &Path, message: impl Into<String>) -> Self {
        CorpusError::Invalid {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    /// `Some(1)` relevant, `Some(0)` not relevant, `None` unlabeled.
    pub label: Option<u8>,
}

/// Word-level location tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BioTag {
    #[serde(rename = "B-LOC")]
    BLoc,
    #[serde(rename = "I-LOC")]
    ILoc,
    #[serde(rename = "O")]
    Out,
}

impl BioTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BioTag::BLoc => "B-LOC",
            BioTag::ILoc => "I-LOC",
            BioTag::Out => "O",
        }
    }

    pub fn is_location(self) -> bool {
        !matches!(self, BioTag::Out)
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BioTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "B-LOC" => Ok(BioTag::BLoc),
            "I-LOC" => Ok(BioTag::ILoc),
            "O" => Ok(BioTag::Out),
            other => Err(format!("unknown tag {other:?}, expected B-LOC, I-LOC or O")),
        }
    }
}

/// One tweet of the word-labeled corpus. `tokens` and `tags` always have the
/// same, nonzero length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTagSequence {
    pub tweet_id: String,
    pub tokens: Vec<String>,
    pub tags: Vec<BioTag>,
}

impl TokenTagSequence {
    pub fn new(
        tweet_id: impl Into<String>,
        tokens: Vec<String>,
        tags: Vec<BioTag>,
    ) -> std::result::Result<Self, String> {
        if tokens.is_empty() {
            return Err("empty token sequence".into());
        }
        if tokens.len() != tags.len() {
            return Err(format!("{} tokens but {} tags", tokens.len(), tags.len()));
        }
        Ok(TokenTagSequence {
            tweet_id: tweet_id.into(),
            tokens,
            tags,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Whitespace-joined tokens.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Dev,
    Test,
    Validation,
}

impl SplitName {
    /// Dev and validation splits must be fully labeled.
    pub fn requires_labels(self) -> bool {
        !matches!(self, SplitName::Test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit<T> {
    pub name: SplitName,
    pub records: Vec<T>,
}

impl<T> DatasetSplit<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Per-model class-1 posteriors, `N` rows by `M` models, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    row_ids: Vec<String>,
    model_names: Vec<String>,
    values: Vec<f64>,
}

impl ScoreMatrix {
    /// Validates shape and range: `N, M >= 1`, every value finite and in `[0, 1]`.
    pub fn new(
        row_ids: Vec<String>,
        model_names: Vec<String>,
        values: Vec<f64>,
    ) -> std::result::Result<Self, String> {
        if row_ids.is_empty() {
            return Err("score matrix has no rows".into());
        }
        if model_names.is_empty() {
            return Err("score matrix has no model columns".into());
        }
        if values.len() != row_ids.len() * model_names.len() {
            return Err(format!(
                "expected {}x{} values, got {}",
                row_ids.len(),
                model_names.len(),
                values.len()
            ));
        }
        if let Some(pos) = values
            .iter()
            .position(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            let m = model_names.len();
            return Err(format!(
                "value {} for row {:?}, model {:?} is outside [0, 1]",
                values[pos],
                row_ids[pos / m],
                model_names[pos % m]
            ));
        }
        Ok(ScoreMatrix {
            row_ids,
            model_names,
            values,
        })
    }

    /// Builds a matrix from rows, naming models `model_1..model_M`.
    pub fn from_rows(rows: &[Vec<f64>]) -> std::result::Result<Self, String> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err("ragged rows".into());
        }
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let names = (1..=m).map(|j| format!("model_{j}")).collect();
        Self::new(ids, names, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_models(&self) -> usize {
        self.model_names.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_models();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_models() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_models())
    }
}

/// Document embeddings, `N` rows by `D` dimensions, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    row_ids: Vec<String>,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Validates `D >= 1`, a consistent shape and finite values. `N = 0` is allowed.
    pub fn new(
        row_ids: Vec<String>,
        dim: usize,
        values: Vec<f64>,
    ) -> std::result::Result<Self, String> {
        if dim == 0 {
            return Err("embedding dimensionality must be at least 1".into());
        }
        if values.len() != row_ids.len() * dim {
            return Err(format!(
                "expected {}x{dim} values, got {}",
                row_ids.len(),
                values.len()
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(format!(
                "non-finite value in row {:?}, dim {}",
                row_ids[pos / dim],
                pos % dim
            ));
        }
        Ok(EmbeddingMatrix {
            row_ids,
            dim,
            values,
        })
    }

    pub fn from_rows(row_ids: Vec<String>, rows: &[Vec<f64>]) -> std::result::Result<Self, String> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.len() != row_ids.len() {
            return Err("row id count does not match row count".into());
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err("ragged rows".into());
        }
        Self::new(row_ids, dim, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            dim: self.dim,
            values,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(contents.as_bytes()))
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Numbered lines without their `\n` (and a trailing `\r`, if any).
fn numbered_lines(contents: &str) -> impl Iterator<Item = (usize, &str)> {
    contents
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

fn check_unique_id<'a>(
    seen: &mut HashSet<&'a str>,
    id: &'a str,
    path: &Path,
    line: usize,
) -> Result<()> {
    if id.is_empty() {
        return Err(CorpusError::parse(path, line, "empty id"));
    }
    if !seen.insert(id) {
        return Err(CorpusError::parse(
            path,
            line,
            format!("duplicate id {id:?}"),
        ));
    }
    Ok(())
}

fn parse_label(cell: &str, path: &Path, line: usize) -> Result<Option<u8>> {
    match cell.trim() {
        "" => Ok(None),
        "0" => Ok(Some(0)),
        "1" => Ok(Some(1)),
        other => Err(CorpusError::parse(
            path,
            line,
            format!("label {other:?} is not 0 or 1"),
        )),
    }
}

/// Loads a relevance-classification split. Dev and validation splits always
/// require labels; `expect_labels` additionally enforces them on a test split.
pub fn load_rctp(
    path: &Path,
    split: SplitName,
    expect_labels: bool,
) -> Result<DatasetSplit<TweetRecord>> {
    parse_rctp(&read(path)?, path, split, expect_labels)
}

pub fn parse_rctp(
    contents: &str,
    path: &Path,
    split: SplitName,
    expect_labels: bool,
) -> Result<DatasetSplit<TweetRecord>> {
    let need_labels = expect_labels || split.requires_labels();
    let mut lines = numbered_lines(contents);
    let (_, header) = lines
        .next()
        .ok_or_else(|| CorpusError::invalid(path, "missing header line `id\\ttext[\\tlabel]`"))?;
    let columns: Vec<&str> = header.split('\t').collect();
    let has_label = match columns.as_slice() {
        ["id", "text"] => false,
        ["id", "text", "label"] => true,
        _ => {
            return Err(CorpusError::parse(
                path,
                1,
                format!("bad header {header:?}, expected `id\\ttext` or `id\\ttext\\tlabel`"),
            ))
        }
    };
    if need_labels && !has_label {
        return Err(CorpusError::parse(
            path,
            1,
            "labels required but the header has no `label` column",
        ));
    }

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            return Err(CorpusError::parse(
                path,
                line_no,
                format!("expected {} columns, found {}", columns.len(), cells.len()),
            ));
        }
        check_unique_id(&mut seen, cells[0], path, line_no)?;
        let label = if has_label {
            parse_label(cells[2], path, line_no)?
        } else {
            None
        };
        if need_labels && label.is_none() {
            return Err(CorpusError::parse(path, line_no, "missing label"));
        }
        records.push(TweetRecord {
            id: cells[0].to_string(),
            text: cells[1].to_string(),
            label,
        });
    }
    Ok(DatasetSplit {
        name: split,
        records,
    })
}

pub fn write_rctp(path: &Path, records: &[TweetRecord]) -> Result<()> {
    write(path, &format_rctp(records))
}

pub fn format_rctp(records: &[TweetRecord]) -> String {
    let with_labels = records.iter().any(|r| r.label.is_some());
    let mut out = String::from(if with_labels {
        "id\ttext\tlabel\n"
    } else {
        "id\ttext\n"
    });
    for r in records {
        out.push_str(&r.id);
        out.push('\t');
        out.push_str(&r.text);
        if with_labels {
            out.push('\t');
            if let Some(l) = r.label {
                out.push_str(&l.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Loads an `id ... label` table: the first column must be `id` and the last
/// `label`; anything in between is ignored. Every row must be labeled.
pub fn load_labels(path: &Path) -> Result<Vec<(String, u8)>> {
    parse_labels(&read(path)?, path)
}

pub fn parse_labels(contents: &str, path: &Path) -> Result<Vec<(String, u8)>> {
    let mut lines = numbered_lines(contents);
    let (_, header) = lines
        .next()
        .ok_or_else(|| CorpusError::invalid(path, "missing header line"))?;
    let columns: Vec<&str> = header.split('\t').collect();
    if columns.len() < 2 || columns[0] != "id" || columns[columns.len() - 1] != "label" {
        return Err(CorpusError::parse(
            path,
            1,
            format!("bad header {header:?}, expected `id\\t...\\tlabel`"),
        ));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            return Err(CorpusError::parse(
                path,
                line_no,
                format!("expected {} columns, found {}", columns.len(), cells.len()),
            ));
        }
        check_unique_id(&mut seen, cells[0], path, line_no)?;
        let label = parse_label(cells[cells.len() - 1], path, line_no)?
            .ok_or_else(|| CorpusError::parse(path, line_no, "missing label"))?;
        out.push((cells[0].to_string(), label));
    }
    Ok(out)
}

/// Loads a CoNLL-style tagged corpus.
pub fn load_lett(path: &Path, split: SplitName) -> Result<DatasetSplit<TokenTagSequence>> {
    parse_lett(&read(path)?, path, split)
}

pub fn parse_lett(
    contents: &str,
    path: &Path,
    split: SplitName,
) -> Result<DatasetSplit<TokenTagSequence>> {
    struct Open {
        id: String,
        line: usize,
        tokens: Vec<String>,
        tags: Vec<BioTag>,
    }

    fn close(open: Option<Open>, path: &Path, out: &mut Vec<TokenTagSequence>) -> Result<()> {
        if let Some(o) = open {
            if o.tokens.is_empty() {
                return Err(CorpusError::parse(
                    path,
                    o.line,
                    format!("tweet {:?} has no tokens", o.id),
                ));
            }
            out.push(TokenTagSequence {
                tweet_id: o.id,
                tokens: o.tokens,
                tags: o.tags,
            });
        }
        Ok(())
    }

    let mut seen: HashSet<String> = HashSet::new();
    let mut records = Vec::new();
    let mut open: Option<Open> = None;
    for (line_no, line) in numbered_lines(contents) {
        if line.trim().is_empty() {
            close(open.take(), path, &mut records)?;
            continue;
        }
        // token lines always carry a tab, so hashtag tokens are not comments
        if let Some(rest) = line.strip_prefix('#').filter(|_| !line.contains('\t')) {
            let id = rest
                .trim()
                .strip_prefix("id:")
                .map(str::trim)
                .ok_or_else(|| {
                    CorpusError::parse(path, line_no, "comment line must be `# id: <tweet_id>`")
                })?;
            if id.is_empty() {
                return Err(CorpusError::parse(path, line_no, "empty id"));
            }
            if !seen.insert(id.to_string()) {
                return Err(CorpusError::parse(
                    path,
                    line_no,
                    format!("duplicate id {id:?}"),
                ));
            }
            close(open.take(), path, &mut records)?;
            open = Some(Open {
                id: id.to_string(),
                line: line_no,
                tokens: Vec::new(),
                tags: Vec::new(),
            });
            continue;
        }
        let seq = open.as_mut().ok_or_else(|| {
            CorpusError::parse(path, line_no, "token line before any `# id:` line")
        })?;
        let (token, tag) = line
            .split_once('\t')
            .ok_or_else(|| CorpusError::parse(path, line_no, "expected `token\\ttag`"))?;
        if token.is_empty() {
            return Err(CorpusError::parse(path, line_no, "empty token"));
        }
        let tag = tag
            .parse::<BioTag>()
            .map_err(|m| CorpusError::parse(path, line_no, m))?;
        seq.tokens.push(token.to_string());
        seq.tags.push(tag);
    }
    close(open, path, &mut records)?;
    Ok(DatasetSplit {
        name: split,
        records,
    })
}

pub fn write_lett(path: &Path, records: &[TokenTagSequence]) -> Result<()> {
    write(path, &format_lett(records))
}

pub fn format_lett(records: &[TokenTagSequence]) -> String {
    let mut out = String::new();
    for (i, seq) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("# id: ");
        out.push_str(&seq.tweet_id);
        out.push('\n');
        for (tok, tag) in seq.tokens.iter().zip(&seq.tags) {
            out.push_str(tok);
            out.push('\t');
            out.push_str(tag.as_str());
            out.push('\n');
        }
    }
    out
}

/// Parses a header `id\t<col>...` plus numeric rows. `check` validates each
/// value and returns a message on failure.
fn parse_numeric_table(
    contents: &str,
    path: &Path,
    what: &str,
    check: impl Fn(f64) -> Option<&'static str>,
) -> Result<(Vec<String>, Vec<String>, Vec<f64>)> {
    let mut lines = numbered_lines(contents);
    let (_, header) = lines
        .next()
        .ok_or_else(|| CorpusError::invalid(path, format!("missing {what} header line")))?;
    let mut columns = header.split('\t');
    if columns.next() != Some("id") {
        return Err(CorpusError::parse(path, 1, "header must start with `id`"));
    }
    let names: Vec<String> = columns.map(str::to_string).collect();
    if names.is_empty() || names.iter().any(String::is_empty) {
        return Err(CorpusError::parse(
            path,
            1,
            format!("{what} header needs at least one named column after `id`"),
        ));
    }
    let mut seen = HashSet::new();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != names.len() + 1 {
            return Err(CorpusError::parse(
                path,
                line_no,
                format!(
                    "ragged row: expected {} values, found {}",
                    names.len(),
                    cells.len() - 1
                ),
            ));
        }
        check_unique_id(&mut seen, cells[0], path, line_no)?;
        for (col, cell) in cells[1..].iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                CorpusError::parse(
                    path,
                    line_no,
                    format!("column {:?}: {cell:?} is not a number", names[col]),
                )
            })?;
            if let Some(msg) = check(v) {
                return Err(CorpusError::parse(
                    path,
                    line_no,
                    format!("column {:?}: value {cell} {msg}", names[col]),
                ));
            }
            values.push(v);
        }
        ids.push(cells[0].to_string());
    }
    Ok((ids, names, values))
}

pub fn load_scores(path: &Path) -> Result<ScoreMatrix> {
    parse_scores(&read(path)?, path)
}

pub fn parse_scores(contents: &str, path: &Path) -> Result<ScoreMatrix> {
    let (ids, names, values) = parse_numeric_table(contents, path, "score", |v| {
        if !v.is_finite() {
            Some("is not finite")
        } else if !(0.0..=1.0).contains(&v) {
            Some("is outside [0, 1]")
        } else {
            None
        }
    })?;
    ScoreMatrix::new(ids, names, values).map_err(|m| CorpusError::invalid(path, m))
}

pub fn write_scores(path: &Path, scores: &ScoreMatrix) -> Result<()> {
    write(path, &format_scores(scores))
}

pub fn format_scores(scores: &ScoreMatrix) -> String {
    let mut out = String::from("id");
    for name in scores.model_names() {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (id, row) in scores.row_ids().iter().zip(scores.rows()) {
        push_row(&mut out, id, row);
    }
    out
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    parse_embeddings(&read(path)?, path)
}

pub fn parse_embeddings(contents: &str, path: &Path) -> Result<EmbeddingMatrix> {
    let (ids, names, values) = parse_numeric_table(contents, path, "embedding", |v| {
        (!v.is_finite()).then_some("is not finite")
    })?;
    EmbeddingMatrix::new(ids, names.len(), values).map_err(|m| CorpusError::invalid(path, m))
}

pub fn write_embeddings(path: &Path, emb: &EmbeddingMatrix) -> Result<()> {
    write(path, &format_embeddings(emb))
}

pub fn format_embeddings(emb: &EmbeddingMatrix) -> String {
    let mut out = String::from("id");
    for d in 0..emb.dim() {
        out.push_str(&format!("\tdim_{d}"));
    }
    out.push('\n');
    for (id, row) in emb.row_ids().iter().zip(emb.rows()) {
        push_row(&mut out, id, row);
    }
    out
}

// `{}` on f64 prints the shortest representation that parses back exactly.
fn push_row(out: &mut String, id: &str, row: &[f64]) {
    out.push_str(id);
    for v in row {
        out.push('\t');
        out.push_str(&v.to_string());
    }
    out.push('\n');
}
