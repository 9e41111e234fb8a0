//! Deterministic text cleaning with two profiles.
//!
//! The classification profile removes `@`-mentions, URLs, emoji and stop
//! words, keeping the original casing and punctuation of surviving words.
//! The topics profile additionally drops words shorter than
//! [`TOPICS_MIN_WORD_LEN`] characters, strips edge punctuation and
//! lowercases, producing the unigram vocabulary used for keyword scoring.
//!
//! Both profiles are idempotent and only ever delete characters (apart from
//! normalizing whitespace runs to a single space).

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Words with fewer characters than this are dropped by the topics profile.
pub const TOPICS_MIN_WORD_LEN: usize = 4;

const ITALIAN_STOPWORDS: &str = include_str!("../data/stopwords_it.txt");

static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s*@\w+").unwrap());

// Scheme-prefixed or bare t.co links, not including trailing punctuation.
static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"\s*(?:https?://|\bt\.co/)(?:\S*[^\s!?.,;:)\]}"'»…])?"#).unwrap()
});

/// Lowercase stop word set, cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopWords(Arc<HashSet<String>>);

impl StopWords {
    /// The bundled Italian list.
    pub fn italian() -> Self {
        Self::parse(ITALIAN_STOPWORDS)
    }

    /// One word per line; blank lines ignored; words are lowercased.
    pub fn parse(contents: &str) -> Self {
        StopWords(Arc::new(
            contents
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        ))
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let words = Self::parse(&fs::read_to_string(path)?);
        if words.is_empty() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}: stop word list is empty", path.display()),
            ));
        }
        Ok(words)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Classification,
    Topics,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanProfile {
    pub kind: ProfileKind,
    pub stopwords: StopWords,
    /// Only consulted by the topics profile.
    pub min_word_len: usize,
}

impl CleanProfile {
    pub fn classification(stopwords: StopWords) -> Self {
        CleanProfile {
            kind: ProfileKind::Classification,
            stopwords,
            min_word_len: 0,
        }
    }

    pub fn topics(stopwords: StopWords) -> Self {
        CleanProfile {
            kind: ProfileKind::Topics,
            stopwords,
            min_word_len: TOPICS_MIN_WORD_LEN,
        }
    }

    pub fn clean(&self, text: &str) -> String {
        match self.kind {
            ProfileKind::Classification => clean_classification(text, self),
            ProfileKind::Topics => clean_topics(text, self),
        }
    }
}

/// Emoticons, Misc Symbols & Pictographs, Transport & Map, Supplemental
/// Symbols & Pictographs, variation selectors and the zero-width joiner.
pub fn is_emoji(c: char) -> bool {
    matches!(
        u32::from(c),
        0x1F300..=0x1F5FF
            | 0x1F600..=0x1F64F
            | 0x1F680..=0x1F6FF
            | 0x1F900..=0x1F9FF
            | 0xFE00..=0xFE0F
            | 0xE0100..=0xE01EF
            | 0x200D
    )
}

fn strip_noise(text: &str) -> String {
    let no_emoji: String = text.chars().filter(|&c| !is_emoji(c)).collect();
    let no_mentions = MENTION.replace_all(&no_emoji, "");
    URL.replace_all(&no_mentions, "").into_owned()
}

fn trim_edges(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Splits on Unicode whitespace and trims non-alphanumeric characters from
/// both ends of every token; empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(trim_edges)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Cleaning for the relevance classifiers.
pub fn clean_classification(text: &str, profile: &CleanProfile) -> String {
    let stripped = strip_noise(text);
    let kept: Vec<&str> = stripped
        .split_whitespace()
        .filter(|tok| {
            let core = trim_edges(tok);
            core.is_empty() || !profile.stopwords.contains(&core.to_lowercase())
        })
        .collect();
    kept.join(" ")
}

/// Cleaning for topic keyword extraction.
pub fn clean_topics(text: &str, profile: &CleanProfile) -> String {
    let lowered = strip_noise(text).to_lowercase();
    let kept: Vec<&str> = tokenize(&lowered)
        .into_iter()
        .filter(|w| w.chars().count() >= profile.min_word_len && !profile.stopwords.contains(w))
        .collect();
    kept.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cls() -> CleanProfile {
        CleanProfile::classification(StopWords::italian())
    }

    fn top() -> CleanProfile {
        CleanProfile::topics(StopWords::italian())
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            clean_classification("@mario alluvione https://t.co/abc!", &cls()),
            "alluvione!"
        );
        assert_eq!(clean_classification("", &cls()), "");
        assert_eq!(clean_classification("il di che la", &cls()), "");
        assert_eq!(
            clean_classification("Allerta 🌧️ a Genova,   t.co/xyz fiume @protciv", &cls()),
            "Allerta Genova, fiume"
        );
        assert_eq!(
            clean_classification("vedi http://example.com/a?b=1. Ora", &cls()),
            "vedi."
        );
    }

    #[test]
    fn topics_examples() {
        assert_eq!(
            clean_topics("Allagamento in via Prati", &top()),
            "allagamento prati"
        );
        assert_eq!(clean_topics("alluvione", &top()), "alluvione");
        assert_eq!(clean_topics("a b c", &top()), "");
        assert_eq!(
            clean_topics("#Alluvione a GENOVA!! https://t.co/q 😱", &top()),
            "alluvione genova"
        );
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("alluvione, Genova!"), ["alluvione", "Genova"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("  x  "), ["x"]);
        assert_eq!(tokenize("... ?!"), Vec::<&str>::new());
    }

    #[test]
    fn bundled_list_is_lowercase_and_keeps_street_words() {
        let sw = StopWords::italian();
        assert!(sw.len() > 100);
        assert!(sw.contains("in") && sw.contains("della"));
        assert!(!sw.contains("via"));
    }

    fn fuzz_text() -> impl Strategy<Value = String> {
        let pieces = prop::sample::select(vec![
            "alluvione",
            "Genova",
            "in",
            "via",
            "@mario",
            "https://t.co/abc",
            "t.co/x",
            "http://a.it/b",
            "😱",
            "🌧",
            "\u{FE0F}",
            "!",
            ",",
            "...",
            "e'",
            "Il",
            "fiume",
            " ",
            "  ",
            "\n",
            "@",
            "://",
            "http",
            "ab😀cd",
            "x@y",
            "Città",
            "(",
            ")",
            "#tag",
        ]);
        prop::collection::vec(pieces, 0..16).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent(text in fuzz_text()) {
            let c = clean_classification(&text, &cls());
            prop_assert_eq!(clean_classification(&c, &cls()), c.clone());
            let t = clean_topics(&text, &top());
            prop_assert_eq!(clean_topics(&t, &top()), t.clone());
        }

        #[test]
        fn topics_vocabulary_respects_profile(text in fuzz_text()) {
            let profile = top();
            for w in clean_topics(&text, &profile).split(' ').filter(|w| !w.is_empty()) {
                prop_assert!(w.chars().count() >= TOPICS_MIN_WORD_LEN);
                prop_assert!(!profile.stopwords.contains(w));
            }
        }

        #[test]
        fn cleaning_only_deletes(text in fuzz_text()) {
            let c = clean_classification(&text, &cls());
            prop_assert!(c.chars().all(|ch| ch == ' ' || text.contains(ch)));
            let lowered = text.to_lowercase();
            let t = clean_topics(&text, &top());
            prop_assert!(t.chars().all(|ch| ch == ' ' || lowered.contains(ch)));
        }
    }
}
