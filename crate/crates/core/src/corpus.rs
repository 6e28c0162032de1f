//! Text records, tweet normalization, tokenization and n-gram count features.
//!
//! Normalization replaces hashtags, user mentions, links and emoji with
//! placeholder tokens, lowercases the rest and collapses whitespace. The
//! tokenizer splits on whitespace and isolates punctuation, keeping the
//! placeholders intact. Features are raw n-gram counts over a vocabulary
//! whose column order is lexicographic, so two builds over the same
//! documents always agree.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HASHTAG: &str = "<hashtag>";
pub const USER: &str = "<user>";
pub const URL: &str = "<url>";
pub const EMOJI: &str = "<emoji>";

const PLACEHOLDERS: [&str; 4] = [HASHTAG, USER, URL, EMOJI];

/// Binary class label: 1 marks a positive (job-loss) event.
pub type Label = u8;

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub norm_text: String,
    pub label: Option<Label>,
    pub lang: Option<String>,
    pub source: Option<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        Document {
            id: id.into(),
            norm_text: normalize_tweet(&raw_text),
            raw_text,
            label: None,
            lang: None,
            source: None,
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = Some(lang.into());
        self
    }
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)https?://\S*").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#(\w+)").unwrap())
}

/// Codepoints replaced by `<emoji>`.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F300..=0x1F5FF   // Miscellaneous Symbols and Pictographs
        | 0x1F600..=0x1F64F // Emoticons
        | 0x1F680..=0x1F6FF // Transport and Map Symbols
        | 0x1F900..=0x1F9FF // Supplemental Symbols and Pictographs
        | 0x1FA70..=0x1FAFF // Symbols and Pictographs Extended-A
    )
}

/// Presentation selectors and the zero-width joiner only glue emoji together;
/// they are dropped before anything else so they cannot hide a pattern.
fn is_emoji_glue(c: char) -> bool {
    matches!(c, '\u{FE0E}' | '\u{FE0F}' | '\u{200D}')
}

/// Normalizes a raw tweet. Total and idempotent.
pub fn normalize_tweet(raw: &str) -> String {
    let text: String = raw.chars().filter(|&c| !is_emoji_glue(c)).collect();
    let text = url_re().replace_all(&text, " <url> ");
    let text = mention_re().replace_all(&text, " <user> ");
    let text = hashtag_re().replace_all(&text, |caps: &regex::Captures<'_>| {
        format!(" <hashtag> {} ", caps[1].to_lowercase())
    });

    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '#' {
            out.push(' ');
        } else if is_emoji(c) {
            out.push_str(" <emoji> ");
        } else {
            out.push(c);
        }
    }
    out.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub read: usize,
    pub deduped: usize,
    pub dropped_non_english: usize,
    pub written: usize,
}

/// Drops non-English records and repeated normalized texts, keeping first
/// occurrences in input order. Repeated ids are dropped as duplicates too.
pub fn dedupe_and_filter(docs: Vec<Document>) -> Vec<Document> {
    dedupe_and_filter_with_stats(docs).0
}

pub fn dedupe_and_filter_with_stats(docs: Vec<Document>) -> (Vec<Document>, FilterStats) {
    let mut stats = FilterStats {
        read: docs.len(),
        ..FilterStats::default()
    };
    let mut seen_text = HashSet::new();
    let mut seen_id = HashSet::new();
    let mut out = Vec::with_capacity(docs.len());
    for doc in docs {
        if doc.lang.as_deref().is_some_and(|l| l != "en") {
            stats.dropped_non_english += 1;
            continue;
        }
        if seen_text.contains(&doc.norm_text) || seen_id.contains(&doc.id) {
            stats.deduped += 1;
            continue;
        }
        seen_text.insert(doc.norm_text.clone());
        seen_id.insert(doc.id.clone());
        out.push(doc);
    }
    stats.written = out.len();
    (out, stats)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Whitespace split with punctuation isolated into single-character tokens.
pub fn tokenize(norm_text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in norm_text.split_whitespace() {
        let mut rest = chunk;
        let mut word = String::new();
        while let Some(c) = rest.chars().next() {
            if c == '<' {
                if let Some(p) = PLACEHOLDERS.iter().find(|p| rest.starts_with(**p)) {
                    if !word.is_empty() {
                        tokens.push(std::mem::take(&mut word));
                    }
                    tokens.push((*p).to_string());
                    rest = &rest[p.len()..];
                    continue;
                }
            }
            if is_word_char(c) {
                word.push(c);
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(c.to_string());
            }
            rest = &rest[c.len_utf8()..];
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

fn ngrams_of(tokens: &[String], min: usize, max: usize) -> impl Iterator<Item = String> + '_ {
    (min..=max).flat_map(move |n| {
        tokens
            .windows(n)
            .map(|w| w.join(" "))
            .collect::<Vec<_>>()
            .into_iter()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NgramConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub min_df: usize,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            ngram_min: 1,
            ngram_max: 2,
            min_df: 2,
        }
    }
}

impl NgramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_min == 0 || self.ngram_max < self.ngram_min {
            return Err(Error::InvalidNgramRange {
                min: self.ngram_min,
                max: self.ngram_max,
            });
        }
        if self.min_df == 0 {
            return Err(Error::InvalidConfig("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fitted n-gram to column map. Columns are dense and follow the
/// lexicographic order of the n-gram strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    config: NgramConfig,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn config(&self) -> NgramConfig {
        self.config
    }
}

pub fn build_vocab(docs: &[Document], config: NgramConfig) -> Result<Vocabulary> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let tokens = tokenize(&doc.norm_text);
        let distinct: BTreeSet<String> =
            ngrams_of(&tokens, config.ngram_min, config.ngram_max).collect();
        for g in distinct {
            *df.entry(g).or_default() += 1;
        }
    }
    let terms: Vec<String> = df
        .into_iter()
        .filter(|(_, n)| *n >= config.min_df)
        .map(|(g, _)| g)
        .collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        terms,
        index,
        config,
    })
}

/// Sparse non-negative feature vector, sorted by column with zeros omitted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pairs: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds a vector from arbitrary pairs: sums duplicates and drops
    /// non-positive weights.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, w) in pairs {
            *acc.entry(i).or_default() += w;
        }
        SparseVector {
            pairs: acc.into_iter().filter(|&(_, w)| w > 0.0).collect(),
        }
    }

    pub fn pairs(&self) -> &[(usize, f64)] {
        &self.pairs
    }

    pub fn nnz(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.pairs.last().map(|&(i, _)| i)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.pairs.iter().map(|&(i, w)| w * dense[i]).sum()
    }
}

pub fn vectorize(doc: &Document, vocab: &Vocabulary) -> SparseVector {
    vectorize_text(&doc.norm_text, vocab)
}

pub fn vectorize_text(norm_text: &str, vocab: &Vocabulary) -> SparseVector {
    let tokens = tokenize(norm_text);
    let cfg = vocab.config;
    SparseVector::from_pairs(
        ngrams_of(&tokens, cfg.ngram_min, cfg.ngram_max)
            .filter_map(|g| vocab.get(&g))
            .map(|i| (i, 1.0)),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Record {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

pub(crate) fn parse_label(value: i64) -> Result<Label> {
    match value {
        0 | 1 => Ok(value as Label),
        other => Err(Error::InvalidLabel(other)),
    }
}

/// Reads a JSON-lines dataset. Blank lines are skipped; every other line
/// must parse, and failures carry their 1-based line number.
pub fn read_documents(reader: impl BufRead) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: n + 1,
            message,
        };
        let rec: Record = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let label = rec
            .label
            .map(parse_label)
            .transpose()
            .map_err(|e| parse_err(e.to_string()))?;
        let mut doc = Document::new(rec.id, rec.text);
        doc.label = label;
        doc.lang = rec.lang;
        doc.source = rec.source;
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes documents in the dataset schema. When `normalized` is set the
/// `text` field carries the normalized text.
pub fn write_documents(mut writer: impl Write, docs: &[Document], normalized: bool) -> Result<()> {
    for doc in docs {
        let rec = Record {
            id: doc.id.clone(),
            text: if normalized {
                doc.norm_text.clone()
            } else {
                doc.raw_text.clone()
            },
            label: doc.label.map(i64::from),
            lang: doc.lang.clone(),
            source: doc.source.clone(),
        };
        serde_json::to_writer(&mut writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
