//! Activity-export ingestion and corpus preprocessing.
//!
//! An export is either a MyActivity-style JSON array (objects with a
//! `title` or `text` string and a `time` stamp) or a plain UTF-8 file with
//! one document per line. Everything except the text and the day of the
//! timestamp is dropped at parse time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer as SnowballStemmer};
use unicode_segmentation::UnicodeSegmentation;

use crate::artifact::{self, ArtifactMeta};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_TYPES: usize = 2500;

const GERMAN_STOPWORDS: &str = include_str!("../data/stopwords_de.txt");

/// Calendar day; activity timestamps are truncated to this precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Day {
    pub year: u16,
    pub month: u8,
    pub day: u8,
}

impl Day {
    /// Parse the leading `YYYY-MM-DD` of an RFC 3339 style stamp.
    pub fn parse_prefix(stamp: &str) -> Option<Day> {
        let b = stamp.as_bytes();
        if b.len() < 10 || b[4] != b'-' || b[7] != b'-' {
            return None;
        }
        let year = stamp.get(0..4)?.parse().ok()?;
        let month: u8 = stamp.get(5..7)?.parse().ok()?;
        let day: u8 = stamp.get(8..10)?.parse().ok()?;
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return None;
        }
        Some(Day { year, month, day })
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityRecord {
    pub day: Option<Day>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawActivityExport {
    pub participant_id: String,
    pub records: Vec<ActivityRecord>,
}

/// Participant id for an export path: the file stem.
pub fn participant_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn parse_activity_export(path: &Path) -> Result<RawActivityExport> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::MalformedExport {
        path: path.to_path_buf(),
        reason: "not valid UTF-8".into(),
    })?;
    let records = parse_export_text(path, &text)?;
    if records.is_empty() {
        return Err(Error::EmptyExport(path.to_path_buf()));
    }
    Ok(RawActivityExport {
        participant_id: participant_id_for(path),
        records,
    })
}

fn parse_export_text(path: &Path, text: &str) -> Result<Vec<ActivityRecord>> {
    let looks_json = path.extension().is_some_and(|e| e == "json")
        || text.trim_start().starts_with('[');
    if !looks_json {
        return Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| ActivityRecord {
                day: None,
                text: l.to_string(),
            })
            .collect());
    }

    let malformed = |reason: String| Error::MalformedExport {
        path: path.to_path_buf(),
        reason,
    };
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| malformed("top level is not an array".into()))?;
    let mut records = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| malformed(format!("entry {i} is not an object")))?;
        let text = obj
            .get("text")
            .or_else(|| obj.get("title"))
            .and_then(|v| v.as_str());
        let Some(text) = text.filter(|t| !t.trim().is_empty()) else {
            continue;
        };
        let day = obj
            .get("time")
            .and_then(|v| v.as_str())
            .and_then(Day::parse_prefix);
        records.push(ActivityRecord {
            day,
            text: text.to_string(),
        });
    }
    Ok(records)
}

/// Named stemming rule set.
pub enum Stemmer {
    Identity,
    Snowball(SnowballStemmer),
    /// Longest-match suffix stripping; rules come from a data file with one
    /// suffix per line.
    Suffix { suffixes: Vec<String>, min_stem: usize },
}

impl fmt::Debug for Stemmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stemmer::Identity => f.write_str("Identity"),
            Stemmer::Snowball(_) => f.write_str("Snowball"),
            Stemmer::Suffix { suffixes, min_stem } => f
                .debug_struct("Suffix")
                .field("suffixes", &suffixes.len())
                .field("min_stem", min_stem)
                .finish(),
        }
    }
}

impl Stemmer {
    /// `none`, a snowball language name (`german`, `english`, ...), or
    /// `suffix:<path>`.
    pub fn from_id(id: &str) -> Result<Stemmer> {
        if let Some(path) = id.strip_prefix("suffix:") {
            let text = artifact::read_to_string(Path::new(path))?;
            return Ok(Stemmer::suffix_rules(text.lines()));
        }
        let algorithm = match id {
            "none" | "identity" => return Ok(Stemmer::Identity),
            "german" => Algorithm::German,
            "english" => Algorithm::English,
            "french" => Algorithm::French,
            "dutch" => Algorithm::Dutch,
            "spanish" => Algorithm::Spanish,
            "italian" => Algorithm::Italian,
            "swedish" => Algorithm::Swedish,
            "danish" => Algorithm::Danish,
            "norwegian" => Algorithm::Norwegian,
            "portuguese" => Algorithm::Portuguese,
            "russian" => Algorithm::Russian,
            other => return Err(Error::Config(format!("unknown stemmer '{other}'"))),
        };
        Ok(Stemmer::Snowball(SnowballStemmer::create(algorithm)))
    }

    pub fn suffix_rules<'a>(lines: impl IntoIterator<Item = &'a str>) -> Stemmer {
        let mut suffixes: Vec<String> = lines
            .into_iter()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        suffixes.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        suffixes.dedup();
        Stemmer::Suffix {
            suffixes,
            min_stem: 3,
        }
    }

    pub fn stem(&self, word: &str) -> String {
        match self {
            Stemmer::Identity => word.to_string(),
            Stemmer::Snowball(s) => s.stem(word).into_owned(),
            Stemmer::Suffix { suffixes, min_stem } => {
                let len = word.chars().count();
                for suf in suffixes {
                    if let Some(stem) = word.strip_suffix(suf.as_str()) {
                        if len - suf.chars().count() >= *min_stem {
                            return stem.to_string();
                        }
                    }
                }
                word.to_string()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LanguageFilter {
    Any,
    /// Keep only tokens made of alphabetic characters.
    Alphabetic,
}

impl LanguageFilter {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "any" => Ok(LanguageFilter::Any),
            "alphabetic" => Ok(LanguageFilter::Alphabetic),
            other => Err(Error::Config(format!("unknown language filter '{other}'"))),
        }
    }

    fn keep(self, token: &str) -> bool {
        match self {
            LanguageFilter::Any => true,
            LanguageFilter::Alphabetic => token.chars().all(char::is_alphabetic),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub stopwords: BTreeSet<String>,
    pub stemmer_id: String,
    pub language_filter: String,
    pub lowercase: bool,
    pub min_word_frequency_for_vocab_report: usize,
}

impl PreprocessConfig {
    /// Bundled German stopword list with the German snowball stemmer.
    pub fn german() -> Self {
        Self {
            stopwords: parse_word_list(GERMAN_STOPWORDS),
            stemmer_id: "german".into(),
            language_filter: "any".into(),
            lowercase: true,
            min_word_frequency_for_vocab_report: 3,
        }
    }
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self::german()
    }
}

/// One word per line; blank lines and `#` comments ignored.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_word_list(path: &Path) -> Result<BTreeSet<String>> {
    Ok(parse_word_list(&artifact::read_to_string(path)?))
}

/// Lower-level tokenizer built from a [`PreprocessConfig`].
#[derive(Debug)]
pub struct Preprocessor {
    stopwords: BTreeSet<String>,
    stemmer: Stemmer,
    filter: LanguageFilter,
    lowercase: bool,
}

impl Preprocessor {
    pub fn new(cfg: &PreprocessConfig) -> Result<Self> {
        Ok(Self {
            stopwords: cfg.stopwords.clone(),
            stemmer: Stemmer::from_id(&cfg.stemmer_id)?,
            filter: LanguageFilter::from_id(&cfg.language_filter)?,
            lowercase: cfg.lowercase,
        })
    }

    /// Normalize a single word: case, filters, stemming. `None` when the word
    /// is filtered out.
    pub fn normalize(&self, word: &str) -> Option<String> {
        let w = if self.lowercase {
            word.to_lowercase()
        } else {
            word.to_string()
        };
        if !is_meaningful(&w) || !self.filter.keep(&w) || self.stopwords.contains(&w) {
            return None;
        }
        let stem = self.stemmer.stem(&w);
        if !is_meaningful(&stem) || self.stopwords.contains(&stem) {
            return None;
        }
        Some(stem)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let clean = strip_markup(text);
        clean
            .unicode_words()
            .filter_map(|w| self.normalize(w))
            .collect()
    }
}

fn is_meaningful(token: &str) -> bool {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (None, _) | (Some(_), None) => false,
        _ => !token.chars().all(|c| c.is_ascii_digit()),
    }
}

/// Replace HTML tags and character entities with spaces.
pub fn strip_markup(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(['<', '&']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        let skip = if tail.starts_with('<') {
            tag_len(tail)
        } else {
            entity_len(tail)
        };
        match skip {
            Some(n) => {
                out.push(' ');
                rest = &tail[n..];
            }
            None => {
                out.push(tail.chars().next().unwrap_or(' '));
                rest = &tail[tail.chars().next().map_or(1, char::len_utf8)..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn tag_len(s: &str) -> Option<usize> {
    // `<` followed by a name, `/` or `!`, up to the closing `>`
    let second = s[1..].chars().next()?;
    if !(second.is_ascii_alphabetic() || second == '/' || second == '!') {
        return None;
    }
    let end = s.find('>')?;
    if s[1..end].contains('<') {
        return None;
    }
    Some(end + 1)
}

fn entity_len(s: &str) -> Option<usize> {
    let end = s.find(';')?;
    let body = &s[1..end];
    let ok = (1..=10).contains(&body.len())
        && (body.chars().all(|c| c.is_ascii_alphanumeric())
            || (body.starts_with('#') && body[1..].chars().all(|c| c.is_ascii_alphanumeric())));
    ok.then_some(end + 1)
}

/// One participant's preprocessed token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndividualCorpus {
    pub participant_id: String,
    tokens: Vec<String>,
    freq_table: BTreeMap<String, usize>,
}

impl IndividualCorpus {
    pub fn from_tokens(participant_id: impl Into<String>, tokens: Vec<String>) -> Self {
        let mut freq_table = BTreeMap::new();
        for t in &tokens {
            *freq_table.entry(t.clone()).or_insert(0) += 1;
        }
        Self {
            participant_id: participant_id.into(),
            tokens,
            freq_table,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn freq_table(&self) -> &BTreeMap<String, usize> {
        &self.freq_table
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn type_count(&self) -> usize {
        self.freq_table.len()
    }

    /// Frequency table sorted by descending count, then lexicographically.
    pub fn ranked_frequencies(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self
            .freq_table
            .iter()
            .map(|(w, &c)| (w.as_str(), c))
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Words seen at least `min_count` times.
    pub fn vocab_report(&self, min_count: usize) -> usize {
        self.freq_table.values().filter(|&&c| c >= min_count).count()
    }

    pub fn to_corpus_file(&self, meta: &ArtifactMeta) -> String {
        let mut s = meta.header_line();
        s.push_str(&format!(
            "{}\t{}\t{}\n",
            self.participant_id,
            self.token_count(),
            self.type_count()
        ));
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn to_freq_file(&self, meta: &ArtifactMeta) -> String {
        let mut s = meta.header_line();
        for (w, c) in self.ranked_frequencies() {
            s.push_str(&format!("{w}\t{c}\n"));
        }
        s
    }

    pub fn read_corpus_file(path: &Path) -> Result<Self> {
        let text = artifact::read_to_string(path)?;
        let mut lines = artifact::body_lines(&text);
        let header = lines
            .next()
            .ok_or_else(|| Error::artifact(path, "missing header"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::artifact(path, "header needs 3 tab-separated fields"));
        }
        let token_count: usize = artifact::parse_field(path, fields[1], "token_count")?;
        let type_count: usize = artifact::parse_field(path, fields[2], "type_count")?;
        let tokens: Vec<String> = lines.map(str::to_string).collect();
        let ic = IndividualCorpus::from_tokens(fields[0], tokens);
        if ic.token_count() != token_count || ic.type_count() != type_count {
            return Err(Error::artifact(path, "header counts disagree with body"));
        }
        Ok(ic)
    }
}

pub fn build_corpus(raw: &RawActivityExport, pre: &Preprocessor) -> IndividualCorpus {
    let tokens = raw
        .records
        .iter()
        .flat_map(|r| pre.tokenize(&r.text))
        .collect();
    IndividualCorpus::from_tokens(raw.participant_id.clone(), tokens)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validation {
    Accept,
    Reject(String),
}

impl Validation {
    pub fn is_accept(&self) -> bool {
        matches!(self, Validation::Accept)
    }
}

/// Corpora with fewer than `min_types` distinct (stemmed) words are rejected.
pub fn validate_corpus(ic: &IndividualCorpus, min_types: usize) -> Validation {
    if ic.type_count() < min_types {
        Validation::Reject(format!(
            "{} word types, fewer than {min_types}",
            ic.type_count()
        ))
    } else {
        Validation::Accept
    }
}
