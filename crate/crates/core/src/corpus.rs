//! Report ingestion, regex denoising, tokenization and corpus statistics.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: malformed report: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: invalid date {value:?}")]
    InvalidDate { line: usize, value: String },
    #[error("line {line}: empty well_id")]
    EmptyWellId { line: usize },
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("no tokens left after applying min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },
}

/// One daily report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub well_id: String,
    pub date: NaiveDate,
    pub operator_id: String,
    pub npt: bool,
    pub text: String,
}

/// Where a sentence came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSource {
    pub well_id: String,
    pub date: NaiveDate,
    pub operator_id: String,
    /// Position of the sentence within its report.
    pub index: usize,
}

/// A cleaned, tokenized sentence. Tokens never contain whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub source: Option<SentenceSource>,
}

impl Sentence {
    /// A sentence with no report attribution.
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        Sentence { tokens, source: None }
    }

    /// Cleans and tokenizes free text into an unattributed sentence.
    pub fn from_text(text: &str) -> Self {
        Sentence::from_tokens(tokenize(&clean_text(text)))
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Deserialize)]
struct RawReport {
    well_id: String,
    date: String,
    operator_id: String,
    npt: bool,
    text: String,
}

/// Reads JSON Lines reports, one per non-blank line, in file order.
pub fn ingest_reports(path: &Path) -> Result<Vec<Report>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reports = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        reports.push(parse_report_line(&line, i + 1)?);
    }
    Ok(reports)
}

/// Parses one JSON Lines record; `line` is 1-based and only used in errors.
pub fn parse_report_line(json: &str, line: usize) -> Result<Report, CorpusError> {
    let raw: RawReport = serde_json::from_str(json).map_err(|e| CorpusError::Malformed {
        line,
        message: e.to_string(),
    })?;
    if raw.well_id.is_empty() {
        return Err(CorpusError::EmptyWellId { line });
    }
    let date = parse_date(&raw.date).ok_or_else(|| CorpusError::InvalidDate {
        line,
        value: raw.date.clone(),
    })?;
    Ok(Report {
        well_id: raw.well_id,
        date,
        operator_id: raw.operator_id,
        npt: raw.npt,
        text: raw.text,
    })
}

/// Accepts a calendar date or a full ISO-8601 timestamp (whose date is kept).
fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.date_naive())
        .or_else(|_| chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").map(|dt| dt.date()))
        .ok()
}

/// The denoising substitutions, applied in this order.
const CLEANING_RULES: [(&str, &str); 10] = [
    // commas at end of words
    (r",\s", " "),
    (r",([a-zA-Z])", " ${1}"),
    // enclosing parentheses
    (r"\((.*?)\)", " ${1} "),
    // bullet marks
    ("\u{2022}", " "),
    // dashes
    (r"-\s", " "),
    // horizontal bars
    (r"==+|\*\*+", " "),
    // enclosing brackets
    (r"\[(.*?)\]", " ${1} "),
    // pounds and semicolons
    (r"#|;", " "),
    // underscores
    (r"_", " "),
    // orphan forward slashes
    (r"\s/\s", " "),
];

static CLEANERS: LazyLock<Vec<(Regex, &'static str)>> = LazyLock::new(|| {
    CLEANING_RULES
        .iter()
        .map(|&(pattern, repl)| (Regex::new(pattern).expect("cleaning rule compiles"), repl))
        .collect()
});

/// Applies the ten denoising substitutions in order, then collapses runs of
/// whitespace to one space and trims both ends.
pub fn clean_text(raw: &str) -> String {
    let mut text = raw.to_owned();
    for (re, repl) in CLEANERS.iter() {
        if let std::borrow::Cow::Owned(replaced) = re.replace_all(&text, *repl) {
            text = replaced;
        }
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits on whitespace. No case folding, no punctuation stripping.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

static SENTENCE_BREAK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\.(?:\s+|\z)|\n").expect("sentence break compiles"));

/// Splits a report into sentences at newlines and at a period followed by
/// whitespace (or ending the text). Segments that clean to nothing are dropped;
/// indices count only the kept sentences.
pub fn segment_sentences(report: &Report) -> Vec<Sentence> {
    SENTENCE_BREAK
        .split(&report.text)
        .map(|segment| tokenize(&clean_text(segment)))
        .filter(|tokens| !tokens.is_empty())
        .enumerate()
        .map(|(index, tokens)| Sentence {
            tokens,
            source: Some(SentenceSource {
                well_id: report.well_id.clone(),
                date: report.date,
                operator_id: report.operator_id.clone(),
                index,
            }),
        })
        .collect()
}

/// Sentences of every report, in report order.
pub fn segment_all(reports: &[Report]) -> Vec<Sentence> {
    reports.iter().flat_map(segment_sentences).collect()
}

/// Token ids, frequencies and the total count of retained tokens.
///
/// Ids are dense and ordered by descending count, ties broken by the token's
/// lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    ids: HashMap<String, usize>,
    total: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(token, count)` pairs, sorting them into id order.
    pub fn from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let ids = entries.iter().enumerate().map(|(i, (t, _))| (t.clone(), i)).collect();
        let total = entries.iter().map(|(_, c)| c).sum();
        let (tokens, counts) = entries.into_iter().unzip();
        Vocabulary {
            tokens,
            counts,
            ids,
            total,
        }
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// T: occurrences of retained tokens.
    pub fn total_tokens(&self) -> u64 {
        self.total
    }

    /// V
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }
}

fn count_tokens<'a, I>(tokens: I) -> HashMap<&'a str, u64>
where
    I: IntoIterator<Item = &'a String>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    counts
}

/// Keeps tokens seen at least `min_count` times.
pub fn build_vocabulary(sentences: &[Sentence], min_count: u64) -> Result<Vocabulary, CorpusError> {
    if min_count == 0 {
        return Err(CorpusError::InvalidMinCount);
    }
    let counts = count_tokens(sentences.iter().flat_map(|s| &s.tokens));
    let vocab = Vocabulary::from_counts(
        counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(t, c)| (t.to_owned(), c)),
    );
    if vocab.is_empty() {
        return Err(CorpusError::EmptyVocabulary { min_count });
    }
    Ok(vocab)
}

/// `p_i = count_i / T`.
pub fn unigram_distribution(vocab: &Vocabulary) -> Vec<f64> {
    smoothed_unigram_distribution(vocab, 1.0)
}

/// `p_i ∝ count_i^power`. `power = 1` is the plain unigram distribution.
pub fn smoothed_unigram_distribution(vocab: &Vocabulary, power: f64) -> Vec<f64> {
    let weights: Vec<f64> = if power == 1.0 {
        vocab.counts.iter().map(|&c| c as f64).collect()
    } else {
        vocab.counts.iter().map(|&c| (c as f64).powf(power)).collect()
    };
    let norm: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / norm).collect()
}

/// Summary counts over cleaned, tokenized report text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub token_count: u64,
    pub vocab_size: usize,
    /// Bucket lower bound (in words) to number of reports.
    pub length_histogram: BTreeMap<usize, usize>,
    pub top_tokens: Vec<(String, u64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct StatsOptions {
    pub bucket_width: usize,
    pub top_k: usize,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            bucket_width: 50,
            top_k: 50,
        }
    }
}

pub fn corpus_stats(reports: &[Report], options: StatsOptions) -> CorpusStats {
    let width = options.bucket_width.max(1);
    let tokenized: Vec<Vec<String>> = reports.iter().map(|r| tokenize(&clean_text(&r.text))).collect();

    let mut length_histogram = BTreeMap::new();
    for tokens in &tokenized {
        *length_histogram.entry(tokens.len() / width * width).or_default() += 1;
    }

    let counts = count_tokens(tokenized.iter().flatten());
    let token_count = counts.values().sum();
    let vocab_size = counts.len();
    let mut ranked: Vec<(String, u64)> = counts.into_iter().map(|(t, c)| (t.to_owned(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(options.top_k);

    CorpusStats {
        token_count,
        vocab_size,
        length_histogram,
        top_tokens: ranked,
    }
}

/// `(T, V)` of the raw text split on whitespace, before any cleaning.
pub fn raw_counts(reports: &[Report]) -> (u64, usize) {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for r in reports {
        for t in r.text.split_whitespace() {
            *counts.entry(t).or_default() += 1;
        }
    }
    (counts.values().sum(), counts.len())
}

/// The `k` most frequent `n`-grams, counted inside sentence boundaries.
///
/// Ranked by count descending, then by token sequence ascending. Each n-gram
/// is returned with its tokens joined by single spaces.
pub fn top_ngrams(sentences: &[Sentence], n: usize, k: usize) -> Vec<(String, u64)> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    for s in sentences {
        for gram in s.tokens.windows(n) {
            *counts.entry(gram).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&[String], u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked
        .into_iter()
        .take(k)
        .map(|(gram, c)| (gram.join(" "), c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn report(text: &str) -> Report {
        Report {
            well_id: "W1".into(),
            date: NaiveDate::from_ymd_opt(2015, 3, 1).unwrap(),
            operator_id: "OP1".into(),
            npt: true,
            text: text.into(),
        }
    }

    fn sentences(lines: &[&str]) -> Vec<Sentence> {
        lines.iter().map(|l| Sentence::from_tokens(tokenize(l))).collect()
    }

    #[test]
    fn clean_examples() {
        assert_eq!(clean_text(""), "");
        assert_eq!(clean_text("stuck (pipe) at 500m"), "stuck pipe at 500m");
        assert_eq!(clean_text("torque,high == seen"), "torque high seen");
        assert_eq!(clean_text("mud_loss - noted; bit #5"), "mud loss noted bit 5");
    }

    #[test]
    fn cleaning_is_not_idempotent_everywhere() {
        // A lone rule pass can expose a new match for an earlier rule.
        assert_eq!(clean_text("a,,b"), "a, b");
        assert_eq!(clean_text("a, b"), "a b");
        assert_eq!(clean_text("((a))"), "(a )");
    }

    #[test]
    fn tokenize_keeps_surface_forms() {
        assert_eq!(tokenize("circ at 500 psi"), ["circ", "at", "500", "psi"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("remarks: done"), ["remarks:", "done"]);
    }

    #[test]
    fn segmentation() {
        assert_eq!(segment_sentences(&report("Stuck pipe. Circ bottoms up")).len(), 2);
        assert!(segment_sentences(&report("")).is_empty());
        let s = segment_sentences(&report("remark one\nremark two\nremark three"));
        assert_eq!(s.len(), 3);
        let idx: Vec<usize> = s.iter().map(|s| s.source.as_ref().unwrap().index).collect();
        assert_eq!(idx, [0, 1, 2]);
        assert_eq!(s[1].tokens, ["remark", "two"]);
    }

    #[test]
    fn segmentation_keeps_decimals_and_drops_empty_segments() {
        let s = segment_sentences(&report("mud 1.25 sg.\n\n ;; \nPOOH."));
        let texts: Vec<String> = s.iter().map(Sentence::text).collect();
        assert_eq!(texts, ["mud 1.25 sg", "POOH"]);
        assert_eq!(s[1].source.as_ref().unwrap().index, 1);
    }

    #[test]
    fn vocabulary_counts() {
        let corpus = sentences(&["a a b"]);
        let v = build_vocabulary(&corpus, 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.total_tokens(), 3);
        assert_eq!(v.count(v.id("a").unwrap()), 2);
        assert_eq!(v.count(v.id("b").unwrap()), 1);
        assert_eq!(v.id("a"), Some(0));

        let v = build_vocabulary(&corpus, 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.total_tokens(), 2);
        assert!(!v.contains("b"));
    }

    #[test]
    fn vocabulary_errors() {
        let corpus = sentences(&["a b"]);
        assert!(matches!(
            build_vocabulary(&corpus, 0),
            Err(CorpusError::InvalidMinCount)
        ));
        assert!(matches!(
            build_vocabulary(&corpus, 2),
            Err(CorpusError::EmptyVocabulary { .. })
        ));
        assert!(build_vocabulary(&[], 1).is_err());
    }

    #[test]
    fn vocabulary_ties_are_lexicographic() {
        let v = build_vocabulary(&sentences(&["c b a c"]), 1).unwrap();
        assert_eq!(v.tokens(), ["c", "a", "b"]);
    }

    #[test]
    fn unigram_examples() {
        let v = build_vocabulary(&sentences(&["a"]), 1).unwrap();
        assert_eq!(unigram_distribution(&v), [1.0]);
        let v = build_vocabulary(&sentences(&["a a b a"]), 1).unwrap();
        assert_eq!(unigram_distribution(&v), [0.75, 0.25]);
    }

    #[test]
    fn smoothed_distribution_flattens() {
        let v = build_vocabulary(&sentences(&["a a a a a a a a b"]), 1).unwrap();
        let p = smoothed_unigram_distribution(&v, 0.75);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] < 8.0 / 9.0);
    }

    #[test]
    fn stats_single_report() {
        let stats = corpus_stats(&[report("one two three four")], StatsOptions::default());
        assert_eq!(stats.token_count, 4);
        assert_eq!(stats.vocab_size, 4);
        assert_eq!(stats.length_histogram.len(), 1);
        assert_eq!(stats.length_histogram[&0], 1);
    }

    #[test]
    fn stats_empty() {
        let stats = corpus_stats(&[], StatsOptions::default());
        assert_eq!(stats.token_count, 0);
        assert!(stats.length_histogram.is_empty());
        assert!(stats.top_tokens.is_empty());
    }

    #[test]
    fn ngram_examples() {
        let s = sentences(&["a b a b a"]);
        assert_eq!(top_ngrams(&s, 2, 5), [("a b".to_string(), 2), ("b a".to_string(), 2)]);
        assert!(top_ngrams(&sentences(&["a b c"]), 4, 10).is_empty());
        assert!(top_ngrams(&s, 2, 0).is_empty());
    }

    #[test]
    fn ngrams_do_not_cross_sentences() {
        let s = sentences(&["a b", "c d"]);
        let grams: Vec<String> = top_ngrams(&s, 2, 10).into_iter().map(|(g, _)| g).collect();
        assert_eq!(grams, ["a b", "c d"]);
    }

    #[test]
    fn ingest_empty_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.jsonl");
        File::create(&empty).unwrap();
        assert!(ingest_reports(&empty).unwrap().is_empty());

        let bad = dir.path().join("bad.jsonl");
        let mut f = File::create(&bad).unwrap();
        writeln!(
            f,
            r#"{{"well_id":"W1","date":"2015-01-02","operator_id":"O","npt":false,"text":"x"}}"#
        )
        .unwrap();
        writeln!(
            f,
            r#"{{"well_id":"W1","date":"2015-01-03","operator_id":"O","npt":false}}"#
        )
        .unwrap();
        drop(f);
        match ingest_reports(&bad) {
            Err(CorpusError::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("text"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        assert!(matches!(
            parse_report_line(
                r#"{"well_id":"W","date":"2015-13-40","operator_id":"O","npt":true,"text":""}"#,
                7
            ),
            Err(CorpusError::InvalidDate { line: 7, .. })
        ));
        assert!(matches!(
            parse_report_line(
                r#"{"well_id":"","date":"2015-01-01","operator_id":"O","npt":true,"text":""}"#,
                1
            ),
            Err(CorpusError::EmptyWellId { line: 1 })
        ));
        assert!(matches!(
            ingest_reports(&dir.path().join("missing.jsonl")),
            Err(CorpusError::Io { .. })
        ));
    }

    #[test]
    fn ingest_accepts_timestamps_and_ignores_unknown_fields() {
        let r = parse_report_line(
            r#"{"well_id":"W","date":"2015-01-01T06:00:00Z","operator_id":"O","npt":true,"text":"","rig":"R2"}"#,
            1,
        )
        .unwrap();
        assert_eq!(r.date, NaiveDate::from_ymd_opt(2015, 1, 1).unwrap());
    }
}
