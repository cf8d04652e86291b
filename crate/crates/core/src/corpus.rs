//! Corpus readers, dataset statistics and prediction files.
//!
//! Two on-disk formats are understood:
//!
//! * TSV: `id <TAB> text [<TAB> label]`, one tweet per line.
//! * CoNLL blocks: a `meta <id> [<label>]` header followed by
//!   `token <TAB> langtag` lines, blocks separated by blank lines.
//!   Language tags are dropped.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Three-way sentiment with integer codes 0, 1, 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sentiment {
    Negative = 0,
    Neutral = 1,
    Positive = 2,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Result<Self> {
        Self::ALL.get(code).copied().ok_or(Error::IndexOutOfRange { index: code, bound: 3 })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        encode_label(s)
    }
}

/// Maps a label string to its [`Sentiment`], ignoring case.
pub fn encode_label(s: &str) -> Result<Sentiment> {
    let lower = s.to_lowercase();
    match lower.as_str() {
        "negative" => Ok(Sentiment::Negative),
        "neutral" => Ok(Sentiment::Neutral),
        "positive" => Ok(Sentiment::Positive),
        _ => Err(Error::UnknownLabel(s.to_string())),
    }
}

/// One corpus entry before any cleaning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    pub label: Option<Sentiment>,
}

impl RawTweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Sentiment>) -> Self {
        RawTweet { id: id.into(), text: text.into(), label }
    }
}

/// Corpus on-disk format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Conll,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "conll" => Ok(Format::Conll),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// Reads a corpus in the given format.
pub fn parse<R: BufRead>(reader: R, format: Format) -> Result<Vec<RawTweet>> {
    match format {
        Format::Tsv => parse_tsv(reader),
        Format::Conll => parse_conll(reader),
    }
}

fn strip_cr(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

struct IdSet(HashSet<String>);

impl IdSet {
    fn new() -> Self {
        IdSet(HashSet::new())
    }

    fn insert(&mut self, id: &str, line: usize) -> Result<()> {
        if id.is_empty() {
            return Err(Error::Parse { line, message: "empty tweet id".into() });
        }
        if !self.0.insert(id.to_string()) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        Ok(())
    }
}

/// Parses `id <TAB> text [<TAB> label]` lines. Blank lines are skipped.
///
/// Either every line carries a label column or none does.
pub fn parse_tsv<R: BufRead>(reader: R) -> Result<Vec<RawTweet>> {
    let mut out = Vec::new();
    let mut ids = IdSet::new();
    let mut labelled: Option<bool> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = strip_cr(&line);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (id, text, label) = match cols.as_slice() {
            [id, text] => (*id, *text, None),
            [id, text, label] => (*id, *text, Some(*label)),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 2 or 3 tab-separated columns, found {}", cols.len()),
                })
            }
        };
        match labelled {
            None => labelled = Some(label.is_some()),
            Some(expected) if expected != label.is_some() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "label column must be present on every line or on none".into(),
                })
            }
            Some(_) => {}
        }
        ids.insert(id, line_no)?;
        let label = label.map(encode_label).transpose()?;
        out.push(RawTweet::new(id, text, label));
    }
    Ok(out)
}

/// Serializes tweets in the TSV layout accepted by [`parse_tsv`].
pub fn write_tsv<W: Write>(tweets: &[RawTweet], mut out: W) -> Result<()> {
    for t in tweets {
        match t.label {
            Some(label) => writeln!(out, "{}\t{}\t{}", t.id, t.text, label)?,
            None => writeln!(out, "{}\t{}", t.id, t.text)?,
        }
    }
    Ok(())
}

/// Parses `meta` blocks of `token <TAB> langtag` lines.
pub fn parse_conll<R: BufRead>(reader: R) -> Result<Vec<RawTweet>> {
    let mut out = Vec::new();
    let mut ids = IdSet::new();
    let mut current: Option<(String, Option<Sentiment>, Vec<String>)> = None;

    let flush = |current: &mut Option<(String, Option<Sentiment>, Vec<String>)>, out: &mut Vec<RawTweet>| {
        if let Some((id, label, tokens)) = current.take() {
            out.push(RawTweet::new(id, tokens.join(" "), label));
        }
    };

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = strip_cr(&line);
        if line.trim().is_empty() {
            flush(&mut current, &mut out);
            continue;
        }
        if current.is_none() {
            let mut fields = line.split_whitespace();
            if fields.next() != Some("meta") {
                return Err(Error::Parse {
                    line: line_no,
                    message: "block does not start with a `meta` header".into(),
                });
            }
            let id = fields
                .next()
                .ok_or_else(|| Error::Parse { line: line_no, message: "meta header without an id".into() })?;
            let label = fields.next().map(encode_label).transpose()?;
            if let Some(extra) = fields.next() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unexpected field {extra:?} in meta header"),
                });
            }
            ids.insert(id, line_no)?;
            current = Some((id.to_string(), label, Vec::new()));
            continue;
        }
        if let Some((_, _, tokens)) = current.as_mut() {
            let token = line.split('\t').next().unwrap_or_default().trim();
            if !token.is_empty() {
                tokens.push(token.to_string());
            }
        }
    }
    flush(&mut current, &mut out);
    Ok(out)
}

/// Size statistics of a raw corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusStats {
    pub sentence_count: usize,
    /// Mean number of Unicode scalar values per raw text.
    pub avg_char_length: f64,
    /// Distinct lowercased whitespace tokens.
    pub vocab_size: usize,
    /// Total whitespace tokens.
    pub word_count: usize,
}

pub fn corpus_stats(corpus: &[RawTweet]) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut vocab = HashSet::new();
    let mut chars = 0usize;
    let mut words = 0usize;
    for tweet in corpus {
        chars += tweet.text.chars().count();
        for word in tweet.text.split_whitespace() {
            words += 1;
            vocab.insert(word.to_lowercase());
        }
    }
    Ok(CorpusStats {
        sentence_count: corpus.len(),
        avg_char_length: chars as f64 / corpus.len() as f64,
        vocab_size: vocab.len(),
        word_count: words,
    })
}

/// Writes `id <TAB> label` lines in input order.
pub fn write_predictions<W: Write>(ids: &[String], labels: &[Sentiment], mut out: W) -> Result<()> {
    if ids.len() != labels.len() {
        return Err(Error::LengthMismatch { what: "ids and labels", left: ids.len(), right: labels.len() });
    }
    for (id, label) in ids.iter().zip(labels) {
        writeln!(out, "{id}\t{label}")?;
    }
    Ok(())
}

/// Reads a prediction file written by [`write_predictions`].
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<(String, Sentiment)>> {
    let mut out = Vec::new();
    let mut ids = IdSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = strip_cr(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse { line: line_no, message: "expected `id <TAB> label`".into() })?;
        ids.insert(id, line_no)?;
        out.push((id.to_string(), encode_label(label.trim())?));
    }
    Ok(out)
}
