//! Frequency-ranked vocabulary and fixed-length id encoding.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::corpus::Sentiment;
use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

pub const PAD: usize = 0;
pub const OOV: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";

pub const DEFAULT_VOCAB_SIZE: usize = 20_000;
pub const DEFAULT_SEQ_LEN: usize = 50;

/// A fixed-length, left-padded sequence of token ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdSequence {
    pub ids: Vec<usize>,
    pub label: Option<Sentiment>,
}

/// Token to index map. Indices 0 and 1 are PAD and OOV; corpus tokens
/// follow in order of decreasing frequency, ties by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    index_of: HashMap<String, usize>,
    tokens: Vec<String>,
    max_size: usize,
}

impl Vocabulary {
    /// Keeps the `max_size - 2` most frequent tokens of `corpus`.
    pub fn build(corpus: &[TokenizedTweet], max_size: usize) -> Result<Self> {
        if max_size < 3 {
            return Err(Error::InvalidArgument(format!("vocabulary size must be at least 3, got {max_size}")));
        }
        // (count, first occurrence)
        let mut stats: HashMap<&str, (u64, usize)> = HashMap::new();
        for (order, token) in corpus.iter().flat_map(|t| t.tokens.iter()).enumerate() {
            stats.entry(token.as_str()).or_insert((0, order)).0 += 1;
        }
        let mut ranked: Vec<(&str, u64, usize)> = stats.into_iter().map(|(t, (c, f))| (t, c, f)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.truncate(max_size - 2);

        let mut tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        tokens.extend(ranked.into_iter().map(|(t, _, _)| t.to_string()));
        Ok(Self::from_tokens(tokens, max_size))
    }

    fn from_tokens(tokens: Vec<String>, max_size: usize) -> Self {
        let index_of = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { index_of, tokens, max_size }
    }

    /// Number of indices in use, reserved slots included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn index(&self, token: &str) -> usize {
        self.index_of.get(token).copied().unwrap_or(OOV)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Maps tokens to ids, left-pads with PAD and keeps the last
    /// `seq_len` ids of longer inputs.
    pub fn encode(&self, tokens: &[String], seq_len: usize) -> Result<IdSequence> {
        if seq_len == 0 {
            return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
        }
        let skip = tokens.len().saturating_sub(seq_len);
        let kept = &tokens[skip..];
        let mut ids = vec![PAD; seq_len - kept.len()];
        ids.extend(kept.iter().map(|t| self.index(t)));
        Ok(IdSequence { ids, label: None })
    }

    pub fn encode_tweet(&self, tweet: &TokenizedTweet, seq_len: usize) -> Result<IdSequence> {
        let mut seq = self.encode(&tweet.tokens, seq_len)?;
        seq.label = tweet.label;
        Ok(seq)
    }

    pub fn encode_corpus(&self, corpus: &[TokenizedTweet], seq_len: usize) -> Result<Vec<IdSequence>> {
        corpus.iter().map(|t| self.encode_tweet(t, seq_len)).collect()
    }

    /// Writes `token <TAB> index` lines, reserved slots first.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, t) in self.tokens.iter().enumerate() {
            writeln!(out, "{t}\t{i}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`Vocabulary::write`]. Indices must be
    /// dense and in order, with the reserved tokens at 0 and 1.
    pub fn read<R: BufRead>(reader: R, max_size: usize) -> Result<Self> {
        let mut tokens = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let (token, index) =
                line.split_once('\t').ok_or_else(|| parse_err("expected `token <TAB> index`".into()))?;
            let index: usize = index.trim().parse().map_err(|_| parse_err(format!("bad index {index:?}")))?;
            if index != tokens.len() {
                return Err(parse_err(format!("expected index {}, found {index}", tokens.len())));
            }
            tokens.push(token.to_string());
        }
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[OOV] != OOV_TOKEN {
            return Err(Error::Parse {
                line: 1,
                message: "vocabulary must start with the reserved PAD and OOV entries".into(),
            });
        }
        if tokens.len() > max_size {
            return Err(Error::InvalidArgument(format!(
                "vocabulary has {} entries, more than the limit {max_size}",
                tokens.len()
            )));
        }
        Ok(Self::from_tokens(tokens, max_size))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(tokens: &[&str]) -> Vec<TokenizedTweet> {
        vec![TokenizedTweet { id: "1".into(), tokens: tokens.iter().map(|s| s.to_string()).collect(), label: None }]
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ranking_by_frequency() {
        let v = Vocabulary::build(&corpus(&["b", "a", "a", "a"]), 4).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!((v.index(PAD_TOKEN), v.index(OOV_TOKEN)), (0, 1));
        assert_eq!((v.index("a"), v.index("b")), (2, 3));
    }

    #[test]
    fn ties_by_first_occurrence() {
        let v = Vocabulary::build(&corpus(&["a", "b", "b", "a"]), 3).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.index("a"), 2);
        assert_eq!(v.index("b"), OOV);
    }

    #[test]
    fn empty_corpus_and_small_limit() {
        assert_eq!(Vocabulary::build(&[], 10).unwrap().len(), 2);
        assert!(Vocabulary::build(&[], 2).is_err());
    }

    #[test]
    fn encode_pads_left_and_truncates_front() {
        let v = Vocabulary::build(&corpus(&["a", "b", "c", "d", "e", "f"]), 10).unwrap();
        assert_eq!(v.encode(&strings(&["a"]), 4).unwrap().ids, vec![0, 0, 0, 2]);
        assert_eq!(v.encode(&strings(&["z"]), 2).unwrap().ids, vec![0, 1]);
        let six = strings(&["a", "b", "c", "d", "e", "f"]);
        assert_eq!(v.encode(&six, 4).unwrap().ids, vec![4, 5, 6, 7]);
        assert!(v.encode(&six, 0).is_err());
    }

    #[test]
    fn export_round_trip() {
        let v = Vocabulary::build(&corpus(&["x", "y", "y"]), 20).unwrap();
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "<pad>\t0\n<oov>\t1\ny\t2\nx\t3\n");
        assert_eq!(Vocabulary::read(buf.as_slice(), 20).unwrap(), v);
        assert!(Vocabulary::read(buf.as_slice(), 3).is_err());
        assert!(Vocabulary::read("a\t0\n".as_bytes(), 20).is_err());
    }
}
