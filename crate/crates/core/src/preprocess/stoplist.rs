use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use super::TokenizedTweet;
use crate::error::{Error, Result};

const BUNDLED_ENGLISH: &str = include_str!("../../assets/english_stopwords.txt");

/// Where a stop list came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopListSource {
    BundledEnglish,
    /// Loaded from a user-supplied file.
    File,
    /// Top-k most frequent corpus tokens.
    TfDerived,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopList {
    pub words: BTreeSet<String>,
    pub source: StopListSource,
    /// Requested size, for term-frequency lists.
    pub k: Option<usize>,
}

impl StopList {
    /// The 179-word English list shipped with the crate.
    pub fn bundled_english() -> Self {
        Self::parse(BUNDLED_ENGLISH, StopListSource::BundledEnglish)
    }

    fn parse(text: &str, source: StopListSource) -> Self {
        let words = text.lines().map(str::trim).filter(|w| !w.is_empty()).map(str::to_string).collect();
        StopList { words, source, k: None }
    }

    /// Reads one word per line; blank lines are ignored.
    pub fn read<R: BufRead>(mut reader: R, source: StopListSource) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Ok(Self::parse(&text, source))
    }

    /// Writes one word per line in lexicographic order.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for word in &self.words {
            writeln!(out, "{word}")?;
        }
        Ok(())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Drops every token found in `stoplist`, keeping the order of the rest.
pub fn remove_stopwords(tokens: &[String], stoplist: &StopList) -> Vec<String> {
    tokens.iter().filter(|t| !stoplist.contains(t)).cloned().collect()
}

/// Counts raw term frequency over every tweet of every corpus.
pub fn term_frequencies(corpora: &[&[TokenizedTweet]]) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for tweet in corpora.iter().flat_map(|c| c.iter()) {
        for token in &tweet.tokens {
            *counts.entry(token.clone()).or_default() += 1;
        }
    }
    counts
}

/// The `k` most frequent tokens across `corpora`; equal counts rank by
/// token, lexicographically.
pub fn build_tf_stoplist(corpora: &[&[TokenizedTweet]], k: usize) -> Result<StopList> {
    if k == 0 {
        return Err(Error::InvalidArgument("stop list size k must be at least 1".into()));
    }
    if corpora.iter().all(|c| c.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u64)> = term_frequencies(corpora).into_iter().collect();
    ranked.sort_unstable_by(|(ta, ca), (tb, cb)| cb.cmp(ca).then_with(|| ta.cmp(tb)));
    ranked.truncate(k);
    Ok(StopList { words: ranked.into_iter().map(|(t, _)| t).collect(), source: StopListSource::TfDerived, k: Some(k) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(tokens: &[&str]) -> TokenizedTweet {
        TokenizedTweet { id: "x".into(), tokens: tokens.iter().map(|s| s.to_string()).collect(), label: None }
    }

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bundled_list_has_179_words() {
        let list = StopList::bundled_english();
        assert_eq!(list.len(), 179);
        assert!(list.contains("the") && list.contains("wouldn't") && list.contains("is"));
    }

    #[test]
    fn english_removal() {
        let list = StopList::bundled_english();
        assert_eq!(remove_stopwords(&strings(&["the", "movie", "is", "accha"]), &list), strings(&["movie", "accha"]));
        assert!(remove_stopwords(&[], &list).is_empty());
        let plain = strings(&["kya", "baat"]);
        assert_eq!(remove_stopwords(&plain, &list), plain);
    }

    #[test]
    fn tf_top_k() {
        let corpus = vec![tweet(&["a", "b", "a"]), tweet(&["c", "a", "b"])];
        let list = build_tf_stoplist(&[&corpus], 2).unwrap();
        assert_eq!(list.words, ["a", "b"].iter().map(|s| s.to_string()).collect());
        assert_eq!(list.k, Some(2));

        let all = build_tf_stoplist(&[&corpus], 10).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn tf_ties_are_lexicographic() {
        let corpus = vec![tweet(&["b", "a", "b", "a"])];
        let list = build_tf_stoplist(&[&corpus], 1).unwrap();
        assert!(list.contains("a") && !list.contains("b"));
    }

    #[test]
    fn tf_counts_across_corpora() {
        let train = vec![tweet(&["x", "y"])];
        let test = vec![tweet(&["y"])];
        let list = build_tf_stoplist(&[&train, &test], 1).unwrap();
        assert!(list.contains("y"));
    }

    #[test]
    fn tf_rejects_zero_k_and_empty_input() {
        let corpus = vec![tweet(&["a"])];
        assert!(build_tf_stoplist(&[&corpus], 0).is_err());
        assert!(build_tf_stoplist(&[], 3).is_err());
    }

    #[test]
    fn export_import_round_trip() {
        let list = StopList::bundled_english();
        let mut buf = Vec::new();
        list.write(&mut buf).unwrap();
        let back = StopList::read(buf.as_slice(), StopListSource::BundledEnglish).unwrap();
        assert_eq!(back, list);
    }
}
