//! Tweet cleaning: handle and URL removal, punctuation stripping,
//! tokenization, stop-word removal and stemming.
//!
//! [`run_pipeline`] applies the steps in this order:
//!
//! 1. [`strip_handles`], [`strip_urls`], [`strip_punct`], [`tokenize`]
//! 2. English stop words removed ([`remove_stopwords`])
//! 3. every token stemmed ([`crate::stemmer::stem`])
//! 4. high-frequency corpus tokens removed, using a list built with
//!    [`build_tf_stoplist`] over the stemmed tokens unless one is given.

mod stoplist;

pub use stoplist::{build_tf_stoplist, remove_stopwords, term_frequencies, StopList, StopListSource};

use crate::corpus::{RawTweet, Sentiment};
use crate::error::Result;
use crate::stemmer::stem;

/// Size of the corpus-derived stop list.
pub const DEFAULT_TF_STOPLIST_SIZE: usize = 1000;

/// A cleaned tweet: lowercase, non-empty, alphanumeric tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedTweet {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: Option<Sentiment>,
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Deletes every `@` together with the non-whitespace run after it.
pub fn strip_handles(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_handle = false;
    for c in text.chars() {
        if c == '@' {
            in_handle = true;
        } else if c.is_whitespace() {
            in_handle = false;
            out.push(c);
        } else if !in_handle {
            out.push(c);
        }
    }
    collapse_whitespace(&out)
}

/// Deletes everything from a case-insensitive `http` up to the next
/// whitespace.
pub fn strip_urls(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes.len() - i >= 4 && bytes[i..i + 4].eq_ignore_ascii_case(b"http") {
            while i < bytes.len() && !text[i..].starts_with(char::is_whitespace) {
                i += text[i..].chars().next().map_or(1, char::len_utf8);
            }
            continue;
        }
        let c = text[i..].chars().next().expect("char boundary");
        out.push(c);
        i += c.len_utf8();
    }
    collapse_whitespace(&out)
}

/// Replaces every character that is not a letter, digit or whitespace
/// with a space.
pub fn strip_punct(text: &str) -> String {
    text.chars().map(|c| if c.is_alphanumeric() || c.is_whitespace() { c } else { ' ' }).collect()
}

/// Lowercases and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase().split_whitespace().map(str::to_string).collect()
}

/// Steps 1 to 3 for one text: cleaning, English stop words, stemming.
pub fn clean_and_stem(text: &str, english: &StopList) -> Vec<String> {
    let text = strip_punct(&strip_urls(&strip_handles(text)));
    let tokens: Vec<String> = tokenize(&text)
        .into_iter()
        // lowercasing can emit combining marks (e.g. U+0130), drop them
        .map(|t| t.chars().filter(|c| c.is_alphanumeric()).collect::<String>())
        .filter(|t| !t.is_empty())
        .collect();
    remove_stopwords(&tokens, english).iter().map(|t| stem(t)).filter(|t| !t.is_empty()).collect()
}

/// Runs [`clean_and_stem`] over a corpus.
pub fn clean_corpus(corpus: &[RawTweet], english: &StopList) -> Vec<TokenizedTweet> {
    corpus
        .iter()
        .map(|t| TokenizedTweet { id: t.id.clone(), tokens: clean_and_stem(&t.text, english), label: t.label })
        .collect()
}

/// Removes `stoplist` members from every tweet in place.
pub fn apply_stoplist(corpus: &mut [TokenizedTweet], stoplist: &StopList) {
    for tweet in corpus {
        tweet.tokens.retain(|t| !stoplist.contains(t));
    }
}

/// Full preprocessing of one corpus.
///
/// Without `frequent` the high-frequency list is built from this corpus
/// alone with k = 1000. Tweets that end up empty are kept.
pub fn run_pipeline(
    corpus: &[RawTweet],
    english: &StopList,
    frequent: Option<&StopList>,
) -> Result<Vec<TokenizedTweet>> {
    let mut cleaned = clean_corpus(corpus, english);
    let built;
    let frequent = match frequent {
        Some(list) => list,
        None if cleaned.is_empty() => return Ok(cleaned),
        None => {
            built = build_tf_stoplist(&[&cleaned], DEFAULT_TF_STOPLIST_SIZE)?;
            &built
        }
    };
    apply_stoplist(&mut cleaned, frequent);
    Ok(cleaned)
}
