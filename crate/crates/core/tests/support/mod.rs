//! Fixtures, data generators and independent reference implementations
//! shared by the core tests and the CLI acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentimix_core::corpus::encode_label;
use sentimix_core::metrics::ConfusionMatrix;
use sentimix_core::preprocess::{
    build_tf_stoplist, clean_and_stem, remove_stopwords, strip_handles, strip_punct, strip_urls, tokenize,
};
use sentimix_core::{IdSequence, ModelConfig, ProbMatrix, Sentiment, StopList, TokenizedTweet};

pub const PREPROCESS_GOLDENS: &str = include_str!("../fixtures/preprocess_goldens.tsv");
pub const PORTER2_PAIRS: &str = include_str!("../fixtures/porter2_conformance.tsv");

pub fn tiny_config() -> ModelConfig {
    ModelConfig { vocab_size: 20, seq_len: 7, embedding_dim: 4, lstm_units: 5, conv_filters: 6, dense_hidden: 5 }
}

/// 32 sequences for [`tiny_config`]; each holds one marker token from a
/// class-specific id range among filler tokens shared by all classes.
pub fn separable(seed: u64) -> Vec<IdSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..32)
        .map(|i| {
            let class = i % 3;
            let len = rng.gen_range(3..=7);
            let mut ids = vec![0; 7 - len];
            ids.extend((0..len).map(|_| rng.gen_range(11..20)));
            let pos = rng.gen_range(7 - len..7);
            ids[pos] = 2 + 3 * class + rng.gen_range(0..3);
            IdSequence { ids, label: Some(Sentiment::ALL[class]) }
        })
        .collect()
}

fn words(s: &str) -> Vec<String> {
    s.split(' ').filter(|w| !w.is_empty()).map(str::to_string).collect()
}

/// Runs every golden case; returns `(case, mismatch description)` for failures
/// and the number of cases run.
pub fn run_preprocess_goldens() -> (usize, Vec<String>) {
    let english = StopList::bundled_english();
    let mut failures = Vec::new();
    let mut count = 0;
    for line in PREPROCESS_GOLDENS.lines().filter(|l| !l.starts_with('#')) {
        let mut cols = line.splitn(3, '\t');
        let (op, input, want) = (cols.next().unwrap(), cols.next().unwrap(), cols.next().unwrap());
        let got = match op.split_once(':') {
            Some(("tf_stoplist", k)) => {
                let docs: Vec<TokenizedTweet> = input
                    .split('|')
                    .map(|d| TokenizedTweet { id: String::new(), tokens: words(d), label: None })
                    .collect();
                let list = build_tf_stoplist(&[&docs], k.parse().unwrap()).unwrap();
                let mut out = Vec::new();
                list.write(&mut out).unwrap();
                String::from_utf8(out).unwrap().lines().collect::<Vec<_>>().join(" ")
            }
            _ => match op {
                "strip_handles" => strip_handles(input),
                "strip_urls" => strip_urls(input),
                "strip_punct" => strip_punct(input),
                "punct_tokenize" => tokenize(&strip_punct(input)).join(" "),
                "tokenize" => tokenize(input).join(" "),
                "remove_stopwords" => remove_stopwords(&words(input), &english).join(" "),
                "clean_and_stem" => clean_and_stem(input, &english).join(" "),
                "encode_label" => encode_label(input).map_or("error".to_string(), |s| s.code().to_string()),
                other => panic!("unknown golden op {other}"),
            },
        };
        count += 1;
        if got != want {
            failures.push(format!("{op}({input:?}): got {got:?}, want {want:?}"));
        }
    }
    (count, failures)
}

/// Random text mixing handles, URLs, punctuation, whitespace and non-ASCII.
pub fn noisy_string(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "@", "http", "HTTPS://", "hTtP", " ", "  ", "\t", "\n", "!", "#", ":-)", "...", "é", "जी", "İ", "ß", "😀", "a",
        "kya", "baat", "1", "x_y", "@@", "://", "\u{a0}",
    ];
    let n = rng.gen_range(0..24);
    (0..n).map(|_| PIECES[rng.gen_range(0..PIECES.len())]).collect()
}

// ---------------------------------------------------------------------------
// ensemble oracle

/// Probability row drawn either from a coarse grid (frequent exact ties) or
/// from a continuous distribution.
pub fn random_row(rng: &mut ChaCha8Rng) -> [f64; 3] {
    if rng.gen_bool(0.5) {
        let a = rng.gen_range(0..=10);
        let b = rng.gen_range(0..=10 - a);
        [a as f64 / 10.0, b as f64 / 10.0, (10 - a - b) as f64 / 10.0]
    } else {
        let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let s: f64 = raw.iter().sum();
        raw.map(|x| x / s)
    }
}

/// `models` matrices of `rows` rows; some rows are forced to tie on the
/// per-class maximum.
pub fn random_matrix_set(rng: &mut ChaCha8Rng, models: usize, rows: usize) -> Vec<ProbMatrix> {
    let mut data: Vec<Vec<[f64; 3]>> = (0..models).map(|_| (0..rows).map(|_| random_row(rng)).collect()).collect();
    for i in 0..rows {
        if rng.gen_bool(0.2) {
            // every model gets [0.4, 0.4, 0.2] or a permutation: maxima tie
            let tie = match rng.gen_range(0..3) {
                0 => [0.4, 0.4, 0.2],
                1 => [0.2, 0.4, 0.4],
                _ => [0.4, 0.2, 0.4],
            };
            for m in data.iter_mut() {
                m[i] = tie;
            }
        }
    }
    data.into_iter().enumerate().map(|(n, rows)| ProbMatrix::new(format!("m{n}"), rows).unwrap()).collect()
}

/// The combination rule written out directly: for each class take the
/// largest probability any model assigns to it, then pick the class `c`
/// whose maximum is strictly larger than every lower class's and at least
/// every higher class's.
pub fn brute_force_combine(matrices: &[ProbMatrix]) -> Vec<Sentiment> {
    let rows = matrices[0].rows.len();
    let mut out = Vec::new();
    for i in 0..rows {
        let per_class: Vec<f64> = (0..3)
            .map(|j| {
                let mut column: Vec<f64> = matrices.iter().map(|m| m.rows[i][j]).collect();
                column.sort_by(|a, b| a.partial_cmp(b).unwrap());
                *column.last().unwrap()
            })
            .collect();
        let winner = (0..3)
            .find(|&c| (0..c).all(|j| per_class[c] > per_class[j]) && (c + 1..3).all(|j| per_class[c] >= per_class[j]))
            .unwrap();
        out.push(Sentiment::ALL[winner]);
    }
    out
}

// ---------------------------------------------------------------------------
// metric oracle

#[derive(Debug)]
pub struct OracleMetrics {
    pub f1: [f64; 3],
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
}

/// Recomputes every metric from the expanded (gold, predicted) pairs,
/// using F1 = 2TP / (2TP + FP + FN).
pub fn oracle_metrics(cm: &ConfusionMatrix) -> OracleMetrics {
    let mut pairs = Vec::new();
    for g in 0..3 {
        for p in 0..3 {
            for _ in 0..cm.counts[g][p] {
                pairs.push((g, p));
            }
        }
    }
    let n = pairs.len() as f64;
    let mut out = OracleMetrics {
        f1: [0.0; 3],
        precision: [0.0; 3],
        recall: [0.0; 3],
        macro_f1: 0.0,
        weighted_f1: 0.0,
        accuracy: pairs.iter().filter(|(g, p)| g == p).count() as f64 / n,
    };
    for c in 0..3 {
        let tp = pairs.iter().filter(|&&(g, p)| g == c && p == c).count() as f64;
        let fp = pairs.iter().filter(|&&(g, p)| g != c && p == c).count() as f64;
        let fn_ = pairs.iter().filter(|&&(g, p)| g == c && p != c).count() as f64;
        let support = tp + fn_;
        out.precision[c] = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        out.recall[c] = if support > 0.0 { tp / support } else { 0.0 };
        out.f1[c] = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fn_) } else { 0.0 };
        out.macro_f1 += out.f1[c] / 3.0;
        out.weighted_f1 += out.f1[c] * support / n;
    }
    out
}

/// Random non-empty confusion matrix; zero rows and columns are common.
pub fn random_confusion(rng: &mut ChaCha8Rng) -> ConfusionMatrix {
    loop {
        let mut cm = ConfusionMatrix::default();
        for g in 0..3 {
            for p in 0..3 {
                if rng.gen_bool(0.7) {
                    cm.counts[g][p] = rng.gen_range(0..40);
                }
            }
        }
        if cm.total() > 0 {
            return cm;
        }
    }
}
