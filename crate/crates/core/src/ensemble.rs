//! Per-class-max combination of model outputs, and probability files.

use std::io::{BufRead, Write};

use crate::arch::argmax;
use crate::corpus::Sentiment;
use crate::error::{Error, Result};
use crate::NUM_CLASSES;

/// Row sums may drift this far from 1 (covers `f32` models and printed values).
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// One model's class probabilities, one row per sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMatrix {
    pub rows: Vec<[f64; NUM_CLASSES]>,
    pub tag: String,
}

impl ProbMatrix {
    /// Checks that every row is a probability distribution.
    pub fn new(tag: impl Into<String>, rows: Vec<[f64; NUM_CLASSES]>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(Error::InvalidArgument(format!("row {i}: {row:?} is not a probability vector")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        Ok(ProbMatrix { rows, tag: tag.into() })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Plain argmax of each row.
    pub fn argmax(&self) -> Vec<Sentiment> {
        self.rows.iter().map(|r| Sentiment::from_code(argmax(r)).expect("three classes")).collect()
    }
}

/// For every sentence, takes the per-class maximum over all models and
/// predicts the class holding the largest of those maxima (lowest class
/// index on ties).
pub fn combine(matrices: &[ProbMatrix]) -> Result<Vec<Sentiment>> {
    let first = matrices.first().ok_or_else(|| Error::InvalidArgument("ensemble needs at least one model".into()))?;
    for m in &matrices[1..] {
        if m.len() != first.len() {
            return Err(Error::LengthMismatch { what: "probability matrix rows", left: first.len(), right: m.len() });
        }
    }
    let mut out = Vec::with_capacity(first.len());
    for i in 0..first.len() {
        let mut best = first.rows[i];
        for m in &matrices[1..] {
            for (b, &p) in best.iter_mut().zip(&m.rows[i]) {
                if p > *b {
                    *b = p;
                }
            }
        }
        out.push(Sentiment::from_code(argmax(&best)).expect("three classes"));
    }
    Ok(out)
}

/// Writes `id <TAB> p0 <TAB> p1 <TAB> p2` lines. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_probabilities<W: Write>(ids: &[String], matrix: &ProbMatrix, mut out: W) -> Result<()> {
    if ids.len() != matrix.len() {
        return Err(Error::LengthMismatch { what: "ids and probability rows", left: ids.len(), right: matrix.len() });
    }
    for (id, row) in ids.iter().zip(&matrix.rows) {
        writeln!(out, "{id}\t{}\t{}\t{}", row[0], row[1], row[2])?;
    }
    Ok(())
}

/// Reads the format produced by [`write_probabilities`].
pub fn read_probabilities<R: BufRead>(reader: R, tag: &str) -> Result<(Vec<String>, ProbMatrix)> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: idx + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 1 + NUM_CLASSES {
            return Err(parse_err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let mut row = [0.0; NUM_CLASSES];
        for (slot, field) in row.iter_mut().zip(&fields[1..]) {
            *slot = field.trim().parse().map_err(|_| parse_err(format!("bad probability {field:?}")))?;
        }
        ids.push(fields[0].to_string());
        rows.push(row);
    }
    Ok((ids, ProbMatrix::new(tag, rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sentiment::*;

    fn pm(rows: &[[f64; 3]]) -> ProbMatrix {
        ProbMatrix::new("t", rows.to_vec()).unwrap()
    }

    #[test]
    fn per_class_max() {
        let got = combine(&[pm(&[[0.5, 0.3, 0.2]]), pm(&[[0.1, 0.6, 0.3]])]).unwrap();
        assert_eq!(got, vec![Neutral]);
    }

    #[test]
    fn single_model_is_argmax() {
        let m = pm(&[[0.2, 0.3, 0.5], [0.7, 0.2, 0.1]]);
        assert_eq!(combine(std::slice::from_ref(&m)).unwrap(), m.argmax());
        assert_eq!(m.argmax(), vec![Positive, Negative]);
    }

    #[test]
    fn ties_pick_lowest_class() {
        let got = combine(&[pm(&[[0.4, 0.4, 0.2]]), pm(&[[0.3, 0.3, 0.4]])]).unwrap();
        assert_eq!(got, vec![Negative]);
    }

    #[test]
    fn errors() {
        assert!(combine(&[]).is_err());
        assert!(combine(&[pm(&[[1.0, 0.0, 0.0]]), pm(&[])]).is_err());
        assert!(ProbMatrix::new("bad", vec![[0.5, 0.5, 0.5]]).is_err());
        assert!(ProbMatrix::new("bad", vec![[f64::NAN, 0.5, 0.5]]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let m = pm(&[[0.1, 0.2, 0.7], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]]);
        let ids = vec!["a".to_string(), "b".to_string()];
        let mut buf = Vec::new();
        write_probabilities(&ids, &m, &mut buf).unwrap();
        let (ids2, m2) = read_probabilities(buf.as_slice(), "t").unwrap();
        assert_eq!(ids2, ids);
        assert_eq!(m2, m);
        assert!(read_probabilities("a\t0.5\t0.5\n".as_bytes(), "t").is_err());
    }
}
