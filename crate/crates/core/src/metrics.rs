//! Confusion matrix and precision / recall / F1 summaries.

use std::fmt::Write as _;

use crate::corpus::Sentiment;
use crate::error::{Error, Result};
use crate::NUM_CLASSES;

/// `counts[g][p]` is the number of examples with gold class `g` predicted as `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.counts[c][c]).sum()
    }

    /// Gold count of class `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Predicted count of class `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }
}

pub fn confusion(gold: &[Sentiment], pred: &[Sentiment]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch { what: "gold and predicted labels", left: gold.len(), right: pred.len() });
    }
    if gold.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut cm = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(pred) {
        cm.counts[g.code()][p.code()] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    /// Indexed by [`Sentiment::code`].
    pub classes: [ClassMetrics; NUM_CLASSES],
    pub macro_f1: f64,
    /// Support-weighted mean of the per-class F1; the headline score.
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class and averaged scores. Any ratio with a zero denominator is 0.
pub fn f1_report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut classes = [ClassMetrics::default(); NUM_CLASSES];
    for (c, m) in classes.iter_mut().enumerate() {
        let tp = cm.counts[c][c];
        let precision = ratio(tp, cm.predicted(c));
        let recall = ratio(tp, cm.support(c));
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        *m = ClassMetrics { precision, recall, f1, support: cm.support(c) };
    }
    let macro_f1 = classes.iter().map(|m| m.f1).sum::<f64>() / NUM_CLASSES as f64;
    let weighted_f1 = classes.iter().map(|m| m.f1 * m.support as f64).sum::<f64>() / total as f64;
    Ok(MetricsReport { classes, macro_f1, weighted_f1, accuracy: ratio(cm.trace(), total), total })
}

/// Weighted F1 of `pred` against `gold`.
pub fn weighted_f1(gold: &[Sentiment], pred: &[Sentiment]) -> Result<f64> {
    Ok(f1_report(&confusion(gold, pred)?)?.weighted_f1)
}

impl MetricsReport {
    /// Aligned table for people.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<10} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support");
        for (label, m) in Sentiment::ALL.iter().zip(&self.classes) {
            let _ = writeln!(
                s,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                label.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<12} {:.4}", "accuracy", self.accuracy);
        let _ = writeln!(s, "{:<12} {:.4}", "macro f1", self.macro_f1);
        let _ = writeln!(s, "{:<12} {:.4}", "weighted f1", self.weighted_f1);
        s
    }

    /// `metric <TAB> class <TAB> value` lines; averages use class `all`.
    pub fn to_delimited(&self) -> String {
        let mut s = String::from("metric\tclass\tvalue\n");
        for (label, m) in Sentiment::ALL.iter().zip(&self.classes) {
            let _ = writeln!(s, "precision\t{label}\t{}", m.precision);
            let _ = writeln!(s, "recall\t{label}\t{}", m.recall);
            let _ = writeln!(s, "f1\t{label}\t{}", m.f1);
            let _ = writeln!(s, "support\t{label}\t{}", m.support);
        }
        let _ = writeln!(s, "accuracy\tall\t{}", self.accuracy);
        let _ = writeln!(s, "macro_f1\tall\t{}", self.macro_f1);
        let _ = writeln!(s, "weighted_f1\tall\t{}", self.weighted_f1);
        s
    }
}
