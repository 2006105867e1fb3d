use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Counts with dropout as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(predictions: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
        if predictions.len() != truth.len() {
            return Err(Error::Dimension {
                expected: truth.len(),
                got: predictions.len(),
            });
        }
        let mut m = ConfusionMatrix::default();
        for (&p, &t) in predictions.iter().zip(truth) {
            match (p, t) {
                (Label::Dropout, Label::Dropout) => m.tp += 1,
                (Label::Dropout, Label::Retention) => m.fp += 1,
                (Label::Retention, Label::Dropout) => m.fn_ += 1,
                (Label::Retention, Label::Retention) => m.tn += 1,
            }
        }
        Ok(m)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: tp + fn_,
        }
    }
}

/// Per-class metrics plus their support-weighted average (`total`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total: ClassMetrics,
    pub retention: ClassMetrics,
    pub dropout: ClassMetrics,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn from_confusion(m: ConfusionMatrix) -> MetricsReport {
        let dropout = ClassMetrics::from_counts(m.tp, m.fp, m.fn_);
        let retention = ClassMetrics::from_counts(m.tn, m.fn_, m.fp);
        let n = (retention.support + dropout.support) as f64;
        let weighted = |f: fn(&ClassMetrics) -> f64| {
            if n == 0.0 {
                0.0
            } else {
                (f(&retention) * retention.support as f64 + f(&dropout) * dropout.support as f64) / n
            }
        };
        MetricsReport {
            total: ClassMetrics {
                precision: weighted(|c| c.precision),
                recall: weighted(|c| c.recall),
                f1: weighted(|c| c.f1),
                support: m.total(),
            },
            retention,
            dropout,
            confusion: m,
        }
    }

    pub fn table_header() -> &'static str {
        "Model\tP_T\tP_R\tP_D\tR_T\tR_R\tR_D\tF1_T\tF1_R\tF1_D"
    }

    /// One tab-separated row in Total / Retention / Dropout column order.
    pub fn table_row(&self, model: &str) -> String {
        let (t, r, d) = (&self.total, &self.retention, &self.dropout);
        format!(
            "{model}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}",
            t.precision, r.precision, d.precision, t.recall, r.recall, d.recall, t.f1, r.f1, d.f1
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10}{:>10}{:>10}{:>10}{:>10}", "", "precision", "recall", "f1-score", "support")?;
        for (name, m) in [("R", &self.retention), ("D", &self.dropout), ("T", &self.total)] {
            writeln!(
                f,
                "{:<10}{:>10.3}{:>10.3}{:>10.3}{:>10}",
                name, m.precision, m.recall, m.f1, m.support
            )?;
        }
        Ok(())
    }
}

pub fn evaluate(predictions: &[Label], truth: &[Label]) -> Result<MetricsReport> {
    let m = ConfusionMatrix::from_labels(predictions, truth)?;
    if m.total() == 0 {
        return Err(Error::InvalidArgument("cannot evaluate zero predictions".into()));
    }
    Ok(MetricsReport::from_confusion(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<Label>, Vec<Label>) {
        let mut p = Vec::new();
        let mut t = Vec::new();
        for (n, pl, tl) in [
            (tp, Label::Dropout, Label::Dropout),
            (fp, Label::Dropout, Label::Retention),
            (fn_, Label::Retention, Label::Dropout),
            (tn, Label::Retention, Label::Retention),
        ] {
            p.extend(std::iter::repeat_n(pl, n));
            t.extend(std::iter::repeat_n(tl, n));
        }
        (p, t)
    }

    #[test]
    fn hand_example() {
        let (p, t) = labels(30, 10, 20, 40);
        let r = evaluate(&p, &t).unwrap();
        assert_eq!(r.dropout.precision, 0.75);
        assert_eq!(r.dropout.recall, 0.6);
        assert!((r.dropout.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.dropout.support, 50);
    }

    #[test]
    fn perfect_predictions() {
        let (p, t) = labels(5, 0, 0, 7);
        let r = evaluate(&p, &t).unwrap();
        for m in [r.total, r.retention, r.dropout] {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn zero_denominators_yield_zero() {
        let (p, t) = labels(0, 0, 4, 6);
        let r = evaluate(&p, &t).unwrap();
        assert_eq!(r.dropout.precision, 0.0);
        assert_eq!(r.dropout.f1, 0.0);
    }

    #[test]
    fn errors() {
        assert!(evaluate(&[Label::Dropout], &[]).is_err());
        assert!(evaluate(&[], &[]).is_err());
    }

    #[test]
    fn table_layout() {
        assert_eq!(MetricsReport::table_header().split('\t').count(), 10);
        let (p, t) = labels(1, 1, 1, 1);
        let row = evaluate(&p, &t).unwrap().table_row("1");
        assert_eq!(row, "1\t0.50\t0.50\t0.50\t0.50\t0.50\t0.50\t0.50\t0.50\t0.50");
    }

    proptest! {
        #[test]
        fn order_does_not_matter(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..100), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let to = |b: bool| if b { Label::Dropout } else { Label::Retention };
            let (p, t): (Vec<Label>, Vec<Label>) = pairs.iter().map(|&(a, b)| (to(a), to(b))).unzip();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (ps, ts): (Vec<Label>, Vec<Label>) = shuffled.iter().map(|&(a, b)| (to(a), to(b))).unzip();
            let a = evaluate(&p, &t).unwrap();
            prop_assert_eq!(a, evaluate(&ps, &ts).unwrap());
            for m in [a.total, a.retention, a.dropout] {
                for v in [m.precision, m.recall, m.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
