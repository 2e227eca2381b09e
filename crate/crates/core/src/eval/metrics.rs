//! Confusion counts and the five classification metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Label;

/// Positive class is cancer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn scaled(&self, k: u64) -> Self {
        ConfusionCounts {
            tp: self.tp * k,
            tn: self.tn * k,
            fp: self.fp * k,
            fn_: self.fn_ * k,
        }
    }
}

pub fn confusion(y_true: &[Label], y_pred: &[Label]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub acc: f64,
    pub bacc: f64,
    pub recall: f64,
    pub precision: f64,
    pub f_score: f64,
    /// TN/(TN+FP).
    pub specificity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Acc,
    Bacc,
    Recall,
    Precision,
    FScore,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Acc,
        Metric::Bacc,
        Metric::Recall,
        Metric::Precision,
        Metric::FScore,
    ];

    pub fn of(self, m: &MetricSet) -> f64 {
        match self {
            Metric::Acc => m.acc,
            Metric::Bacc => m.bacc,
            Metric::Recall => m.recall,
            Metric::Precision => m.precision,
            Metric::FScore => m.f_score,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Acc => "acc",
            Metric::Bacc => "bacc",
            Metric::Recall => "recall",
            Metric::Precision => "precision",
            Metric::FScore => "f_score",
        }
    }

    pub fn heading(self) -> &'static str {
        match self {
            Metric::Acc => "ACC",
            Metric::Bacc => "BACC",
            Metric::Recall => "Recall",
            Metric::Precision => "Precision",
            Metric::FScore => "F-Score",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| Error::invalid(format!("unknown metric `{s}`")))
    }
}

fn ratio(num: u64, den: u64, what: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!("{what} is 0/0, reported as 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics plus a note for every 0/0 ratio that was resolved to 0.
pub fn metrics_with_warnings(c: &ConfusionCounts) -> (MetricSet, Vec<String>) {
    let mut w = Vec::new();
    let acc = ratio(c.tp + c.tn, c.total(), "accuracy", &mut w);
    let recall = ratio(c.tp, c.tp + c.fn_, "recall", &mut w);
    let specificity = ratio(c.tn, c.tn + c.fp, "specificity", &mut w);
    let precision = ratio(c.tp, c.tp + c.fp, "precision", &mut w);
    let f_score = if precision + recall == 0.0 {
        w.push("f_score is 0/0, reported as 0".into());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let m = MetricSet {
        acc,
        bacc: (recall + specificity) / 2.0,
        recall,
        precision,
        f_score,
        specificity,
    };
    (m, w)
}

pub fn metrics(counts: &ConfusionCounts) -> MetricSet {
    metrics_with_warnings(counts).0
}

/// Mean and sample standard deviation (n − 1) of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary { mean, std }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&b| Label::from_u8(b).unwrap()).collect()
    }

    #[test]
    fn hand_counted_example() {
        let t = labels(&[1, 1, 1, 1, 0, 0, 0, 0, 0, 0]);
        let p = labels(&[1, 1, 1, 0, 0, 0, 0, 0, 1, 1]);
        let c = confusion(&t, &p).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 3,
                tn: 4,
                fp: 2,
                fn_: 1
            }
        );
        let m = metrics(&c);
        assert!((m.acc - 0.7).abs() < 1e-15);
        assert!((m.recall - 0.75).abs() < 1e-15);
        assert!((m.precision - 0.6).abs() < 1e-15);
        assert!((m.bacc - (0.75 + 4.0 / 6.0) / 2.0).abs() < 1e-15);
        assert!((m.f_score - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverted_and_perfect() {
        let t = labels(&[1, 0, 1, 0]);
        let inv = labels(&[0, 1, 0, 1]);
        let c = confusion(&t, &inv).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        let m = metrics(&confusion(&t, &t).unwrap());
        assert_eq!([m.acc, m.bacc, m.recall, m.precision, m.f_score], [1.0; 5]);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let (m, w) = metrics_with_warnings(&ConfusionCounts {
            tp: 0,
            tn: 5,
            fp: 0,
            fn_: 3,
        });
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.f_score, 0.0);
        assert!(!w.is_empty());
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            confusion(&labels(&[1]), &labels(&[1, 0])),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn summary_format() {
        let s = Summary {
            mean: 0.8514,
            std: 0.01749,
        };
        assert_eq!(s.to_string(), "0.851 ± 0.017");
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
    }

    proptest! {
        #[test]
        fn scale_consistent(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, k in 1u64..20) {
            prop_assume!(tp + tn + fp + fn_ > 0);
            let c = ConfusionCounts { tp, tn, fp, fn_ };
            prop_assert_eq!(metrics(&c), metrics(&c.scaled(k)));
        }

        #[test]
        fn balanced_bacc_is_acc(tp in 0u64..50, tn in 0u64..50, pos in 1u64..50) {
            prop_assume!(tp <= pos && tn <= pos);
            let c = ConfusionCounts { tp, fn_: pos - tp, tn, fp: pos - tn };
            let m = metrics(&c);
            prop_assert!((m.bacc - m.acc).abs() < 1e-12);
        }

        #[test]
        fn f_between_recall_and_precision(tp in 1u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let m = metrics(&ConfusionCounts { tp, tn, fp, fn_ });
            prop_assert!(m.f_score <= m.recall.max(m.precision) + 1e-12);
            prop_assert!(m.f_score >= m.recall.min(m.precision) - 1e-12);
        }
    }
}
