//! Accuracy, per-class precision/recall/F1 and the confusion matrix.

use std::fmt::Write as _;

use raypet_classifiers::TrainedModel;
use raypet_core::{ActivityLabel, WindowSample};
use serde::{Deserialize, Serialize};

use crate::EvalError;

const K: usize = ActivityLabel::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: ActivityLabel,
    /// True samples of this class.
    pub support: u64,
    /// Samples predicted as this class.
    pub predicted: u64,
    /// Zero when nothing was predicted as this class.
    pub precision: f64,
    /// Zero when the class has no true samples.
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Mean F1 over classes that occur in the truth or the predictions.
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[true][predicted]`, classes in label order.
    pub confusion: Vec<Vec<u64>>,
    pub test_samples: usize,
    pub train_samples: usize,
    /// Settings that produced the numbers.
    pub config: serde_json::Value,
}

impl EvalReport {
    /// Exact counting metrics for paired true and predicted labels.
    pub fn from_predictions(
        truth: &[ActivityLabel],
        predicted: &[ActivityLabel],
        train_samples: usize,
        config: serde_json::Value,
    ) -> Result<Self, EvalError> {
        if truth.is_empty() {
            return Err(EvalError::EmptyTest);
        }
        if truth.len() != predicted.len() {
            return Err(EvalError::Split(format!("{} labels but {} predictions", truth.len(), predicted.len())));
        }
        let mut confusion = vec![vec![0u64; K]; K];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        let total = truth.len() as f64;
        let hits: u64 = (0..K).map(|k| confusion[k][k]).sum();
        let per_class: Vec<ClassMetrics> = ActivityLabel::ALL
            .iter()
            .map(|&label| {
                let k = label.index();
                let tp = confusion[k][k] as f64;
                let support: u64 = confusion[k].iter().sum();
                let predicted: u64 = confusion.iter().map(|row| row[k]).sum();
                let ratio = |num: f64, den: u64| if den == 0 { 0.0 } else { num / den as f64 };
                let (precision, recall) = (ratio(tp, predicted), ratio(tp, support));
                let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
                ClassMetrics { label, support, predicted, precision, recall, f1 }
            })
            .collect();
        let present: Vec<&ClassMetrics> = per_class.iter().filter(|c| c.support + c.predicted > 0).collect();
        let macro_f1 = present.iter().map(|c| c.f1).sum::<f64>() / present.len() as f64;
        Ok(Self {
            accuracy: hits as f64 / total,
            macro_f1,
            per_class,
            confusion,
            test_samples: truth.len(),
            train_samples,
            config,
        })
    }

    /// Confusion matrix as CSV: a header of predicted labels, then one row
    /// per true label.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in ActivityLabel::ALL {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (l, row) in ActivityLabel::ALL.iter().zip(&self.confusion) {
            out.push_str(l.as_str());
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Plain-text summary table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "accuracy {:.4}  macro-F1 {:.4}  test {}  train {}\n",
            self.accuracy, self.macro_f1, self.test_samples, self.train_samples
        );
        writeln!(out, "{:<10} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support").unwrap();
        for c in &self.per_class {
            writeln!(
                out,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                c.label.as_str(),
                c.precision,
                c.recall,
                c.f1,
                c.support
            )
            .unwrap();
        }
        out
    }
}

/// Scores `model` on `test`.
pub fn evaluate(
    model: &TrainedModel,
    test: &[WindowSample],
    config: serde_json::Value,
) -> Result<EvalReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let predicted: Vec<ActivityLabel> = model.predict_all(test)?.into_iter().map(|p| p.label).collect();
    let truth: Vec<ActivityLabel> = test.iter().map(|s| s.label).collect();
    EvalReport::from_predictions(&truth, &predicted, model.train_samples, config)
}
