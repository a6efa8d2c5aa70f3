//! Full-versus-baseline pipeline comparison and the window-size sweep.

use std::collections::BTreeSet;

use raypet_classifiers::{train, ClassifierConfig, ClassifierKind};
use raypet_core::{Clip, Dataset, PipelineConfig};
use serde::{Deserialize, Serialize};

use crate::metrics::{evaluate, EvalReport};
use crate::split::{sessions_of_clips, split_sessions, Split, SplitSpec};
use crate::EvalError;

/// Accuracies published for the original field study with real dogs. The
/// recordings are not public, so none of these can be reproduced here; they
/// are carried along for side-by-side reading only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedFigures {
    pub note: String,
    pub svm_pca: f64,
    pub mlp: f64,
    pub bi_lstm: f64,
    pub td_cnn_bi_lstm: f64,
    /// The same model as read off its published confusion matrix; differs
    /// from `td_cnn_bi_lstm` at the source.
    pub td_cnn_bi_lstm_confusion_matrix: f64,
    /// Largest published gain of the full pipeline over windowing and
    /// voxelization alone.
    pub max_pipeline_gain: f64,
}

impl Default for PublishedFigures {
    fn default() -> Self {
        Self {
            note: "published field-study figures; not reproducible (recordings unavailable)".into(),
            svm_pca: 0.41,
            mlp: 0.78,
            bi_lstm: 0.79,
            td_cnn_bi_lstm: 0.89,
            td_cnn_bi_lstm_confusion_matrix: 0.85,
            max_pipeline_gain: 0.12,
        }
    }
}

impl PublishedFigures {
    pub fn for_kind(&self, kind: ClassifierKind) -> f64 {
        match kind {
            ClassifierKind::SvmPca => self.svm_pca,
            ClassifierKind::Mlp => self.mlp,
            ClassifierKind::BiLstm => self.bi_lstm,
            ClassifierKind::TdCnnBiLstm => self.td_cnn_bi_lstm,
        }
    }
}

/// One pipeline setting trained and scored on a fixed split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub pipeline: PipelineConfig,
    pub total_samples: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub split: SplitSpec,
    pub test_sessions: Vec<String>,
    pub classifier: ClassifierConfig,
    pub full: ArmReport,
    pub baseline: ArmReport,
    /// `full.accuracy - baseline.accuracy`.
    pub delta: f64,
    pub published: PublishedFigures,
}

impl ComparisonReport {
    pub fn table(&self) -> String {
        let p = &self.published;
        format!(
            "{:<10} {:>9} {:>8} {:>8}\n{:<10} {:>9.4} {:>8} {:>8}\n{:<10} {:>9.4} {:>8} {:>8}\ndelta {:+.4}\n\
             published ({}): {} {:.2}, full-pipeline gain up to {:.2}\n",
            "arm",
            "accuracy",
            "train",
            "test",
            "full",
            self.full.report.accuracy,
            self.full.report.train_samples,
            self.full.report.test_samples,
            "baseline",
            self.baseline.report.accuracy,
            self.baseline.report.train_samples,
            self.baseline.report.test_samples,
            self.delta,
            p.note,
            self.classifier.kind,
            p.for_kind(self.classifier.kind),
            p.max_pipeline_gain,
        )
    }
}

fn config_echo(
    pipeline: &PipelineConfig,
    classifier: &ClassifierConfig,
    split: &SplitSpec,
    seed: u64,
) -> serde_json::Value {
    serde_json::json!({ "pipeline": pipeline, "classifier": classifier, "split": split, "seed": seed })
}

fn check_clips(clips: &[Clip]) -> Result<(), EvalError> {
    if clips.is_empty() {
        return Err(EvalError::Split("no labeled clips".into()));
    }
    Ok(())
}

/// Builds the dataset for `pipeline`, trains on the non-test sessions and
/// scores the test sessions. `None` when the pipeline yields no window.
fn run_arm(
    clips: &[Clip],
    background: Option<&Clip>,
    pipeline: &PipelineConfig,
    classifier: &ClassifierConfig,
    split: &SplitSpec,
    test_sessions: &BTreeSet<String>,
    seed: u64,
) -> Result<Option<ArmReport>, EvalError> {
    let data = Dataset::build(clips, background, pipeline)?;
    if data.is_empty() {
        return Ok(None);
    }
    let parts = Split::by_sessions(&data.samples, test_sessions);
    if parts.train.is_empty() || parts.test.is_empty() {
        return Ok(None);
    }
    let model = train(&parts.train_samples(&data.samples), classifier, seed)?;
    let report = evaluate(&model, &parts.test_samples(&data.samples), config_echo(pipeline, classifier, split, seed))?;
    Ok(Some(ArmReport { pipeline: pipeline.clone(), total_samples: data.len(), report }))
}

/// Trains and scores the same classifier, seed and session split on the
/// full pipeline and on its baseline (noise removal and aggregation off).
/// The split is drawn over clips, so it does not depend on either arm.
pub fn compare_pipelines(
    clips: &[Clip],
    background: Option<&Clip>,
    pipeline: &PipelineConfig,
    classifier: &ClassifierConfig,
    split: &SplitSpec,
    seed: u64,
) -> Result<ComparisonReport, EvalError> {
    check_clips(clips)?;
    pipeline.validate()?;
    let test_sessions = split_sessions(&sessions_of_clips(clips)?, split)?;
    let baseline_config = pipeline.baseline();
    let arm = |p: &PipelineConfig| {
        run_arm(clips, background, p, classifier, split, &test_sessions, seed)?
            .ok_or_else(|| EvalError::Split(format!("window {} yields no usable samples", p.window_size)))
    };
    let full = arm(pipeline)?;
    let baseline = arm(&baseline_config)?;
    Ok(ComparisonReport {
        seed,
        split: split.clone(),
        test_sessions: test_sessions.into_iter().collect(),
        classifier: classifier.clone(),
        delta: full.report.accuracy - baseline.report.accuracy,
        full,
        baseline,
        published: PublishedFigures::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub window: usize,
    pub slide: usize,
    pub total_samples: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    /// `None` when no clip yields a window for this pair.
    pub report: Option<EvalReport>,
}

impl SweepEntry {
    pub fn is_empty(&self) -> bool {
        self.report.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub split: SplitSpec,
    pub classifier: ClassifierConfig,
    pub base_pipeline: PipelineConfig,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn table(&self) -> String {
        let mut out =
            format!("{:>4} {:>4} {:>8} {:>8} {:>8} {:>9}\n", "W", "SW", "samples", "train", "test", "accuracy");
        for e in &self.entries {
            let acc = e.report.as_ref().map_or_else(|| "empty".to_string(), |r| format!("{:.4}", r.accuracy));
            out.push_str(&format!(
                "{:>4} {:>4} {:>8} {:>8} {:>8} {:>9}\n",
                e.window, e.slide, e.total_samples, e.train_samples, e.test_samples, acc
            ));
        }
        out
    }
}

/// The window sizes published for the trade-off study.
pub const PUBLISHED_SWEEP: [(usize, usize); 4] = [(20, 4), (25, 5), (30, 10), (45, 10)];

/// One pipeline, training and evaluation run per `(W, SW)` pair, all on the
/// same clip-level session split. Pairs run in the given order; repeats are
/// run again.
pub fn window_sweep(
    clips: &[Clip],
    background: Option<&Clip>,
    pipeline: &PipelineConfig,
    pairs: &[(usize, usize)],
    classifier: &ClassifierConfig,
    split: &SplitSpec,
    seed: u64,
) -> Result<SweepReport, EvalError> {
    check_clips(clips)?;
    if let Some(&(w, sw)) = pairs.iter().find(|&&(w, sw)| w == 0 || sw == 0 || sw > w) {
        return Err(EvalError::Split(format!("invalid window pair W={w}, SW={sw}; need 1 <= SW <= W")));
    }
    let test_sessions = split_sessions(&sessions_of_clips(clips)?, split)?;
    let mut entries = Vec::with_capacity(pairs.len());
    for &(w, sw) in pairs {
        let p = pipeline.with_window(w, sw);
        let entry = match run_arm(clips, background, &p, classifier, split, &test_sessions, seed)? {
            Some(arm) => SweepEntry {
                window: w,
                slide: sw,
                total_samples: arm.total_samples,
                train_samples: arm.report.train_samples,
                test_samples: arm.report.test_samples,
                report: Some(arm.report),
            },
            None => {
                let data = Dataset::build(clips, background, &p)?;
                let parts = Split::by_sessions(&data.samples, &test_sessions);
                SweepEntry {
                    window: w,
                    slide: sw,
                    total_samples: data.len(),
                    train_samples: parts.train.len(),
                    test_samples: parts.test.len(),
                    report: None,
                }
            }
        };
        entries.push(entry);
    }
    Ok(SweepReport {
        seed,
        split: split.clone(),
        classifier: classifier.clone(),
        base_pipeline: pipeline.clone(),
        entries,
    })
}
