//! Confusion matrices and macro-averaged evaluation reports.
//!
//! Conventions: per-class precision/recall/F1/F2 use the 0/0 -> 0 rule,
//! macro values are unweighted means over the full class list, and the
//! task-2 hate sub-task is scored only on records that passed the
//! offensive gate (everything else is counted as excluded, never as a
//! wrong answer).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EMOTION_LABELS, HATE_TEXT_LABELS, OFFENSIVE_LABELS};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold and predicted label lists differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("class list contains duplicate `{0}`")]
    DuplicateClass(String),
}

/// Confusion counts over an ordered class list. Rows are gold classes,
/// columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Result<Self, MetricsError> {
        let mut seen = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if seen.insert(c.clone(), i).is_some() {
                return Err(MetricsError::DuplicateClass(c.clone()));
            }
        }
        let k = classes.len();
        Ok(Self { classes, counts: vec![vec![0; k]; k] })
    }

    fn index_of(&self, label: &str) -> Result<usize, MetricsError> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| MetricsError::UnknownLabel(label.to_string()))
    }

    /// Adds one (gold, predicted) observation.
    pub fn observe(&mut self, gold: &str, pred: &str) -> Result<(), MetricsError> {
        let g = self.index_of(gold)?;
        let p = self.index_of(pred)?;
        self.counts[g][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    /// CSV export with a header row and a leading gold-class column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (i, c) in self.classes.iter().enumerate() {
            out.push_str(c);
            for v in &self.counts[i] {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the confusion matrix for parallel gold/predicted label slices.
pub fn confusion(
    gold: &[String],
    pred: &[String],
    classes: &[String],
) -> Result<ConfusionMatrix, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    let mut cm = ConfusionMatrix::new(classes.to_vec())?;
    for (g, p) in gold.iter().zip(pred) {
        cm.observe(g, p)?;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Per-class and macro-averaged metrics for one (sub-)task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_f2: f64,
    /// Records that entered the confusion matrix.
    pub scored_count: u64,
    /// Records deliberately left out (e.g. hate sub-task behind a closed
    /// offensive gate).
    pub excluded_count: u64,
    /// Records dropped upstream because a pipeline stage failed.
    pub failed_count: u64,
    /// Set when the matrix was empty; every rate above is then zero.
    pub empty_warning: bool,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Computes accuracy plus per-class and macro precision/recall/F1/F2.
///
/// F2 is F_beta with beta = 2: 5PR / (4P + R). Any 0/0 collapses to 0.
pub fn macro_report(cm: &ConfusionMatrix) -> EvaluationReport {
    let k = cm.classes.len();
    let total = cm.total();
    let mut per_class = Vec::with_capacity(k);
    for i in 0..k {
        let tp = cm.counts[i][i] as f64;
        let row: f64 = cm.counts[i].iter().sum::<u64>() as f64;
        let col: f64 = (0..k).map(|g| cm.counts[g][i]).sum::<u64>() as f64;
        let precision = ratio(tp, col);
        let recall = ratio(tp, row);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let f2 = ratio(5.0 * precision * recall, 4.0 * precision + recall);
        per_class.push(ClassMetrics { class: cm.classes[i].clone(), precision, recall, f1, f2 });
    }
    let kf = k as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if k == 0 {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / kf
        }
    };
    EvaluationReport {
        accuracy: ratio(cm.trace() as f64, total as f64),
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        macro_f2: mean(|c| c.f2),
        per_class,
        scored_count: total,
        excluded_count: 0,
        failed_count: 0,
        empty_warning: total == 0,
    }
}

/// One record of task 2 with gold labels and pipeline outputs. A `None`
/// predicted hate label is the distinguished `undefined` value produced
/// when the offensive gate answered `no`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task2Pair {
    pub gold_emotion: String,
    pub gold_offensive: String,
    pub gold_hate: Option<String>,
    pub pred_emotion: String,
    pub pred_offensive: String,
    pub pred_hate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task2Reports {
    pub emotion: EvaluationReport,
    pub offensive: EvaluationReport,
    pub hate: EvaluationReport,
}

impl Task2Reports {
    /// Unweighted mean of the sub-task macro figures, skipping sub-tasks
    /// that scored nothing. Reported alongside the per-sub-task numbers,
    /// never instead of them.
    pub fn combined_mean(&self) -> EvaluationSummary {
        let parts: Vec<&EvaluationReport> = [&self.emotion, &self.offensive, &self.hate]
            .into_iter()
            .filter(|r| !r.empty_warning)
            .collect();
        let n = parts.len().max(1) as f64;
        let mean = |f: fn(&EvaluationReport) -> f64| parts.iter().map(|r| f(r)).sum::<f64>() / n;
        EvaluationSummary {
            accuracy: mean(|r| r.accuracy),
            macro_precision: mean(|r| r.macro_precision),
            macro_recall: mean(|r| r.macro_recall),
            macro_f1: mean(|r| r.macro_f1),
            macro_f2: mean(|r| r.macro_f2),
            sub_tasks_included: parts.len(),
        }
    }
}

/// Macro figures averaged over sub-tasks (see [`Task2Reports::combined_mean`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_f2: f64,
    pub sub_tasks_included: usize,
}

/// Scores the three task-2 sub-tasks.
///
/// Emotion and offensive are scored over every pair. Hate is scored only
/// where the predicted offensive label is `yes` and a gold hate label
/// exists; all other records are excluded from the hate report and show
/// up in its `excluded_count`.
pub fn score_task2(pairs: &[Task2Pair]) -> Result<Task2Reports, MetricsError> {
    let emotion_classes: Vec<String> = EMOTION_LABELS.iter().map(|s| s.to_string()).collect();
    let offensive_classes: Vec<String> = OFFENSIVE_LABELS.iter().map(|s| s.to_string()).collect();
    let hate_classes: Vec<String> = HATE_TEXT_LABELS.iter().map(|s| s.to_string()).collect();

    let mut emotion_cm = ConfusionMatrix::new(emotion_classes)?;
    let mut offensive_cm = ConfusionMatrix::new(offensive_classes)?;
    let mut hate_cm = ConfusionMatrix::new(hate_classes)?;
    let mut hate_excluded = 0u64;

    for pair in pairs {
        emotion_cm.observe(&pair.gold_emotion, &pair.pred_emotion)?;
        offensive_cm.observe(&pair.gold_offensive, &pair.pred_offensive)?;
        match (&pair.gold_hate, &pair.pred_hate) {
            (Some(gold), Some(pred)) if pair.pred_offensive == "yes" => {
                hate_cm.observe(gold, pred)?;
            }
            _ => hate_excluded += 1,
        }
    }

    let mut hate = macro_report(&hate_cm);
    hate.excluded_count = hate_excluded;
    Ok(Task2Reports {
        emotion: macro_report(&emotion_cm),
        offensive: macro_report(&offensive_cm),
        hate,
    })
}

/// Renders an aligned human-readable table for one report.
pub fn render_table(title: &str, report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("== {title} ==\n"));
    if report.empty_warning {
        out.push_str("  (no scored records)\n");
    }
    out.push_str(&format!(
        "  accuracy {:>8.4}  scored {}  excluded {}  failed {}\n",
        report.accuracy, report.scored_count, report.excluded_count, report.failed_count
    ));
    out.push_str(&format!(
        "  {:<16} {:>9} {:>9} {:>9} {:>9}\n",
        "class", "precision", "recall", "f1", "f2"
    ));
    for c in &report.per_class {
        out.push_str(&format!(
            "  {:<16} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
            c.class, c.precision, c.recall, c.f1, c.f2
        ));
    }
    out.push_str(&format!(
        "  {:<16} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
        "macro", report.macro_precision, report.macro_recall, report.macro_f1, report.macro_f2
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let cm = confusion(&strs(&["a", "b"]), &strs(&["a", "b"]), &strs(&["a", "b"])).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0], vec![0, 1]]);
        let report = macro_report(&cm);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.macro_f2, 1.0);
    }

    #[test]
    fn worked_three_record_example() {
        // gold [a,b,b] vs pred [a,a,b]
        let cm =
            confusion(&strs(&["a", "b", "b"]), &strs(&["a", "a", "b"]), &strs(&["a", "b"]))
                .unwrap();
        assert_eq!(cm.counts, vec![vec![1, 0], vec![1, 1]]);
        let report = macro_report(&cm);
        let a = &report.per_class[0];
        let b = &report.per_class[1];
        assert_eq!(a.precision, 0.5);
        assert_eq!(a.recall, 1.0);
        assert_eq!(b.precision, 1.0);
        assert_eq!(b.recall, 0.5);
        assert_eq!(a.f1, 2.0 / 3.0);
        assert_eq!(b.f1, 2.0 / 3.0);
        assert_eq!(report.macro_f1, 2.0 / 3.0);
        assert_eq!(report.accuracy, 2.0 / 3.0);
    }

    #[test]
    fn f2_weights_recall() {
        // P = 0.5, R = 1 -> F2 = 5*0.5*1 / (4*0.5 + 1) = 2.5/3
        let cm =
            confusion(&strs(&["a", "a", "b"]), &strs(&["a", "a", "a"]), &strs(&["a", "b"]))
                .unwrap();
        let report = macro_report(&cm);
        // hand check the class-a cell before the F2 identity
        assert_eq!(report.per_class[0].precision, 2.0 / 3.0);
        let p = 0.5;
        let r = 1.0;
        assert_eq!(5.0 * p * r / (4.0 * p + r), 2.5 / 3.0);
    }

    #[test]
    fn empty_matrix_reports_zeros_with_warning() {
        let cm = ConfusionMatrix::new(strs(&["a", "b"])).unwrap();
        let report = macro_report(&cm);
        assert!(report.empty_warning);
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.macro_f1, 0.0);
        assert_eq!(report.scored_count, 0);
    }

    #[test]
    fn unknown_label_is_rejected() {
        let err = confusion(&strs(&["a"]), &strs(&["c"]), &strs(&["a", "b"])).unwrap_err();
        assert!(matches!(err, MetricsError::UnknownLabel(l) if l == "c"));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = confusion(&strs(&["a", "a"]), &strs(&["a"]), &strs(&["a"])).unwrap_err();
        assert!(matches!(err, MetricsError::LengthMismatch { gold: 2, pred: 1 }));
    }

    #[test]
    fn csv_has_header_row_and_column() {
        let cm = confusion(&strs(&["a", "b"]), &strs(&["a", "b"]), &strs(&["a", "b"])).unwrap();
        let csv = cm.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "gold\\pred,a,b");
        assert_eq!(lines[1], "a,1,0");
        assert_eq!(lines[2], "b,0,1");
    }

    fn pair(
        gold_emotion: &str,
        gold_offensive: &str,
        gold_hate: Option<&str>,
        pred_offensive: &str,
        pred_hate: Option<&str>,
    ) -> Task2Pair {
        Task2Pair {
            gold_emotion: gold_emotion.to_string(),
            gold_offensive: gold_offensive.to_string(),
            gold_hate: gold_hate.map(|s| s.to_string()),
            pred_emotion: gold_emotion.to_string(),
            pred_offensive: pred_offensive.to_string(),
            pred_hate: pred_hate.map(|s| s.to_string()),
        }
    }

    #[test]
    fn task2_all_non_offensive_excludes_everything_from_hate() {
        let pairs = vec![
            pair("anger", "yes", Some("hate"), "no", None),
            pair("joy", "no", None, "no", None),
            pair("fear", "yes", Some("not_hate"), "no", None),
        ];
        let reports = score_task2(&pairs).unwrap();
        assert!(reports.hate.empty_warning);
        assert_eq!(reports.hate.scored_count, 0);
        assert_eq!(reports.hate.excluded_count, 3);
        // offensive report is unaffected by hate exclusions
        assert_eq!(reports.offensive.scored_count, 3);
        assert_eq!(reports.emotion.accuracy, 1.0);
    }

    #[test]
    fn task2_scores_hate_only_behind_open_gate() {
        let pairs = vec![
            pair("anger", "yes", Some("hate"), "yes", Some("hate")),
            pair("fear", "yes", Some("not_hate"), "yes", Some("hate")),
            pair("joy", "no", None, "no", None),
            pair("sadness", "yes", Some("hate"), "no", None),
        ];
        let reports = score_task2(&pairs).unwrap();
        assert_eq!(reports.hate.scored_count, 2);
        assert_eq!(reports.hate.excluded_count, 2);
        assert_eq!(reports.hate.accuracy, 0.5);
    }

    #[test]
    fn combined_mean_skips_empty_subtasks() {
        let pairs = vec![pair("anger", "no", None, "no", None)];
        let reports = score_task2(&pairs).unwrap();
        let combined = reports.combined_mean();
        assert_eq!(combined.sub_tasks_included, 2);
        assert_eq!(combined.accuracy, 1.0);
    }
}
