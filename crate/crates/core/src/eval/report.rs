use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    classify_pair, fmt_metric, metrics, percent_of, recall_including_incorrect, Cell,
    ConfusionCounts, EvalError, GroundTruthRecord, Metrics,
};
use crate::ordinance::{FeatureType, OrdinanceRecord, RecordStatus, ReviewReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub feature: FeatureType,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// The three ways an extraction can go wrong.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureModes {
    /// Reported an ordinance that does not exist.
    pub false_positive: u64,
    /// Missed an ordinance that exists.
    pub false_negative: u64,
    /// Found the ordinance but reported the wrong value or kind.
    pub wrong_value: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub county: String,
    pub state: String,
    pub feature: FeatureType,
    pub reason: Option<ReviewReason>,
    /// Whether ground truth says the ordinance exists; `None` if unscored.
    pub truth_exists: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub total: u64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    /// Recall with wrong-value finds counted in the denominator.
    pub recall_including_incorrect: Option<f64>,
    pub per_feature: Vec<FeatureRow>,
    pub failure_modes: FailureModes,
    /// Records deferred to a person; scored as not found.
    pub review_queue: Vec<ReviewItem>,
    /// Ground-truth pairs with no extracted record; scored as not found.
    pub missing_records: u64,
    /// Extracted records with no ground truth; not scored.
    pub unscored_records: u64,
    pub notes: Vec<String>,
}

pub const RECALL_NOTE: &str = "Recall = correct / (correct + false negatives). Found ordinances \
with a wrong value are left out of the recall denominator. recall_including_incorrect counts \
them in; recall figures from other evaluations may use either convention and are not directly \
comparable.";

fn key(county: &str, state: &str, feature: FeatureType) -> (String, FeatureType) {
    let j = crate::ingest::Jurisdiction {
        county: county.to_string(),
        state: state.to_string(),
    };
    (j.slug(), feature)
}

/// Pair records with ground truth and tally the confusion cells.
///
/// Every ground-truth row is scored exactly once; a missing record counts
/// as not found. Cell totals therefore equal the number of truth rows.
pub fn evaluate(records: &[OrdinanceRecord], truth: &[GroundTruthRecord]) -> EvaluationReport {
    let by_key: HashMap<_, &OrdinanceRecord> = records
        .iter()
        .map(|r| {
            (
                key(&r.jurisdiction.county, &r.jurisdiction.state, r.feature),
                r,
            )
        })
        .collect();
    let mut counts = ConfusionCounts::default();
    let mut per_feature: BTreeMap<FeatureType, ConfusionCounts> = BTreeMap::new();
    let mut missing = 0;
    let mut scored = std::collections::HashSet::new();
    let mut truth_exists = HashMap::new();

    for t in truth {
        let k = key(&t.jurisdiction.county, &t.jurisdiction.state, t.feature);
        truth_exists.insert(k.clone(), t.exists);
        let cell = match by_key.get(&k) {
            Some(r) => {
                scored.insert(k);
                classify_pair(r, t).expect("paired by key")
            }
            None => {
                missing += 1;
                if t.exists {
                    Cell::FalseNegative
                } else {
                    Cell::TrueNegative
                }
            }
        };
        counts.record(cell);
        per_feature.entry(t.feature).or_default().record(cell);
    }

    let review_queue = records
        .iter()
        .filter(|r| r.status == RecordStatus::NeedsReview)
        .map(|r| ReviewItem {
            county: r.jurisdiction.county.clone(),
            state: r.jurisdiction.state.clone(),
            feature: r.feature,
            reason: r.review.as_ref().map(|c| c.reason),
            truth_exists: truth_exists
                .get(&key(
                    &r.jurisdiction.county,
                    &r.jurisdiction.state,
                    r.feature,
                ))
                .copied(),
        })
        .collect();

    EvaluationReport {
        total: counts.total(),
        metrics: metrics(&counts),
        recall_including_incorrect: recall_including_incorrect(&counts),
        per_feature: per_feature
            .into_iter()
            .map(|(feature, c)| FeatureRow {
                feature,
                counts: c,
                metrics: metrics(&c),
            })
            .collect(),
        failure_modes: FailureModes {
            false_positive: counts.false_positive,
            false_negative: counts.false_negative,
            wrong_value: counts.incorrect_tp,
        },
        counts,
        review_queue,
        missing_records: missing,
        unscored_records: records.len() as u64 - scored.len() as u64,
        notes: vec![RECALL_NOTE.to_string()],
    }
}

/// Read newline-delimited records; blank lines are skipped.
pub fn load_records(path: &Path) -> Result<Vec<OrdinanceRecord>, EvalError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Parse {
                path: path.display().to_string(),
                line: i as u64 + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}

fn cell(n: u64, total: u64) -> String {
    format!("{n} ({})", percent_of(n, total))
}

/// Plain-text summary: the confusion table, metrics, per-feature rows and the review queue.
pub fn render_text(r: &EvaluationReport) -> String {
    let c = &r.counts;
    let t = r.total;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Ordinance extraction evaluation ({t} jurisdiction-feature pairs)\n"
    );
    let _ = writeln!(
        s,
        "{:<22}{:<24}Ordinance exists: False",
        "", "Ordinance exists: True"
    );
    let _ = writeln!(
        s,
        "{:<22}{:<24}{}",
        "LLM found: True",
        format!("{} - Correct", cell(c.correct_tp, t)),
        cell(c.false_positive, t)
    );
    let _ = writeln!(s, "{:<22}{} - Incorrect", "", cell(c.incorrect_tp, t));
    let _ = writeln!(
        s,
        "{:<22}{:<24}{}",
        "LLM found: False",
        cell(c.false_negative, t),
        cell(c.true_negative, t)
    );
    let _ = writeln!(
        s,
        "\nAccuracy {}  Precision {}  Recall {}  (recall incl. incorrect {})",
        fmt_metric(r.metrics.accuracy),
        fmt_metric(r.metrics.precision),
        fmt_metric(r.metrics.recall),
        fmt_metric(r.recall_including_incorrect)
    );
    let _ = writeln!(
        s,
        "Failure modes: false positive {}, false negative {}, wrong value {}",
        r.failure_modes.false_positive, r.failure_modes.false_negative, r.failure_modes.wrong_value
    );
    if r.missing_records > 0 || r.unscored_records > 0 {
        let _ = writeln!(
            s,
            "Missing records {} (scored as not found), unscored records {}",
            r.missing_records, r.unscored_records
        );
    }

    if !r.per_feature.is_empty() {
        let _ = writeln!(
            s,
            "\n{:<32}{:>8}{:>10}{:>8}{:>8}{:>8}{:>10}{:>11}{:>9}",
            "feature", "correct", "incorrect", "fn", "fp", "tn", "accuracy", "precision", "recall"
        );
        for row in &r.per_feature {
            let c = &row.counts;
            let _ = writeln!(
                s,
                "{:<32}{:>8}{:>10}{:>8}{:>8}{:>8}{:>10}{:>11}{:>9}",
                row.feature.as_str(),
                c.correct_tp,
                c.incorrect_tp,
                c.false_negative,
                c.false_positive,
                c.true_negative,
                fmt_metric(row.metrics.accuracy),
                fmt_metric(row.metrics.precision),
                fmt_metric(row.metrics.recall)
            );
        }
    }

    let _ = writeln!(s, "\nReview queue: {} item(s)", r.review_queue.len());
    for item in &r.review_queue {
        let reason = item
            .reason
            .map(|x| {
                serde_json::to_string(&x)
                    .unwrap_or_default()
                    .trim_matches('"')
                    .to_string()
            })
            .unwrap_or_else(|| "unspecified".into());
        let _ = writeln!(
            s,
            "  {}, {} {}: {reason}",
            item.county, item.state, item.feature
        );
    }
    for note in &r.notes {
        let _ = writeln!(s, "\nNote: {note}");
    }
    s
}
