//! Scoring extracted records against ground truth.

mod report;
mod truth;

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::ingest::Jurisdiction;
use crate::ordinance::{Combinator, OrdinanceRecord, RecordStatus, SetbackKind, SetbackSpec};

pub use report::{
    evaluate, load_records, render_text, EvaluationReport, FailureModes, FeatureRow, ReviewItem,
};
pub use truth::{load_ground_truth, parse_ground_truth, GroundTruthRecord};

/// Relative tolerance for comparing setback values.
pub const VALUE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: line {line}: {detail}")]
    Parse {
        path: String,
        line: u64,
        detail: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("record for {record} compared with truth for {truth}")]
    Mismatch { record: String, truth: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    CorrectTp,
    IncorrectTp,
    FalseNegative,
    FalsePositive,
    TrueNegative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub correct_tp: u64,
    pub incorrect_tp: u64,
    pub false_negative: u64,
    pub false_positive: u64,
    pub true_negative: u64,
}

impl ConfusionCounts {
    pub fn new(
        correct_tp: u64,
        incorrect_tp: u64,
        false_negative: u64,
        false_positive: u64,
        true_negative: u64,
    ) -> Self {
        Self {
            correct_tp,
            incorrect_tp,
            false_negative,
            false_positive,
            true_negative,
        }
    }

    pub fn total(&self) -> u64 {
        self.correct_tp
            + self.incorrect_tp
            + self.false_negative
            + self.false_positive
            + self.true_negative
    }

    pub fn record(&mut self, cell: Cell) {
        *self.cell_mut(cell) += 1;
    }

    pub fn get(&self, cell: Cell) -> u64 {
        match cell {
            Cell::CorrectTp => self.correct_tp,
            Cell::IncorrectTp => self.incorrect_tp,
            Cell::FalseNegative => self.false_negative,
            Cell::FalsePositive => self.false_positive,
            Cell::TrueNegative => self.true_negative,
        }
    }

    fn cell_mut(&mut self, cell: Cell) -> &mut u64 {
        match cell {
            Cell::CorrectTp => &mut self.correct_tp,
            Cell::IncorrectTp => &mut self.incorrect_tp,
            Cell::FalseNegative => &mut self.false_negative,
            Cell::FalsePositive => &mut self.false_positive,
            Cell::TrueNegative => &mut self.true_negative,
        }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.correct_tp += rhs.correct_tp;
        self.incorrect_tp += rhs.incorrect_tp;
        self.false_negative += rhs.false_negative;
        self.false_positive += rhs.false_positive;
        self.true_negative += rhs.true_negative;
    }
}

/// Fractions in [0, 1]; `None` when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Accuracy, precision and recall.
///
/// Recall is `correct_tp / (correct_tp + false_negative)`: a found ordinance
/// with the wrong value counts against precision and accuracy but is left
/// out of the recall denominator.
pub fn metrics(c: &ConfusionCounts) -> Metrics {
    Metrics {
        accuracy: ratio(c.correct_tp + c.true_negative, c.total()),
        precision: ratio(c.correct_tp, c.correct_tp + c.false_positive),
        recall: ratio(c.correct_tp, c.correct_tp + c.false_negative),
    }
}

/// Recall with wrong-value finds in the denominator, reported for comparison.
pub fn recall_including_incorrect(c: &ConfusionCounts) -> Option<f64> {
    ratio(
        c.correct_tp,
        c.correct_tp + c.incorrect_tp + c.false_negative,
    )
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= VALUE_TOLERANCE * a.abs().max(b.abs())
}

/// Same kind and value, units normalized, multi-condition lists compared as sets.
pub fn specs_equivalent(a: &SetbackSpec, b: &SetbackSpec) -> bool {
    if a.kind != b.kind {
        return false;
    }
    match a.kind {
        SetbackKind::FixedDistance => match (a.unit, b.unit) {
            (Some(ua), Some(ub)) => match (ua.to_feet(a.value), ub.to_feet(b.value)) {
                (Some(fa), Some(fb)) => close(fa, fb),
                _ => ua == ub && close(a.value, b.value),
            },
            _ => false,
        },
        SetbackKind::MultiCondition => {
            a.combinator.unwrap_or(Combinator::Greater)
                == b.combinator.unwrap_or(Combinator::Greater)
                && same_set(&a.conditions, &b.conditions)
        }
        _ => close(a.value, b.value),
    }
}

/// Perfect matching between two condition lists under [`specs_equivalent`].
fn same_set(a: &[SetbackSpec], b: &[SetbackSpec]) -> bool {
    fn search(a: &[SetbackSpec], b: &[SetbackSpec], used: &mut [bool]) -> bool {
        let Some((first, rest)) = a.split_first() else {
            return true;
        };
        for j in 0..b.len() {
            if !used[j] && specs_equivalent(first, &b[j]) {
                used[j] = true;
                if search(rest, b, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    a.len() == b.len() && search(a, b, &mut vec![false; b.len()])
}

fn same_place(a: &Jurisdiction, b: &Jurisdiction) -> bool {
    a.slug() == b.slug()
}

/// Confusion cell for one (jurisdiction, feature) pair. `needs_review` counts as not found.
pub fn classify_pair(
    extracted: &OrdinanceRecord,
    truth: &GroundTruthRecord,
) -> Result<Cell, EvalError> {
    if !same_place(&extracted.jurisdiction, &truth.jurisdiction)
        || extracted.feature != truth.feature
    {
        return Err(EvalError::Mismatch {
            record: format!("{} {}", extracted.jurisdiction, extracted.feature),
            truth: format!("{} {}", truth.jurisdiction, truth.feature),
        });
    }
    let found = extracted.status == RecordStatus::Found;
    Ok(match (truth.exists, found) {
        (true, true) => match (&extracted.spec, &truth.spec) {
            (Some(e), Some(t)) if specs_equivalent(e, t) => Cell::CorrectTp,
            _ => Cell::IncorrectTp,
        },
        (true, false) => Cell::FalseNegative,
        (false, true) => Cell::FalsePositive,
        (false, false) => Cell::TrueNegative,
    })
}

/// Percentage text used in report cells, e.g. `26%`.
pub fn percent_of(n: u64, total: u64) -> String {
    match ratio(n, total) {
        Some(r) => format!("{:.0}%", r * 100.0),
        None => "-".into(),
    }
}

pub(crate) fn fmt_metric(m: Option<f64>) -> String {
    m.map_or_else(|| "undefined".into(), |v| format!("{:.1}%", v * 100.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinance::{FeatureType, Unit, FEET_PER_METER};
    use proptest::prelude::*;

    fn jur() -> Jurisdiction {
        Jurisdiction::new("Monroe", "WI").unwrap()
    }

    fn found(spec: SetbackSpec) -> OrdinanceRecord {
        let mut r = OrdinanceRecord::not_found(jur(), FeatureType::Roads, String::new());
        r.status = RecordStatus::Found;
        r.spec = Some(spec);
        r
    }

    fn truth(spec: Option<SetbackSpec>) -> GroundTruthRecord {
        GroundTruthRecord {
            jurisdiction: jur(),
            feature: FeatureType::Roads,
            exists: spec.is_some(),
            spec,
        }
    }

    fn tip(v: f64) -> SetbackSpec {
        SetbackSpec::multiplier(SetbackKind::TipHeightMultiplier, v)
    }

    #[test]
    fn cells() {
        let nf = OrdinanceRecord::not_found(jur(), FeatureType::Roads, String::new());
        assert_eq!(
            classify_pair(&nf, &truth(None)).unwrap(),
            Cell::TrueNegative
        );
        assert_eq!(
            classify_pair(&nf, &truth(Some(tip(1.1)))).unwrap(),
            Cell::FalseNegative
        );
        assert_eq!(
            classify_pair(&found(tip(1.5)), &truth(Some(tip(1.1)))).unwrap(),
            Cell::IncorrectTp
        );
        assert_eq!(
            classify_pair(&found(tip(1.1)), &truth(Some(tip(1.1)))).unwrap(),
            Cell::CorrectTp
        );
        assert_eq!(
            classify_pair(&found(tip(1.1)), &truth(None)).unwrap(),
            Cell::FalsePositive
        );
        let metric = found(SetbackSpec::fixed(1250.0 / FEET_PER_METER, Unit::Meters));
        let t = truth(Some(SetbackSpec::fixed(1250.0, Unit::Feet)));
        assert_eq!(classify_pair(&metric, &t).unwrap(), Cell::CorrectTp);
        let rounded = found(SetbackSpec::fixed(381.0, Unit::Meters));
        assert_eq!(classify_pair(&rounded, &t).unwrap(), Cell::CorrectTp);
        let off = found(SetbackSpec::fixed(380.0, Unit::Meters));
        assert_eq!(classify_pair(&off, &t).unwrap(), Cell::IncorrectTp);
    }

    #[test]
    fn mismatched_pair_is_an_error() {
        let mut t = truth(None);
        t.feature = FeatureType::Noise;
        let nf = OrdinanceRecord::not_found(jur(), FeatureType::Roads, String::new());
        assert!(classify_pair(&nf, &t).is_err());
    }

    #[test]
    fn multi_condition_as_unordered_set() {
        let a = SetbackSpec::multi(
            Combinator::Lesser,
            vec![SetbackSpec::fixed(1250.0, Unit::Feet), tip(3.1)],
        );
        let b = SetbackSpec::multi(
            Combinator::Lesser,
            vec![tip(3.1), SetbackSpec::fixed(1250.0, Unit::Feet)],
        );
        assert!(specs_equivalent(&a, &b));
        let mut c = b.clone();
        c.combinator = Some(Combinator::Greater);
        assert!(!specs_equivalent(&a, &c));
        let d = SetbackSpec::multi(Combinator::Lesser, vec![tip(3.1), tip(3.1)]);
        assert!(!specs_equivalent(&a, &d));
    }

    #[test]
    fn metric_examples() {
        let small = metrics(&ConfusionCounts::new(61, 11, 20, 2, 140));
        assert!((small.accuracy.unwrap() - 201.0 / 234.0).abs() < 1e-12);
        assert!((small.precision.unwrap() - 61.0 / 63.0).abs() < 1e-12);
        assert!((small.recall.unwrap() - 61.0 / 81.0).abs() < 1e-12);
        let degenerate = metrics(&ConfusionCounts::new(0, 0, 0, 0, 10));
        assert_eq!(degenerate.accuracy, Some(1.0));
        assert_eq!((degenerate.precision, degenerate.recall), (None, None));
        assert_eq!(metrics(&ConfusionCounts::default()).accuracy, None);
        assert_eq!(percent_of(61, 234), "26%");
    }

    proptest! {
        #[test]
        fn metrics_scale_invariant(
            c in (0u64..500, 0u64..500, 0u64..500, 0u64..500, 0u64..500),
            k in 1u64..50,
        ) {
            let base = ConfusionCounts::new(c.0, c.1, c.2, c.3, c.4);
            let scaled = ConfusionCounts::new(c.0 * k, c.1 * k, c.2 * k, c.3 * k, c.4 * k);
            let (a, b) = (metrics(&base), metrics(&scaled));
            for (x, y) in [(a.accuracy, b.accuracy), (a.precision, b.precision), (a.recall, b.recall)] {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false, "definedness changed"),
                }
            }
        }

        #[test]
        fn unit_representation_never_changes_cell(
            v in 1.0f64..5000.0,
            other in prop_oneof![Just(1.0f64), 1.01f64..3.0, 0.3f64..0.99],
            convert_truth in prop::bool::ANY,
            exists in prop::bool::ANY,
        ) {
            let feet = SetbackSpec::fixed(v, Unit::Feet);
            let extracted = SetbackSpec::fixed(v * other, Unit::Feet);
            let to_m = |s: &SetbackSpec| SetbackSpec::fixed(s.value / FEET_PER_METER, Unit::Meters);
            let t = truth(exists.then(|| feet.clone()));
            let before = classify_pair(&found(extracted.clone()), &t).unwrap();
            let after = if convert_truth {
                classify_pair(&found(extracted), &truth(exists.then(|| to_m(&feet)))).unwrap()
            } else {
                classify_pair(&found(to_m(&extracted)), &t).unwrap()
            };
            prop_assert_eq!(before, after);
        }
    }
}
