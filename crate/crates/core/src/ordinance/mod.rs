//! Wind siting ordinance data model, setback arithmetic, answer parsing and
//! the per-feature decision trees.

mod extract;
mod feature;
mod setback;
pub mod statement;
pub mod trees;

use serde::{Deserialize, Serialize};

use crate::gateway::Conversation;
use crate::ingest::Jurisdiction;

pub use extract::{extract_ordinances, locate_source, record_from_run, ExtractConfig};
pub use feature::{FeatureType, UnknownFeature};
pub use setback::{
    effective_setback, Combinator, ReferenceTurbine, SetbackKind, SetbackSpec, SpecError, Unit,
    FEET_PER_METER,
};
pub use statement::{parse_multiplier_statement, parse_setback_statement, parse_value_statement};
pub use trees::{build_wind_tree, build_wind_tree_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Found,
    NotFound,
    NeedsReview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewReason {
    /// No edge condition held for the model's reply.
    NoMatch,
    NoneOfTheAbove,
    SmallSystemsOnly,
    UnparseableAnswer,
    UnitMismatch,
    UnknownKind,
    UnknownLeaf,
    BackendError,
    InvalidTree,
}

/// Why a record was deferred to a person, with the conversation that led there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewContext {
    pub reason: ReviewReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub transcript: Conversation,
}

/// One extracted ordinance value for a (jurisdiction, feature) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinanceRecord {
    pub jurisdiction: Jurisdiction,
    pub feature: FeatureType,
    pub status: RecordStatus,
    pub spec: Option<SetbackSpec>,
    /// Distance in feet for the reference turbine; `None` for non-length values.
    pub effective_setback_ft: Option<f64>,
    pub source_excerpt: String,
    /// Cache digest of the last request of the conversation; empty if none was sent.
    pub transcript_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review: Option<ReviewContext>,
}

impl OrdinanceRecord {
    pub fn not_found(
        jurisdiction: Jurisdiction,
        feature: FeatureType,
        transcript_ref: String,
    ) -> Self {
        Self {
            jurisdiction,
            feature,
            status: RecordStatus::NotFound,
            spec: None,
            effective_setback_ft: None,
            source_excerpt: String::new(),
            transcript_ref,
            review: None,
        }
    }

    pub fn needs_review(
        jurisdiction: Jurisdiction,
        feature: FeatureType,
        transcript_ref: String,
        review: ReviewContext,
    ) -> Self {
        Self {
            jurisdiction,
            feature,
            status: RecordStatus::NeedsReview,
            spec: None,
            effective_setback_ft: None,
            source_excerpt: String::new(),
            transcript_ref,
            review: Some(review),
        }
    }

    /// Check the record invariants.
    pub fn validate(&self, turbine: &ReferenceTurbine) -> Result<(), String> {
        match (self.status, &self.spec) {
            (RecordStatus::Found, None) => return Err("found record without spec".into()),
            (RecordStatus::Found, Some(spec)) => {
                spec.validate().map_err(|e| e.to_string())?;
                let expected = spec.effective_setback(turbine);
                let consistent = match (expected, self.effective_setback_ft) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(b.abs()),
                    (None, None) => true,
                    _ => false,
                };
                if !consistent {
                    return Err(format!(
                        "effective setback {:?} disagrees with spec ({expected:?})",
                        self.effective_setback_ft
                    ));
                }
            }
            (_, Some(_)) => return Err(format!("{:?} record carries a spec", self.status)),
            (_, None) => {}
        }
        if (self.status == RecordStatus::NeedsReview) != self.review.is_some() {
            return Err("review context present iff needs_review".into());
        }
        Ok(())
    }
}
