use std::collections::BTreeMap;

use super::statement::{
    format_number, parse_multiplier_statement, parse_setback_statement, parse_value_statement,
};
use super::trees::{self, build_wind_tree_with, KIND_BINDING};
use super::{
    FeatureType, OrdinanceRecord, RecordStatus, ReferenceTurbine, ReviewContext, ReviewReason,
    SetbackKind, SetbackSpec,
};
use crate::distill::DistilledText;
use crate::gateway::{cache_key, ChatBackend, Conversation, GenerationParams, Role};
use crate::ingest::Jurisdiction;
use crate::par::map_bounded;
use crate::tree::{self, ConversationGraph, RunError, RunOutcome};

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub params: GenerationParams,
    pub turbine: ReferenceTurbine,
    pub workers: usize,
    /// Replacement trees by feature; others use the built-in tree.
    pub trees: BTreeMap<FeatureType, ConversationGraph>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            params: GenerationParams::default(),
            turbine: ReferenceTurbine::default(),
            workers: 4,
            trees: BTreeMap::new(),
        }
    }
}

impl ExtractConfig {
    pub fn tree_for(&self, feature: FeatureType) -> ConversationGraph {
        self.trees
            .get(&feature)
            .cloned()
            .unwrap_or_else(|| build_wind_tree_with(feature, &self.turbine))
    }
}

/// Run the decision tree for every feature over the distilled text.
///
/// Empty text yields `not_found` for every feature without calling the
/// backend. Features run concurrently; the result follows `features` order.
pub fn extract_ordinances(
    distilled: &DistilledText,
    features: &[FeatureType],
    backend: &dyn ChatBackend,
    cfg: &ExtractConfig,
) -> Vec<OrdinanceRecord> {
    if distilled.is_empty() {
        return features
            .iter()
            .map(|&f| OrdinanceRecord::not_found(distilled.jurisdiction.clone(), f, String::new()))
            .collect();
    }
    map_bounded(features, cfg.workers, |&feature| {
        let graph = cfg.tree_for(feature);
        let outcome = tree::run(&graph, &distilled.combined, feature, backend, &cfg.params);
        record_from_run(
            &distilled.jurisdiction,
            feature,
            outcome,
            &distilled.combined,
            cfg,
        )
    })
}

/// Digest of the last request sent in `transcript`.
fn final_request_ref(transcript: &Conversation, params: &GenerationParams) -> String {
    let mut request = transcript.clone();
    if request.last().is_some_and(|m| m.role == Role::Assistant) {
        request.messages.pop();
    }
    if request.last_user().is_none() {
        return String::new();
    }
    cache_key(&request, params)
}

/// Turn a tree run into a record.
pub fn record_from_run(
    jurisdiction: &Jurisdiction,
    feature: FeatureType,
    outcome: Result<RunOutcome, RunError>,
    source_text: &str,
    cfg: &ExtractConfig,
) -> OrdinanceRecord {
    let review = |reason, transcript: &Conversation, node, prompt, response, detail: String| {
        OrdinanceRecord::needs_review(
            jurisdiction.clone(),
            feature,
            final_request_ref(transcript, &cfg.params),
            ReviewContext {
                reason,
                node_id: node,
                prompt,
                response,
                detail: Some(detail).filter(|d| !d.is_empty()),
                transcript: transcript.clone(),
            },
        )
    };

    let leaf = match outcome {
        Err(RunError::Backend {
            node,
            source,
            transcript,
        }) => {
            return review(
                ReviewReason::BackendError,
                &transcript,
                Some(node.to_string()),
                None,
                None,
                source.to_string(),
            )
        }
        Err(e) => {
            return review(
                ReviewReason::InvalidTree,
                &Conversation::new(),
                None,
                None,
                None,
                e.to_string(),
            )
        }
        Ok(RunOutcome::NoMatch(nm)) => {
            return review(
                ReviewReason::NoMatch,
                &nm.transcript,
                Some(nm.node_id.to_string()),
                Some(nm.prompt),
                Some(nm.response),
                String::new(),
            )
        }
        Ok(RunOutcome::Leaf(leaf)) => leaf,
    };

    let transcript_ref = final_request_ref(&leaf.transcript, &cfg.params);
    let leaf_review = |reason, detail: String| {
        review(
            reason,
            &leaf.transcript,
            Some(leaf.leaf_id.to_string()),
            None,
            Some(leaf.final_response.clone()),
            detail,
        )
    };
    let kind = leaf
        .bindings
        .get(KIND_BINDING)
        .map(|k| k.parse::<SetbackKind>());

    let spec = match leaf.leaf_id.as_str() {
        trees::LEAF_NOT_FOUND => {
            return OrdinanceRecord::not_found(jurisdiction.clone(), feature, transcript_ref)
        }
        trees::LEAF_REVIEW_NONE => return leaf_review(ReviewReason::NoneOfTheAbove, String::new()),
        trees::LEAF_REVIEW_SMALL => {
            return leaf_review(ReviewReason::SmallSystemsOnly, String::new())
        }
        trees::LEAF_SETBACK => match (kind, parse_setback_statement(&leaf.final_response)) {
            (_, Err(e)) => return leaf_review(ReviewReason::UnparseableAnswer, e.to_string()),
            (Some(Ok(SetbackKind::FixedDistance)), Ok((v, u))) => SetbackSpec::fixed(v, u),
            (Some(Ok(SetbackKind::MultiCondition)), Ok((v, u))) => {
                SetbackSpec::resolved_multi(v, u)
            }
            (other, Ok(_)) => return leaf_review(ReviewReason::UnknownKind, format!("{other:?}")),
        },
        trees::LEAF_MULTIPLIER => match (kind, parse_multiplier_statement(&leaf.final_response)) {
            (_, Err(e)) => return leaf_review(ReviewReason::UnparseableAnswer, e.to_string()),
            (Some(Ok(k)), Ok(v)) if k.is_multiplier() => SetbackSpec::multiplier(k, v),
            (other, Ok(_)) => return leaf_review(ReviewReason::UnknownKind, format!("{other:?}")),
        },
        trees::LEAF_VALUE => match parse_value_statement(&leaf.final_response) {
            Err(e) => return leaf_review(ReviewReason::UnparseableAnswer, e.to_string()),
            Ok((v, u)) => SetbackSpec::fixed(v, u),
        },
        other => return leaf_review(ReviewReason::UnknownLeaf, other.to_string()),
    };

    if let Some(u) = spec.unit {
        if !feature.accepts_unit(u) {
            return leaf_review(ReviewReason::UnitMismatch, format!("{u} for {feature}"));
        }
    }
    let effective = spec.effective_setback(&cfg.turbine);
    OrdinanceRecord {
        jurisdiction: jurisdiction.clone(),
        feature,
        status: RecordStatus::Found,
        source_excerpt: locate_source(source_text, spec.value),
        spec: Some(spec),
        effective_setback_ft: effective,
        transcript_ref,
        review: None,
    }
}

/// The first paragraph of `text` that mentions `value`, as written with or
/// without thousands separators.
pub fn locate_source(text: &str, value: f64) -> String {
    let grouped = format_number(value);
    let plain = grouped.replace(',', "");
    let mentions = |p: &str| {
        [grouped.as_str(), plain.as_str()].iter().any(|needle| {
            p.match_indices(needle).any(|(at, _)| {
                let before = p[..at].chars().next_back();
                let after = p[at + needle.len()..].chars().next();
                !before.is_some_and(|c| c.is_ascii_digit() || c == '.' || c == ',')
                    && !after.is_some_and(|c| c.is_ascii_digit())
            })
        })
    };
    text.split("\n\n")
        .map(str::trim)
        .find(|p| mentions(p))
        .map(|p| p.chars().take(2000).collect())
        .unwrap_or_default()
}
