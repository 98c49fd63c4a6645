//! Built-in decision trees, one per feature.
//!
//! Setback features:
//!
//! ```text
//! presence --yes--> classify --#1.1--------------------------------> final_setback
//!    |                 |------#2.1..#5.1-----------------------------> final_multiplier
//!    no                |------#7.1--> multi_distances --> multi_select --> final_setback
//!    v                 |------#9----> review_small_systems
//! not_found            '------#0----> review_none_of_above
//! ```
//!
//! Value features (noise, height, lot size, flicker, density) use the same
//! shape with a single `final_value` leaf and a `value_select` node.

use super::{FeatureType, ReferenceTurbine, SetbackKind};
use crate::tree::{Condition, ConversationGraph, GraphBuilder};

pub const NODE_PRESENCE: &str = "presence";
pub const NODE_CLASSIFY: &str = "classify";
pub const NODE_MULTI_DISTANCES: &str = "multi_distances";
pub const NODE_MULTI_SELECT: &str = "multi_select";
pub const NODE_VALUE_SELECT: &str = "value_select";

pub const LEAF_NOT_FOUND: &str = "not_found";
pub const LEAF_REVIEW_NONE: &str = "review_none_of_above";
pub const LEAF_REVIEW_SMALL: &str = "review_small_systems";
pub const LEAF_SETBACK: &str = "final_setback";
pub const LEAF_MULTIPLIER: &str = "final_multiplier";
pub const LEAF_VALUE: &str = "final_value";

/// Binding holding the classified [`SetbackKind`].
pub const KIND_BINDING: &str = "kind";

pub const SYSTEM_PROMPT: &str = "You are extracting wind energy siting rules from a county \
ordinance. Answer using only the ordinance text below. Consider only large or utility-scale \
wind energy systems; ignore rules that apply only to small, residential, or non-commercial \
systems.\n\n\"\"\"\n{text}\n\"\"\"";

const YES: &str = r"(?i)^\W*yes\b";
const NO: &str = r"(?i)^\W*no\b";

fn regex(pattern: &str) -> Condition {
    Condition::regex(pattern).expect("built-in pattern compiles")
}

/// The literal `{` and `}` in generated prompts must be escaped for templates.
fn escape(s: &str) -> String {
    s.replace('{', "{{").replace('}', "}}")
}

pub fn presence_prompt(feature: FeatureType) -> String {
    if feature.is_setback() {
        format!(
            "Is there text in the legal document that describes how close i can site or how far \
i have to setback wind energy systems to {}? Please only say \"Yes\" or \"No\".",
            feature.description()
        )
    } else {
        format!(
            "Is there text in the legal document that sets a limit on {}? Please only say \"Yes\" \
or \"No\".",
            feature.description()
        )
    }
}

pub fn classification_prompt(feature: FeatureType) -> String {
    let s = feature.subject();
    if feature.is_setback() {
        format!(
            "Based on your last message, choose the option that best describes the required \
setback from {desc}:\n\n\
- #1.1 The setback from {s} is a single distance value\n\
- #2.1 The setback from {s} is a multiple of the total system height (the maximum blade tip height)\n\
- #3.1 The setback from {s} is a multiple of the hub height\n\
- #4.1 The setback from {s} is a multiple of the rotor diameter\n\
- #5.1 The setback from {s} is a multiple of the hub height plus the rotor diameter\n\
- #7.1 The setback from {s} has multiple conditions such as a fixed distance and a multiple of the total system height\n\
- #9 The setback from {s} is only defined for small or non-commercial wind energy systems\n\
- #0 None of the above options are descriptive of this ordinance related to setbacks from {s}",
            desc = feature.description()
        )
    } else {
        let cap = {
            let mut c = s.chars();
            c.next()
                .map(|f| f.to_uppercase().chain(c).collect::<String>())
                .unwrap_or_default()
        };
        format!(
            "Based on your last message, choose the option that best describes {desc}:\n\n\
- #1.1 {cap} is a single value\n\
- #7.1 {cap} has multiple values or conditions, such as different limits for different situations\n\
- #9 {cap} is only defined for small or non-commercial wind energy systems\n\
- #0 None of the above options are descriptive of this ordinance related to {s}",
            desc = feature.description()
        )
    }
}

pub fn multi_distances_prompt(turbine: &ReferenceTurbine) -> String {
    format!(
        "Lets assume the supporting tower is {} feet with blades {} feet long. So the rotor \
diameter would be {} feet and the total system height would be {} feet. What would the multiple \
setback distances be? Please show your work.",
        turbine.hub_height_ft,
        turbine.blade_length_ft,
        turbine.rotor_diameter_ft(),
        turbine.tip_height_ft()
    )
}

pub const MULTI_SELECT_PROMPT: &str = "What is the final setback value? If the ordinance states \
which of the multiple distances should be chosen, use that guidance. Otherwise, choose the \
largest setback value.";

pub const VALUE_SELECT_PROMPT: &str = "What is the final value? If the ordinance states which of \
the multiple values should be chosen, use that guidance. Otherwise, choose the most restrictive \
value.";

pub const SETBACK_FORMAT_PROMPT: &str =
    "State the final setback like this: \"The setback is XXX (units)\"";
pub const MULTIPLIER_FORMAT_PROMPT: &str =
    "State the multiplier like this: \"The multiplier is XXX\"";
pub const VALUE_FORMAT_PROMPT: &str =
    "State the final value like this: \"The value is XXX (units)\"";

/// The tree for `feature` with the default reference turbine.
pub fn build_wind_tree(feature: FeatureType) -> ConversationGraph {
    build_wind_tree_with(feature, &ReferenceTurbine::default())
}

pub fn build_wind_tree_with(feature: FeatureType, turbine: &ReferenceTurbine) -> ConversationGraph {
    let b = ConversationGraph::builder()
        .system(SYSTEM_PROMPT)
        .node(NODE_PRESENCE, escape(&presence_prompt(feature)))
        .node(NODE_CLASSIFY, escape(&classification_prompt(feature)))
        .silent_node(LEAF_NOT_FOUND)
        .edge(NODE_PRESENCE, regex(YES), NODE_CLASSIFY)
        .edge(NODE_PRESENCE, regex(NO), LEAF_NOT_FOUND);
    let b = if feature.is_setback() {
        setback_branches(b, turbine)
    } else {
        value_branches(b)
    };
    b.silent_node(LEAF_REVIEW_SMALL)
        .silent_node(LEAF_REVIEW_NONE)
        .edge(NODE_CLASSIFY, Condition::option("9"), LEAF_REVIEW_SMALL)
        .edge(NODE_CLASSIFY, Condition::option("0"), LEAF_REVIEW_NONE)
        .build()
}

fn bind(kind: SetbackKind) -> [(&'static str, &'static str); 1] {
    [(KIND_BINDING, kind.as_str())]
}

fn setback_branches(b: GraphBuilder, turbine: &ReferenceTurbine) -> GraphBuilder {
    let mut b = b
        .node(
            NODE_MULTI_DISTANCES,
            escape(&multi_distances_prompt(turbine)),
        )
        .node(NODE_MULTI_SELECT, MULTI_SELECT_PROMPT)
        .node(LEAF_SETBACK, SETBACK_FORMAT_PROMPT)
        .node(LEAF_MULTIPLIER, MULTIPLIER_FORMAT_PROMPT)
        .edge_binding(
            NODE_CLASSIFY,
            Condition::option("1.1"),
            LEAF_SETBACK,
            &bind(SetbackKind::FixedDistance),
        );
    for (option, kind) in [
        ("2.1", SetbackKind::TipHeightMultiplier),
        ("3.1", SetbackKind::HubHeightMultiplier),
        ("4.1", SetbackKind::RotorDiameterMultiplier),
        ("5.1", SetbackKind::HubPlusRotorMultiplier),
    ] {
        b = b.edge_binding(
            NODE_CLASSIFY,
            Condition::option(option),
            LEAF_MULTIPLIER,
            &bind(kind),
        );
    }
    b.edge_binding(
        NODE_CLASSIFY,
        Condition::option("7.1"),
        NODE_MULTI_DISTANCES,
        &bind(SetbackKind::MultiCondition),
    )
    .edge(NODE_MULTI_DISTANCES, Condition::Always, NODE_MULTI_SELECT)
    .edge(NODE_MULTI_SELECT, Condition::Always, LEAF_SETBACK)
}

fn value_branches(b: GraphBuilder) -> GraphBuilder {
    let fixed = bind(SetbackKind::FixedDistance);
    b.node(NODE_VALUE_SELECT, VALUE_SELECT_PROMPT)
        .node(LEAF_VALUE, VALUE_FORMAT_PROMPT)
        .edge_binding(NODE_CLASSIFY, Condition::option("1.1"), LEAF_VALUE, &fixed)
        .edge_binding(
            NODE_CLASSIFY,
            Condition::option("7.1"),
            NODE_VALUE_SELECT,
            &fixed,
        )
        .edge(NODE_VALUE_SELECT, Condition::Always, LEAF_VALUE)
}
