//! TOML tree definitions.
//!
//! ```toml
//! root = "presence"
//! system = "Answer using only this text:\n{text}"
//!
//! [[nodes]]
//! id = "presence"
//! prompt = "Does the text regulate {feature}? Please only say \"Yes\" or \"No\"."
//!
//! [[nodes]]
//! id = "done"            # no prompt: returns the reply that led here
//!
//! [[edges]]
//! from = "presence"
//! to = "done"
//! condition = "contains" # contains | option | regex | always
//! argument = "yes"
//! label = "yes"          # optional
//! bind = { answer = "yes" }
//! ```
//!
//! Edge priority is the order of `[[edges]]` entries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Condition, ConversationGraph, Edge, Node, NodeId, Prompt};

#[derive(Debug, thiserror::Error)]
pub enum TreeFileError {
    #[error("tree file parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("tree serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("edge {from} -> {to}: {detail}")]
    BadCondition {
        from: String,
        to: String,
        detail: String,
    },
    #[error("{0} cannot be written to a tree file")]
    NotSerializable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDef {
    pub root: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default)]
    pub nodes: Vec<NodeDef>,
    #[serde(default)]
    pub edges: Vec<EdgeDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDef {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDef {
    pub from: String,
    pub to: String,
    pub condition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argument: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bind: BTreeMap<String, String>,
}

impl EdgeDef {
    fn condition(&self) -> Result<Condition, TreeFileError> {
        let bad = |detail: String| TreeFileError::BadCondition {
            from: self.from.clone(),
            to: self.to.clone(),
            detail,
        };
        let arg = || {
            self.argument
                .clone()
                .ok_or_else(|| bad(format!("condition {:?} needs an argument", self.condition)))
        };
        match self.condition.as_str() {
            "contains" => Ok(Condition::contains(arg()?)),
            "option" => Ok(Condition::option(arg()?)),
            "regex" => Condition::regex(&arg()?).map_err(|e| bad(e.to_string())),
            "always" => Ok(Condition::Always),
            other => Err(bad(format!("unknown condition kind {other:?}"))),
        }
    }
}

impl GraphDef {
    pub fn to_graph(&self) -> Result<ConversationGraph, TreeFileError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: NodeId::new(&n.id),
                prompt: n.prompt.clone().map(Prompt::Template),
                capture: n.capture.clone(),
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let condition = e.condition()?;
                Ok(Edge {
                    source: NodeId::new(&e.from),
                    destination: NodeId::new(&e.to),
                    label: e.label.clone().unwrap_or_else(|| condition.describe()),
                    condition,
                    binds: e.bind.clone(),
                })
            })
            .collect::<Result<_, TreeFileError>>()?;
        Ok(ConversationGraph {
            nodes,
            edges,
            root: self.root.as_deref().map(NodeId::new),
            system: self.system.clone(),
        })
    }

    pub fn from_graph(graph: &ConversationGraph) -> Result<Self, TreeFileError> {
        let nodes = graph
            .nodes
            .iter()
            .map(|n| {
                let prompt = match &n.prompt {
                    None => None,
                    Some(Prompt::Template(t)) => Some(t.clone()),
                    Some(Prompt::Custom { name, .. }) => {
                        return Err(TreeFileError::NotSerializable(format!(
                            "custom prompt {name:?} on node {}",
                            n.id
                        )))
                    }
                };
                Ok(NodeDef {
                    id: n.id.as_str().to_string(),
                    prompt,
                    capture: n.capture.clone(),
                })
            })
            .collect::<Result<_, TreeFileError>>()?;
        let edges = graph
            .edges
            .iter()
            .map(|e| {
                let (kind, argument) = match &e.condition {
                    Condition::Contains(k) => ("contains", Some(k.clone())),
                    Condition::NumberedOption(n) => ("option", Some(n.clone())),
                    Condition::Regex(re) => ("regex", Some(re.as_str().to_string())),
                    Condition::Always => ("always", None),
                    Condition::Custom { name, .. } => {
                        return Err(TreeFileError::NotSerializable(format!(
                            "custom condition {name:?} on edge {} -> {}",
                            e.source, e.destination
                        )))
                    }
                };
                Ok(EdgeDef {
                    from: e.source.as_str().to_string(),
                    to: e.destination.as_str().to_string(),
                    condition: kind.to_string(),
                    argument,
                    label: Some(e.label.clone()),
                    bind: e.binds.clone(),
                })
            })
            .collect::<Result<_, TreeFileError>>()?;
        Ok(Self {
            root: graph.root.as_ref().map(|r| r.as_str().to_string()),
            system: graph.system.clone(),
            nodes,
            edges,
        })
    }
}

impl ConversationGraph {
    pub fn from_toml(text: &str) -> Result<Self, TreeFileError> {
        toml::from_str::<GraphDef>(text)?.to_graph()
    }

    pub fn to_toml(&self) -> Result<String, TreeFileError> {
        Ok(toml::to_string_pretty(&GraphDef::from_graph(self)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = r#"
root = "presence"
system = "Text:\n{text}"

[[nodes]]
id = "presence"
prompt = "Is {feature} regulated? Please only say \"Yes\" or \"No\"."

[[nodes]]
id = "kind"
prompt = "Pick one:\n- #1.1 single\n- #0 none"
capture = "kind_answer"

[[nodes]]
id = "none"

[[edges]]
from = "presence"
to = "kind"
condition = "regex"
argument = '(?i)^\W*yes\b'

[[edges]]
from = "kind"
to = "none"
condition = "option"
argument = "0"
bind = { kind = "unknown" }
"#;

    #[test]
    fn parse_sample() {
        let g = ConversationGraph::from_toml(SAMPLE).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.root, Some(NodeId::new("presence")));
        assert!(g.node(&NodeId::new("none")).unwrap().prompt.is_none());
        assert_eq!(g.edges[1].condition, Condition::option("0"));
        assert_eq!(g.edges[1].binds["kind"], "unknown");
        assert!(crate::tree::validate(&g).is_empty());
    }

    #[test]
    fn bad_conditions_rejected() {
        let missing_arg = SAMPLE.replace("argument = \"0\"\n", "");
        assert!(matches!(
            ConversationGraph::from_toml(&missing_arg),
            Err(TreeFileError::BadCondition { .. })
        ));
        let unknown = SAMPLE.replace("condition = \"option\"", "condition = \"fuzzy\"");
        assert!(ConversationGraph::from_toml(&unknown).is_err());
        let bad_regex = SAMPLE.replace(r"(?i)^\W*yes\b", "(unclosed");
        assert!(ConversationGraph::from_toml(&bad_regex).is_err());
        assert!(ConversationGraph::from_toml("root = 'a'\nbogus = 1").is_err());
    }

    #[test]
    fn custom_parts_not_serializable() {
        let g = ConversationGraph::builder()
            .custom_node("a", "dyn", |_| "x".into())
            .build();
        assert!(matches!(
            g.to_toml(),
            Err(TreeFileError::NotSerializable(_))
        ));
    }

    fn arb_def() -> impl Strategy<Value = GraphDef> {
        let text = "[ -~\n]{0,24}";
        let ident = "[a-z][a-z0-9_]{0,6}";
        let node = (ident, prop::option::of(text), prop::option::of(ident)).prop_map(
            |(id, prompt, capture)| NodeDef {
                id,
                prompt,
                capture,
            },
        );
        let cond = prop_oneof![
            text.prop_map(|a| ("contains".to_string(), Some(a))),
            "[0-9](\\.[0-9])?".prop_map(|a| ("option".to_string(), Some(a))),
            "[a-z]{1,5}".prop_map(|a| ("regex".to_string(), Some(a))),
            Just(("always".to_string(), None)),
        ];
        let edge = (
            ident,
            ident,
            cond,
            prop::option::of(text),
            prop::collection::btree_map(ident, text, 0..3),
        )
            .prop_map(|(from, to, (condition, argument), label, bind)| EdgeDef {
                from,
                to,
                condition,
                argument,
                label,
                bind,
            });
        (
            prop::option::of(ident),
            prop::option::of(text),
            prop::collection::vec(node, 0..6),
            prop::collection::vec(edge, 0..8),
        )
            .prop_map(|(root, system, nodes, edges)| GraphDef {
                root,
                system,
                nodes,
                edges,
            })
    }

    proptest! {
        #[test]
        fn parse_serialize_parse_is_identity(def in arb_def()) {
            let text = toml::to_string_pretty(&def).unwrap();
            let graph = ConversationGraph::from_toml(&text).unwrap();
            let once = graph.to_toml().unwrap();
            let again = ConversationGraph::from_toml(&once).unwrap().to_toml().unwrap();
            prop_assert_eq!(&once, &again);
            let reparsed: GraphDef = toml::from_str(&once).unwrap();
            prop_assert_eq!(reparsed, GraphDef::from_graph(&graph).unwrap());
        }
    }
}
