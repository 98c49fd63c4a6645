use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{render_template, validate, ConversationGraph, NodeId, Violation};
use crate::gateway::{ChatBackend, ChatMessage, Conversation, GatewayError, GenerationParams};
use crate::ordinance::FeatureType;

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct RunState {
    /// Document text the conversation is about.
    pub text: String,
    pub feature: FeatureType,
    pub conversation: Conversation,
    /// Write-once values recorded along the path.
    pub bindings: BTreeMap<String, String>,
}

impl RunState {
    pub fn new(text: impl Into<String>, feature: FeatureType, conversation: Conversation) -> Self {
        Self {
            text: text.into(),
            feature,
            conversation,
            bindings: BTreeMap::new(),
        }
    }

    fn bind(&mut self, key: &str, value: &str, node: &NodeId) -> Result<(), RunError> {
        match self.bindings.get(key) {
            Some(existing) if existing != value => Err(RunError::BindingConflict {
                key: key.to_string(),
                node: node.clone(),
            }),
            Some(_) => Ok(()),
            None => {
                self.bindings.insert(key.to_string(), value.to_string());
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafResult {
    pub leaf_id: NodeId,
    pub final_response: String,
    pub bindings: BTreeMap<String, String>,
    pub transcript: Conversation,
    /// Nodes visited, root first, leaf last.
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoMatch {
    pub node_id: NodeId,
    pub prompt: String,
    pub response: String,
    pub bindings: BTreeMap<String, String>,
    pub transcript: Conversation,
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunOutcome {
    Leaf(LeafResult),
    NoMatch(NoMatch),
}

impl RunOutcome {
    pub fn path(&self) -> &[NodeId] {
        match self {
            RunOutcome::Leaf(l) => &l.path,
            RunOutcome::NoMatch(n) => &n.path,
        }
    }
}

/// The full conversation of a finished run, system preamble included.
pub fn transcript(outcome: &RunOutcome) -> &Conversation {
    match outcome {
        RunOutcome::Leaf(l) => &l.transcript,
        RunOutcome::NoMatch(n) => &n.transcript,
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RunError {
    #[error("graph is invalid: {}", join(.0))]
    InvalidGraph(Vec<Violation>),
    #[error("backend failed at node {node}: {source}")]
    Backend {
        node: NodeId,
        source: GatewayError,
        transcript: Conversation,
    },
    #[error("binding {key:?} written twice with different values at node {node}")]
    BindingConflict { key: String, node: NodeId },
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Walk `graph` from its root.
///
/// Each prompting node appends its prompt as a user message and the reply as
/// an assistant message. Outgoing edges are tested in declaration order and
/// the first that holds is followed. A leaf with a prompt asks it and its
/// reply is the final response; a leaf without one returns the reply that
/// led to it. A non-leaf without a prompt routes on the inbound reply.
pub fn run(
    graph: &ConversationGraph,
    text: &str,
    feature: FeatureType,
    backend: &dyn ChatBackend,
    params: &GenerationParams,
) -> Result<RunOutcome, RunError> {
    let violations = validate(graph);
    if !violations.is_empty() {
        return Err(RunError::InvalidGraph(violations));
    }

    let mut state = RunState::new(text, feature, Conversation::new());
    if let Some(system) = &graph.system {
        state.conversation = Conversation::with_system(render_template(system, &state));
    }

    let mut current = graph.root.clone().expect("validated graph has a root");
    let mut path = Vec::new();
    let mut last_prompt = String::new();
    let mut last_response = String::new();

    loop {
        path.push(current.clone());
        let node = graph
            .node(&current)
            .expect("validated graph has every node");

        if let Some(prompt) = &node.prompt {
            last_prompt = prompt.build(&state);
            state.conversation.push_user(last_prompt.clone());
            let reply = backend
                .complete(&state.conversation, params)
                .map_err(|source| RunError::Backend {
                    node: current.clone(),
                    source,
                    transcript: state.conversation.clone(),
                })?;
            last_response = reply.content.clone();
            state.conversation.push(if reply.content.is_empty() {
                ChatMessage::error_placeholder()
            } else {
                reply
            });
            if let Some(key) = &node.capture {
                state.bind(key, &last_response, &current)?;
            }
        }

        if graph.is_leaf(&current) {
            return Ok(RunOutcome::Leaf(LeafResult {
                leaf_id: current,
                final_response: last_response,
                bindings: state.bindings,
                transcript: state.conversation,
                path,
            }));
        }

        let taken = graph
            .edges_from(&current)
            .find(|e| e.condition.holds(&last_response, &state))
            .cloned();
        match taken {
            Some(edge) => {
                for (k, v) in &edge.binds {
                    state.bind(k, v, &current)?;
                }
                current = edge.destination;
            }
            None => {
                return Ok(RunOutcome::NoMatch(NoMatch {
                    node_id: current,
                    prompt: last_prompt,
                    response: last_response,
                    bindings: state.bindings,
                    transcript: state.conversation,
                    path,
                }))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Role, ScriptedBackend};
    use crate::tree::Condition;

    fn params() -> GenerationParams {
        GenerationParams::default()
    }

    fn three_node() -> ConversationGraph {
        ConversationGraph::builder()
            .node("root", "Q")
            .node("l1", "Q1")
            .node("l2", "Q2")
            .edge("root", Condition::contains("Yes"), "l1")
            .edge("root", Condition::contains("No"), "l2")
            .build()
    }

    #[test]
    fn single_node_tree() {
        let g = ConversationGraph::builder().node("only", "P").build();
        let b = ScriptedBackend::keyed().on("P", "R");
        let out = run(&g, "", FeatureType::Roads, &b, &params()).unwrap();
        let RunOutcome::Leaf(leaf) = &out else {
            panic!("expected leaf")
        };
        assert_eq!(leaf.final_response, "R");
        assert_eq!(transcript(&out).len(), 2);
    }

    #[test]
    fn yes_no_branch_hand_trace() {
        // root asks Q -> "No" -> second edge -> l2 asks Q2 -> leaf reply
        let b = ScriptedBackend::keyed().on("Q", "No").on("Q2", "done");
        let out = run(&three_node(), "", FeatureType::Roads, &b, &params()).unwrap();
        let RunOutcome::Leaf(leaf) = out else {
            panic!("expected leaf")
        };
        assert_eq!(leaf.leaf_id, NodeId::new("l2"));
        assert_eq!(leaf.transcript.len(), 4);
        assert_eq!(leaf.final_response, "done");
        assert_eq!(leaf.path, vec![NodeId::new("root"), NodeId::new("l2")]);
    }

    #[test]
    fn first_declared_edge_wins() {
        // "Yes, no doubt" satisfies both edges
        let b = ScriptedBackend::keyed()
            .on("Q", "Yes, no doubt")
            .on("Q1", "one");
        let out = run(&three_node(), "", FeatureType::Roads, &b, &params()).unwrap();
        let RunOutcome::Leaf(leaf) = out else {
            panic!("expected leaf")
        };
        assert_eq!(leaf.leaf_id, NodeId::new("l1"));
    }

    #[test]
    fn no_match_captures_context() {
        let b = ScriptedBackend::keyed().on("Q", "Maybe");
        let out = run(&three_node(), "", FeatureType::Roads, &b, &params()).unwrap();
        let RunOutcome::NoMatch(nm) = &out else {
            panic!("expected no match")
        };
        assert_eq!(nm.node_id, NodeId::new("root"));
        assert_eq!(nm.prompt, "Q");
        assert_eq!(nm.response, "Maybe");
        let last = transcript(&out).last().unwrap();
        assert_eq!(
            (last.role, last.content.as_str()),
            (Role::Assistant, "Maybe")
        );
    }

    #[test]
    fn promptless_leaf_returns_inbound_reply() {
        let g = ConversationGraph::builder()
            .node("q", "Q")
            .silent_node("end")
            .edge("q", Condition::Always, "end")
            .build();
        let b = ScriptedBackend::keyed().on("Q", "inbound");
        let RunOutcome::Leaf(leaf) = run(&g, "", FeatureType::Roads, &b, &params()).unwrap() else {
            panic!("expected leaf")
        };
        assert_eq!(leaf.final_response, "inbound");
        assert_eq!(leaf.transcript.len(), 2);
    }

    #[test]
    fn system_template_and_bindings() {
        let g = ConversationGraph::builder()
            .system("Document:\n{text}")
            .capturing_node("q", "Q", "answer")
            .node("end", "Kind {binding:kind}, answer {binding:answer}")
            .edge_binding("q", Condition::Always, "end", &[("kind", "fixed")])
            .build();
        let b = ScriptedBackend::keyed()
            .on("Q", "A")
            .on("Kind fixed, answer A", "ok");
        let RunOutcome::Leaf(leaf) = run(&g, "ORD", FeatureType::Roads, &b, &params()).unwrap()
        else {
            panic!("expected leaf")
        };
        assert_eq!(leaf.transcript.messages[0].content, "Document:\nORD");
        assert_eq!(leaf.transcript.len(), 5);
        assert_eq!(leaf.bindings["kind"], "fixed");
        assert_eq!(leaf.bindings["answer"], "A");
    }

    #[test]
    fn backend_error_is_not_no_match() {
        let b = ScriptedBackend::keyed();
        let err = run(&three_node(), "", FeatureType::Roads, &b, &params()).unwrap_err();
        assert!(matches!(
            err,
            RunError::Backend {
                source: GatewayError::NoScriptMatch { .. },
                ..
            }
        ));
    }

    #[test]
    fn invalid_graph_refused() {
        let g = ConversationGraph::builder()
            .node("a", "p")
            .edge("a", Condition::Always, "a")
            .build();
        let b = ScriptedBackend::keyed();
        assert!(matches!(
            run(&g, "", FeatureType::Roads, &b, &params()),
            Err(RunError::InvalidGraph(_))
        ));
        assert_eq!(b.calls(), 0);
    }

    #[test]
    fn conflicting_binding_is_an_error() {
        let g = ConversationGraph::builder()
            .node("a", "A")
            .node("b", "B")
            .node("c", "C")
            .edge_binding("a", Condition::Always, "b", &[("k", "1")])
            .edge_binding("b", Condition::Always, "c", &[("k", "2")])
            .build();
        let b = ScriptedBackend::keyed()
            .on("A", "x")
            .on("B", "y")
            .on("C", "z");
        assert!(matches!(
            run(&g, "", FeatureType::Roads, &b, &params()),
            Err(RunError::BindingConflict { .. })
        ));
    }
}
