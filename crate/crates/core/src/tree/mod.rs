//! Decision-tree conversations.
//!
//! A [`ConversationGraph`] is a DAG whose nodes carry prompts and whose
//! edges carry conditions on the model's reply. [`run`] starts at the root,
//! asks each node's prompt, follows the first edge (in declaration order)
//! whose condition holds, and stops at a leaf. If no edge matches, the run
//! ends in [`RunOutcome::NoMatch`] with the prompt, node and reply.

mod condition;
mod file;
mod run;
mod template;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use condition::Condition;
pub use file::{EdgeDef, GraphDef, NodeDef, TreeFileError};
pub use run::{run, transcript, LeafResult, NoMatch, RunError, RunOutcome, RunState};
pub use template::render_template;
pub use validate::{validate, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

pub type PromptFn = Arc<dyn Fn(&RunState) -> String + Send + Sync>;

/// How a node builds its user message.
#[derive(Clone)]
pub enum Prompt {
    /// Text with `{text}`, `{feature}` and `{binding:NAME}` placeholders.
    Template(String),
    /// Arbitrary builder; graphs using it cannot be written to a file.
    Custom { name: String, build: PromptFn },
}

impl Prompt {
    pub fn build(&self, state: &RunState) -> String {
        match self {
            Prompt::Template(t) => render_template(t, state),
            Prompt::Custom { build, .. } => build(state),
        }
    }
}

impl fmt::Debug for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prompt::Template(t) => f.debug_tuple("Template").field(t).finish(),
            Prompt::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    /// Leaves may omit the prompt; they then return the reply that led to them.
    pub prompt: Option<Prompt>,
    /// Binding key under which this node's reply is recorded.
    pub capture: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub source: NodeId,
    pub destination: NodeId,
    pub condition: Condition,
    pub label: String,
    /// Bindings written when this edge is taken.
    pub binds: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default)]
pub struct ConversationGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub root: Option<NodeId>,
    /// System message template sent ahead of the first prompt.
    pub system: Option<String>,
}

impl ConversationGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    /// Outgoing edges of `id` in declaration order.
    pub fn edges_from<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| &e.source == id)
    }

    pub fn is_leaf(&self, id: &NodeId) -> bool {
        self.edges_from(id).next().is_none()
    }
}

/// Incremental graph construction. The first node added becomes the root
/// unless [`GraphBuilder::root`] says otherwise.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    graph: ConversationGraph,
}

impl GraphBuilder {
    pub fn system(mut self, template: impl Into<String>) -> Self {
        self.graph.system = Some(template.into());
        self
    }

    pub fn root(mut self, id: impl Into<NodeId>) -> Self {
        self.graph.root = Some(id.into());
        self
    }

    fn push_node(mut self, id: NodeId, prompt: Option<Prompt>, capture: Option<String>) -> Self {
        if self.graph.root.is_none() {
            self.graph.root = Some(id.clone());
        }
        self.graph.nodes.push(Node {
            id,
            prompt,
            capture,
        });
        self
    }

    pub fn node(self, id: impl Into<NodeId>, prompt: impl Into<String>) -> Self {
        self.push_node(id.into(), Some(Prompt::Template(prompt.into())), None)
    }

    /// A node whose reply is stored under `key` in the run bindings.
    pub fn capturing_node(
        self,
        id: impl Into<NodeId>,
        prompt: impl Into<String>,
        key: impl Into<String>,
    ) -> Self {
        self.push_node(
            id.into(),
            Some(Prompt::Template(prompt.into())),
            Some(key.into()),
        )
    }

    pub fn custom_node(
        self,
        id: impl Into<NodeId>,
        name: impl Into<String>,
        build: impl Fn(&RunState) -> String + Send + Sync + 'static,
    ) -> Self {
        let prompt = Prompt::Custom {
            name: name.into(),
            build: Arc::new(build),
        };
        self.push_node(id.into(), Some(prompt), None)
    }

    /// A node without a prompt (a terminal that returns the inbound reply).
    pub fn silent_node(self, id: impl Into<NodeId>) -> Self {
        self.push_node(id.into(), None, None)
    }

    pub fn edge(
        self,
        source: impl Into<NodeId>,
        condition: Condition,
        destination: impl Into<NodeId>,
    ) -> Self {
        self.edge_binding(source, condition, destination, &[])
    }

    pub fn edge_binding(
        mut self,
        source: impl Into<NodeId>,
        condition: Condition,
        destination: impl Into<NodeId>,
        binds: &[(&str, &str)],
    ) -> Self {
        let label = condition.describe();
        self.graph.edges.push(Edge {
            source: source.into(),
            destination: destination.into(),
            condition,
            label,
            binds: binds
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        });
        self
    }

    pub fn build(self) -> ConversationGraph {
        self.graph
    }
}
