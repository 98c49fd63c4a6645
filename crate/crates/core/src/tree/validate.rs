use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConversationGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    MissingRoot,
    UnknownRoot {
        root: NodeId,
    },
    DuplicateNode {
        node: NodeId,
    },
    SelfLoop {
        node: NodeId,
    },
    DanglingEdge {
        source: NodeId,
        destination: NodeId,
        missing: NodeId,
    },
    /// Members of one strongly connected component, in declaration order.
    Cycle {
        nodes: Vec<NodeId>,
    },
    RootHasIncoming {
        root: NodeId,
        from: NodeId,
    },
    Unreachable {
        node: NodeId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRoot => write!(f, "graph has no root"),
            Violation::UnknownRoot { root } => write!(f, "root {root} is not a node"),
            Violation::DuplicateNode { node } => write!(f, "duplicate node id {node}"),
            Violation::SelfLoop { node } => write!(f, "self-loop on {node}"),
            Violation::DanglingEdge {
                source,
                destination,
                missing,
            } => write!(
                f,
                "edge {source} -> {destination} references missing node {missing}"
            ),
            Violation::Cycle { nodes } => {
                let names: Vec<_> = nodes.iter().map(NodeId::as_str).collect();
                write!(f, "cycle through {}", names.join(", "))
            }
            Violation::RootHasIncoming { root, from } => {
                write!(f, "root {root} has an incoming edge from {from}")
            }
            Violation::Unreachable { node } => write!(f, "{node} is unreachable from the root"),
        }
    }
}

/// Every structural problem in `graph`; empty means the graph is runnable.
pub fn validate(graph: &ConversationGraph) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut index: HashMap<&NodeId, usize> = HashMap::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        if index.insert(&node.id, i).is_some() {
            out.push(Violation::DuplicateNode {
                node: node.id.clone(),
            });
        }
    }

    let root = match &graph.root {
        None => {
            out.push(Violation::MissingRoot);
            None
        }
        Some(r) if !index.contains_key(r) => {
            out.push(Violation::UnknownRoot { root: r.clone() });
            None
        }
        Some(r) => Some(r),
    };

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for edge in &graph.edges {
        let missing = [&edge.source, &edge.destination]
            .into_iter()
            .find(|id| !index.contains_key(id));
        if let Some(missing) = missing {
            out.push(Violation::DanglingEdge {
                source: edge.source.clone(),
                destination: edge.destination.clone(),
                missing: missing.clone(),
            });
            continue;
        }
        if edge.source == edge.destination {
            out.push(Violation::SelfLoop {
                node: edge.source.clone(),
            });
            continue;
        }
        if Some(&edge.destination) == root {
            out.push(Violation::RootHasIncoming {
                root: edge.destination.clone(),
                from: edge.source.clone(),
            });
        }
        adjacency[index[&edge.source]].push(index[&edge.destination]);
    }

    for mut component in strongly_connected(&adjacency) {
        if component.len() > 1 {
            component.sort_unstable();
            out.push(Violation::Cycle {
                nodes: component
                    .into_iter()
                    .map(|i| graph.nodes[i].id.clone())
                    .collect(),
            });
        }
    }

    if let Some(root) = root {
        let start = index[root];
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in &adjacency[n] {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        for (i, node) in graph.nodes.iter().enumerate() {
            if !seen.contains(&i) && index[&node.id] == i {
                out.push(Violation::Unreachable {
                    node: node.id.clone(),
                });
            }
        }
    }
    out
}

/// Tarjan's algorithm; components come out in reverse topological order.
fn strongly_connected(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct Tarjan<'a> {
        adjacency: &'a [Vec<usize>],
        next: usize,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        components: Vec<Vec<usize>>,
    }

    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.index[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            for i in 0..self.adjacency[v].len() {
                let w = self.adjacency[v][i];
                match self.index[w] {
                    None => {
                        self.visit(w);
                        self.low[v] = self.low[v].min(self.low[w]);
                    }
                    Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                    Some(_) => {}
                }
            }
            if Some(self.low[v]) == self.index[v] {
                let mut component = Vec::new();
                loop {
                    let w = self.stack.pop().expect("tarjan stack underflow");
                    self.on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                self.components.push(component);
            }
        }
    }

    let n = adjacency.len();
    let mut t = Tarjan {
        adjacency,
        next: 0,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        components: Vec::new(),
    };
    for v in 0..n {
        if t.index[v].is_none() {
            t.visit(v);
        }
    }
    t.components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Condition;

    fn id(s: &str) -> NodeId {
        NodeId::new(s)
    }

    #[test]
    fn chain_is_valid() {
        let g = ConversationGraph::builder()
            .node("root", "p")
            .node("b", "p")
            .node("c", "p")
            .edge("root", Condition::Always, "b")
            .edge("b", Condition::Always, "c")
            .build();
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn self_loop() {
        let g = ConversationGraph::builder()
            .node("a", "p")
            .node("b", "p")
            .edge("a", Condition::contains("x"), "a")
            .edge("a", Condition::Always, "b")
            .build();
        assert_eq!(validate(&g), vec![Violation::SelfLoop { node: id("a") }]);
    }

    #[test]
    fn cycle_below_root() {
        let g = ConversationGraph::builder()
            .node("r", "p")
            .node("a", "p")
            .node("b", "p")
            .edge("r", Condition::Always, "a")
            .edge("a", Condition::Always, "b")
            .edge("b", Condition::Always, "a")
            .build();
        assert_eq!(
            validate(&g),
            vec![Violation::Cycle {
                nodes: vec![id("a"), id("b")]
            }]
        );
    }

    #[test]
    fn unreachable_node() {
        let g = ConversationGraph::builder()
            .node("r", "p")
            .node("b", "p")
            .node("c", "p")
            .node("d", "p")
            .edge("r", Condition::contains("x"), "b")
            .edge("r", Condition::Always, "c")
            .edge("d", Condition::Always, "c")
            .build();
        assert_eq!(validate(&g), vec![Violation::Unreachable { node: id("d") }]);
    }

    #[test]
    fn structural_errors() {
        let mut g = ConversationGraph::builder()
            .node("r", "p")
            .node("r", "p")
            .edge("r", Condition::Always, "ghost")
            .build();
        assert_eq!(
            validate(&g),
            vec![
                Violation::DuplicateNode { node: id("r") },
                Violation::DanglingEdge {
                    source: id("r"),
                    destination: id("ghost"),
                    missing: id("ghost")
                },
            ]
        );
        g.root = None;
        assert!(validate(&g).contains(&Violation::MissingRoot));
        g.root = Some(id("nope"));
        assert!(validate(&g).contains(&Violation::UnknownRoot { root: id("nope") }));
    }

    #[test]
    fn root_with_incoming_edge() {
        let g = ConversationGraph::builder()
            .node("r", "p")
            .node("a", "p")
            .edge("r", Condition::Always, "a")
            .edge("a", Condition::Always, "r")
            .build();
        let v = validate(&g);
        assert!(v.contains(&Violation::RootHasIncoming {
            root: id("r"),
            from: id("a")
        }));
        assert!(v.contains(&Violation::Cycle {
            nodes: vec![id("r"), id("a")]
        }));
    }
}
