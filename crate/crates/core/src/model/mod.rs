//! Process models as typed graphs, BPMN 2.0 XML ingestion and the structural
//! metrics derived from the graph.

mod metrics;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{
    extract_metrics, extractor_names, normalize_metric, ExtractError, GraphStats, RawMetricValue,
};
pub use parse::{parse_model, ParseError, ParseWarning, ParsedModel};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    StartEvent,
    EndEvent,
    IntermediateEvent,
    Task,
    SubProcess,
    GatewayXor,
    GatewayAnd,
    GatewayOr,
    DataObject,
    Pool,
    Lane,
    /// Construct outside the supported subset, kept under its element name.
    Generic(String),
}

impl NodeKind {
    /// Nodes that take part in the control flow (everything except data
    /// objects, pools and lanes).
    pub fn is_flow_node(&self) -> bool {
        !matches!(self, NodeKind::DataObject | NodeKind::Pool | NodeKind::Lane)
    }

    pub fn is_gateway(&self) -> bool {
        matches!(self, NodeKind::GatewayXor | NodeKind::GatewayAnd | NodeKind::GatewayOr)
    }

    pub fn is_event(&self) -> bool {
        matches!(
            self,
            NodeKind::StartEvent | NodeKind::EndEvent | NodeKind::IntermediateEvent
        )
    }

    /// Nodes expected to carry a label: activities and events.
    pub fn is_labelable(&self) -> bool {
        self.is_event() || matches!(self, NodeKind::Task | NodeKind::SubProcess)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::StartEvent => f.write_str("start-event"),
            NodeKind::EndEvent => f.write_str("end-event"),
            NodeKind::IntermediateEvent => f.write_str("intermediate-event"),
            NodeKind::Task => f.write_str("task"),
            NodeKind::SubProcess => f.write_str("sub-process"),
            NodeKind::GatewayXor => f.write_str("gateway-xor"),
            NodeKind::GatewayAnd => f.write_str("gateway-and"),
            NodeKind::GatewayOr => f.write_str("gateway-or"),
            NodeKind::DataObject => f.write_str("data-object"),
            NodeKind::Pool => f.write_str("pool"),
            NodeKind::Lane => f.write_str("lane"),
            NodeKind::Generic(tag) => write!(f, "generic({tag})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub label: String,
    /// Enclosing sub-process, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind, label: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            kind,
            label: label.into(),
            parent: None,
            lane: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Sequence,
    Message,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        kind: EdgeKind,
    ) -> Self {
        Edge {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            kind,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge `{edge}` references missing node `{node}`")]
    DanglingEdge { edge: String, node: String },
    #[error("node `{node}` has unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
}

/// A process model as nodes and typed edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModelGraph {
    pub language: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl ProcessModelGraph {
    /// Builds a graph, checking that node ids are unique and every edge and
    /// parent reference resolves.
    pub fn new(language: impl Into<String>, nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let graph = ProcessModelGraph {
            language: language.into(),
            nodes,
            edges,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(GraphError::DuplicateNode(n.id.clone()));
            }
        }
        for n in &self.nodes {
            if let Some(p) = &n.parent {
                if !ids.contains(p.as_str()) {
                    return Err(GraphError::UnknownParent {
                        node: n.id.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }
        for e in &self.edges {
            for end in [&e.source, &e.target] {
                if !ids.contains(end.as_str()) {
                    return Err(GraphError::DanglingEdge {
                        edge: e.id.clone(),
                        node: end.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn count_nodes(&self, kind: &NodeKind) -> usize {
        self.nodes.iter().filter(|n| &n.kind == kind).count()
    }

    pub fn count_edges(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}
