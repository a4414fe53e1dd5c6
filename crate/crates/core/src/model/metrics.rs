use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EdgeKind, NodeKind, ProcessModelGraph};
use crate::ett::{EvaluationTheoryTree, MetricSource, NormalizationSpec, Polarity};

/// Structural counts of a graph, computed in one pass over nodes and edges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub gateway_count: usize,
    pub max_degree: usize,
    pub avg_connector_degree: f64,
    pub nesting_depth: usize,
    pub or_gateway_count: usize,
    pub start_event_count: usize,
    pub end_event_count: usize,
    pub intermediate_event_count: usize,
    pub task_count: usize,
    pub subprocess_count: usize,
    pub data_object_count: usize,
    pub participant_count: usize,
    pub message_flow_count: usize,
    pub unlabeled_node_ratio: f64,
    pub block_structured: bool,
}

#[derive(Default, Clone, Copy)]
struct Degree {
    incoming: usize,
    outgoing: usize,
}

impl GraphStats {
    pub fn of(graph: &ProcessModelGraph) -> Self {
        let mut s = GraphStats::default();
        let mut degrees: BTreeMap<&str, Degree> = BTreeMap::new();
        for e in &graph.edges {
            match e.kind {
                EdgeKind::Sequence => {
                    s.edge_count += 1;
                    degrees.entry(e.source.as_str()).or_default().outgoing += 1;
                    degrees.entry(e.target.as_str()).or_default().incoming += 1;
                }
                EdgeKind::Message => s.message_flow_count += 1,
                EdgeKind::Data => {}
            }
        }

        let parents: BTreeMap<&str, Option<&str>> = graph
            .nodes
            .iter()
            .map(|n| (n.id.as_str(), n.parent.as_deref()))
            .collect();

        let mut labelable = 0usize;
        let mut unlabeled = 0usize;
        let mut gateway_degree_sum = 0usize;
        // (splits, joins) per gateway kind
        let mut balance: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
        let mut mixed = false;

        for n in &graph.nodes {
            let deg = degrees.get(n.id.as_str()).copied().unwrap_or_default();
            let total = deg.incoming + deg.outgoing;
            if n.kind.is_flow_node() {
                s.node_count += 1;
                s.max_degree = s.max_degree.max(total);
            }
            if n.kind.is_labelable() {
                labelable += 1;
                if n.label.trim().is_empty() {
                    unlabeled += 1;
                }
            }
            let gateway_key = match n.kind {
                NodeKind::StartEvent => {
                    s.start_event_count += 1;
                    None
                }
                NodeKind::EndEvent => {
                    s.end_event_count += 1;
                    None
                }
                NodeKind::IntermediateEvent => {
                    s.intermediate_event_count += 1;
                    None
                }
                NodeKind::Task => {
                    s.task_count += 1;
                    None
                }
                NodeKind::SubProcess => {
                    s.subprocess_count += 1;
                    None
                }
                NodeKind::GatewayXor => Some(0),
                NodeKind::GatewayAnd => Some(1),
                NodeKind::GatewayOr => {
                    s.or_gateway_count += 1;
                    Some(2)
                }
                NodeKind::DataObject => {
                    s.data_object_count += 1;
                    None
                }
                NodeKind::Pool | NodeKind::Lane => {
                    s.participant_count += 1;
                    None
                }
                NodeKind::Generic(_) => None,
            };
            if let Some(key) = gateway_key {
                s.gateway_count += 1;
                gateway_degree_sum += total;
                let entry = balance.entry(key).or_default();
                let split = deg.outgoing > 1;
                let join = deg.incoming > 1;
                if split && join {
                    mixed = true;
                }
                if split {
                    entry.0 += 1;
                }
                if join {
                    entry.1 += 1;
                }
            }
            let mut depth = 0;
            let mut cursor = n.parent.as_deref();
            while let Some(p) = cursor {
                depth += 1;
                if depth > graph.nodes.len() {
                    break;
                }
                cursor = parents.get(p).copied().flatten();
            }
            s.nesting_depth = s.nesting_depth.max(depth);
        }

        if s.gateway_count > 0 {
            s.avg_connector_degree = gateway_degree_sum as f64 / s.gateway_count as f64;
        }
        if labelable > 0 {
            s.unlabeled_node_ratio = unlabeled as f64 / labelable as f64;
        }
        s.block_structured = !mixed && balance.values().all(|(splits, joins)| splits == joins);
        s
    }

    /// Value of a named extractor, `None` if the name is unknown.
    pub fn get(&self, extractor: &str) -> Option<f64> {
        Some(match extractor {
            "node_count" => self.node_count as f64,
            "edge_count" => self.edge_count as f64,
            "gateway_count" => self.gateway_count as f64,
            "max_degree" => self.max_degree as f64,
            "avg_connector_degree" => self.avg_connector_degree,
            "nesting_depth" => self.nesting_depth as f64,
            "or_gateway_count" => self.or_gateway_count as f64,
            "start_event_count" => self.start_event_count as f64,
            "end_event_count" => self.end_event_count as f64,
            "intermediate_event_count" => self.intermediate_event_count as f64,
            "task_count" => self.task_count as f64,
            "subprocess_count" => self.subprocess_count as f64,
            "data_object_count" => self.data_object_count as f64,
            "participant_count" => self.participant_count as f64,
            "message_flow_count" => self.message_flow_count as f64,
            "unlabeled_node_ratio" => self.unlabeled_node_ratio,
            "block_structured" => {
                if self.block_structured {
                    1.0
                } else {
                    0.0
                }
            }
            _ => return None,
        })
    }
}

/// Names accepted by [`GraphStats::get`].
pub fn extractor_names() -> &'static [&'static str] {
    &[
        "node_count",
        "edge_count",
        "gateway_count",
        "max_degree",
        "avg_connector_degree",
        "nesting_depth",
        "or_gateway_count",
        "start_event_count",
        "end_event_count",
        "intermediate_event_count",
        "task_count",
        "subprocess_count",
        "data_object_count",
        "participant_count",
        "message_flow_count",
        "unlabeled_node_ratio",
        "block_structured",
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMetricValue {
    pub metric_id: String,
    pub value: f64,
    pub source: MetricSource,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("unextractable metric(s): {}", .0.join(", "))]
    Unextractable(Vec<String>),
}

/// Computes every model-derived metric of the tree from the graph, in tree
/// order. Metrics whose extractor is missing or unknown are reported together.
pub fn extract_metrics(
    graph: &ProcessModelGraph,
    tree: &EvaluationTheoryTree,
) -> Result<Vec<RawMetricValue>, ExtractError> {
    let stats = GraphStats::of(graph);
    let mut values = Vec::new();
    let mut missing = Vec::new();
    for (_, metric) in tree.metrics() {
        if metric.source != MetricSource::ModelDerived {
            continue;
        }
        match metric.extractor.as_deref().and_then(|x| stats.get(x)) {
            Some(value) => values.push(RawMetricValue {
                metric_id: metric.id.clone(),
                value,
                source: MetricSource::ModelDerived,
            }),
            None => missing.push(metric.id.clone()),
        }
    }
    if missing.is_empty() {
        Ok(values)
    } else {
        Err(ExtractError::Unextractable(missing))
    }
}

/// Maps a raw value onto [1, 10] and applies the metric's polarity.
pub fn normalize_metric(value: f64, spec: NormalizationSpec, polarity: Polarity) -> f64 {
    if value.is_nan() {
        return 1.0;
    }
    let score = match spec {
        NormalizationSpec::Identity => value.clamp(1.0, 10.0),
        NormalizationSpec::LinearClamp { lo, hi } => 1.0 + 9.0 * unit(value, lo, hi),
        NormalizationSpec::InverseLinearClamp { lo, hi } => 10.0 - 9.0 * unit(value, lo, hi),
        NormalizationSpec::Boolean => {
            if value != 0.0 {
                10.0
            } else {
                1.0
            }
        }
    };
    match polarity {
        Polarity::HigherIsBetter => score,
        Polarity::LowerIsBetter => 11.0 - score,
    }
}

fn unit(value: f64, lo: f64, hi: f64) -> f64 {
    ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
}
