use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Edge, EdgeKind, Node, NodeKind, ProcessModelGraph};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed XML: {message}")]
    Malformed { line: usize, message: String },
    #[error("document contains no process element")]
    NoProcess,
    #[error("line {line}: `{element}` is missing attribute `{attribute}`")]
    MissingAttribute {
        line: usize,
        element: String,
        attribute: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: `{element}` references unknown element `{reference}`")]
    DanglingReference {
        line: usize,
        element: String,
        reference: String,
    },
}

/// Construct that was skipped or downgraded during parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub element: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedModel {
    pub graph: ProcessModelGraph,
    pub warnings: Vec<ParseWarning>,
}

fn flow_node_kind(tag: &str) -> Option<NodeKind> {
    Some(match tag {
        "startEvent" => NodeKind::StartEvent,
        "endEvent" => NodeKind::EndEvent,
        "intermediateCatchEvent" | "intermediateThrowEvent" | "boundaryEvent" => {
            NodeKind::IntermediateEvent
        }
        "task" | "userTask" | "serviceTask" | "scriptTask" | "manualTask" | "businessRuleTask"
        | "sendTask" | "receiveTask" | "callActivity" => NodeKind::Task,
        "subProcess" | "transaction" | "adHocSubProcess" => NodeKind::SubProcess,
        "exclusiveGateway" => NodeKind::GatewayXor,
        "parallelGateway" => NodeKind::GatewayAnd,
        "inclusiveGateway" => NodeKind::GatewayOr,
        "dataObjectReference" | "dataStoreReference" => NodeKind::DataObject,
        _ => return None,
    })
}

/// Children of a process or sub-process that carry no structure of their own.
const STRUCTURAL_NOISE: &[&str] = &[
    "dataObject",
    "incoming",
    "outgoing",
    "documentation",
    "extensionElements",
    "ioSpecification",
    "property",
    "auditing",
    "monitoring",
    "standardLoopCharacteristics",
    "multiInstanceLoopCharacteristics",
    "completionCondition",
    "supportedInterfaceRef",
    "ioBinding",
    "correlationSubscription",
];

const ARTIFACTS: &[&str] = &["textAnnotation", "association", "group"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum RefField {
    Source,
    Target,
    FlowNode(String),
}

#[derive(Debug)]
enum Frame {
    Other,
    Skip,
    /// Process or sub-process body; holds the id of the sub-process, if any.
    Container(Option<String>),
    FlowNode(String),
    Association,
    Lane(String),
    Collaboration,
    Ref(RefField),
}

#[derive(Debug)]
struct PendingAssociation {
    line: usize,
    id: String,
    owner: String,
    input: bool,
    sources: Vec<String>,
    target: Option<String>,
}

struct Builder {
    nodes: Vec<Node>,
    node_lines: BTreeMap<String, usize>,
    edges: Vec<(Edge, usize, String)>,
    associations: Vec<PendingAssociation>,
    lane_refs: Vec<(String, String)>,
    warnings: Vec<ParseWarning>,
    processes: usize,
    text: String,
}

impl Builder {
    fn add_node(&mut self, node: Node, line: usize) -> Result<(), ParseError> {
        if self.node_lines.contains_key(&node.id) {
            return Err(ParseError::DuplicateId { line, id: node.id });
        }
        self.node_lines.insert(node.id.clone(), line);
        self.nodes.push(node);
        Ok(())
    }

    fn warn(&mut self, line: usize, element: &str, message: impl Into<String>) {
        self.warnings.push(ParseWarning {
            line,
            element: element.to_string(),
            message: message.into(),
        });
    }
}

fn line_of(starts: &[usize], offset: usize) -> usize {
    match starts.binary_search(&offset) {
        Ok(i) => i + 1,
        Err(i) => i,
    }
}

fn attr(e: &BytesStart<'_>, name: &str, line: usize) -> Result<Option<String>, ParseError> {
    for a in e.attributes() {
        let a = a.map_err(|err| ParseError::Malformed {
            line,
            message: err.to_string(),
        })?;
        if a.key.local_name().as_ref() == name.as_bytes() {
            let v = a.unescape_value().map_err(|err| ParseError::Malformed {
                line,
                message: err.to_string(),
            })?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, tag: &str, name: &str, line: usize) -> Result<String, ParseError> {
    attr(e, name, line)?.ok_or_else(|| ParseError::MissingAttribute {
        line,
        element: tag.to_string(),
        attribute: name.to_string(),
    })
}

/// Parses a BPMN 2.0 XML document into a graph.
///
/// Elements are matched by local name, so any namespace prefix is accepted.
/// Every `process` in the document contributes to one graph; participants
/// become pools and message flows connect across them.
pub fn parse_model(xml: &str, language: &str) -> Result<ParsedModel, ParseError> {
    let mut starts = vec![0usize];
    starts.extend(xml.match_indices('\n').map(|(i, _)| i + 1));

    let mut reader = Reader::from_str(xml);
    let config = reader.config_mut();
    config.expand_empty_elements = true;
    config.check_end_names = true;

    let mut b = Builder {
        nodes: Vec::new(),
        node_lines: BTreeMap::new(),
        edges: Vec::new(),
        associations: Vec::new(),
        lane_refs: Vec::new(),
        warnings: Vec::new(),
        processes: 0,
        text: String::new(),
    };
    let mut stack: Vec<Frame> = Vec::new();

    loop {
        let offset = reader.buffer_position() as usize;
        let line = line_of(&starts, offset);
        let event = reader.read_event().map_err(|err| ParseError::Malformed {
            line: line_of(&starts, reader.error_position() as usize),
            message: err.to_string(),
        })?;
        match event {
            Event::Start(e) => {
                let tag = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let frame = open(&mut b, stack.last(), &tag, &e, line)?;
                stack.push(frame);
            }
            Event::End(_) => {
                let frame = stack.pop().ok_or_else(|| ParseError::Malformed {
                    line,
                    message: "unexpected closing tag".into(),
                })?;
                close(&mut b, frame);
            }
            Event::Text(t) => {
                if matches!(stack.last(), Some(Frame::Ref(_))) {
                    let s = t.decode().map_err(|err| ParseError::Malformed {
                        line,
                        message: err.to_string(),
                    })?;
                    b.text.push_str(&s);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(ParseError::Malformed {
            line: starts.len(),
            message: "unexpected end of document: unclosed elements".into(),
        });
    }
    if b.processes == 0 {
        return Err(ParseError::NoProcess);
    }
    finish(b, language)
}

fn open(
    b: &mut Builder,
    parent: Option<&Frame>,
    tag: &str,
    e: &BytesStart<'_>,
    line: usize,
) -> Result<Frame, ParseError> {
    let frame = match parent {
        None | Some(Frame::Other) => match tag {
            "process" => {
                b.processes += 1;
                Frame::Container(None)
            }
            "collaboration" => Frame::Collaboration,
            _ => Frame::Other,
        },
        Some(Frame::Skip) | Some(Frame::Ref(_)) => Frame::Skip,
        Some(Frame::Collaboration) => match tag {
            "participant" => {
                let id = required(e, tag, "id", line)?;
                let name = attr(e, "name", line)?.unwrap_or_default();
                b.add_node(Node::new(id, NodeKind::Pool, name), line)?;
                Frame::Skip
            }
            "messageFlow" => {
                let id = required(e, tag, "id", line)?;
                let s = required(e, tag, "sourceRef", line)?;
                let t = required(e, tag, "targetRef", line)?;
                b.edges
                    .push((Edge::new(id, s, t, EdgeKind::Message), line, tag.to_string()));
                Frame::Skip
            }
            _ => Frame::Skip,
        },
        Some(Frame::Container(sub)) => {
            let sub = sub.clone();
            open_in_container(b, sub, tag, e, line)?
        }
        Some(Frame::FlowNode(owner)) => {
            let owner = owner.clone();
            match tag {
                "dataInputAssociation" | "dataOutputAssociation" => {
                    open_association(b, &owner, tag, e, line)?
                }
                _ => Frame::Skip,
            }
        }
        Some(Frame::Association) => match tag {
            "sourceRef" => {
                b.text.clear();
                Frame::Ref(RefField::Source)
            }
            "targetRef" => {
                b.text.clear();
                Frame::Ref(RefField::Target)
            }
            _ => Frame::Skip,
        },
        Some(Frame::Lane(lane)) => match tag {
            "flowNodeRef" => {
                b.text.clear();
                Frame::Ref(RefField::FlowNode(lane.clone()))
            }
            "childLaneSet" => Frame::Lane(lane.clone()),
            "lane" => open_lane(b, e, line)?,
            _ => Frame::Skip,
        },
    };
    Ok(frame)
}

fn open_lane(b: &mut Builder, e: &BytesStart<'_>, line: usize) -> Result<Frame, ParseError> {
    let id = required(e, "lane", "id", line)?;
    let name = attr(e, "name", line)?.unwrap_or_default();
    b.add_node(Node::new(id.clone(), NodeKind::Lane, name), line)?;
    Ok(Frame::Lane(id))
}

fn open_association(
    b: &mut Builder,
    owner: &str,
    tag: &str,
    e: &BytesStart<'_>,
    line: usize,
) -> Result<Frame, ParseError> {
    let input = tag == "dataInputAssociation";
    let id = match attr(e, "id", line)? {
        Some(id) => id,
        None => format!("{owner}#{}{}", if input { "in" } else { "out" }, b.associations.len()),
    };
    b.associations.push(PendingAssociation {
        line,
        id,
        owner: owner.to_string(),
        input,
        sources: Vec::new(),
        target: None,
    });
    Ok(Frame::Association)
}

fn open_in_container(
    b: &mut Builder,
    sub: Option<String>,
    tag: &str,
    e: &BytesStart<'_>,
    line: usize,
) -> Result<Frame, ParseError> {
    if let Some(kind) = flow_node_kind(tag) {
        let id = required(e, tag, "id", line)?;
        let name = attr(e, "name", line)?.unwrap_or_default();
        let mut node = Node::new(id.clone(), kind.clone(), name);
        node.parent = sub;
        b.add_node(node, line)?;
        return Ok(match kind {
            NodeKind::SubProcess => Frame::Container(Some(id)),
            NodeKind::DataObject => Frame::Skip,
            _ => Frame::FlowNode(id),
        });
    }
    match tag {
        "sequenceFlow" => {
            let id = required(e, tag, "id", line)?;
            let s = required(e, tag, "sourceRef", line)?;
            let t = required(e, tag, "targetRef", line)?;
            b.edges
                .push((Edge::new(id, s, t, EdgeKind::Sequence), line, tag.to_string()));
            Ok(Frame::Skip)
        }
        "laneSet" => Ok(Frame::Lane(String::new())),
        "dataInputAssociation" | "dataOutputAssociation" => match sub {
            Some(owner) => open_association(b, &owner, tag, e, line),
            None => {
                b.warn(line, tag, "data association outside an activity ignored");
                Ok(Frame::Skip)
            }
        },
        t if STRUCTURAL_NOISE.contains(&t) => Ok(Frame::Skip),
        t if ARTIFACTS.contains(&t) => {
            b.warn(line, tag, "artifact ignored");
            Ok(Frame::Skip)
        }
        _ => match attr(e, "id", line)? {
            Some(id) => {
                let name = attr(e, "name", line)?.unwrap_or_default();
                let mut node = Node::new(id.clone(), NodeKind::Generic(tag.to_string()), name);
                node.parent = sub;
                b.add_node(node, line)?;
                b.warn(line, tag, "unsupported construct kept as a generic node");
                Ok(Frame::FlowNode(id))
            }
            None => {
                b.warn(line, tag, "unsupported element without id ignored");
                Ok(Frame::Skip)
            }
        },
    }
}

fn close(b: &mut Builder, frame: Frame) {
    if let Frame::Ref(field) = frame {
        let value = b.text.trim().to_string();
        b.text.clear();
        if value.is_empty() {
            return;
        }
        match field {
            RefField::FlowNode(lane) => b.lane_refs.push((lane, value)),
            RefField::Source => {
                if let Some(a) = b.associations.last_mut() {
                    a.sources.push(value);
                }
            }
            RefField::Target => {
                if let Some(a) = b.associations.last_mut() {
                    a.target = Some(value);
                }
            }
        }
    }
}

fn finish(mut b: Builder, language: &str) -> Result<ParsedModel, ParseError> {
    let associations = std::mem::take(&mut b.associations);
    for a in associations {
        if a.input {
            if a.sources.is_empty() {
                b.warn(a.line, "dataInputAssociation", "association without sourceRef ignored");
            }
            for (i, s) in a.sources.iter().enumerate() {
                let id = if a.sources.len() == 1 {
                    a.id.clone()
                } else {
                    format!("{}#{i}", a.id)
                };
                b.edges.push((
                    Edge::new(id, s.clone(), a.owner.clone(), EdgeKind::Data),
                    a.line,
                    "dataInputAssociation".into(),
                ));
            }
        } else {
            match a.target {
                Some(t) => b.edges.push((
                    Edge::new(a.id, a.owner, t, EdgeKind::Data),
                    a.line,
                    "dataOutputAssociation".into(),
                )),
                None => b.warn(a.line, "dataOutputAssociation", "association without targetRef ignored"),
            }
        }
    }

    let known: BTreeSet<String> = b.node_lines.keys().cloned().collect();
    // Data associations may point at process-level inputs and properties,
    // which are not graph nodes.
    let mut edges = Vec::with_capacity(b.edges.len());
    let mut edge_ids = BTreeSet::new();
    for (edge, line, element) in std::mem::take(&mut b.edges) {
        if known.contains(&edge.id) || !edge_ids.insert(edge.id.clone()) {
            return Err(ParseError::DuplicateId { line, id: edge.id });
        }
        for end in [&edge.source, &edge.target] {
            if !known.contains(end) {
                if edge.kind == EdgeKind::Data {
                    b.warn(line, &element, format!("reference `{end}` is not a model element"));
                } else {
                    return Err(ParseError::DanglingReference {
                        line,
                        element,
                        reference: end.clone(),
                    });
                }
            }
        }
        if known.contains(&edge.source) && known.contains(&edge.target) {
            edges.push(edge);
        }
    }

    let lane_refs = std::mem::take(&mut b.lane_refs);
    for (lane, node_id) in lane_refs {
        match b.nodes.iter_mut().find(|n| n.id == node_id) {
            Some(n) => n.lane = Some(lane),
            None => b.warn(0, "flowNodeRef", format!("lane `{lane}` references unknown node `{node_id}`")),
        }
    }

    let graph = ProcessModelGraph {
        language: language.to_string(),
        nodes: b.nodes,
        edges,
    };
    debug_assert!(graph.validate().is_ok());
    Ok(ParsedModel {
        graph,
        warnings: b.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<bpmn:definitions xmlns:bpmn="http://www.omg.org/spec/BPMN/20100524/MODEL" id="d">"#;

    fn doc(body: &str) -> String {
        format!("{HEADER}\n{body}\n</bpmn:definitions>\n")
    }

    #[test]
    fn parses_simple_sequence() {
        let xml = doc(r#"<bpmn:process id="p">
  <bpmn:startEvent id="s" name="Start"/>
  <bpmn:task id="t" name="Work"/>
  <bpmn:endEvent id="e"/>
  <bpmn:sequenceFlow id="f1" sourceRef="s" targetRef="t"/>
  <bpmn:sequenceFlow id="f2" sourceRef="t" targetRef="e"/>
</bpmn:process>"#);
        let m = parse_model(&xml, "BPMN 2.0").unwrap();
        assert_eq!(m.graph.nodes.len(), 3);
        assert_eq!(m.graph.count_edges(EdgeKind::Sequence), 2);
        assert_eq!(m.graph.node("t").unwrap().label, "Work");
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn namespaces_are_ignored() {
        let xml = r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL">
<process id="p"><task id="a"/></process></definitions>"#;
        let m = parse_model(xml, "BPMN 2.0").unwrap();
        assert_eq!(m.graph.nodes[0].kind, NodeKind::Task);
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = doc("<bpmn:process id=\"p\">\n<bpmn:task id=\"t\">\n</bpmn:process>");
        match parse_model(&xml, "BPMN 2.0") {
            Err(ParseError::Malformed { line, .. }) => assert!(line >= 3, "line {line}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_document_is_malformed() {
        let xml = format!("{HEADER}\n<bpmn:process id=\"p\">");
        assert!(matches!(
            parse_model(&xml, "BPMN 2.0"),
            Err(ParseError::Malformed { .. })
        ));
    }

    #[test]
    fn missing_process() {
        assert_eq!(parse_model(&doc(""), "BPMN 2.0"), Err(ParseError::NoProcess));
    }

    #[test]
    fn dangling_sequence_flow() {
        let xml = doc(r#"<bpmn:process id="p">
  <bpmn:task id="t"/>
  <bpmn:sequenceFlow id="f" sourceRef="t" targetRef="ghost"/>
</bpmn:process>"#);
        assert_eq!(
            parse_model(&xml, "BPMN 2.0"),
            Err(ParseError::DanglingReference {
                line: 5,
                element: "sequenceFlow".into(),
                reference: "ghost".into()
            })
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let xml = doc(r#"<bpmn:process id="p"><bpmn:task id="t"/><bpmn:task id="t"/></bpmn:process>"#);
        assert!(matches!(
            parse_model(&xml, "BPMN 2.0"),
            Err(ParseError::DuplicateId { .. })
        ));
    }

    #[test]
    fn subprocess_children_get_parent() {
        let xml = doc(r#"<bpmn:process id="p">
  <bpmn:subProcess id="sp">
    <bpmn:incoming>f0</bpmn:incoming>
    <bpmn:subProcess id="inner"><bpmn:task id="deep"/></bpmn:subProcess>
    <bpmn:task id="t"/>
  </bpmn:subProcess>
</bpmn:process>"#);
        let g = parse_model(&xml, "BPMN 2.0").unwrap().graph;
        assert_eq!(g.node("t").unwrap().parent.as_deref(), Some("sp"));
        assert_eq!(g.node("deep").unwrap().parent.as_deref(), Some("inner"));
        assert_eq!(g.node("inner").unwrap().parent.as_deref(), Some("sp"));
    }

    #[test]
    fn lanes_pools_messages_and_data() {
        let xml = doc(r#"<bpmn:collaboration id="c">
  <bpmn:participant id="P1" name="Shop" processRef="p"/>
  <bpmn:participant id="P2" name="Customer"/>
  <bpmn:messageFlow id="m" sourceRef="P2" targetRef="t"/>
</bpmn:collaboration>
<bpmn:process id="p">
  <bpmn:laneSet id="ls">
    <bpmn:lane id="L1" name="Sales">
      <bpmn:flowNodeRef>t</bpmn:flowNodeRef>
    </bpmn:lane>
  </bpmn:laneSet>
  <bpmn:dataObjectReference id="doc" name="Order"/>
  <bpmn:task id="t" name="Check">
    <bpmn:dataInputAssociation id="di"><bpmn:sourceRef>doc</bpmn:sourceRef></bpmn:dataInputAssociation>
  </bpmn:task>
  <bpmn:textAnnotation id="ann"/>
</bpmn:process>"#);
        let m = parse_model(&xml, "BPMN 2.0").unwrap();
        let g = &m.graph;
        assert_eq!(g.count_nodes(&NodeKind::Pool), 2);
        assert_eq!(g.count_nodes(&NodeKind::Lane), 1);
        assert_eq!(g.count_edges(EdgeKind::Message), 1);
        assert_eq!(g.count_edges(EdgeKind::Data), 1);
        assert_eq!(g.node("t").unwrap().lane.as_deref(), Some("L1"));
        assert_eq!(m.warnings.len(), 1);
        assert_eq!(m.warnings[0].element, "textAnnotation");
    }

    #[test]
    fn unsupported_gateway_becomes_generic() {
        let xml = doc(r#"<bpmn:process id="p"><bpmn:eventBasedGateway id="g"/></bpmn:process>"#);
        let m = parse_model(&xml, "BPMN 2.0").unwrap();
        assert_eq!(
            m.graph.nodes[0].kind,
            NodeKind::Generic("eventBasedGateway".into())
        );
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn missing_id_is_an_error() {
        let xml = doc(r#"<bpmn:process id="p"><bpmn:task name="x"/></bpmn:process>"#);
        assert!(matches!(
            parse_model(&xml, "BPMN 2.0"),
            Err(ParseError::MissingAttribute { .. })
        ));
    }
}
