use comprehend_core::model::{parse_model, EdgeKind, GraphStats, NodeKind};

fn stats(name: &str) -> GraphStats {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let xml = std::fs::read_to_string(path).unwrap();
    let parsed = parse_model(&xml, "BPMN 2.0").unwrap();
    assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
    GraphStats::of(&parsed.graph)
}

#[test]
fn sequence_hand_counts() {
    let s = stats("sequence.bpmn");
    assert_eq!(s.node_count, 4);
    assert_eq!(s.edge_count, 3);
    assert_eq!(s.gateway_count, 0);
    assert_eq!(s.max_degree, 2);
    assert_eq!(s.avg_connector_degree, 0.0);
    assert_eq!(s.task_count, 2);
    assert_eq!((s.start_event_count, s.end_event_count), (1, 1));
    assert_eq!(s.unlabeled_node_ratio, 0.0);
    assert_eq!(s.nesting_depth, 0);
    assert!(s.block_structured);
}

#[test]
fn xor_loop_hand_counts() {
    let s = stats("xor-loop.bpmn");
    assert_eq!(s.node_count, 6);
    assert_eq!(s.edge_count, 6);
    assert_eq!(s.gateway_count, 2);
    assert_eq!(s.or_gateway_count, 0);
    assert_eq!(s.max_degree, 3);
    assert_eq!(s.avg_connector_degree, 3.0);
    assert_eq!(s.task_count, 2);
    assert_eq!(s.data_object_count, 1);
    assert_eq!(s.unlabeled_node_ratio, 0.25);
    assert!(s.block_structured);
}

#[test]
fn and_parallel_hand_counts() {
    let s = stats("and-parallel.bpmn");
    assert_eq!(s.node_count, 11);
    assert_eq!(s.edge_count, 11);
    assert_eq!(s.gateway_count, 2);
    assert_eq!(s.max_degree, 4);
    assert_eq!(s.avg_connector_degree, 4.0);
    assert_eq!(s.nesting_depth, 1);
    assert_eq!((s.start_event_count, s.end_event_count), (2, 2));
    assert_eq!(s.intermediate_event_count, 1);
    assert_eq!(s.task_count, 3);
    assert_eq!(s.subprocess_count, 1);
    assert_eq!(s.participant_count, 4);
    assert_eq!(s.message_flow_count, 1);
    assert_eq!(s.unlabeled_node_ratio, 2.0 / 9.0);
    assert!(s.block_structured);
}

#[test]
fn lanes_and_data_edges_resolve() {
    let path = format!("{}/tests/fixtures/and-parallel.bpmn", env!("CARGO_MANIFEST_DIR"));
    let g = parse_model(&std::fs::read_to_string(path).unwrap(), "BPMN 2.0").unwrap().graph;
    assert_eq!(g.node("pack").unwrap().lane.as_deref(), Some("warehouse"));
    assert_eq!(g.node("pack-box").unwrap().parent.as_deref(), Some("pack"));
    assert_eq!(g.count_nodes(&NodeKind::Pool), 2);

    let path = format!("{}/tests/fixtures/xor-loop.bpmn", env!("CARGO_MANIFEST_DIR"));
    let g = parse_model(&std::fs::read_to_string(path).unwrap(), "BPMN 2.0").unwrap().graph;
    let data: Vec<_> = g.edges.iter().filter(|e| e.kind == EdgeKind::Data).collect();
    assert_eq!(data.len(), 1);
    assert_eq!((data[0].source.as_str(), data[0].target.as_str()), ("draft", "doc"));
}
