//! Random BPMN documents checked against counts taken directly from the
//! generator's own description of what it wrote.

use comprehend_core::model::{parse_model, GraphStats};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TAGS: [&str; 10] = [
    "startEvent",
    "endEvent",
    "intermediateCatchEvent",
    "task",
    "userTask",
    "subProcess",
    "exclusiveGateway",
    "parallelGateway",
    "inclusiveGateway",
    "callActivity",
];

struct Spec {
    tags: Vec<&'static str>,
    labeled: Vec<bool>,
    parent: Vec<Option<usize>>,
    flows: Vec<(usize, usize)>,
    data_objects: usize,
}

fn generate(seed: u64) -> Spec {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=30);
    let mut spec = Spec {
        tags: Vec::new(),
        labeled: Vec::new(),
        parent: Vec::new(),
        flows: Vec::new(),
        data_objects: rng.random_range(0..3),
    };
    for i in 0..n {
        let tag = TAGS[rng.random_range(0..TAGS.len())];
        let subs: Vec<usize> = (0..i).filter(|&j| spec.tags[j] == "subProcess").collect();
        let parent = if !subs.is_empty() && rng.random_bool(0.4) {
            Some(subs[rng.random_range(0..subs.len())])
        } else {
            None
        };
        spec.tags.push(tag);
        spec.labeled.push(rng.random_bool(0.7));
        spec.parent.push(parent);
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        spec.flows.push((rng.random_range(0..n), rng.random_range(0..n)));
    }
    spec
}

fn emit(spec: &Spec, seed: u64) -> String {
    let p = if seed.is_multiple_of(2) { "bpmn:" } else { "" };
    let ns = if p.is_empty() { "xmlns" } else { "xmlns:bpmn" };
    let mut xml = format!(
        "<?xml version=\"1.0\"?>\n<{p}definitions {ns}=\"http://www.omg.org/spec/BPMN/20100524/MODEL\">\n<{p}process id=\"proc\">\n"
    );
    fn node(spec: &Spec, i: usize, p: &str, depth: usize, out: &mut String) {
        let indent = "  ".repeat(depth);
        let label = if spec.labeled[i] { format!(" name=\"n{i} &amp; co\"") } else { String::new() };
        let tag = spec.tags[i];
        let children: Vec<usize> = (0..spec.tags.len()).filter(|&j| spec.parent[j] == Some(i)).collect();
        if children.is_empty() && !i.is_multiple_of(3) {
            out.push_str(&format!("{indent}<{p}{tag} id=\"n{i}\"{label}/>\n"));
        } else {
            out.push_str(&format!("{indent}<{p}{tag} id=\"n{i}\"{label}>\n"));
            out.push_str(&format!("{indent}  <{p}documentation>node {i}</{p}documentation>\n"));
            for c in children {
                node(spec, c, p, depth + 1, out);
            }
            out.push_str(&format!("{indent}</{p}{tag}>\n"));
        }
    }
    for i in 0..spec.tags.len() {
        if spec.parent[i].is_none() {
            node(spec, i, p, 1, &mut xml);
        }
    }
    for (k, (s, t)) in spec.flows.iter().enumerate() {
        xml.push_str(&format!("  <{p}sequenceFlow id=\"f{k}\" sourceRef=\"n{s}\" targetRef=\"n{t}\"/>\n"));
    }
    for d in 0..spec.data_objects {
        xml.push_str(&format!("  <{p}dataObjectReference id=\"d{d}\"/>\n"));
    }
    xml.push_str(&format!("</{p}process>\n</{p}definitions>\n"));
    xml
}

fn degree(spec: &Spec, i: usize) -> usize {
    spec.flows.iter().filter(|f| f.0 == i).count() + spec.flows.iter().filter(|f| f.1 == i).count()
}

fn count(spec: &Spec, tags: &[&str]) -> usize {
    spec.tags.iter().filter(|t| tags.contains(t)).count()
}

fn naive_block_structured(spec: &Spec) -> bool {
    for kind in ["exclusiveGateway", "parallelGateway", "inclusiveGateway"] {
        let mut splits = 0;
        let mut joins = 0;
        for i in 0..spec.tags.len() {
            if spec.tags[i] != kind {
                continue;
            }
            let out = spec.flows.iter().filter(|f| f.0 == i).count();
            let inc = spec.flows.iter().filter(|f| f.1 == i).count();
            if out > 1 && inc > 1 {
                return false;
            }
            splits += usize::from(out > 1);
            joins += usize::from(inc > 1);
        }
        if splits != joins {
            return false;
        }
    }
    true
}

fn check(seed: u64) {
    let spec = generate(seed);
    let xml = emit(&spec, seed);
    let parsed = parse_model(&xml, "BPMN 2.0").unwrap_or_else(|e| panic!("{e}\n{xml}"));
    let s = GraphStats::of(&parsed.graph);
    let n = spec.tags.len();

    assert_eq!(s.node_count, n);
    assert_eq!(s.edge_count, spec.flows.len());
    assert_eq!(s.max_degree, (0..n).map(|i| degree(&spec, i)).max().unwrap_or(0));
    let gateways: Vec<usize> = (0..n).filter(|&i| spec.tags[i].ends_with("Gateway")).collect();
    assert_eq!(s.gateway_count, gateways.len());
    let avg = if gateways.is_empty() {
        0.0
    } else {
        gateways.iter().map(|&i| degree(&spec, i)).sum::<usize>() as f64 / gateways.len() as f64
    };
    assert!((s.avg_connector_degree - avg).abs() < 1e-12);
    assert_eq!(s.or_gateway_count, count(&spec, &["inclusiveGateway"]));
    assert_eq!(s.start_event_count, count(&spec, &["startEvent"]));
    assert_eq!(s.end_event_count, count(&spec, &["endEvent"]));
    assert_eq!(s.intermediate_event_count, count(&spec, &["intermediateCatchEvent"]));
    assert_eq!(s.task_count, count(&spec, &["task", "userTask", "callActivity"]));
    assert_eq!(s.subprocess_count, count(&spec, &["subProcess"]));
    assert_eq!(s.data_object_count, spec.data_objects);

    let depth = (0..n)
        .map(|i| {
            let mut d = 0;
            let mut c = spec.parent[i];
            while let Some(p) = c {
                d += 1;
                c = spec.parent[p];
            }
            d
        })
        .max()
        .unwrap_or(0);
    assert_eq!(s.nesting_depth, depth);

    let labelable: Vec<usize> = (0..n).filter(|&i| !spec.tags[i].ends_with("Gateway")).collect();
    let unlabeled = labelable.iter().filter(|&&i| !spec.labeled[i]).count();
    let ratio = if labelable.is_empty() { 0.0 } else { unlabeled as f64 / labelable.len() as f64 };
    assert!((s.unlabeled_node_ratio - ratio).abs() < 1e-12);
    assert_eq!(s.block_structured, naive_block_structured(&spec));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]
    #[test]
    fn parsed_counts_match_generator(seed in any::<u64>()) {
        check(seed);
    }
}
