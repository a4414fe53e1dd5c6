//! End-to-end scoring: language registry, model metrics and questionnaire
//! responses feed one evaluation per model.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::defaults;
use crate::ett::{EttError, EvaluationTheoryTree, InteractionWeights, MetricSource};
use crate::language::{
    complexity_score, pattern_share, ComplexityNormalization, LanguageError, LanguageRegistry,
    PatternType,
};
use crate::model::{extract_metrics, normalize_metric, ExtractError, ProcessModelGraph};
use crate::par::Execution;
use crate::questionnaire::{
    aggregate_respondents, score_responses, BindingIssue, QuestionnaireError, QuestionnaireSchema,
    ResponseSet,
};
use crate::scoring::{evaluate, ComprehensionEvaluation, MetricInput, ScoreInputs, ScoringError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ett(#[from] EttError),
    #[error(transparent)]
    Language(#[from] LanguageError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Questionnaire(#[from] QuestionnaireError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("{perspective} questionnaire does not fit the tree: {}", .issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Binding {
        perspective: &'static str,
        issues: Vec<BindingIssue>,
    },
    #[error("the {0} questionnaire is bound to the wrong perspective")]
    SchemaPerspective(&'static str),
    #[error("unknown language extractor `{extractor}` on metric `{metric}`")]
    UnknownLanguageExtractor { metric: String, extractor: String },
}

/// Inputs describing one model to score.
#[derive(Debug, Clone)]
pub struct Assessment {
    pub model_id: String,
    pub language: String,
    pub model: ProcessModelGraph,
    pub modeler: ResponseSet,
    pub readers: Vec<ResponseSet>,
}

/// Scoring configuration shared across assessments.
#[derive(Debug, Clone)]
pub struct Pipeline {
    tree: EvaluationTheoryTree,
    registry: LanguageRegistry,
    modeler_schema: QuestionnaireSchema,
    reader_schema: QuestionnaireSchema,
    pub threshold: f64,
    pub complexity: ComplexityNormalization,
    pub partial_weight: f64,
    /// Used for per-respondent scoring inside one assessment.
    pub execution: Execution,
}

impl Pipeline {
    pub fn new(
        tree: EvaluationTheoryTree,
        registry: LanguageRegistry,
        modeler_schema: QuestionnaireSchema,
        reader_schema: QuestionnaireSchema,
    ) -> Result<Self, PipelineError> {
        use crate::ett::Perspective;
        if modeler_schema.perspective != Perspective::Modeler {
            return Err(PipelineError::SchemaPerspective("modeler"));
        }
        if reader_schema.perspective != Perspective::Reader {
            return Err(PipelineError::SchemaPerspective("reader"));
        }
        for (perspective, schema) in [("modeler", &modeler_schema), ("reader", &reader_schema)] {
            let issues = schema.check_bindings(&tree);
            if !issues.is_empty() {
                return Err(PipelineError::Binding { perspective, issues });
            }
        }
        let tree = if tree.is_weighted() { tree } else { tree.weighted()? };
        Ok(Pipeline {
            tree,
            registry,
            modeler_schema,
            reader_schema,
            threshold: crate::scoring::DEFAULT_NOISE_THRESHOLD,
            complexity: ComplexityNormalization::Verbatim,
            partial_weight: 1.0,
            execution: Execution::default(),
        })
    }

    /// Pipeline over the shipped defaults.
    pub fn with_defaults() -> Self {
        Pipeline::new(
            defaults::ett(),
            defaults::languages(),
            defaults::modeler_schema(),
            defaults::reader_schema(),
        )
        .expect("shipped defaults fit together")
    }

    pub fn tree(&self) -> &EvaluationTheoryTree {
        &self.tree
    }

    pub fn registry(&self) -> &LanguageRegistry {
        &self.registry
    }

    pub fn modeler_schema(&self) -> &QuestionnaireSchema {
        &self.modeler_schema
    }

    pub fn reader_schema(&self) -> &QuestionnaireSchema {
        &self.reader_schema
    }

    pub fn set_interaction_weights(&mut self, weights: InteractionWeights) {
        self.tree.interaction_weights = weights;
    }

    fn language_inputs(&self, language: &str) -> Result<BTreeMap<String, MetricInput>, PipelineError> {
        let descriptor = self.registry.get(language)?;
        let normalized = self.registry.normalize_complexity(self.complexity)?;
        let mut out = BTreeMap::new();
        for (_, m) in self.tree.metrics() {
            if m.source != MetricSource::LanguageRegistry {
                continue;
            }
            let extractor = m.extractor.as_deref().unwrap_or_default();
            let (raw, value) = match extractor {
                "language_complexity" => (complexity_score(descriptor), normalized[&descriptor.name]),
                "control_flow_pattern_coverage" => {
                    let share = pattern_share(descriptor, PatternType::ControlFlow, self.partial_weight)?;
                    (share, share)
                }
                _ => {
                    return Err(PipelineError::UnknownLanguageExtractor {
                        metric: m.id.clone(),
                        extractor: extractor.to_string(),
                    })
                }
            };
            out.insert(
                m.id.clone(),
                MetricInput {
                    raw: Some(raw),
                    score: normalize_metric(value, m.normalization, m.polarity),
                },
            );
        }
        Ok(out)
    }

    /// Normalized inputs for one assessment.
    pub fn inputs(&self, assessment: &Assessment) -> Result<ScoreInputs, PipelineError> {
        let mut metrics = self.language_inputs(&assessment.language)?;
        for raw in extract_metrics(&assessment.model, &self.tree)? {
            let (_, m) = self.tree.metric(&raw.metric_id).expect("extracted from tree");
            metrics.insert(
                raw.metric_id,
                MetricInput {
                    raw: Some(raw.value),
                    score: normalize_metric(raw.value, m.normalization, m.polarity),
                },
            );
        }
        for (id, score) in score_responses(&self.modeler_schema, &assessment.modeler)? {
            metrics.insert(id, MetricInput::score(score));
        }
        for (id, score) in aggregate_respondents(&self.reader_schema, &assessment.readers, self.execution)? {
            metrics.insert(id, MetricInput::score(score));
        }
        Ok(ScoreInputs {
            model_id: assessment.model_id.clone(),
            metrics,
            criteria: BTreeMap::new(),
            reader_count: assessment.readers.len(),
        })
    }

    pub fn evaluate(&self, assessment: &Assessment) -> Result<ComprehensionEvaluation, PipelineError> {
        let inputs = self.inputs(assessment)?;
        Ok(evaluate(&self.tree, &inputs, self.threshold)?)
    }

    /// Evaluates independent assessments, one result per input in input order.
    pub fn evaluate_batch(
        &self,
        assessments: &[Assessment],
        exec: Execution,
    ) -> Vec<Result<ComprehensionEvaluation, PipelineError>> {
        let inner = Pipeline {
            execution: Execution::Sequential,
            ..self.clone()
        };
        exec.map(assessments, |a| inner.evaluate(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, EdgeKind, Node, NodeKind};
    use crate::questionnaire::{Answer, QuestionKind};

    fn responses(schema: &QuestionnaireSchema, who: &str, level: u32) -> ResponseSet {
        ResponseSet {
            respondent: who.into(),
            schema_version: schema.version.clone(),
            answers: schema
                .questions
                .iter()
                .map(|q| {
                    let a = match q.kind {
                        QuestionKind::Likert { levels } => Answer::Level(level.min(levels)),
                        QuestionKind::TrueFalse => Answer::Bool(level > 2),
                    };
                    (q.id.clone(), a)
                })
                .collect(),
        }
    }

    fn assessment(p: &Pipeline, id: &str, readers: &[u32]) -> Assessment {
        let graph = ProcessModelGraph::new(
            "BPMN 2.0",
            vec![
                Node::new("s", NodeKind::StartEvent, "Start"),
                Node::new("t", NodeKind::Task, "Do"),
                Node::new("e", NodeKind::EndEvent, "End"),
            ],
            vec![
                Edge::new("1", "s", "t", EdgeKind::Sequence),
                Edge::new("2", "t", "e", EdgeKind::Sequence),
            ],
        )
        .unwrap();
        Assessment {
            model_id: id.into(),
            language: "BPMN 2.0".into(),
            model: graph,
            modeler: responses(p.modeler_schema(), "m", 4),
            readers: readers
                .iter()
                .enumerate()
                .map(|(i, l)| responses(p.reader_schema(), &format!("r{i}"), *l))
                .collect(),
        }
    }

    #[test]
    fn defaults_score_every_metric() {
        let p = Pipeline::with_defaults();
        let e = p.evaluate(&assessment(&p, "a", &[3, 5])).unwrap();
        assert_eq!(e.metrics.len(), 96);
        assert_eq!(e.reader_count, 2);
        assert!(e.check().is_empty());
        let complexity = e.metric("m.language.complexity").unwrap();
        assert_eq!(complexity.score, 9.1);
        let cf = e.metric("m.language.control_flow_patterns").unwrap();
        assert_eq!(cf.raw, Some(0.95));
    }

    #[test]
    fn reader_average_equals_mean_of_single_reader_scores() {
        let p = Pipeline::with_defaults();
        let both = p.evaluate(&assessment(&p, "a", &[2, 5])).unwrap();
        let one = p.evaluate(&assessment(&p, "a", &[2])).unwrap();
        let two = p.evaluate(&assessment(&p, "a", &[5])).unwrap();
        assert!((both.reader_score - (one.reader_score + two.reader_score) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn batch_matches_single() {
        let p = Pipeline::with_defaults();
        let batch: Vec<_> = (0..6).map(|i| assessment(&p, &format!("m{i}"), &[1 + i % 5])).collect();
        let par = p.evaluate_batch(&batch, Execution::default());
        let seq = p.evaluate_batch(&batch, Execution::Sequential);
        for ((a, b), x) in par.iter().zip(&seq).zip(&batch) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
            assert_eq!(a.as_ref().unwrap(), &p.evaluate(x).unwrap());
        }
    }

    #[test]
    fn no_readers_is_an_error() {
        let p = Pipeline::with_defaults();
        assert!(matches!(
            p.evaluate(&assessment(&p, "a", &[])),
            Err(PipelineError::Questionnaire(QuestionnaireError::NoRespondents))
        ));
    }

    #[test]
    fn unknown_language() {
        let p = Pipeline::with_defaults();
        let mut a = assessment(&p, "a", &[3]);
        a.language = "Petri nets".into();
        assert!(matches!(p.evaluate(&a), Err(PipelineError::Language(_))));
    }
}
