//! Questionnaire schemas, response sets and their conversion to metric scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ett::{EvaluationTheoryTree, Perspective};
use crate::par::Execution;

pub const QUESTIONNAIRE_FORMAT: &str = "questionnaire/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum QuestionKind {
    Likert { levels: u32 },
    TrueFalse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuestionPolarity {
    #[default]
    Positive,
    /// Agreement indicates a problem; the score is mirrored.
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub kind: QuestionKind,
    /// Id of the ETT metric this question feeds.
    pub metric: String,
    #[serde(default)]
    pub polarity: QuestionPolarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionnaireSchema {
    pub format: String,
    pub version: String,
    pub perspective: Perspective,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Bool(bool),
    Level(u32),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Bool(b) => write!(f, "{b}"),
            Answer::Level(v) => write!(f, "{v}"),
        }
    }
}

/// One respondent's answers, keyed by question id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSet {
    pub respondent: String,
    pub schema_version: String,
    #[serde(default)]
    pub answers: BTreeMap<String, Answer>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseIssue {
    Missing { question: String },
    OutOfRange { question: String, value: u32, levels: u32 },
    WrongType { question: String, expected: &'static str },
    Unknown { question: String },
    VersionMismatch { expected: String, found: String },
}

impl fmt::Display for ResponseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseIssue::Missing { question } => write!(f, "missing answer: {question}"),
            ResponseIssue::OutOfRange {
                question,
                value,
                levels,
            } => write!(f, "answer out of range: {question} = {value} (expected 1..={levels})"),
            ResponseIssue::WrongType { question, expected } => {
                write!(f, "wrong answer type: {question} (expected {expected})")
            }
            ResponseIssue::Unknown { question } => write!(f, "unknown question: {question}"),
            ResponseIssue::VersionMismatch { expected, found } => {
                write!(f, "schema version mismatch: expected {expected}, found {found}")
            }
        }
    }
}

/// Problem with how a schema binds to the evaluation tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingIssue {
    UnknownMetric { question: String, metric: String },
    WrongSource { question: String, metric: String },
    Unbound { metric: String },
}

impl fmt::Display for BindingIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindingIssue::UnknownMetric { question, metric } => {
                write!(f, "question {question} is bound to unknown metric {metric}")
            }
            BindingIssue::WrongSource { question, metric } => {
                write!(f, "question {question} is bound to {metric}, which is not a questionnaire metric of this perspective")
            }
            BindingIssue::Unbound { metric } => write!(f, "metric {metric} has no question"),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, PartialEq)]
pub enum QuestionnaireError {
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("unsupported questionnaire format `{0}`")]
    UnsupportedFormat(String),
    #[error("questionnaire has no questions")]
    Empty,
    #[error("duplicate question id `{0}`")]
    DuplicateQuestion(String),
    #[error("question `{question}` has {levels} Likert levels, need at least 2")]
    InvalidLevels { question: String, levels: u32 },
    #[error("responses of `{respondent}` are invalid: {}", join(.issues))]
    InvalidResponses {
        respondent: String,
        issues: Vec<ResponseIssue>,
    },
    #[error("questionnaire does not fit the evaluation tree: {}", join(.0))]
    Binding(Vec<BindingIssue>),
    #[error("no respondents")]
    NoRespondents,
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, QuestionnaireError> {
    let de = toml::Deserializer::parse(text).map_err(|e| QuestionnaireError::Malformed {
        path: "<document>".into(),
        message: e.message().to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| QuestionnaireError::Malformed {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })
}

impl QuestionnaireSchema {
    pub fn parse(text: &str) -> Result<Self, QuestionnaireError> {
        let schema: QuestionnaireSchema = parse_toml(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), QuestionnaireError> {
        if self.format != QUESTIONNAIRE_FORMAT {
            return Err(QuestionnaireError::UnsupportedFormat(self.format.clone()));
        }
        if self.questions.is_empty() {
            return Err(QuestionnaireError::Empty);
        }
        let mut ids = BTreeSet::new();
        for q in &self.questions {
            if !ids.insert(q.id.as_str()) {
                return Err(QuestionnaireError::DuplicateQuestion(q.id.clone()));
            }
            if let QuestionKind::Likert { levels } = q.kind {
                if levels < 2 {
                    return Err(QuestionnaireError::InvalidLevels {
                        question: q.id.clone(),
                        levels,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    /// Checks that every question feeds a questionnaire metric of the schema's
    /// perspective and that every such metric has at least one question.
    pub fn check_bindings(&self, tree: &EvaluationTheoryTree) -> Vec<BindingIssue> {
        let source = self.perspective.questionnaire_source();
        let mut issues = Vec::new();
        let mut bound = BTreeSet::new();
        for q in &self.questions {
            match tree.metric(&q.metric) {
                None => issues.push(BindingIssue::UnknownMetric {
                    question: q.id.clone(),
                    metric: q.metric.clone(),
                }),
                Some((_, m)) if m.source != source => issues.push(BindingIssue::WrongSource {
                    question: q.id.clone(),
                    metric: q.metric.clone(),
                }),
                Some(_) => {
                    bound.insert(q.metric.as_str());
                }
            }
        }
        for (_, m) in tree.metrics() {
            if m.source == source && !bound.contains(m.id.as_str()) {
                issues.push(BindingIssue::Unbound {
                    metric: m.id.clone(),
                });
            }
        }
        issues
    }

    /// Metric ids fed by this schema, in first-question order.
    pub fn metric_ids(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.questions
            .iter()
            .filter(|q| seen.insert(q.metric.as_str()))
            .map(|q| q.metric.as_str())
            .collect()
    }
}

impl ResponseSet {
    pub fn parse(text: &str) -> Result<Self, QuestionnaireError> {
        parse_toml(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("responses serialize")
    }
}

/// Lists every problem with a response set, in schema order followed by
/// answers to unknown questions.
pub fn validate_responses(schema: &QuestionnaireSchema, responses: &ResponseSet) -> Vec<ResponseIssue> {
    let mut issues = Vec::new();
    if responses.schema_version != schema.version {
        issues.push(ResponseIssue::VersionMismatch {
            expected: schema.version.clone(),
            found: responses.schema_version.clone(),
        });
    }
    for q in &schema.questions {
        match (q.kind, responses.answers.get(&q.id)) {
            (_, None) => issues.push(ResponseIssue::Missing {
                question: q.id.clone(),
            }),
            (QuestionKind::Likert { levels }, Some(Answer::Level(v))) => {
                if *v < 1 || *v > levels {
                    issues.push(ResponseIssue::OutOfRange {
                        question: q.id.clone(),
                        value: *v,
                        levels,
                    });
                }
            }
            (QuestionKind::Likert { .. }, Some(Answer::Bool(_))) => {
                issues.push(ResponseIssue::WrongType {
                    question: q.id.clone(),
                    expected: "likert level",
                })
            }
            (QuestionKind::TrueFalse, Some(Answer::Level(_))) => issues.push(ResponseIssue::WrongType {
                question: q.id.clone(),
                expected: "true or false",
            }),
            (QuestionKind::TrueFalse, Some(Answer::Bool(_))) => {}
        }
    }
    for id in responses.answers.keys() {
        if schema.question(id).is_none() {
            issues.push(ResponseIssue::Unknown { question: id.clone() });
        }
    }
    issues
}

/// Score of one valid answer on the [1, 10] scale.
pub fn score_answer(question: &Question, answer: Answer) -> Option<f64> {
    let score = match (question.kind, answer) {
        (QuestionKind::Likert { levels }, Answer::Level(v)) if (1..=levels).contains(&v) => {
            1.0 + 9.0 * f64::from(v - 1) / f64::from(levels - 1)
        }
        (QuestionKind::TrueFalse, Answer::Bool(b)) => {
            if b {
                10.0
            } else {
                1.0
            }
        }
        _ => return None,
    };
    Some(match question.polarity {
        QuestionPolarity::Positive => score,
        QuestionPolarity::Reversed => 11.0 - score,
    })
}

/// Metric scores of one respondent. Questions bound to the same metric are
/// averaged.
pub fn score_responses(
    schema: &QuestionnaireSchema,
    responses: &ResponseSet,
) -> Result<BTreeMap<String, f64>, QuestionnaireError> {
    let issues = validate_responses(schema, responses);
    if !issues.is_empty() {
        return Err(QuestionnaireError::InvalidResponses {
            respondent: responses.respondent.clone(),
            issues,
        });
    }
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for q in &schema.questions {
        let score = score_answer(q, responses.answers[&q.id]).expect("validated");
        let e = sums.entry(q.metric.clone()).or_insert((0.0, 0));
        e.0 += score;
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect())
}

/// Mean metric scores over all respondents.
pub fn aggregate_respondents(
    schema: &QuestionnaireSchema,
    sets: &[ResponseSet],
    exec: Execution,
) -> Result<BTreeMap<String, f64>, QuestionnaireError> {
    if sets.is_empty() {
        return Err(QuestionnaireError::NoRespondents);
    }
    let per = exec.try_map(sets, |rs| score_responses(schema, rs))?;
    let mut totals: BTreeMap<String, f64> = BTreeMap::new();
    for scores in &per {
        for (k, v) in scores {
            *totals.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    let n = per.len() as f64;
    Ok(totals.into_iter().map(|(k, v)| (k, v / n)).collect())
}

fn parse_answer(kind: QuestionKind, line: &str) -> Option<Answer> {
    let s = line.trim().to_ascii_lowercase();
    match kind {
        QuestionKind::Likert { levels } => s
            .parse::<u32>()
            .ok()
            .filter(|v| (1..=levels).contains(v))
            .map(Answer::Level),
        QuestionKind::TrueFalse => match s.as_str() {
            "y" | "yes" | "t" | "true" => Some(Answer::Bool(true)),
            "n" | "no" | "f" | "false" => Some(Answer::Bool(false)),
            _ => None,
        },
    }
}

/// Asks every question in turn, re-asking until the answer is valid.
pub fn fill_interactive<R: BufRead, W: Write>(
    schema: &QuestionnaireSchema,
    respondent: &str,
    mut input: R,
    mut output: W,
) -> io::Result<ResponseSet> {
    let mut answers = BTreeMap::new();
    let total = schema.questions.len();
    for (i, q) in schema.questions.iter().enumerate() {
        let hint = match q.kind {
            QuestionKind::Likert { levels } => format!("1-{levels}"),
            QuestionKind::TrueFalse => "y/n".to_string(),
        };
        loop {
            write!(output, "[{}/{}] {} ({hint}): ", i + 1, total, q.text)?;
            output.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                return Err(io::Error::new(
                    io::ErrorKind::UnexpectedEof,
                    format!("input ended before question {}", q.id),
                ));
            }
            match parse_answer(q.kind, &line) {
                Some(a) => {
                    answers.insert(q.id.clone(), a);
                    break;
                }
                None => writeln!(output, "  please answer {hint}")?,
            }
        }
    }
    Ok(ResponseSet {
        respondent: respondent.to_string(),
        schema_version: schema.version.clone(),
        answers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use proptest::prelude::*;

    const SMALL: &str = r#"
format = "questionnaire/1"
version = "t-1"
perspective = "reader"

[[questions]]
id = "q1"
text = "Clear?"
kind = { type = "likert", levels = 5 }
metric = "r.a"

[[questions]]
id = "q2"
text = "Confusing?"
kind = { type = "likert", levels = 5 }
metric = "r.a"
polarity = "reversed"

[[questions]]
id = "q3"
text = "Found it?"
kind = { type = "true-false" }
metric = "r.b"
"#;

    fn answers(pairs: &[(&str, Answer)]) -> ResponseSet {
        ResponseSet {
            respondent: "x".into(),
            schema_version: "t-1".into(),
            answers: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn likert_scale_endpoints() {
        let s = QuestionnaireSchema::parse(SMALL).unwrap();
        let q = &s.questions[0];
        assert_eq!(score_answer(q, Answer::Level(1)), Some(1.0));
        assert_eq!(score_answer(q, Answer::Level(3)), Some(5.5));
        assert_eq!(score_answer(q, Answer::Level(5)), Some(10.0));
        assert_eq!(score_answer(&s.questions[1], Answer::Level(5)), Some(1.0));
        assert_eq!(score_answer(&s.questions[2], Answer::Bool(false)), Some(1.0));
        assert_eq!(score_answer(q, Answer::Bool(true)), None);
    }

    #[test]
    fn shared_metric_is_averaged() {
        let s = QuestionnaireSchema::parse(SMALL).unwrap();
        let r = answers(&[
            ("q1", Answer::Level(5)),
            ("q2", Answer::Level(3)),
            ("q3", Answer::Bool(true)),
        ]);
        let scores = score_responses(&s, &r).unwrap();
        assert_eq!(scores["r.a"], (10.0 + 5.5) / 2.0);
        assert_eq!(scores["r.b"], 10.0);
    }

    #[test]
    fn issues_are_listed_in_order() {
        let s = QuestionnaireSchema::parse(SMALL).unwrap();
        let r = answers(&[
            ("q1", Answer::Level(7)),
            ("q3", Answer::Level(1)),
            ("q9", Answer::Level(1)),
        ]);
        let issues = validate_responses(&s, &r);
        let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        assert_eq!(
            text,
            vec![
                "answer out of range: q1 = 7 (expected 1..=5)",
                "missing answer: q2",
                "wrong answer type: q3 (expected true or false)",
                "unknown question: q9",
            ]
        );
        assert!(matches!(
            score_responses(&s, &r),
            Err(QuestionnaireError::InvalidResponses { .. })
        ));
    }

    #[test]
    fn response_file_round_trip() {
        let r = answers(&[("q1", Answer::Level(4)), ("q3", Answer::Bool(true))]);
        let back = ResponseSet::parse(&r.to_toml()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn malformed_schema_reports_path() {
        let bad = SMALL.replace("levels = 5 }\nmetric = \"r.a\"\n\n[[questions]]\nid = \"q2\"", "levels = \"five\" }\nmetric = \"r.a\"\n\n[[questions]]\nid = \"q2\"");
        match QuestionnaireSchema::parse(&bad) {
            Err(QuestionnaireError::Malformed { path, .. }) => assert!(path.starts_with("questions[0].kind"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shipped_schemas_bind_to_default_tree() {
        let tree = defaults::ett();
        let m = defaults::modeler_schema();
        let r = defaults::reader_schema();
        assert_eq!(m.questions.len(), 49);
        assert_eq!(r.questions.len(), 24);
        assert_eq!(m.check_bindings(&tree), vec![]);
        assert_eq!(r.check_bindings(&tree), vec![]);
    }

    #[test]
    fn interactive_fill_reasks() {
        let s = QuestionnaireSchema::parse(SMALL).unwrap();
        let input = b"9\n4\n2\nmaybe\nyes\n";
        let mut out = Vec::new();
        let r = fill_interactive(&s, "cli", &input[..], &mut out).unwrap();
        assert_eq!(r.answers["q1"], Answer::Level(4));
        assert_eq!(r.answers["q2"], Answer::Level(2));
        assert_eq!(r.answers["q3"], Answer::Bool(true));
        let shown = String::from_utf8(out).unwrap();
        assert_eq!(shown.matches("please answer").count(), 2);
        assert!(validate_responses(&s, &r).is_empty());
    }

    #[test]
    fn interactive_fill_eof() {
        let s = QuestionnaireSchema::parse(SMALL).unwrap();
        let err = fill_interactive(&s, "cli", &b"3\n"[..], Vec::new()).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::UnexpectedEof);
    }

    #[test]
    fn no_respondents() {
        let s = QuestionnaireSchema::parse(SMALL).unwrap();
        assert_eq!(
            aggregate_respondents(&s, &[], Execution::Sequential),
            Err(QuestionnaireError::NoRespondents)
        );
    }

    proptest! {
        #[test]
        fn respondent_mean_matches_mean_of_answers(levels in proptest::collection::vec((1u32..=5, 1u32..=5, any::<bool>()), 1..12)) {
            let s = QuestionnaireSchema::parse(SMALL).unwrap();
            let sets: Vec<ResponseSet> = levels.iter().map(|(a, b, c)| answers(&[
                ("q1", Answer::Level(*a)), ("q2", Answer::Level(*b)), ("q3", Answer::Bool(*c)),
            ])).collect();
            let seq = aggregate_respondents(&s, &sets, Execution::Sequential).unwrap();
            let par = aggregate_respondents(&s, &sets, Execution::default()).unwrap();
            let n = sets.len() as f64;
            let expect_b = levels.iter().map(|(_, _, c)| if *c { 10.0 } else { 1.0 }).sum::<f64>() / n;
            prop_assert!((seq["r.b"] - expect_b).abs() < 1e-12);
            for (k, v) in &seq {
                prop_assert!((v - par[k]).abs() < 1e-12);
                prop_assert!((1.0..=10.0).contains(v));
            }
        }
    }
}
