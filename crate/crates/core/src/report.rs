//! Summary rendering and machine-readable export of evaluations.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ett::{MetricSource, Perspective};
use crate::scoring::ComprehensionEvaluation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Text,
    Markdown,
    Json,
    Csv,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Text => "text",
            ReportFormat::Markdown => "markdown",
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" | "plain" => Ok(ReportFormat::Text),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(ReportError::UnsupportedFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported report format `{0}` (expected text, markdown, json or csv)")]
    UnsupportedFormat(String),
    #[error("incomplete evaluation: {}", .0.join("; "))]
    IncompleteEvaluation(Vec<String>),
    #[error("`{0}` is an export format, not a summary format")]
    NotASummary(ReportFormat),
    #[error("parsing exported evaluation: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub format: ReportFormat,
    pub body: Vec<u8>,
}

impl ReportDocument {
    fn text(format: ReportFormat, body: String) -> Self {
        ReportDocument {
            format,
            body: body.into_bytes(),
        }
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.body).expect("reports are UTF-8")
    }
}

/// Half-up rounding to two decimals. The small bias absorbs binary
/// representation error, so 6.055 rounds to 6.06.
pub fn round2(x: f64) -> f64 {
    ((x * 100.0) + 0.5 + 1e-9).floor() / 100.0
}

fn fmt2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

fn ensure_complete(evaluation: &ComprehensionEvaluation) -> Result<(), ReportError> {
    let problems = evaluation.check();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(ReportError::IncompleteEvaluation(problems))
    }
}

const NO_NOISE: &str = "no noise detected above threshold";

/// Human-readable summary: the three perspective scores, a table of criterion
/// scores and the noise flags.
pub fn render_summary(
    evaluation: &ComprehensionEvaluation,
    format: ReportFormat,
) -> Result<ReportDocument, ReportError> {
    ensure_complete(evaluation)?;
    let body = match format {
        ReportFormat::Text => summary_text(evaluation),
        ReportFormat::Markdown => summary_markdown(evaluation),
        other => return Err(ReportError::NotASummary(other)),
    };
    Ok(ReportDocument::text(format, body))
}

fn summary_text(e: &ComprehensionEvaluation) -> String {
    let mut out = String::new();
    let w = e.interaction_weights;
    writeln!(out, "Comprehension summary: {}", e.model_id).unwrap();
    writeln!(out, "Interaction weights: w_m = {}, w_r = {}", w.modeler, w.reader).unwrap();
    writeln!(out, "Reader respondents: {}", e.reader_count).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "S_m (modeler)   {}", fmt2(e.modeler_score)).unwrap();
    writeln!(out, "S_r (reader)    {}", fmt2(e.reader_score)).unwrap();
    writeln!(out, "S_b (combined)  {}", fmt2(e.combined_score)).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "Criterion scores").unwrap();
    let width = e.criteria.iter().map(|c| c.name.len()).max().unwrap_or(0).max(9);
    writeln!(out, "  {:<8}  {:<width$}  {:>5}  {:>8}", "View", "Criterion", "Q_c", "Weight").unwrap();
    for c in &e.criteria {
        let mark = if c.direct { "  (direct)" } else { "" };
        writeln!(
            out,
            "  {:<8}  {:<width$}  {:>5}  {:>8.3}{mark}",
            c.perspective.to_string(),
            c.name,
            fmt2(c.score),
            c.weight
        )
        .unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "Noise (threshold {})", fmt2(e.noise_threshold)).unwrap();
    if e.noise.is_empty() {
        writeln!(out, "  {NO_NOISE} {}", fmt2(e.noise_threshold)).unwrap();
    }
    for f in &e.noise {
        writeln!(out, "  {:>5}  {}", fmt2(f.score), f.path).unwrap();
    }
    out
}

fn summary_markdown(e: &ComprehensionEvaluation) -> String {
    let mut out = String::new();
    let w = e.interaction_weights;
    writeln!(out, "# Comprehension summary: {}", e.model_id).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "| Score | Value |").unwrap();
    writeln!(out, "|---|---:|").unwrap();
    writeln!(out, "| S_m (modeler) | {} |", fmt2(e.modeler_score)).unwrap();
    writeln!(out, "| S_r (reader) | {} |", fmt2(e.reader_score)).unwrap();
    writeln!(out, "| S_b (combined) | {} |", fmt2(e.combined_score)).unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "Interaction weights w_m = {}, w_r = {}; {} reader respondent(s).",
        w.modeler, w.reader, e.reader_count
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(out, "## Criteria").unwrap();
    writeln!(out).unwrap();
    writeln!(out, "| View | Criterion | Q_c | Weight |").unwrap();
    writeln!(out, "|---|---|---:|---:|").unwrap();
    for c in &e.criteria {
        let name = if c.direct {
            format!("{} (direct)", c.name)
        } else {
            c.name.clone()
        };
        writeln!(out, "| {} | {} | {} | {:.3} |", c.perspective, name, fmt2(c.score), c.weight).unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "## Noise (threshold {})", fmt2(e.noise_threshold)).unwrap();
    writeln!(out).unwrap();
    if e.noise.is_empty() {
        writeln!(out, "{NO_NOISE} {}.", fmt2(e.noise_threshold)).unwrap();
    } else {
        writeln!(out, "| Score | Path |").unwrap();
        writeln!(out, "|---:|---|").unwrap();
        for f in &e.noise {
            writeln!(out, "| {} | {} |", fmt2(f.score), f.path).unwrap();
        }
    }
    out
}

/// One CSV data row per metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub criterion: String,
    pub perspective: Perspective,
    pub source: MetricSource,
    pub raw: Option<f64>,
    pub normalized: f64,
    pub weight: f64,
}

/// Renders the evaluation in any format. Structured formats keep full
/// precision.
pub fn export(
    evaluation: &ComprehensionEvaluation,
    format: ReportFormat,
) -> Result<ReportDocument, ReportError> {
    match format {
        ReportFormat::Text | ReportFormat::Markdown => render_summary(evaluation, format),
        ReportFormat::Json => {
            ensure_complete(evaluation)?;
            let mut body = serde_json::to_string_pretty(evaluation).expect("evaluation serializes");
            body.push('\n');
            Ok(ReportDocument::text(format, body))
        }
        ReportFormat::Csv => {
            ensure_complete(evaluation)?;
            let criteria: std::collections::BTreeMap<&str, &str> = evaluation
                .criteria
                .iter()
                .map(|c| (c.id.as_str(), c.name.as_str()))
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            for m in &evaluation.metrics {
                w.serialize(MetricRow {
                    id: m.id.clone(),
                    criterion: criteria.get(m.criterion.as_str()).copied().unwrap_or(&m.criterion).to_string(),
                    perspective: m.perspective,
                    source: m.source,
                    raw: m.raw,
                    normalized: m.score,
                    weight: m.weight,
                })
                .expect("in-memory CSV write");
            }
            let body = w.into_inner().expect("in-memory CSV flush");
            Ok(ReportDocument { format, body })
        }
    }
}

pub fn parse_json(text: &str) -> Result<ComprehensionEvaluation, ReportError> {
    serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricRow>, ReportError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| ReportError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use crate::ett::InteractionWeights;
    use crate::scoring::{evaluate, MetricInput, ScoreInputs};
    use proptest::prelude::*;

    fn evaluation(score: f64) -> ComprehensionEvaluation {
        let tree = defaults::ett();
        let inputs = ScoreInputs {
            model_id: "fixture".into(),
            metrics: tree
                .metrics()
                .enumerate()
                .map(|(i, (_, m))| {
                    (
                        m.id.clone(),
                        MetricInput {
                            raw: (i % 2 == 0).then_some(i as f64 / 3.0),
                            score,
                        },
                    )
                })
                .collect(),
            ..Default::default()
        };
        evaluate(&tree, &inputs, 4.0).unwrap()
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(fmt2(6.055), "6.06");
        assert_eq!(fmt2(6.054), "6.05");
        assert_eq!(fmt2(4.735), "4.74");
        assert_eq!(fmt2(10.0), "10.00");
    }

    #[test]
    fn summary_shows_rounded_scores() {
        let mut e = evaluation(5.0);
        e.modeler_score = 4.7413;
        e.reader_score = 6.2897;
        e.interaction_weights = InteractionWeights::from_modeler(0.1486);
        e.combined_score = 0.1486 * e.modeler_score + (1.0 - 0.1486) * e.reader_score;
        let doc = render_summary(&e, ReportFormat::Text).unwrap();
        let text = doc.as_str();
        assert!(text.lines().any(|l| l.starts_with("S_m") && l.ends_with("4.74")));
        assert!(text.lines().any(|l| l.starts_with("S_r") && l.ends_with("6.29")));
        assert!(text.lines().any(|l| l.starts_with("S_b") && l.ends_with("6.06")));
        assert!(text.contains(NO_NOISE));
        assert_eq!(render_summary(&e, ReportFormat::Text).unwrap(), doc);
    }

    #[test]
    fn markdown_lists_flags() {
        let e = evaluation(2.0);
        let md = render_summary(&e, ReportFormat::Markdown).unwrap();
        assert!(md.as_str().contains("| 2.00 | Modeler > Process Modeling Language |"));
        assert!(!md.as_str().contains(NO_NOISE));
    }

    #[test]
    fn csv_has_one_row_per_metric() {
        let e = evaluation(7.0);
        let doc = export(&e, ReportFormat::Csv).unwrap();
        let text = doc.as_str();
        assert_eq!(text.lines().count(), 97);
        assert!(text.starts_with("id,criterion,perspective,source,raw,normalized,weight\n"));
        let rows = parse_csv(text).unwrap();
        for (row, m) in rows.iter().zip(&e.metrics) {
            assert_eq!(row.raw, m.raw);
            assert_eq!(row.normalized, m.score);
            assert_eq!(row.weight, m.weight);
        }
    }

    #[test]
    fn incomplete_evaluation_rejected() {
        let mut e = evaluation(5.0);
        e.combined_score = 9.0;
        assert!(matches!(
            render_summary(&e, ReportFormat::Text),
            Err(ReportError::IncompleteEvaluation(_))
        ));
        e.combined_score = e.modeler_score;
        e.criteria.clear();
        assert!(export(&e, ReportFormat::Json).is_err());
    }

    #[test]
    fn unsupported_format() {
        assert!(matches!(
            "xlsx".parse::<ReportFormat>(),
            Err(ReportError::UnsupportedFormat(_))
        ));
        assert_eq!("MD".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
    }

    proptest! {
        #[test]
        fn json_round_trip_is_exact(score in 1.0f64..=10.0, wm in 0.0f64..=1.0) {
            let tree = defaults::ett();
            let mut tree = tree;
            tree.interaction_weights = InteractionWeights::from_modeler(wm);
            let inputs = ScoreInputs {
                model_id: "p".into(),
                metrics: tree.metrics().enumerate().map(|(i, (_, m))| {
                    let s = 1.0 + (score * (i as f64 + 1.0) * 0.618).rem_euclid(9.0);
                    (m.id.clone(), MetricInput { raw: Some(s / 7.0), score: s })
                }).collect(),
                ..Default::default()
            };
            let e = evaluate(&tree, &inputs, 4.0).unwrap();
            let doc = export(&e, ReportFormat::Json).unwrap();
            prop_assert_eq!(parse_json(doc.as_str()).unwrap(), e);
        }
    }
}
