//! Aggregation of metric scores into criterion scores, perspective scores,
//! the combined score and noise flags.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ett::{EttError, EvaluationTheoryTree, InteractionWeights, MetricSource, Perspective};

pub const DEFAULT_NOISE_THRESHOLD: f64 = 4.0;

const SCALE: std::ops::RangeInclusive<f64> = 1.0..=10.0;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("no scores to aggregate")]
    NoScores,
    #[error("{scores} scores but {weights} weights")]
    LengthMismatch { scores: usize, weights: usize },
    #[error("weight #{index} is {weight}, weights must be positive")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error("score of `{id}` is {score}, outside [1, 10]")]
    ScoreOutOfRange { id: String, score: f64 },
    #[error("criterion unscored: `{criterion}` has no score for any of {}", .missing.join(", "))]
    CriterionUnscored { criterion: String, missing: Vec<String> },
    #[error("perspective incomplete: {perspective} has no scored criteria")]
    PerspectiveIncomplete { perspective: Perspective },
    #[error("interaction weights ({modeler}, {reader}) must be non-negative and sum to 1")]
    InvalidInteractionWeights { modeler: f64, reader: f64 },
    #[error("input names unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("input names unknown criterion `{0}`")]
    UnknownCriterion(String),
    #[error("criterion `{0}` has both a direct score and metric scores")]
    ConflictingCriterionInput(String),
    #[error("invalid noise threshold {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Ett(#[from] EttError),
}

fn check_score(id: &str, score: f64) -> Result<(), ScoringError> {
    if SCALE.contains(&score) {
        Ok(())
    } else {
        Err(ScoringError::ScoreOutOfRange {
            id: id.to_string(),
            score,
        })
    }
}

/// Weight-normalized sum `Σ w_i s_i / Σ w_i`, kept inside `[min s, max s]`.
pub fn weighted_mean(scores: &[f64], weights: &[f64]) -> Result<f64, ScoringError> {
    if scores.len() != weights.len() {
        return Err(ScoringError::LengthMismatch {
            scores: scores.len(),
            weights: weights.len(),
        });
    }
    if scores.is_empty() {
        return Err(ScoringError::NoScores);
    }
    if let Some((index, &weight)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
    {
        return Err(ScoringError::NonPositiveWeight { index, weight });
    }
    let total: f64 = weights.iter().sum();
    let sum: f64 = scores.iter().zip(weights).map(|(s, w)| s * w).sum();
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((sum / total).clamp(lo, hi))
}

/// `Q_c` of one criterion from its metric scores and weights.
pub fn aggregate_criterion(scores: &[f64], weights: &[f64]) -> Result<f64, ScoringError> {
    for (i, s) in scores.iter().enumerate() {
        check_score(&format!("#{i}"), *s)?;
    }
    weighted_mean(scores, weights)
}

/// `S_m` or `S_r` from the perspective's criterion scores and weights.
pub fn perspective_score(scores: &[f64], weights: &[f64]) -> Result<f64, ScoringError> {
    aggregate_criterion(scores, weights)
}

/// `S_b = w_m S_m + w_r S_r`.
pub fn combined_score(modeler: f64, reader: f64, weights: InteractionWeights) -> Result<f64, ScoringError> {
    if !weights.is_valid() {
        return Err(ScoringError::InvalidInteractionWeights {
            modeler: weights.modeler,
            reader: weights.reader,
        });
    }
    check_score("S_m", modeler)?;
    check_score("S_r", reader)?;
    let s = weights.modeler * modeler + weights.reader * reader;
    Ok(s.clamp(modeler.min(reader), modeler.max(reader)))
}

/// A metric value ready for aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
    pub score: f64,
}

impl MetricInput {
    pub fn score(score: f64) -> Self {
        MetricInput { raw: None, score }
    }
}

/// Everything [`evaluate`] needs besides the tree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreInputs {
    pub model_id: String,
    /// Normalized metric scores by metric id.
    #[serde(default)]
    pub metrics: BTreeMap<String, MetricInput>,
    /// Criterion scores supplied directly, without a metric breakdown.
    #[serde(default)]
    pub criteria: BTreeMap<String, f64>,
    /// Respondents behind the reader questionnaire scores.
    #[serde(default)]
    pub reader_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub id: String,
    pub name: String,
    pub criterion: String,
    pub perspective: Perspective,
    pub source: MetricSource,
    pub raw: Option<f64>,
    pub score: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub perspective: Perspective,
    pub score: f64,
    pub weight: f64,
    /// Score was supplied directly rather than aggregated from metrics.
    pub direct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlagLevel {
    Metric,
    Criterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFlag {
    pub level: FlagLevel,
    pub id: String,
    pub name: String,
    pub perspective: Perspective,
    /// `perspective > criterion [> metric]`
    pub path: String,
    pub score: f64,
    pub threshold: f64,
}

impl fmt::Display for NoiseFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.2} < {:.2})", self.path, self.score, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComprehensionEvaluation {
    pub model_id: String,
    pub interaction_weights: InteractionWeights,
    pub modeler_score: f64,
    pub reader_score: f64,
    pub combined_score: f64,
    pub reader_count: usize,
    pub noise_threshold: f64,
    pub criteria: Vec<CriterionResult>,
    pub metrics: Vec<MetricResult>,
    pub noise: Vec<NoiseFlag>,
}

impl ComprehensionEvaluation {
    pub fn perspective_score(&self, perspective: Perspective) -> f64 {
        match perspective {
            Perspective::Modeler => self.modeler_score,
            Perspective::Reader => self.reader_score,
        }
    }

    pub fn criterion(&self, id: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn metric(&self, id: &str) -> Option<&MetricResult> {
        self.metrics.iter().find(|m| m.id == id)
    }

    /// Lists every broken evaluation invariant; empty when complete.
    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut scored = |what: &str, s: f64| {
            if !SCALE.contains(&s) {
                problems.push(format!("{what} = {s} outside [1, 10]"));
            }
        };
        scored("S_m", self.modeler_score);
        scored("S_r", self.reader_score);
        scored("S_b", self.combined_score);
        for c in &self.criteria {
            scored(&c.id, c.score);
        }
        for m in &self.metrics {
            scored(&m.id, m.score);
        }
        for p in Perspective::ALL {
            if !self.criteria.iter().any(|c| c.perspective == p) {
                problems.push(format!("no {p} criteria"));
            }
        }
        let w = self.interaction_weights;
        if !w.is_valid() {
            problems.push(format!("interaction weights ({}, {}) invalid", w.modeler, w.reader));
        }
        let expect = w.modeler * self.modeler_score + w.reader * self.reader_score;
        if (expect - self.combined_score).abs() > 1e-9 {
            problems.push(format!(
                "S_b = {} does not match w_m S_m + w_r S_r = {expect}",
                self.combined_score
            ));
        }
        problems
    }
}

/// Every metric and criterion scoring strictly below `threshold`, lowest
/// first. Ties keep metric-before-criterion and then id order.
pub fn detect_noise(evaluation: &ComprehensionEvaluation, threshold: f64) -> Vec<NoiseFlag> {
    let criteria: BTreeMap<&str, &CriterionResult> =
        evaluation.criteria.iter().map(|c| (c.id.as_str(), c)).collect();
    let mut flags = Vec::new();
    for m in &evaluation.metrics {
        if m.score < threshold {
            let cname = criteria.get(m.criterion.as_str()).map_or(m.criterion.as_str(), |c| c.name.as_str());
            flags.push(NoiseFlag {
                level: FlagLevel::Metric,
                id: m.id.clone(),
                name: m.name.clone(),
                perspective: m.perspective,
                path: format!("{} > {} > {}", m.perspective, cname, m.name),
                score: m.score,
                threshold,
            });
        }
    }
    for c in &evaluation.criteria {
        if c.score < threshold {
            flags.push(NoiseFlag {
                level: FlagLevel::Criterion,
                id: c.id.clone(),
                name: c.name.clone(),
                perspective: c.perspective,
                path: format!("{} > {}", c.perspective, c.name),
                score: c.score,
                threshold,
            });
        }
    }
    flags.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then_with(|| (a.level == FlagLevel::Criterion).cmp(&(b.level == FlagLevel::Criterion)))
            .then_with(|| a.id.cmp(&b.id))
    });
    flags
}

/// Scores a model against the tree. Unweighted trees are weighted with their
/// own settings first. Criteria with some but not all metric scores aggregate
/// over the metrics present.
pub fn evaluate(
    tree: &EvaluationTheoryTree,
    inputs: &ScoreInputs,
    threshold: f64,
) -> Result<ComprehensionEvaluation, ScoringError> {
    if !threshold.is_finite() {
        return Err(ScoringError::InvalidThreshold(threshold));
    }
    let tree: Cow<'_, EvaluationTheoryTree> = if tree.is_weighted() {
        Cow::Borrowed(tree)
    } else {
        Cow::Owned(tree.clone().weighted()?)
    };

    let metric_ids: BTreeSet<&str> = tree.metrics().map(|(_, m)| m.id.as_str()).collect();
    if let Some(id) = inputs.metrics.keys().find(|id| !metric_ids.contains(id.as_str())) {
        return Err(ScoringError::UnknownMetric(id.clone()));
    }
    if let Some(id) = inputs
        .criteria
        .keys()
        .find(|id| !tree.criteria.iter().any(|c| &c.id == *id))
    {
        return Err(ScoringError::UnknownCriterion(id.clone()));
    }
    for (id, m) in &inputs.metrics {
        check_score(id, m.score)?;
    }
    for (id, s) in &inputs.criteria {
        check_score(id, *s)?;
    }

    let mut metrics = Vec::new();
    let mut criteria = Vec::new();
    for c in &tree.criteria {
        let weight = c.weight.expect("weighted tree");
        let present: Vec<_> = c
            .metrics
            .iter()
            .filter_map(|m| inputs.metrics.get(&m.id).map(|x| (m, x)))
            .collect();
        let (score, direct) = match inputs.criteria.get(&c.id) {
            Some(_) if !present.is_empty() => {
                return Err(ScoringError::ConflictingCriterionInput(c.id.clone()))
            }
            Some(&s) => (s, true),
            None if present.is_empty() => {
                return Err(ScoringError::CriterionUnscored {
                    criterion: c.id.clone(),
                    missing: c.metrics.iter().map(|m| m.id.clone()).collect(),
                })
            }
            None => {
                let scores: Vec<f64> = present.iter().map(|(_, x)| x.score).collect();
                let weights: Vec<f64> = present.iter().map(|(m, _)| m.weight.expect("weighted tree")).collect();
                (aggregate_criterion(&scores, &weights)?, false)
            }
        };
        for (m, x) in present {
            metrics.push(MetricResult {
                id: m.id.clone(),
                name: m.name.clone(),
                criterion: c.id.clone(),
                perspective: c.perspective,
                source: m.source,
                raw: x.raw,
                score: x.score,
                weight: m.weight.expect("weighted tree"),
            });
        }
        criteria.push(CriterionResult {
            id: c.id.clone(),
            name: c.name.clone(),
            perspective: c.perspective,
            score,
            weight,
            direct,
        });
    }

    let perspective = |p: Perspective| -> Result<f64, ScoringError> {
        let (scores, weights): (Vec<f64>, Vec<f64>) = criteria
            .iter()
            .filter(|c| c.perspective == p)
            .map(|c| (c.score, c.weight))
            .unzip();
        if scores.is_empty() {
            return Err(ScoringError::PerspectiveIncomplete { perspective: p });
        }
        perspective_score(&scores, &weights)
    };
    let modeler_score = perspective(Perspective::Modeler)?;
    let reader_score = perspective(Perspective::Reader)?;
    let combined = combined_score(modeler_score, reader_score, tree.interaction_weights)?;

    let mut evaluation = ComprehensionEvaluation {
        model_id: inputs.model_id.clone(),
        interaction_weights: tree.interaction_weights,
        modeler_score,
        reader_score,
        combined_score: combined,
        reader_count: inputs.reader_count,
        noise_threshold: threshold,
        criteria,
        metrics,
        noise: Vec::new(),
    };
    evaluation.noise = detect_noise(&evaluation, threshold);
    Ok(evaluation)
}
