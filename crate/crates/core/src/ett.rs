//! The evaluation tree: two perspectives (modeler, reader), each holding ranked
//! quality criteria, each holding ranked quality metrics.
//!
//! Trees are read from a versioned TOML document (`format = "ett/1"`). Ranks
//! drive the weights: within every sibling group (criteria of a perspective,
//! metrics of a criterion) weights follow the DNLog scheme unless the document
//! asks for uniform or explicit weights.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ranking::dnlog_weight;

pub const ETT_FORMAT: &str = "ett/1";

/// Metric counts of the reference catalog.
pub const CANONICAL_METRIC_COUNT: usize = 96;
pub const CANONICAL_MODELER_METRICS: usize = 54;
pub const CANONICAL_READER_METRICS: usize = 42;

pub const MODELER_CRITERIA: [&str; 6] = [
    "Process Modeling Language",
    "Process Modeling Tool",
    "Information",
    "Errors",
    "Person",
    "Process Modeling Guidelines",
];

pub const READER_CRITERIA: [&str; 7] = [
    "Process Modeling Language",
    "Medium",
    "Information",
    "Person",
    "Level of Detail",
    "Representation Factors",
    "Comprehension Questions",
];

/// Tolerance on `w_m + w_r == 1`.
pub const INTERACTION_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perspective {
    Modeler,
    Reader,
}

impl Perspective {
    pub const ALL: [Perspective; 2] = [Perspective::Modeler, Perspective::Reader];

    pub fn canonical_criteria(self) -> &'static [&'static str] {
        match self {
            Perspective::Modeler => &MODELER_CRITERIA,
            Perspective::Reader => &READER_CRITERIA,
        }
    }

    pub fn questionnaire_source(self) -> MetricSource {
        match self {
            Perspective::Modeler => MetricSource::ModelerQuestionnaire,
            Perspective::Reader => MetricSource::ReaderQuestionnaire,
        }
    }
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Perspective::Modeler => "Modeler",
            Perspective::Reader => "Reader",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricSource {
    ModelDerived,
    ModelerQuestionnaire,
    ReaderQuestionnaire,
    LanguageRegistry,
}

impl fmt::Display for MetricSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricSource::ModelDerived => "model-derived",
            MetricSource::ModelerQuestionnaire => "modeler-questionnaire",
            MetricSource::ReaderQuestionnaire => "reader-questionnaire",
            MetricSource::LanguageRegistry => "language-registry",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    #[default]
    HigherIsBetter,
    LowerIsBetter,
}

/// How a raw metric value maps onto the [1, 10] scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormalizationSpec {
    /// Value is already on the [1, 10] scale (clamped).
    #[default]
    Identity,
    /// `lo -> 1`, `hi -> 10`, linear in between, clamped outside.
    LinearClamp { lo: f64, hi: f64 },
    /// `lo -> 10`, `hi -> 1`, linear in between, clamped outside.
    InverseLinearClamp { lo: f64, hi: f64 },
    /// Nonzero -> 10, zero -> 1.
    Boolean,
}

impl NormalizationSpec {
    pub fn is_valid(&self) -> bool {
        match *self {
            NormalizationSpec::LinearClamp { lo, hi }
            | NormalizationSpec::InverseLinearClamp { lo, hi } => {
                lo.is_finite() && hi.is_finite() && lo < hi
            }
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityMetric {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub source: MetricSource,
    /// 1 is the most important metric of its criterion.
    pub rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default)]
    pub normalization: NormalizationSpec,
    #[serde(default)]
    pub polarity: Polarity,
    /// Name of the value producer for model-derived and language metrics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<String>,
    /// Marks catalog slots whose wording is not taken from a published source.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub placeholder: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityCriterion {
    pub id: String,
    pub name: String,
    pub perspective: Perspective,
    pub rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// DNLog `d` for this criterion's metric group; falls back to the tree's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey_d: Option<f64>,
    pub metrics: Vec<QualityMetric>,
}

/// `w_m` and `w_r` of the combined score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionWeights {
    pub modeler: f64,
    pub reader: f64,
}

impl InteractionWeights {
    /// Derived from the published combined scores of the case-study table.
    pub const DEFAULT: InteractionWeights = InteractionWeights {
        modeler: 0.156,
        reader: 0.844,
    };

    pub fn from_modeler(modeler: f64) -> Self {
        InteractionWeights {
            modeler,
            reader: 1.0 - modeler,
        }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.modeler)
            && (0.0..=1.0).contains(&self.reader)
            && (self.modeler + self.reader - 1.0).abs() <= INTERACTION_SUM_TOLERANCE
    }
}

impl Default for InteractionWeights {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Weighting rule for one level of the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelWeighting {
    /// DNLog weights from ranks.
    #[default]
    Dnlog,
    /// Every sibling weighs 1.
    Uniform,
    /// Weights are taken from the document as written.
    Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightingConfig {
    #[serde(default)]
    pub criteria: LevelWeighting,
    #[serde(default)]
    pub metrics: LevelWeighting,
}

fn default_survey_d() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationTheoryTree {
    pub format: String,
    pub version: String,
    #[serde(default = "default_survey_d")]
    pub survey_d: f64,
    #[serde(default)]
    pub interaction_weights: InteractionWeights,
    #[serde(default)]
    pub weighting: WeightingConfig,
    pub criteria: Vec<QualityCriterion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    UnsupportedFormat,
    DuplicateMetricId,
    DuplicateCriterionId,
    RankPermutation,
    EmptyCriterion,
    InteractionWeightsSum,
    InteractionWeightsRange,
    InvalidSurveyD,
    NonPositiveWeight,
    InvalidNormalization,
    MissingExtractor,
    SourcePerspectiveMismatch,
    NonCanonicalMetricCount,
    UnknownCriterionName,
    MissingPerspective,
}

impl ViolationCode {
    pub fn severity(self) -> Severity {
        match self {
            ViolationCode::NonCanonicalMetricCount
            | ViolationCode::UnknownCriterionName
            | ViolationCode::MissingPerspective => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::UnsupportedFormat => "unsupported-format",
            ViolationCode::DuplicateMetricId => "duplicate-metric-id",
            ViolationCode::DuplicateCriterionId => "duplicate-criterion-id",
            ViolationCode::RankPermutation => "rank-permutation-violation",
            ViolationCode::EmptyCriterion => "empty-criterion",
            ViolationCode::InteractionWeightsSum => "interaction-weights-sum",
            ViolationCode::InteractionWeightsRange => "interaction-weights-range",
            ViolationCode::InvalidSurveyD => "invalid-survey-d",
            ViolationCode::NonPositiveWeight => "non-positive-weight",
            ViolationCode::InvalidNormalization => "invalid-normalization",
            ViolationCode::MissingExtractor => "missing-extractor",
            ViolationCode::SourcePerspectiveMismatch => "source-perspective-mismatch",
            ViolationCode::NonCanonicalMetricCount => "non-canonical-metric-count",
            ViolationCode::UnknownCriterionName => "unknown-criterion-name",
            ViolationCode::MissingPerspective => "missing-perspective",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub severity: Severity,
    /// Location in the document, e.g. `criteria[2].metrics[0].rank`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}[{}] {}: {}", self.code.as_str(), self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            severity: code.severity(),
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// No error-level violations (warnings allowed).
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Warning)
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EttError {
    #[error("malformed ETT document at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("invalid ETT document:\n{0}")]
    Invalid(ValidationReport),
    #[error("DNLog parameter d must be > 1, got {0}")]
    InvalidD(f64),
    #[error("{path}: weighting is `document` but no weight is given")]
    MissingWeight { path: String },
    #[error("serializing ETT: {0}")]
    Serialize(String),
}

/// Parses an ETT document without checking tree invariants.
pub fn parse_ett(document: &str) -> Result<EvaluationTheoryTree, EttError> {
    let de = toml::Deserializer::parse(document).map_err(|e| EttError::Malformed {
        path: String::from("<document>"),
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| EttError::Malformed {
        path: e.path().to_string(),
        message: e.inner().message().to_string(),
    })
}

/// Parses and validates an ETT document. Error-level violations fail the load;
/// warnings are dropped (run [`validate_ett`] to see them).
pub fn load_ett(document: &str) -> Result<EvaluationTheoryTree, EttError> {
    let tree = parse_ett(document)?;
    let report = validate_ett(&tree);
    if !report.is_valid() {
        return Err(EttError::Invalid(report));
    }
    Ok(tree)
}

/// Checks every tree invariant. Violations are returned, never raised.
pub fn validate_ett(tree: &EvaluationTheoryTree) -> ValidationReport {
    use ViolationCode as C;
    let mut report = ValidationReport::default();

    if tree.format != ETT_FORMAT {
        report.push(
            C::UnsupportedFormat,
            "format",
            format!("expected `{ETT_FORMAT}`, found `{}`", tree.format),
        );
    }
    if !(tree.survey_d > 1.0 && tree.survey_d.is_finite()) {
        report.push(C::InvalidSurveyD, "survey_d", format!("d must be > 1, got {}", tree.survey_d));
    }
    let iw = tree.interaction_weights;
    if !(0.0..=1.0).contains(&iw.modeler) || !(0.0..=1.0).contains(&iw.reader) {
        report.push(
            C::InteractionWeightsRange,
            "interaction_weights",
            format!("weights must lie in [0, 1], got ({}, {})", iw.modeler, iw.reader),
        );
    }
    if (iw.modeler + iw.reader - 1.0).abs() > INTERACTION_SUM_TOLERANCE {
        report.push(
            C::InteractionWeightsSum,
            "interaction_weights",
            format!(
                "interaction weights must sum to 1, got {} + {} = {}",
                iw.modeler,
                iw.reader,
                iw.modeler + iw.reader
            ),
        );
    }

    let mut metric_ids: BTreeMap<&str, String> = BTreeMap::new();
    let mut criterion_ids: BTreeSet<&str> = BTreeSet::new();
    let mut criterion_ranks: BTreeMap<Perspective, Vec<(u32, String)>> = BTreeMap::new();

    for (ci, criterion) in tree.criteria.iter().enumerate() {
        let cpath = format!("criteria[{ci}]");
        if !criterion_ids.insert(criterion.id.as_str()) {
            report.push(
                C::DuplicateCriterionId,
                format!("{cpath}.id"),
                format!("duplicate criterion id `{}`", criterion.id),
            );
        }
        if !criterion
            .perspective
            .canonical_criteria()
            .contains(&criterion.name.as_str())
        {
            report.push(
                C::UnknownCriterionName,
                format!("{cpath}.name"),
                format!(
                    "`{}` is not one of the {} reference criteria",
                    criterion.name, criterion.perspective
                ),
            );
        }
        criterion_ranks
            .entry(criterion.perspective)
            .or_default()
            .push((criterion.rank, format!("{cpath}.rank")));
        if let Some(w) = criterion.weight {
            if !(w > 0.0 && w.is_finite()) {
                report.push(C::NonPositiveWeight, format!("{cpath}.weight"), format!("weight {w} must be > 0"));
            }
        }
        if let Some(d) = criterion.survey_d {
            if !(d > 1.0 && d.is_finite()) {
                report.push(C::InvalidSurveyD, format!("{cpath}.survey_d"), format!("d must be > 1, got {d}"));
            }
        }
        if criterion.metrics.is_empty() {
            report.push(C::EmptyCriterion, format!("{cpath}.metrics"), "criterion has no metrics");
        }

        let mut ranks = Vec::new();
        for (mi, metric) in criterion.metrics.iter().enumerate() {
            let mpath = format!("{cpath}.metrics[{mi}]");
            if let Some(first) = metric_ids.insert(metric.id.as_str(), mpath.clone()) {
                report.push(
                    C::DuplicateMetricId,
                    format!("{mpath}.id"),
                    format!("metric id `{}` already used at {first}", metric.id),
                );
            }
            ranks.push((metric.rank, format!("{mpath}.rank")));
            if let Some(w) = metric.weight {
                if !(w > 0.0 && w.is_finite()) {
                    report.push(C::NonPositiveWeight, format!("{mpath}.weight"), format!("weight {w} must be > 0"));
                }
            }
            if !metric.normalization.is_valid() {
                report.push(
                    C::InvalidNormalization,
                    format!("{mpath}.normalization"),
                    "clamp bounds need lo < hi",
                );
            }
            let needs_extractor = matches!(
                metric.source,
                MetricSource::ModelDerived | MetricSource::LanguageRegistry
            );
            if needs_extractor && metric.extractor.is_none() {
                report.push(
                    C::MissingExtractor,
                    format!("{mpath}.extractor"),
                    format!("{} metric `{}` names no extractor", metric.source, metric.id),
                );
            }
            let mismatched = match metric.source {
                MetricSource::ModelerQuestionnaire => criterion.perspective != Perspective::Modeler,
                MetricSource::ReaderQuestionnaire => criterion.perspective != Perspective::Reader,
                _ => false,
            };
            if mismatched {
                report.push(
                    C::SourcePerspectiveMismatch,
                    format!("{mpath}.source"),
                    format!("{} metric under a {} criterion", metric.source, criterion.perspective),
                );
            }
        }
        check_permutation(&mut report, &ranks, &format!("metrics of criterion `{}`", criterion.id));
    }

    for (perspective, ranks) in &criterion_ranks {
        check_permutation(&mut report, ranks, &format!("{perspective} criteria"));
    }
    for perspective in Perspective::ALL {
        if !criterion_ranks.contains_key(&perspective) {
            report.push(
                C::MissingPerspective,
                "criteria",
                format!("no criteria for the {perspective} perspective"),
            );
        }
    }

    let counts = tree.metric_counts();
    if counts.total != CANONICAL_METRIC_COUNT
        || counts.modeler != CANONICAL_MODELER_METRICS
        || counts.reader != CANONICAL_READER_METRICS
    {
        report.push(
            C::NonCanonicalMetricCount,
            "criteria",
            format!(
                "non-canonical metric count: {} ({} modeler / {} reader), reference catalog has \
                 {CANONICAL_METRIC_COUNT} ({CANONICAL_MODELER_METRICS} / {CANONICAL_READER_METRICS})",
                counts.total, counts.modeler, counts.reader
            ),
        );
    }
    report
}

fn check_permutation(report: &mut ValidationReport, ranks: &[(u32, String)], group: &str) {
    let n = ranks.len() as u32;
    let mut seen = BTreeSet::new();
    for (rank, path) in ranks {
        if *rank == 0 || *rank > n {
            report.push(
                ViolationCode::RankPermutation,
                path.clone(),
                format!("rank permutation violation in {group}: rank {rank} outside 1..={n}"),
            );
        } else if !seen.insert(*rank) {
            report.push(
                ViolationCode::RankPermutation,
                path.clone(),
                format!("rank permutation violation in {group}: rank {rank} used twice"),
            );
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricCounts {
    pub total: usize,
    pub modeler: usize,
    pub reader: usize,
}

impl EvaluationTheoryTree {
    pub fn metric_counts(&self) -> MetricCounts {
        let count = |p: Perspective| -> usize {
            self.criteria
                .iter()
                .filter(|c| c.perspective == p)
                .map(|c| c.metrics.len())
                .sum()
        };
        let modeler = count(Perspective::Modeler);
        let reader = count(Perspective::Reader);
        MetricCounts {
            total: modeler + reader,
            modeler,
            reader,
        }
    }

    pub fn criteria_of(&self, perspective: Perspective) -> impl Iterator<Item = &QualityCriterion> {
        self.criteria.iter().filter(move |c| c.perspective == perspective)
    }

    pub fn metrics(&self) -> impl Iterator<Item = (&QualityCriterion, &QualityMetric)> {
        self.criteria
            .iter()
            .flat_map(|c| c.metrics.iter().map(move |m| (c, m)))
    }

    pub fn metric(&self, id: &str) -> Option<(&QualityCriterion, &QualityMetric)> {
        self.metrics().find(|(_, m)| m.id == id)
    }

    /// True when every criterion and metric carries a weight.
    pub fn is_weighted(&self) -> bool {
        self.criteria
            .iter()
            .all(|c| c.weight.is_some() && c.metrics.iter().all(|m| m.weight.is_some()))
    }

    /// Sorts into canonical order: perspective, criterion rank, metric rank.
    pub fn canonicalize(&mut self) {
        self.criteria.sort_by_key(|c| (c.perspective, c.rank));
        for c in &mut self.criteria {
            c.metrics.sort_by_key(|m| m.rank);
        }
    }

    /// Serializes in canonical order.
    pub fn to_toml(&self) -> Result<String, EttError> {
        let mut tree = self.clone();
        tree.canonicalize();
        toml::to_string(&tree).map_err(|e| EttError::Serialize(e.to_string()))
    }

    /// Applies [`assign_weights`] with the tree's own `survey_d`.
    pub fn weighted(self) -> Result<Self, EttError> {
        let d = self.survey_d;
        assign_weights(self, d)
    }
}

/// Fills in every criterion and metric weight. DNLog levels use `d` (or a
/// criterion's own `survey_d` for its metrics); rank 1 gets `d`, rank `n`
/// gets 1 and singleton groups get `d`.
pub fn assign_weights(mut tree: EvaluationTheoryTree, d: f64) -> Result<EvaluationTheoryTree, EttError> {
    if !(d > 1.0 && d.is_finite()) {
        return Err(EttError::InvalidD(d));
    }
    let group_sizes: BTreeMap<Perspective, usize> = Perspective::ALL
        .iter()
        .map(|&p| (p, tree.criteria_of(p).count()))
        .collect();
    let criteria_rule = tree.weighting.criteria;
    let metrics_rule = tree.weighting.metrics;

    for (ci, criterion) in tree.criteria.iter_mut().enumerate() {
        let n = group_sizes[&criterion.perspective];
        criterion.weight = Some(level_weight(
            criteria_rule,
            d,
            n,
            criterion.rank,
            criterion.weight,
            || format!("criteria[{ci}].weight"),
        )?);
        let metric_d = criterion.survey_d.unwrap_or(d);
        if !(metric_d > 1.0 && metric_d.is_finite()) {
            return Err(EttError::InvalidD(metric_d));
        }
        let n = criterion.metrics.len();
        for (mi, metric) in criterion.metrics.iter_mut().enumerate() {
            metric.weight = Some(level_weight(
                metrics_rule,
                metric_d,
                n,
                metric.rank,
                metric.weight,
                || format!("criteria[{ci}].metrics[{mi}].weight"),
            )?);
        }
    }
    Ok(tree)
}

fn level_weight(
    rule: LevelWeighting,
    d: f64,
    n: usize,
    rank: u32,
    existing: Option<f64>,
    path: impl FnOnce() -> String,
) -> Result<f64, EttError> {
    match rule {
        LevelWeighting::Dnlog => Ok(dnlog_weight(d, n, rank as usize)),
        LevelWeighting::Uniform => Ok(1.0),
        LevelWeighting::Document => existing.ok_or_else(|| EttError::MissingWeight { path: path() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
format = "ett/1"
version = "minimal"

[[criteria]]
id = "info"
name = "Information"
perspective = "modeler"
rank = 1

[[criteria.metrics]]
id = "info.completeness"
name = "Completeness"
source = "modeler-questionnaire"
rank = 1
"#;

    #[test]
    fn default_tree_has_reference_shape() {
        let tree = defaults::ett();
        let counts = tree.metric_counts();
        assert_eq!(counts.total, 96);
        assert_eq!(counts.modeler, 54);
        assert_eq!(counts.reader, 42);
        assert_eq!(tree.criteria_of(Perspective::Modeler).count(), 6);
        assert_eq!(tree.criteria_of(Perspective::Reader).count(), 7);
        let report = validate_ett(&tree);
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn minimal_tree_is_valid() {
        let tree = load_ett(MINIMAL).unwrap();
        assert_eq!(tree.metric_counts().total, 1);
        assert_eq!(tree.survey_d, 10.0);
        let report = validate_ett(&tree);
        assert!(report.is_valid());
        // reader perspective missing and catalog size differ: warnings only
        assert!(report.has(ViolationCode::MissingPerspective));
        assert!(report.has(ViolationCode::NonCanonicalMetricCount));
        let weighted = tree.weighted().unwrap();
        assert_eq!(weighted.criteria[0].weight, Some(10.0));
        assert_eq!(weighted.criteria[0].metrics[0].weight, Some(10.0));
    }

    #[test]
    fn shared_rank_is_rejected() {
        let doc = format!(
            "{MINIMAL}
[[criteria.metrics]]
id = \"info.correctness\"
name = \"Correctness\"
source = \"modeler-questionnaire\"
rank = 2

[[criteria.metrics]]
id = \"info.availability\"
name = \"Availability\"
source = \"modeler-questionnaire\"
rank = 2
"
        );
        let err = load_ett(&doc).unwrap_err();
        let EttError::Invalid(report) = err else {
            panic!("expected invalid, got {err}")
        };
        let v = report
            .errors()
            .find(|v| v.code == ViolationCode::RankPermutation)
            .unwrap();
        assert_eq!(v.path, "criteria[0].metrics[2].rank");
        assert!(v.message.contains("rank permutation violation"));
    }

    #[test]
    fn duplicate_metric_id_is_rejected() {
        let doc = format!(
            "{MINIMAL}
[[criteria.metrics]]
id = \"info.completeness\"
name = \"Again\"
source = \"modeler-questionnaire\"
rank = 2
"
        );
        match load_ett(&doc) {
            Err(EttError::Invalid(report)) => {
                assert!(report.has(ViolationCode::DuplicateMetricId))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_perspective_reports_path() {
        let doc = MINIMAL.replace("perspective = \"modeler\"", "perspective = \"auditor\"");
        match load_ett(&doc) {
            Err(EttError::Malformed { path, message }) => {
                assert_eq!(path, "criteria[0].perspective");
                assert!(message.contains("auditor"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_ett("not = [toml"), Err(EttError::Malformed { .. })));
    }

    #[test]
    fn interaction_weights_must_sum_to_one() {
        let mut tree = defaults::ett();
        tree.interaction_weights = InteractionWeights {
            modeler: 0.3,
            reader: 0.3,
        };
        let report = validate_ett(&tree);
        let v = report
            .violations
            .iter()
            .find(|v| v.code == ViolationCode::InteractionWeightsSum)
            .unwrap();
        assert!(v.message.contains("interaction weights must sum to 1"));
        assert!(!report.is_valid());
    }

    #[test]
    fn ninety_five_metrics_is_only_a_warning() {
        let mut tree = defaults::ett();
        let last = tree
            .criteria
            .iter_mut()
            .find(|c| c.metrics.len() > 1)
            .unwrap();
        let n = last.metrics.len() as u32;
        last.metrics.retain(|m| m.rank != n);
        assert_eq!(tree.metric_counts().total, 95);
        let report = validate_ett(&tree);
        assert!(report.is_valid(), "{report}");
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].code, ViolationCode::NonCanonicalMetricCount);
        assert_eq!(report.violations[0].severity, Severity::Warning);
    }

    #[test]
    fn weighting_rules() {
        assert!(matches!(
            assign_weights(defaults::ett(), 1.0),
            Err(EttError::InvalidD(_))
        ));
        assert!(matches!(
            assign_weights(defaults::ett(), 0.5),
            Err(EttError::InvalidD(_))
        ));

        let tree = assign_weights(defaults::ett(), 10.0).unwrap();
        assert!(tree.is_weighted());
        for c in &tree.criteria {
            let n = c.metrics.len();
            for m in &c.metrics {
                let w = m.weight.unwrap();
                assert!(w > 0.0);
                if m.rank == 1 {
                    assert!((w - 10.0).abs() < 1e-12);
                }
                if m.rank as usize == n && n > 1 {
                    assert_eq!(w, 1.0);
                }
            }
        }

        let mut uniform = defaults::ett();
        uniform.weighting.metrics = LevelWeighting::Uniform;
        let uniform = uniform.weighted().unwrap();
        assert!(uniform.metrics().all(|(_, m)| m.weight == Some(1.0)));

        let mut doc = defaults::ett();
        doc.weighting.criteria = LevelWeighting::Document;
        assert!(matches!(doc.weighted(), Err(EttError::MissingWeight { .. })));
    }

    #[test]
    fn canonical_roundtrip() {
        let tree = defaults::ett().weighted().unwrap();
        let text = tree.to_toml().unwrap();
        let back = load_ett(&text).unwrap();
        let mut canon = tree.clone();
        canon.canonicalize();
        assert_eq!(back, canon);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    proptest! {
        #[test]
        fn shuffled_document_roundtrips(seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut tree = defaults::ett();
            tree.criteria.shuffle(&mut rng);
            for c in &mut tree.criteria {
                c.metrics.shuffle(&mut rng);
            }
            let text = toml::to_string(&tree).unwrap();
            let loaded = load_ett(&text).unwrap();
            prop_assert_eq!(&loaded, &tree);
            let mut canon = tree.clone();
            canon.canonicalize();
            prop_assert_eq!(load_ett(&loaded.to_toml().unwrap()).unwrap(), canon);
        }
    }
}
