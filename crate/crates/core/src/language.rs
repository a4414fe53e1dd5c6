//! Modeling-language descriptors: complexity norm, cross-language complexity
//! normalization and workflow-pattern support.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LANGUAGE_FORMAT: &str = "language/1";

#[derive(Debug, Error, PartialEq)]
pub enum LanguageError {
    #[error("malformed language descriptor at `{path}`: {message}")]
    Malformed { path: String, message: String },
    #[error("language `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("language `{0}` registered twice")]
    Duplicate(String),
    #[error("unknown language `{0}`")]
    Unknown(String),
    #[error("registry is empty")]
    EmptyRegistry,
    #[error("largest complexity norm is zero")]
    ZeroMaximum,
    #[error("language `{name}`: {kind} pattern catalog size is zero")]
    EmptyCatalog { name: String, kind: PatternType },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternType {
    ControlFlow,
    Data,
    Resource,
}

impl PatternType {
    pub const ALL: [PatternType; 3] = [PatternType::ControlFlow, PatternType::Data, PatternType::Resource];
}

impl fmt::Display for PatternType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternType::ControlFlow => "control-flow",
            PatternType::Data => "data",
            PatternType::Resource => "resource",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    None,
    Partial,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternEntry {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: PatternType,
    pub support: Support,
}

/// Number of catalogued patterns per type (percentage denominators).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternCatalog {
    #[serde(default)]
    pub control_flow: u32,
    #[serde(default)]
    pub data: u32,
    #[serde(default)]
    pub resource: u32,
}

impl PatternCatalog {
    pub fn size(&self, kind: PatternType) -> u32 {
        match kind {
            PatternType::ControlFlow => self.control_flow,
            PatternType::Data => self.data,
            PatternType::Resource => self.resource,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSupportTable {
    #[serde(default)]
    pub catalog: PatternCatalog,
    #[serde(default)]
    pub entries: Vec<PatternEntry>,
}

impl PatternSupportTable {
    /// Full and partial counts for one pattern type.
    pub fn supported(&self, kind: PatternType) -> (u32, u32) {
        self.entries
            .iter()
            .filter(|p| p.kind == kind)
            .fold((0, 0), |(full, partial), p| match p.support {
                Support::Full => (full + 1, partial),
                Support::Partial => (full, partial + 1),
                Support::None => (full, partial),
            })
    }
}

/// Counts describing one modeling language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageDescriptor {
    pub format: String,
    pub name: String,
    /// Number of modeling elements (x).
    pub elements: f64,
    /// Characteristics per element (y).
    pub characteristics: f64,
    /// Relationships per element (z).
    pub relationships: f64,
    #[serde(default)]
    pub patterns: PatternSupportTable,
}

impl LanguageDescriptor {
    pub fn parse(document: &str) -> Result<Self, LanguageError> {
        let de = toml::Deserializer::parse(document).map_err(|e| LanguageError::Malformed {
            path: String::from("<document>"),
            message: e.to_string(),
        })?;
        let descriptor: LanguageDescriptor =
            serde_path_to_error::deserialize(de).map_err(|e| LanguageError::Malformed {
                path: e.path().to_string(),
                message: e.inner().message().to_string(),
            })?;
        descriptor.validate()?;
        Ok(descriptor)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn validate(&self) -> Result<(), LanguageError> {
        let invalid = |reason: String| LanguageError::Invalid {
            name: self.name.clone(),
            reason,
        };
        if self.format != LANGUAGE_FORMAT {
            return Err(invalid(format!(
                "unsupported format `{}`, expected `{LANGUAGE_FORMAT}`",
                self.format
            )));
        }
        let counts = [self.elements, self.characteristics, self.relationships];
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(invalid(String::from("counts must be finite and non-negative")));
        }
        if counts.iter().all(|c| *c == 0.0) {
            return Err(invalid(String::from("counts are all zero")));
        }
        let mut seen = BTreeSet::new();
        for p in &self.patterns.entries {
            if !seen.insert((p.kind, p.id.as_str())) {
                return Err(invalid(format!("pattern `{}` listed twice for {}", p.id, p.kind)));
            }
        }
        for kind in PatternType::ALL {
            let (full, partial) = self.patterns.supported(kind);
            let size = self.patterns.catalog.size(kind);
            if full + partial > size {
                return Err(invalid(format!(
                    "{} supported {kind} patterns exceed catalog size {size}",
                    full + partial
                )));
            }
        }
        Ok(())
    }
}

/// Euclidean norm of the (elements, characteristics, relationships) vector.
pub fn complexity_score(descriptor: &LanguageDescriptor) -> f64 {
    let (x, y, z) = (descriptor.elements, descriptor.characteristics, descriptor.relationships);
    (x * x + y * y + z * z).sqrt()
}

/// How complexity norms are mapped onto the [1, 10] scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexityNormalization {
    /// `10 - (10c - c) / (10 max)`: the most complex language lands on 9.1,
    /// a zero norm on 10.
    #[default]
    Verbatim,
    /// Not the reference formula: `10 - 9c / max`, spanning [1, 10].
    FullRange,
}

/// Normalized complexity of a single norm given the registry maximum.
pub fn normalized_complexity(norm: f64, max: f64, mode: ComplexityNormalization) -> f64 {
    match mode {
        // (10c - c) / (10 max) evaluated as 9 (c / max) / 10 so that c == max
        // gives exactly 9.1
        ComplexityNormalization::Verbatim => 10.0 - 9.0 * (norm / max) / 10.0,
        ComplexityNormalization::FullRange => 10.0 - 9.0 * (norm / max),
    }
}

/// Control-flow, data and resource support counts (full + partial) and their
/// sum, plus per-type coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternScore {
    pub control_flow: u32,
    pub data: u32,
    pub resource: u32,
    /// Sum of the three counts.
    pub total: u32,
    /// Supported share of the control-flow catalog, in [0, 1]; partial
    /// support is weighted by `partial_weight`.
    pub control_flow_share: f64,
    pub data_share: Option<f64>,
    pub resource_share: Option<f64>,
}

/// Pattern support score. Partial support counts like full support in the
/// totals; in the shares it is weighted by `partial_weight` (1.0 treats both
/// alike).
pub fn pattern_score(
    descriptor: &LanguageDescriptor,
    partial_weight: f64,
) -> Result<PatternScore, LanguageError> {
    let table = &descriptor.patterns;
    let share = |kind: PatternType| -> Option<f64> {
        let size = table.catalog.size(kind);
        (size > 0).then(|| {
            let (full, partial) = table.supported(kind);
            ((full as f64 + partial_weight * partial as f64) / size as f64).clamp(0.0, 1.0)
        })
    };
    let count = |kind: PatternType| {
        let (f, p) = table.supported(kind);
        f + p
    };
    let control_flow_share = share(PatternType::ControlFlow).ok_or_else(|| LanguageError::EmptyCatalog {
        name: descriptor.name.clone(),
        kind: PatternType::ControlFlow,
    })?;
    let (control_flow, data, resource) = (
        count(PatternType::ControlFlow),
        count(PatternType::Data),
        count(PatternType::Resource),
    );
    Ok(PatternScore {
        control_flow,
        data,
        resource,
        total: control_flow + data + resource,
        control_flow_share,
        data_share: share(PatternType::Data),
        resource_share: share(PatternType::Resource),
    })
}

/// Share of supported patterns of one type.
pub fn pattern_share(
    descriptor: &LanguageDescriptor,
    kind: PatternType,
    partial_weight: f64,
) -> Result<f64, LanguageError> {
    let size = descriptor.patterns.catalog.size(kind);
    if size == 0 {
        return Err(LanguageError::EmptyCatalog {
            name: descriptor.name.clone(),
            kind,
        });
    }
    let (full, partial) = descriptor.patterns.supported(kind);
    Ok(((full as f64 + partial_weight * partial as f64) / size as f64).clamp(0.0, 1.0))
}

/// Registered languages keyed by name. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LanguageRegistry {
    languages: BTreeMap<String, LanguageDescriptor>,
}

impl LanguageRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, descriptor: LanguageDescriptor) -> Result<(), LanguageError> {
        descriptor.validate()?;
        if self.languages.contains_key(&descriptor.name) {
            return Err(LanguageError::Duplicate(descriptor.name));
        }
        self.languages.insert(descriptor.name.clone(), descriptor);
        Ok(())
    }

    pub fn from_descriptors(
        descriptors: impl IntoIterator<Item = LanguageDescriptor>,
    ) -> Result<Self, LanguageError> {
        let mut registry = Self::new();
        for d in descriptors {
            registry.register(d)?;
        }
        Ok(registry)
    }

    pub fn get(&self, name: &str) -> Result<&LanguageDescriptor, LanguageError> {
        self.languages
            .get(name)
            .or_else(|| {
                self.languages
                    .values()
                    .find(|d| d.name.eq_ignore_ascii_case(name))
            })
            .ok_or_else(|| LanguageError::Unknown(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LanguageDescriptor> {
        self.languages.values()
    }

    /// Normalized complexity of every language.
    pub fn normalize_complexity(
        &self,
        mode: ComplexityNormalization,
    ) -> Result<BTreeMap<String, f64>, LanguageError> {
        if self.languages.is_empty() {
            return Err(LanguageError::EmptyRegistry);
        }
        let norms: BTreeMap<&str, f64> = self
            .languages
            .iter()
            .map(|(k, d)| (k.as_str(), complexity_score(d)))
            .collect();
        let max = norms.values().copied().fold(0.0, f64::max);
        if max.is_nan() || max <= 0.0 {
            return Err(LanguageError::ZeroMaximum);
        }
        Ok(norms
            .into_iter()
            .map(|(k, c)| (k.to_string(), normalized_complexity(c, max, mode)))
            .collect())
    }

    /// One comparison row per language, ordered by name.
    pub fn compare(
        &self,
        mode: ComplexityNormalization,
        partial_weight: f64,
    ) -> Result<Vec<LanguageSummary>, LanguageError> {
        let normalized = self.normalize_complexity(mode)?;
        self.languages
            .iter()
            .map(|(name, d)| {
                Ok(LanguageSummary {
                    name: name.clone(),
                    complexity: complexity_score(d),
                    normalized_complexity: normalized[name],
                    patterns: pattern_score(d, partial_weight)?,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageSummary {
    pub name: String,
    pub complexity: f64,
    pub normalized_complexity: f64,
    pub patterns: PatternScore,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defaults;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn descriptor(name: &str, x: f64, y: f64, z: f64) -> LanguageDescriptor {
        LanguageDescriptor {
            format: LANGUAGE_FORMAT.into(),
            name: name.into(),
            elements: x,
            characteristics: y,
            relationships: z,
            patterns: PatternSupportTable {
                catalog: PatternCatalog {
                    control_flow: 20,
                    data: 0,
                    resource: 0,
                },
                entries: vec![],
            },
        }
    }

    #[test]
    fn norm_examples() {
        assert_eq!(complexity_score(&descriptor("a", 3.0, 4.0, 0.0)), 5.0);
        assert_relative_eq!(
            complexity_score(&descriptor("a", 1.0, 1.0, 1.0)),
            1.732_050_8,
            epsilon = 1e-7
        );
    }

    #[test]
    fn shipped_bpmn_norm_matches_hand_evaluation() {
        // 52, 4.2, 3.1 from data/languages/bpmn.toml:
        // 2704 + 17.64 + 9.61 = 2731.25, sqrt = 52.26136...
        let reg = defaults::languages();
        let bpmn = reg.get("BPMN 2.0").unwrap();
        assert_relative_eq!(complexity_score(bpmn), 2731.25f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(complexity_score(bpmn), 52.261362, epsilon = 1e-6);
    }

    #[test]
    fn normalization_examples() {
        let reg = LanguageRegistry::from_descriptors([
            descriptor("max", 3.0, 4.0, 0.0),
            descriptor("half", 1.5, 2.0, 0.0),
        ])
        .unwrap();
        let n = reg.normalize_complexity(ComplexityNormalization::Verbatim).unwrap();
        assert_eq!(n["max"], 9.1);
        assert_relative_eq!(n["half"], 9.55, epsilon = 1e-12);
        assert_eq!(normalized_complexity(0.0, 5.0, ComplexityNormalization::Verbatim), 10.0);

        let full = reg.normalize_complexity(ComplexityNormalization::FullRange).unwrap();
        assert_eq!(full["max"], 1.0);
        assert_relative_eq!(full["half"], 5.5, epsilon = 1e-12);

        assert_eq!(
            LanguageRegistry::new().normalize_complexity(ComplexityNormalization::Verbatim),
            Err(LanguageError::EmptyRegistry)
        );
    }

    #[test]
    fn registration_rules() {
        let mut reg = LanguageRegistry::new();
        assert!(matches!(
            reg.register(descriptor("zero", 0.0, 0.0, 0.0)),
            Err(LanguageError::Invalid { .. })
        ));
        assert!(matches!(
            reg.register(descriptor("neg", -1.0, 2.0, 0.0)),
            Err(LanguageError::Invalid { .. })
        ));
        reg.register(descriptor("a", 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(
            reg.register(descriptor("a", 1.0, 0.0, 0.0)),
            Err(LanguageError::Duplicate("a".into()))
        );
        assert!(reg.get("A").is_ok());
        assert!(matches!(reg.get("b"), Err(LanguageError::Unknown(_))));
    }

    #[test]
    fn pattern_examples() {
        let mut d = descriptor("a", 1.0, 1.0, 1.0);
        let s = pattern_score(&d, 1.0).unwrap();
        assert_eq!((s.total, s.control_flow_share), (0, 0.0));

        d.patterns.entries = (1..=20)
            .map(|k| PatternEntry {
                id: format!("WCP-{k}"),
                kind: PatternType::ControlFlow,
                support: Support::Full,
            })
            .collect();
        let s = pattern_score(&d, 1.0).unwrap();
        assert_eq!(s.total, 20);
        assert_eq!(s.control_flow_share, 1.0);
        assert_eq!(s.data_share, None);
        assert!(pattern_share(&d, PatternType::Data, 1.0).is_err());

        d.patterns.catalog.control_flow = 0;
        d.patterns.entries.clear();
        assert!(matches!(
            pattern_score(&d, 1.0),
            Err(LanguageError::EmptyCatalog { .. })
        ));
    }

    #[test]
    fn shipped_pattern_counts_match_row_counts() {
        // row count over the fixture text, independent of the table types
        for (file, text) in defaults::LANGUAGE_FILES {
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            let mut current_type = "";
            for line in text.lines() {
                if let Some(t) = line.strip_prefix("type = ") {
                    current_type = t.trim_matches('"');
                }
                if let Some(s) = line.strip_prefix("support = ") {
                    if s.trim_matches('"') != "none" {
                        *counts.entry(current_type).or_default() += 1;
                    }
                }
            }
            let d = LanguageDescriptor::parse(text).unwrap();
            let score = pattern_score(&d, 1.0).unwrap();
            assert_eq!(score.control_flow, counts["control-flow"], "{file}");
            assert_eq!(score.total, counts.values().sum::<u32>(), "{file}");
        }
        let bpmn = defaults::languages();
        let s = pattern_score(bpmn.get("BPMN 2.0").unwrap(), 1.0).unwrap();
        assert_eq!(s.control_flow, 19);
        assert_eq!(s.total, 19 + 8 + 3);
        assert_relative_eq!(s.control_flow_share, 0.95);
    }

    #[test]
    fn descriptor_parse_errors_carry_paths() {
        let text = defaults::LANGUAGE_FILES[0].1.replacen("support = \"full\"", "support = \"most\"", 1);
        match LanguageDescriptor::parse(&text) {
            Err(LanguageError::Malformed { path, .. }) => assert_eq!(path, "patterns.entries[0].support"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn normalization_range_and_antitone(
            vecs in proptest::collection::vec((0.01f64..100.0, 0.0f64..50.0, 0.0f64..50.0), 1..8)
        ) {
            let reg = LanguageRegistry::from_descriptors(
                vecs.iter().enumerate().map(|(i, (x, y, z))| descriptor(&format!("l{i}"), *x, *y, *z)),
            ).unwrap();
            let n = reg.normalize_complexity(ComplexityNormalization::Verbatim).unwrap();
            let mut pairs: Vec<(f64, f64)> = reg
                .iter()
                .map(|d| (complexity_score(d), n[&d.name]))
                .collect();
            for (_, c) in &pairs {
                prop_assert!((9.1..=10.0).contains(c));
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pairs.windows(2) {
                prop_assert!(w[1].1 <= w[0].1);
            }
        }

        #[test]
        fn norm_is_homogeneous(x in 0.0f64..100.0, y in 0.0f64..100.0, z in 0.01f64..100.0, c in 0.01f64..100.0) {
            let a = complexity_score(&descriptor("a", x, y, z));
            let b = complexity_score(&descriptor("b", c * x, c * y, c * z));
            prop_assert!((b - c * a).abs() <= 1e-9 * b.max(1.0));
        }

        #[test]
        fn upgrading_support_never_lowers_score(
            supports in proptest::collection::vec(0u8..3, 1..20),
            idx in 0usize..20,
        ) {
            let level = |s: u8| match s { 0 => Support::None, 1 => Support::Partial, _ => Support::Full };
            let mut d = descriptor("a", 1.0, 1.0, 1.0);
            d.patterns.entries = supports.iter().enumerate().map(|(i, s)| PatternEntry {
                id: format!("WCP-{i}"),
                kind: PatternType::ControlFlow,
                support: level(*s),
            }).collect();
            let before = pattern_score(&d, 0.5).unwrap();
            let i = idx % supports.len();
            let upgraded = level((supports[i] + 1).min(2));
            d.patterns.entries[i].support = upgraded;
            let after = pattern_score(&d, 0.5).unwrap();
            prop_assert!(after.total >= before.total);
            prop_assert!(after.control_flow_share >= before.control_flow_share);
        }
    }
}
