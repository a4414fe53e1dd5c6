//! Shipped default configuration: evaluation tree, questionnaires and
//! language descriptors. `init` writes these files out for editing.

use crate::ett::{load_ett, EvaluationTheoryTree};
use crate::language::{LanguageDescriptor, LanguageRegistry};
use crate::questionnaire::QuestionnaireSchema;

pub const ETT_FILE: &str = "ett.toml";
pub const MODELER_SCHEMA_FILE: &str = "questionnaire-modeler.toml";
pub const READER_SCHEMA_FILE: &str = "questionnaire-reader.toml";
pub const LANGUAGES_DIR: &str = "languages";

pub const ETT_TOML: &str = include_str!("../data/ett.toml");
pub const MODELER_SCHEMA_TOML: &str = include_str!("../data/questionnaire-modeler.toml");
pub const READER_SCHEMA_TOML: &str = include_str!("../data/questionnaire-reader.toml");

/// `(file name, contents)` of every shipped language descriptor.
pub const LANGUAGE_FILES: [(&str, &str); 3] = [
    ("bpmn.toml", include_str!("../data/languages/bpmn.toml")),
    ("epc.toml", include_str!("../data/languages/epc.toml")),
    ("uml-ad.toml", include_str!("../data/languages/uml-ad.toml")),
];

pub const SURVEY_SAMPLE_FILE: &str = "survey-sample.csv";
pub const SURVEY_SAMPLE_CSV: &str = include_str!("../data/survey-sample.csv");

/// Language the default pipeline assumes for BPMN input.
pub const DEFAULT_LANGUAGE: &str = "BPMN 2.0";

/// Default evaluation tree (unweighted).
pub fn ett() -> EvaluationTheoryTree {
    load_ett(ETT_TOML).expect("shipped ETT is valid")
}

pub fn modeler_schema() -> QuestionnaireSchema {
    QuestionnaireSchema::parse(MODELER_SCHEMA_TOML).expect("shipped modeler questionnaire is valid")
}

pub fn reader_schema() -> QuestionnaireSchema {
    QuestionnaireSchema::parse(READER_SCHEMA_TOML).expect("shipped reader questionnaire is valid")
}

pub fn languages() -> LanguageRegistry {
    LanguageRegistry::from_descriptors(
        LANGUAGE_FILES
            .iter()
            .map(|(_, text)| LanguageDescriptor::parse(text).expect("shipped descriptor is valid")),
    )
    .expect("shipped descriptors have distinct names")
}

/// Every default file as `(relative path, contents)`.
pub fn files() -> Vec<(String, &'static str)> {
    let mut files = vec![
        (ETT_FILE.to_string(), ETT_TOML),
        (MODELER_SCHEMA_FILE.to_string(), MODELER_SCHEMA_TOML),
        (READER_SCHEMA_FILE.to_string(), READER_SCHEMA_TOML),
        (SURVEY_SAMPLE_FILE.to_string(), SURVEY_SAMPLE_CSV),
    ];
    files.extend(
        LANGUAGE_FILES
            .iter()
            .map(|(name, text)| (format!("{LANGUAGES_DIR}/{name}"), *text)),
    );
    files
}
