use std::fmt;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            error: error.into(),
        }
    }

    pub fn context(self, what: impl fmt::Display + Send + Sync + 'static) -> Self {
        Failure {
            code: self.code,
            error: self.error.context(what),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Sorts library errors into input errors (unreadable or malformed input)
/// and validation failures (well-formed input breaking a rule).
pub trait Classify {
    fn code(&self) -> i32;
}

use comprehend_core::ett::EttError;
use comprehend_core::language::LanguageError;
use comprehend_core::model::ParseError;
use comprehend_core::pipeline::PipelineError;
use comprehend_core::questionnaire::QuestionnaireError;
use comprehend_core::ranking::RankingError;
use comprehend_core::report::ReportError;

impl Classify for EttError {
    fn code(&self) -> i32 {
        match self {
            EttError::Malformed { .. } => EXIT_INPUT,
            _ => EXIT_VALIDATION,
        }
    }
}

impl Classify for QuestionnaireError {
    fn code(&self) -> i32 {
        match self {
            QuestionnaireError::InvalidResponses { .. } | QuestionnaireError::Binding(_) => EXIT_VALIDATION,
            _ => EXIT_INPUT,
        }
    }
}

impl Classify for LanguageError {
    fn code(&self) -> i32 {
        match self {
            LanguageError::Malformed { .. } | LanguageError::Unknown(_) => EXIT_INPUT,
            _ => EXIT_VALIDATION,
        }
    }
}

impl Classify for ParseError {
    fn code(&self) -> i32 {
        EXIT_INPUT
    }
}

impl Classify for RankingError {
    fn code(&self) -> i32 {
        match self {
            RankingError::Format { .. } | RankingError::Csv(_) => EXIT_INPUT,
            _ => EXIT_VALIDATION,
        }
    }
}

impl Classify for ReportError {
    fn code(&self) -> i32 {
        match self {
            ReportError::UnsupportedFormat(_) => EXIT_INPUT,
            _ => EXIT_VALIDATION,
        }
    }
}

impl Classify for PipelineError {
    fn code(&self) -> i32 {
        match self {
            PipelineError::Ett(e) => e.code(),
            PipelineError::Language(e) => e.code(),
            PipelineError::Questionnaire(QuestionnaireError::NoRespondents) => EXIT_INPUT,
            PipelineError::Questionnaire(e) => e.code(),
            _ => EXIT_VALIDATION,
        }
    }
}

/// Wraps a classified error.
pub fn fail<E>(e: E) -> Failure
where
    E: Classify + std::error::Error + Send + Sync + 'static,
{
    Failure {
        code: e.code(),
        error: e.into(),
    }
}
