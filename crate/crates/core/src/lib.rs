//! Comprehension scoring for process models.
//!
//! Quality criteria and metrics are organised in an evaluation theory tree
//! for two perspectives, the modeler and the reader. Metric values come from
//! the model graph, from questionnaires and from a registry of modeling
//! languages; they are weighted by survey ranks and aggregated to per-criterion,
//! per-perspective and combined scores on a [1, 10] scale.

pub mod defaults;
pub mod ett;
pub mod language;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod questionnaire;
pub mod ranking;
pub mod report;
pub mod scoring;

pub use par::Execution;
