use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::Deserialize;

use comprehend_core::defaults;
use comprehend_core::ett::{load_ett, EvaluationTheoryTree};
use comprehend_core::language::{LanguageDescriptor, LanguageRegistry};
use comprehend_core::model::{parse_model, ParseWarning};
use comprehend_core::pipeline::Assessment;
use comprehend_core::questionnaire::{QuestionnaireSchema, ResponseSet};

use crate::error::{fail, Failure, Outcome};

pub const CONFIG_ENV: &str = "COMPREHEND_CONFIG_DIR";
pub const DEFAULT_CONFIG_DIR: &str = ".comprehend";

pub fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(anyhow!("cannot read {}: {e}", path.display())))
}

/// Where configuration files come from: an explicit directory, the default
/// `.comprehend` directory if present, or the shipped defaults.
#[derive(Debug, Clone)]
pub struct Config {
    pub dir: Option<PathBuf>,
}

impl Config {
    pub fn resolve(dir: Option<PathBuf>) -> Outcome<Self> {
        match dir {
            Some(d) if !d.is_dir() => Err(Failure::input(anyhow!(
                "config directory {} does not exist",
                d.display()
            ))),
            Some(d) => Ok(Config { dir: Some(d) }),
            None => {
                let d = PathBuf::from(DEFAULT_CONFIG_DIR);
                Ok(Config {
                    dir: d.is_dir().then_some(d),
                })
            }
        }
    }

    fn file(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name)).filter(|p| p.is_file())
    }

    pub fn ett(&self, explicit: Option<&Path>) -> Outcome<EvaluationTheoryTree> {
        let path = explicit.map(Path::to_path_buf).or_else(|| self.file(defaults::ETT_FILE));
        match path {
            Some(p) => load_ett(&read(&p)?).map_err(|e| fail(e).context(format!("in {}", p.display()))),
            None => Ok(defaults::ett()),
        }
    }

    pub fn schema(&self, file: &str, explicit: Option<&Path>) -> Outcome<QuestionnaireSchema> {
        let path = explicit.map(Path::to_path_buf).or_else(|| self.file(file));
        let text = match &path {
            Some(p) => read(p)?,
            None if file == defaults::MODELER_SCHEMA_FILE => defaults::MODELER_SCHEMA_TOML.to_string(),
            None => defaults::READER_SCHEMA_TOML.to_string(),
        };
        QuestionnaireSchema::parse(&text).map_err(|e| {
            let where_ = path.map_or_else(|| "shipped schema".to_string(), |p| p.display().to_string());
            fail(e).context(format!("in {where_}"))
        })
    }

    pub fn modeler_schema(&self) -> Outcome<QuestionnaireSchema> {
        self.schema(defaults::MODELER_SCHEMA_FILE, None)
    }

    pub fn reader_schema(&self) -> Outcome<QuestionnaireSchema> {
        self.schema(defaults::READER_SCHEMA_FILE, None)
    }

    /// Descriptors from `explicit`, else `<config>/languages`, else the
    /// shipped set. Files are read in name order.
    pub fn languages(&self, explicit: Option<&Path>) -> Outcome<LanguageRegistry> {
        let dir = explicit.map(Path::to_path_buf).or_else(|| {
            self.dir
                .as_ref()
                .map(|d| d.join(defaults::LANGUAGES_DIR))
                .filter(|p| p.is_dir())
        });
        let Some(dir) = dir else {
            return Ok(defaults::languages());
        };
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Failure::input(anyhow!("cannot list {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        let mut registry = LanguageRegistry::new();
        for f in files {
            let d = LanguageDescriptor::parse(&read(&f)?).map_err(|e| fail(e).context(format!("in {}", f.display())))?;
            registry.register(d).map_err(fail)?;
        }
        Ok(registry)
    }
}

pub fn load_responses(path: &Path) -> Outcome<ResponseSet> {
    ResponseSet::parse(&read(path)?).map_err(|e| fail(e).context(format!("in {}", path.display())))
}

pub fn load_model(path: &Path, language: &str) -> Outcome<(comprehend_core::model::ProcessModelGraph, Vec<ParseWarning>)> {
    let parsed = parse_model(&read(path)?, language).map_err(|e| fail(e).context(format!("in {}", path.display())))?;
    Ok((parsed.graph, parsed.warnings))
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string())
}

/// `bundle.toml` inside a bundle directory. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleManifest {
    model_id: Option<String>,
    language: Option<String>,
    model: Option<String>,
    modeler: Option<String>,
    readers: Option<String>,
}

/// Loads a bundle directory: `model.bpmn`, `modeler.toml` and one response
/// file per reader under `readers/`.
pub fn load_bundle(dir: &Path, default_language: &str) -> Outcome<(Assessment, Vec<ParseWarning>)> {
    if !dir.is_dir() {
        return Err(Failure::input(anyhow!("bundle {} is not a directory", dir.display())));
    }
    let manifest_path = dir.join("bundle.toml");
    let manifest: BundleManifest = if manifest_path.is_file() {
        toml::from_str(&read(&manifest_path)?)
            .map_err(|e| Failure::input(anyhow!("in {}: {}", manifest_path.display(), e.message())))?
    } else {
        BundleManifest::default()
    };
    let language = manifest.language.unwrap_or_else(|| default_language.to_string());
    let model_path = dir.join(manifest.model.as_deref().unwrap_or("model.bpmn"));
    let (model, warnings) = load_model(&model_path, &language)?;
    let modeler = load_responses(&dir.join(manifest.modeler.as_deref().unwrap_or("modeler.toml")))?;
    let readers_dir = dir.join(manifest.readers.as_deref().unwrap_or("readers"));
    let mut reader_files: Vec<PathBuf> = fs::read_dir(&readers_dir)
        .map_err(|e| Failure::input(anyhow!("cannot list {}: {e}", readers_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    reader_files.sort();
    if reader_files.is_empty() {
        return Err(Failure::input(anyhow!(
            "bundle {} has no reader response files",
            dir.display()
        )));
    }
    let readers = reader_files.iter().map(|p| load_responses(p)).collect::<Outcome<Vec<_>>>()?;
    let model_id = manifest.model_id.unwrap_or_else(|| {
        dir.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into())
    });
    Ok((
        Assessment {
            model_id,
            language,
            model,
            modeler,
            readers,
        },
        warnings,
    ))
}
