//! `comprehend` command-line front end.
//!
//! [`run`] parses arguments and executes one subcommand against the given
//! streams, returning the process exit code: 0 on success, 1 when input is
//! well-formed but fails validation, 2 for usage and input errors.

mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{CONFIG_ENV, DEFAULT_CONFIG_DIR};
pub use error::{EXIT_INPUT, EXIT_VALIDATION};

#[derive(Debug, Parser)]
#[command(name = "comprehend", version, about = "Score the comprehensibility of process models")]
pub struct Cli {
    /// Directory holding ett.toml, questionnaire schemas and languages/.
    #[arg(long, global = true, env = "COMPREHEND_CONFIG_DIR", value_name = "DIR")]
    pub config_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one model, or one or more bundle directories.
    Score(ScoreArgs),
    /// Evaluation theory tree tools.
    Ett {
        #[command(subcommand)]
        command: EttCommand,
    },
    /// Survey rank aggregation.
    Survey {
        #[command(subcommand)]
        command: SurveyCommand,
    },
    /// Modeling language registry.
    Language {
        #[command(subcommand)]
        command: LanguageCommand,
    },
    /// Process model tools.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    /// Questionnaire tools.
    Questionnaire {
        #[command(subcommand)]
        command: QuestionnaireCommand,
    },
    /// Write the default configuration files into a directory.
    Init(InitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Markdown,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// BPMN 2.0 XML model file.
    #[arg(long, value_name = "FILE", conflicts_with = "bundle", required_unless_present = "bundle")]
    pub model: Option<PathBuf>,
    /// Modeler questionnaire response file.
    #[arg(long, value_name = "FILE", conflicts_with = "bundle", required_unless_present = "bundle")]
    pub modeler: Option<PathBuf>,
    /// Reader questionnaire response file; repeat for several readers.
    #[arg(long = "reader", value_name = "FILE", conflicts_with = "bundle", required_unless_present = "bundle")]
    pub readers: Vec<PathBuf>,
    /// Modeling language of the model, as named in the registry.
    #[arg(long, conflicts_with = "bundle")]
    pub language: Option<String>,
    /// Identifier shown in reports (defaults to the model file name).
    #[arg(long, conflicts_with = "bundle")]
    pub model_id: Option<String>,
    /// Bundle directory; repeat to score several models.
    #[arg(long, value_name = "DIR")]
    pub bundle: Vec<PathBuf>,
    /// Evaluation theory tree file.
    #[arg(long, value_name = "FILE")]
    pub ett: Option<PathBuf>,
    /// Language descriptor directory.
    #[arg(long, value_name = "DIR")]
    pub languages: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Scores below this value are reported as noise.
    #[arg(long, default_value_t = comprehend_core::scoring::DEFAULT_NOISE_THRESHOLD)]
    pub threshold: f64,
    /// Interaction weights `W_M,W_R` (or just `W_M`).
    #[arg(long, value_name = "W_M[,W_R]")]
    pub weights: Option<String>,
    /// Weight of partially supported patterns in the control-flow share.
    #[arg(long, default_value_t = 1.0)]
    pub partial_weight: f64,
    /// Write to this file (one model) or directory (several bundles).
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Worker threads for scoring several bundles (1 runs sequentially).
    #[arg(long, short)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum EttCommand {
    /// Check an evaluation theory tree and list every violation.
    Validate {
        /// Tree file (defaults to the configured or shipped tree).
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum SurveyCommand {
    /// Order survey items by their weighted mean rank.
    Rank(RankArgs),
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// CSV with `item,rank,fraction` rows.
    pub file: PathBuf,
    /// dnlog, rank-sum, reciprocal-rank, rank-exponent or dcg.
    #[arg(long, default_value = "dnlog")]
    pub method: String,
    /// DNLog parameter.
    #[arg(long, default_value_t = 10.0)]
    pub d: f64,
    /// Rank-exponent power.
    #[arg(long, default_value_t = 2.0)]
    pub exponent: f64,
    /// Show every method side by side.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum LanguageCommand {
    /// Complexity and pattern support of every registered language.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Language descriptor directory.
    #[arg(long, value_name = "DIR")]
    pub languages: Option<PathBuf>,
    /// Map complexity onto the whole [1, 10] range.
    #[arg(long)]
    pub full_range: bool,
    #[arg(long, default_value_t = 1.0)]
    pub partial_weight: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Parse a model and show its structural metrics.
    Inspect {
        file: PathBuf,
        #[arg(long, default_value = comprehend_core::defaults::DEFAULT_LANGUAGE)]
        language: String,
        #[arg(long, value_name = "FILE")]
        ett: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerspectiveArg {
    Modeler,
    Reader,
}

#[derive(Debug, Subcommand)]
pub enum QuestionnaireCommand {
    /// Answer a questionnaire on the terminal and write a response file.
    Fill {
        #[arg(long, value_enum)]
        perspective: PerspectiveArg,
        #[arg(long)]
        respondent: String,
        #[arg(long, short, value_name = "FILE")]
        output: PathBuf,
        /// Schema file (defaults to the configured or shipped schema).
        #[arg(long, value_name = "FILE")]
        schema: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[arg(default_value = DEFAULT_CONFIG_DIR)]
    pub dir: PathBuf,
    /// Overwrite existing files.
    #[arg(long)]
    pub force: bool,
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match commands::dispatch(cli, input, out, err) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "error: {failure}");
            failure.code
        }
    }
}
