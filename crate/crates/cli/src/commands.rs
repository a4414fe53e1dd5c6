use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::Serialize;

use comprehend_core::defaults;
use comprehend_core::ett::{parse_ett, validate_ett, InteractionWeights};
use comprehend_core::language::ComplexityNormalization;
use comprehend_core::model::{extract_metrics, normalize_metric, EdgeKind, GraphStats, ParseWarning};
use comprehend_core::pipeline::{Assessment, Pipeline};
use comprehend_core::questionnaire::fill_interactive;
use comprehend_core::ranking::{compare_methods_with, rank_items, RankMethod, SurveyDataset};
use comprehend_core::report::{export, parse_csv, ReportFormat};
use comprehend_core::scoring::ComprehensionEvaluation;
use comprehend_core::Execution;

use crate::config::{load_bundle, load_model, load_responses, read, stem, Config};
use crate::error::{fail, Failure, Outcome};
use crate::{
    Cli, Command, CompareArgs, EttCommand, Format, InitArgs, LanguageCommand, ModelCommand, PerspectiveArg,
    QuestionnaireCommand, RankArgs, ScoreArgs, SurveyCommand,
};

pub fn dispatch(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<i32> {
    // `init` must not pick up an existing config directory
    if let Command::Init(args) = cli.command {
        return init(args, out);
    }
    let config = Config::resolve(cli.config_dir)?;
    match cli.command {
        Command::Score(args) => score(&config, args, out, err),
        Command::Ett {
            command: EttCommand::Validate { file, format },
        } => ett_validate(&config, file, format, out),
        Command::Survey {
            command: SurveyCommand::Rank(args),
        } => survey_rank(args, out),
        Command::Language {
            command: LanguageCommand::Compare(args),
        } => language_compare(&config, args, out),
        Command::Model {
            command:
                ModelCommand::Inspect {
                    file,
                    language,
                    ett,
                    format,
                },
        } => model_inspect(&config, &file, &language, ett.as_deref(), format, out, err),
        Command::Questionnaire {
            command:
                QuestionnaireCommand::Fill {
                    perspective,
                    respondent,
                    output,
                    schema,
                    force,
                },
        } => questionnaire_fill(&config, perspective, &respondent, &output, schema.as_deref(), force, input, out),
        Command::Init(_) => unreachable!(),
    }
}

fn emit(out: &mut dyn Write, body: &[u8]) -> Outcome<()> {
    out.write_all(body)
        .map_err(|e| Failure::input(anyhow!("writing output: {e}")))
}

fn write_file(path: &Path, body: &[u8]) -> Outcome<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::input(anyhow!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, body).map_err(|e| Failure::input(anyhow!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn report_format(f: Format) -> ReportFormat {
    match f {
        Format::Text => ReportFormat::Text,
        Format::Markdown => ReportFormat::Markdown,
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    }
}

fn parse_weights(text: &str) -> Outcome<InteractionWeights> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Failure::input(anyhow!("invalid weight `{s}` in --weights")))
    };
    let w = match parts.as_slice() {
        [m] => InteractionWeights::from_modeler(num(m)?),
        [m, r] => InteractionWeights {
            modeler: num(m)?,
            reader: num(r)?,
        },
        _ => return Err(Failure::input(anyhow!("--weights expects W_M or W_M,W_R"))),
    };
    if !w.is_valid() {
        return Err(Failure::input(anyhow!(
            "--weights ({}, {}) must be non-negative and sum to 1",
            w.modeler,
            w.reader
        )));
    }
    Ok(w)
}

fn warn(err: &mut dyn Write, model: &str, warnings: &[ParseWarning]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {model}: line {}: {}: {}", w.line, w.element, w.message);
    }
}

fn score(config: &Config, args: ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<i32> {
    if !args.threshold.is_finite() {
        return Err(Failure::input(anyhow!("--threshold must be a finite number")));
    }
    if !(0.0..=1.0).contains(&args.partial_weight) {
        return Err(Failure::input(anyhow!("--partial-weight must lie in [0, 1]")));
    }
    if args.jobs == Some(0) {
        return Err(Failure::input(anyhow!("--jobs must be at least 1")));
    }
    let weights = args.weights.as_deref().map(parse_weights).transpose()?;

    let tree = config.ett(args.ett.as_deref())?;
    let registry = config.languages(args.languages.as_deref())?;
    let mut pipeline =
        Pipeline::new(tree, registry, config.modeler_schema()?, config.reader_schema()?).map_err(fail)?;
    pipeline.threshold = args.threshold;
    pipeline.partial_weight = args.partial_weight;
    if let Some(w) = weights {
        pipeline.set_interaction_weights(w);
    }

    let mut assessments: Vec<Assessment> = Vec::new();
    if args.bundle.is_empty() {
        let model = args.model.as_deref().expect("required by clap");
        let language = args
            .language
            .clone()
            .unwrap_or_else(|| defaults::DEFAULT_LANGUAGE.to_string());
        let (graph, warnings) = load_model(model, &language)?;
        let model_id = args.model_id.clone().unwrap_or_else(|| stem(model));
        warn(err, &model_id, &warnings);
        let modeler = load_responses(args.modeler.as_deref().expect("required by clap"))?;
        let readers = args.readers.iter().map(|p| load_responses(p)).collect::<Outcome<Vec<_>>>()?;
        assessments.push(Assessment {
            model_id,
            language,
            model: graph,
            modeler,
            readers,
        });
    } else {
        for dir in &args.bundle {
            let (a, warnings) = load_bundle(dir, defaults::DEFAULT_LANGUAGE)?;
            warn(err, &a.model_id, &warnings);
            assessments.push(a);
        }
    }

    let results = match args.jobs {
        Some(1) => pipeline.evaluate_batch(&assessments, Execution::Sequential),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::input(anyhow!("cannot start {n} workers: {e}")))?;
            pool.install(|| pipeline.evaluate_batch(&assessments, Execution::Parallel))
        }
        None => pipeline.evaluate_batch(&assessments, Execution::default()),
    };
    let mut evaluations = Vec::with_capacity(results.len());
    for (a, r) in assessments.iter().zip(results) {
        evaluations.push(r.map_err(|e| fail(e).context(format!("scoring {}", a.model_id)))?);
    }

    let format = report_format(args.format);
    match (&args.output, evaluations.as_slice()) {
        (Some(path), [single]) => {
            let doc = export(single, format).map_err(fail)?;
            write_file(path, &doc.body)?;
        }
        (Some(dir), many) => {
            for e in many {
                let doc = export(e, format).map_err(fail)?;
                write_file(&dir.join(format!("{}.{}", e.model_id, format.extension())), &doc.body)?;
            }
        }
        (None, [single]) => {
            let doc = export(single, format).map_err(fail)?;
            emit(out, &doc.body)?;
        }
        (None, many) => emit(out, &combined(many, format)?)?,
    }
    Ok(0)
}

/// Several evaluations on one stream: summaries separated by blank lines,
/// a JSON array, or one CSV with a leading `model_id` column.
fn combined(evaluations: &[ComprehensionEvaluation], format: ReportFormat) -> Outcome<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            for e in evaluations {
                export(e, format).map_err(fail)?;
            }
            Ok(json(&evaluations))
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["model_id", "id", "criterion", "perspective", "source", "raw", "normalized", "weight"])
                .expect("in-memory CSV");
            for e in evaluations {
                let doc = export(e, format).map_err(fail)?;
                for row in parse_csv(doc.as_str()).map_err(fail)? {
                    w.write_record([
                        e.model_id.clone(),
                        row.id,
                        row.criterion,
                        row.perspective.to_string().to_lowercase(),
                        serde_json::to_value(row.source).expect("serializable").as_str().unwrap_or_default().to_string(),
                        row.raw.map(|r| r.to_string()).unwrap_or_default(),
                        row.normalized.to_string(),
                        row.weight.to_string(),
                    ])
                    .expect("in-memory CSV");
                }
            }
            Ok(w.into_inner().expect("in-memory CSV"))
        }
        ReportFormat::Text | ReportFormat::Markdown => {
            let mut body = Vec::new();
            for (i, e) in evaluations.iter().enumerate() {
                if i > 0 {
                    body.push(b'\n');
                }
                body.extend(export(e, format).map_err(fail)?.body);
            }
            Ok(body)
        }
    }
}

fn ett_validate(config: &Config, file: Option<PathBuf>, format: Format, out: &mut dyn Write) -> Outcome<i32> {
    let (source, text) = match file.or_else(|| {
        config
            .dir
            .as_ref()
            .map(|d| d.join(defaults::ETT_FILE))
            .filter(|p| p.is_file())
    }) {
        Some(p) => (p.display().to_string(), read(&p)?),
        None => ("shipped default".to_string(), defaults::ETT_TOML.to_string()),
    };
    let tree = parse_ett(&text).map_err(|e| fail(e).context(format!("in {source}")))?;
    let report = validate_ett(&tree);
    let counts = tree.metric_counts();
    let body = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                source: &'a str,
                valid: bool,
                metrics: usize,
                modeler_metrics: usize,
                reader_metrics: usize,
                violations: &'a [comprehend_core::ett::Violation],
            }
            json(&Out {
                source: &source,
                valid: report.is_valid(),
                metrics: counts.total,
                modeler_metrics: counts.modeler,
                reader_metrics: counts.reader,
                violations: &report.violations,
            })
        }
        _ => {
            let mut s = String::new();
            let verdict = if report.is_valid() { "valid" } else { "invalid" };
            writeln!(
                s,
                "{source}: {verdict} ({} metrics: {} modeler / {} reader)",
                counts.total, counts.modeler, counts.reader
            )
            .unwrap();
            s.push_str(&report.to_string());
            s.into_bytes()
        }
    };
    emit(out, &body)?;
    Ok(if report.is_valid() { 0 } else { crate::EXIT_VALIDATION })
}

fn survey_rank(args: RankArgs, out: &mut dyn Write) -> Outcome<i32> {
    let file = fs::File::open(&args.file)
        .map_err(|e| Failure::input(anyhow!("cannot read {}: {e}", args.file.display())))?;
    let ds = SurveyDataset::from_csv(file).map_err(|e| fail(e).context(format!("in {}", args.file.display())))?;
    let method = RankMethod::parse(&args.method, args.exponent, args.d).map_err(Failure::input)?;

    if args.compare {
        let methods = [
            RankMethod::RankSum,
            RankMethod::ReciprocalRank,
            RankMethod::RankExponent { p: args.exponent },
            RankMethod::DiscountedCumulativeGain,
            RankMethod::DnLog { d: args.d },
        ];
        let cmp = compare_methods_with(&ds, &methods, Execution::default()).map_err(Failure::input)?;
        let body = match args.format {
            Format::Json => json(&cmp),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["method", "position", "item", "score"]).unwrap();
                for row in &cmp.rows {
                    for (i, r) in row.ranking.iter().enumerate() {
                        w.write_record([row.method.to_string(), (i + 1).to_string(), r.item.clone(), r.score.to_string()])
                            .unwrap();
                    }
                }
                w.into_inner().unwrap()
            }
            _ => {
                let mut s = String::new();
                writeln!(s, "Method comparison over {} ranks, {} respondents", cmp.ranks, ds.respondent_count()).unwrap();
                for row in &cmp.rows {
                    let weights: Vec<String> = row.weights.iter().map(|w| format!("{w:.4}")).collect();
                    writeln!(s).unwrap();
                    writeln!(s, "{} [{}]", row.method, row.growth).unwrap();
                    writeln!(s, "  weights: {}", weights.join(" ")).unwrap();
                    let order: Vec<&str> = row.ranking.iter().map(|r| r.item.as_str()).collect();
                    writeln!(s, "  order:   {}", order.join(" > ")).unwrap();
                }
                s.into_bytes()
            }
        };
        emit(out, &body)?;
        return Ok(0);
    }

    let ranked = rank_items(&ds, method).map_err(fail)?;
    let body = match args.format {
        Format::Json => json(&ranked),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["position", "item", "score"]).unwrap();
            for (i, r) in ranked.iter().enumerate() {
                w.write_record([(i + 1).to_string(), r.item.clone(), r.score.to_string()]).unwrap();
            }
            w.into_inner().unwrap()
        }
        _ => {
            let mut s = String::new();
            writeln!(
                s,
                "Survey ranking: {method}, {} ranks, {} respondents",
                ds.ranks(),
                ds.respondent_count()
            )
            .unwrap();
            let width = ranked.iter().map(|r| r.item.len()).max().unwrap_or(4).max(4);
            writeln!(s, "{:>4}  {:<width$}  {:>10}", "#", "item", "score").unwrap();
            for (i, r) in ranked.iter().enumerate() {
                writeln!(s, "{:>4}  {:<width$}  {:>10.6}", i + 1, r.item, r.score).unwrap();
            }
            s.into_bytes()
        }
    };
    emit(out, &body)?;
    Ok(0)
}

fn language_compare(config: &Config, args: CompareArgs, out: &mut dyn Write) -> Outcome<i32> {
    if !(0.0..=1.0).contains(&args.partial_weight) {
        return Err(Failure::input(anyhow!("--partial-weight must lie in [0, 1]")));
    }
    let registry = config.languages(args.languages.as_deref())?;
    let mode = if args.full_range {
        ComplexityNormalization::FullRange
    } else {
        ComplexityNormalization::Verbatim
    };
    let rows = registry.compare(mode, args.partial_weight).map_err(fail)?;
    let body = match args.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "language",
                "complexity",
                "normalized_complexity",
                "control_flow",
                "data",
                "resource",
                "total",
                "control_flow_share",
            ])
            .unwrap();
            for r in &rows {
                w.write_record([
                    r.name.clone(),
                    r.complexity.to_string(),
                    r.normalized_complexity.to_string(),
                    r.patterns.control_flow.to_string(),
                    r.patterns.data.to_string(),
                    r.patterns.resource.to_string(),
                    r.patterns.total.to_string(),
                    r.patterns.control_flow_share.to_string(),
                ])
                .unwrap();
            }
            w.into_inner().unwrap()
        }
        _ => {
            let mut s = String::new();
            let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(8).max(8);
            if args.full_range {
                writeln!(s, "Complexity mapped onto the full [1, 10] range (not the reference formula).").unwrap();
            }
            writeln!(
                s,
                "{:<width$}  {:>9}  {:>6}  {:>4}  {:>4}  {:>4}  {:>5}  {:>8}",
                "language", "||C||", "C_norm", "CF", "data", "res", "total", "CF share"
            )
            .unwrap();
            for r in &rows {
                writeln!(
                    s,
                    "{:<width$}  {:>9.4}  {:>6.3}  {:>4}  {:>4}  {:>4}  {:>5}  {:>8.3}",
                    r.name,
                    r.complexity,
                    r.normalized_complexity,
                    r.patterns.control_flow,
                    r.patterns.data,
                    r.patterns.resource,
                    r.patterns.total,
                    r.patterns.control_flow_share
                )
                .unwrap();
            }
            s.into_bytes()
        }
    };
    emit(out, &body)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn model_inspect(
    config: &Config,
    file: &Path,
    language: &str,
    ett: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome<i32> {
    let tree = config.ett(ett)?;
    let (graph, warnings) = load_model(file, language)?;
    let stats = GraphStats::of(&graph);
    let values = extract_metrics(&graph, &tree).map_err(Failure::validation)?;

    #[derive(Serialize)]
    struct MetricLine {
        id: String,
        extractor: String,
        raw: f64,
        score: f64,
    }
    let metrics: Vec<MetricLine> = values
        .iter()
        .map(|v| {
            let (_, m) = tree.metric(&v.metric_id).expect("extracted from tree");
            MetricLine {
                id: v.metric_id.clone(),
                extractor: m.extractor.clone().unwrap_or_default(),
                raw: v.value,
                score: normalize_metric(v.value, m.normalization, m.polarity),
            }
        })
        .collect();

    let body = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                model: String,
                language: &'a str,
                stats: &'a GraphStats,
                warnings: &'a [ParseWarning],
                metrics: &'a [MetricLine],
            }
            json(&Out {
                model: file.display().to_string(),
                language,
                stats: &stats,
                warnings: &warnings,
                metrics: &metrics,
            })
        }
        _ => {
            warn(err, &stem(file), &warnings);
            let mut s = String::new();
            writeln!(s, "Model: {} ({language})", file.display()).unwrap();
            writeln!(
                s,
                "Elements: {}  Flow nodes: {}  Sequence flows: {}  Message flows: {}  Data associations: {}",
                graph.nodes.len(),
                stats.node_count,
                graph.count_edges(EdgeKind::Sequence),
                graph.count_edges(EdgeKind::Message),
                graph.count_edges(EdgeKind::Data)
            )
            .unwrap();
            writeln!(s, "Warnings: {}", warnings.len()).unwrap();
            writeln!(s).unwrap();
            let width = metrics.iter().map(|m| m.id.len()).max().unwrap_or(6).max(6);
            writeln!(s, "{:<width$}  {:<24}  {:>8}  {:>6}", "metric", "extractor", "raw", "score").unwrap();
            for m in &metrics {
                writeln!(s, "{:<width$}  {:<24}  {:>8.3}  {:>6.2}", m.id, m.extractor, m.raw, m.score).unwrap();
            }
            s.into_bytes()
        }
    };
    emit(out, &body)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn questionnaire_fill(
    config: &Config,
    perspective: PerspectiveArg,
    respondent: &str,
    output: &Path,
    schema: Option<&Path>,
    force: bool,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Outcome<i32> {
    if output.exists() && !force {
        return Err(Failure::input(anyhow!(
            "{} exists; pass --force to overwrite",
            output.display()
        )));
    }
    let file = match perspective {
        PerspectiveArg::Modeler => defaults::MODELER_SCHEMA_FILE,
        PerspectiveArg::Reader => defaults::READER_SCHEMA_FILE,
    };
    let schema = config.schema(file, schema)?;
    let responses = fill_interactive(&schema, respondent, input, &mut *out)
        .map_err(|e| Failure::input(anyhow!("questionnaire aborted: {e}")))?;
    write_file(output, responses.to_toml().as_bytes())?;
    writeln!(out, "wrote {} answers to {}", responses.answers.len(), output.display())
        .map_err(|e| Failure::input(anyhow!("writing output: {e}")))?;
    Ok(0)
}

fn init(args: InitArgs, out: &mut dyn Write) -> Outcome<i32> {
    let files = defaults::files();
    let existing: Vec<String> = files
        .iter()
        .map(|(rel, _)| args.dir.join(rel))
        .filter(|p| p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !existing.is_empty() && !args.force {
        return Err(Failure::validation(anyhow!(
            "refusing to overwrite existing files (pass --force): {}",
            existing.join(", ")
        )));
    }
    for (rel, body) in &files {
        let path = args.dir.join(rel);
        write_file(&path, body.as_bytes())?;
        writeln!(out, "wrote {}", path.display()).map_err(|e| Failure::input(anyhow!("writing output: {e}")))?;
    }
    Ok(0)
}
