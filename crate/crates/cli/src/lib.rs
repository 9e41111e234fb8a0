//! Command-line driver for the `floodpipe` batch pipeline.
//!
//! [`run_cli`] parses arguments, runs one subcommand and maps the outcome to
//! an exit code: 0 on success, 2 for bad flags or settings (with usage
//! text), 1 for data errors (with a one-line diagnostic naming the file).

pub mod args;
pub mod config;
pub mod pipeline;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::{CommandFactory, Parser};
use floodpipe::report::{
    format_assignments, format_plot_data, format_weights, PipelineReport, Provenance, Stages,
};
use floodpipe::seed::stage_seed;
use floodpipe::topics::ExperimentResult;
use serde_json::{json, Map, Value};

use crate::args::{
    Cli, Command, FuseArgs, LocationsArgs, ModeArg, NerEvalArgs, OptimizeArgs, ReportArgs,
    TopicsArgs,
};
use crate::config::{base, fusion_settings, required, topic_config, Base, UsageError, SEED_ENV};
use crate::pipeline::{
    experiment_mode, fusion_stage, locations, mode_slug, ner_stage, optimize_stage, spans, to_json,
    topics_stage, Inputs, OutDir,
};

pub const DEFAULT_TOP_LOCATIONS: usize = 10;

/// Runs the CLI on `argv` (program name first) with the process's stdout,
/// stderr and `FLOODPIPE_SEED`.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    run_cli_with(
        argv,
        env_seed,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

/// [`run_cli`] with explicit streams and seed fallback.
pub fn run_cli_with<I, T>(
    argv: I,
    env_seed: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let mut text = e.render().to_string();
            return if e.use_stderr() {
                if !text.contains("Usage:") {
                    text = text.replacen("\n\n", &format!("\n\n{}\n\n", usage_for(&argv)), 1);
                }
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    let name = subcommand_name(&cli.command);
    match execute(cli.command, env_seed, stdout) {
        Ok(()) => 0,
        Err(e) => match e.downcast_ref::<UsageError>() {
            Some(usage) => {
                let mut cmd = Cli::command();
                cmd.build();
                let help = cmd
                    .find_subcommand_mut(name)
                    .map(|c| c.render_usage().to_string())
                    .unwrap_or_default();
                let _ = writeln!(
                    stderr,
                    "error: {usage}\n\n{help}\n\nFor more information, try '--help'."
                );
                2
            }
            None => {
                let line = format!("{e:#}").replace(['\n', '\r'], " ");
                let _ = writeln!(stderr, "error: {line}");
                1
            }
        },
    }
}

/// Usage line of the subcommand named in `argv`, or of the whole tool.
fn usage_for(argv: &[OsString]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let name = argv.iter().skip(1).find_map(|a| {
        let a = a.to_str()?;
        cmd.get_subcommands()
            .any(|s| s.get_name() == a)
            .then(|| a.to_string())
    });
    match name.and_then(|n| cmd.find_subcommand_mut(&n)) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Fuse(_) => "fuse",
        Command::Optimize(_) => "optimize",
        Command::NerEval(_) => "ner-eval",
        Command::Locations(_) => "locations",
        Command::Topics(_) => "topics",
        Command::Report(_) => "report",
    }
}

fn execute(command: Command, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fuse(a) => fuse(a, env_seed, stdout),
        Command::Optimize(a) => optimize(a, env_seed, stdout),
        Command::NerEval(a) => ner_eval(a, env_seed, stdout),
        Command::Locations(a) => locations_cmd(a, env_seed, stdout),
        Command::Topics(a) => topics(a, env_seed, stdout),
        Command::Report(a) => report(a, env_seed, stdout),
    }
}

/// Stage seeds plus the effective settings, as recorded in every report.
struct Record {
    seed: u64,
    stage_seeds: BTreeMap<String, u64>,
    config: Map<String, Value>,
}

impl Record {
    fn new(seed: u64) -> Self {
        let mut config = Map::new();
        config.insert("seed".into(), json!(seed));
        Record {
            seed,
            stage_seeds: BTreeMap::new(),
            config,
        }
    }

    fn stage_seed(&mut self, stage: &str) -> u64 {
        let s = stage_seed(self.seed, stage);
        self.stage_seeds.insert(stage.to_string(), s);
        s
    }

    fn set(&mut self, key: &str, value: impl serde::Serialize) -> Result<()> {
        self.config
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    fn report(self, inputs: Inputs, stages: Stages) -> PipelineReport {
        PipelineReport {
            provenance: Provenance {
                tool: "floodpipe".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed: self.seed,
                stage_seeds: self.stage_seeds,
                inputs: inputs.digests,
                config: Value::Object(self.config),
            },
            stages,
        }
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn out_dir(b: &Base) -> Result<Option<OutDir>> {
    b.out.as_deref().map(OutDir::create).transpose()
}

/// Labels default to the configured labels file, then to the (labeled)
/// corpus.
fn labels_fallback(b: &Base) -> Option<PathBuf> {
    b.file
        .inputs
        .labels
        .clone()
        .or_else(|| b.file.inputs.corpus.clone())
}

fn fuse(a: FuseArgs, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    let b = base(&a.common, env_seed)?;
    let scores_path = required(a.fusion.scores.clone(), &b.file.inputs.scores, "scores")?;
    let labels_path = required(a.fusion.labels.clone(), &labels_fallback(&b), "labels")?;
    let mut rec = Record::new(b.seed);
    let settings = fusion_settings(
        &a.fusion,
        a.method,
        &b.file.fusion,
        rec.stage_seed("fusion"),
    )?;
    rec.set("fusion", &settings)?;

    let mut inputs = Inputs::default();
    let scores = inputs.scores(&scores_path)?;
    let labels = inputs.labels_for(&labels_path, &scores)?;
    let stage = fusion_stage(&scores, &labels, &settings)?;
    let json = to_json(&stage)?;
    if let Some(dir) = out_dir(&b)? {
        dir.write(
            "weights.tsv",
            &format_weights(&stage.model_names, &stage.result.weights.0),
        )?;
        dir.write("fusion.json", &json)?;
        let report = rec.report(
            inputs,
            Stages {
                fusion: Some(stage),
                ..Stages::default()
            },
        );
        dir.write("report.json", &report.to_json()?)?;
    }
    emit(stdout, &json)
}

fn optimize(a: OptimizeArgs, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    let b = base(&a.common, env_seed)?;
    let scores_path = required(a.fusion.scores.clone(), &b.file.inputs.scores, "scores")?;
    let labels_path = required(a.fusion.labels.clone(), &labels_fallback(&b), "labels")?;
    let mut rec = Record::new(b.seed);
    let settings = fusion_settings(&a.fusion, None, &b.file.fusion, rec.stage_seed("fusion"))?;
    let budget = a.fusion.budget.or(b.file.fusion.iteration_budget);
    rec.set("fusion", &settings.optimizer)?;

    let mut inputs = Inputs::default();
    let scores = inputs.scores(&scores_path)?;
    let labels = inputs.labels_for(&labels_path, &scores)?;
    let stages = optimize_stage(&scores, &labels, &settings, budget)?;
    let json = to_json(&stages)?;
    if let Some(dir) = out_dir(&b)? {
        dir.write("optimize.json", &json)?;
        let report = rec.report(
            inputs,
            Stages {
                optimize: Some(stages),
                ..Stages::default()
            },
        );
        dir.write("report.json", &report.to_json()?)?;
    }
    emit(stdout, &json)
}

fn ner_eval(a: NerEvalArgs, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    let b = base(&a.common, env_seed)?;
    let gold_path = required(a.gold, &b.file.inputs.gold, "gold")?;
    let pred_path = required(a.pred, &b.file.inputs.pred, "pred")?;
    let mut inputs = Inputs::default();
    let gold = inputs.tags("gold", &gold_path)?;
    let pred = inputs.tags("pred", &pred_path)?;
    let stage = ner_stage(&gold, &pred, &gold_path)?;
    let json = to_json(&stage)?;
    if let Some(dir) = out_dir(&b)? {
        dir.write("ner_scores.json", &json)?;
        let report = Record::new(b.seed).report(
            inputs,
            Stages {
                ner: Some(stage),
                ..Stages::default()
            },
        );
        dir.write("report.json", &report.to_json()?)?;
    }
    emit(stdout, &json)
}

fn top_k(flag: Option<usize>, b: &Base) -> Result<usize> {
    let k = flag.or(b.file.ner.top).unwrap_or(DEFAULT_TOP_LOCATIONS);
    if k == 0 {
        return Err(UsageError("--top must be at least 1".into()).into());
    }
    Ok(k)
}

fn locations_cmd(a: LocationsArgs, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    let b = base(&a.common, env_seed)?;
    let pred_path = required(a.pred, &b.file.inputs.pred, "pred")?;
    let k = top_k(a.top, &b)?;
    let mut rec = Record::new(b.seed);
    rec.set("locations", json!({ "top": k }))?;
    let mut inputs = Inputs::default();
    let table = locations(&inputs.tags("pred", &pred_path)?, k);
    let tsv = table.to_tsv();
    if let Some(dir) = out_dir(&b)? {
        dir.write("locations.tsv", &tsv)?;
        let report = rec.report(
            inputs,
            Stages {
                locations: Some(table),
                ..Stages::default()
            },
        );
        dir.write("report.json", &report.to_json()?)?;
    }
    emit(stdout, &tsv)
}

fn needs_spans(modes: &[ModeArg], have_pred: bool) -> Result<()> {
    if !have_pred {
        if let Some(m) = modes.iter().find(|m| **m != ModeArg::All) {
            let name = if *m == ModeArg::Frequent {
                "frequent"
            } else {
                "location"
            };
            return Err(UsageError(format!("mode {name} needs --pred location tags")).into());
        }
    }
    Ok(())
}

fn write_topic_files(dir: &OutDir, results: &[ExperimentResult]) -> Result<()> {
    for (i, r) in results.iter().enumerate() {
        let suffix = if i == 0 {
            String::new()
        } else {
            format!("_{}", mode_slug(&r.mode))
        };
        dir.write(
            &format!("plot_data{suffix}.tsv"),
            &format_plot_data(&r.topics),
        )?;
        dir.write(
            &format!("assignments{suffix}.tsv"),
            &format_assignments(&r.assignments),
        )?;
    }
    Ok(())
}

fn topics(a: TopicsArgs, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    let b = base(&a.common, env_seed)?;
    let emb_path = required(
        a.topics.embeddings.clone(),
        &b.file.inputs.embeddings,
        "embeddings",
    )?;
    let corpus_path = required(a.topics.corpus.clone(), &b.file.inputs.corpus, "corpus")?;
    let pred_path: Option<PathBuf> = a.pred.clone().or_else(|| b.file.inputs.pred.clone());
    let mode = a.mode.or(b.file.topics.mode).unwrap_or(ModeArg::All);
    needs_spans(&[mode], pred_path.is_some())?;
    let location = a
        .topics
        .location
        .clone()
        .or_else(|| b.file.topics.location.clone());
    let mode = experiment_mode(mode, location.as_deref())?;

    let mut rec = Record::new(b.seed);
    let cfg = topic_config(&a.topics, &b.file.topics, rec.stage_seed("topics"))?;
    rec.set("topics", json!({ "modes": [mode], "config": cfg }))?;

    let mut inputs = Inputs::default();
    let records = inputs.corpus(&corpus_path)?;
    let emb = inputs.embeddings(&emb_path)?;
    let spans = match &pred_path {
        Some(p) => spans(&inputs.tags("pred", p)?),
        None => Vec::new(),
    };
    let stop = inputs.stopwords(
        a.topics
            .stopwords
            .as_deref()
            .or(b.file.inputs.stopwords.as_deref()),
    )?;
    let result = topics_stage(&records, &emb, &spans, &mode, stop, &cfg, &corpus_path)?;
    let json = to_json(&result)?;
    if let Some(dir) = out_dir(&b)? {
        dir.write("topics.json", &json)?;
        write_topic_files(&dir, std::slice::from_ref(&result))?;
        let report = rec.report(
            inputs,
            Stages {
                topics: Some(vec![result]),
                ..Stages::default()
            },
        );
        dir.write("report.json", &report.to_json()?)?;
    }
    emit(stdout, &json)
}

fn report(a: ReportArgs, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<()> {
    let b = base(&a.common, env_seed)?;
    let inp = &b.file.inputs;
    let scores_path = a.fusion.scores.clone().or_else(|| inp.scores.clone());
    let corpus_path = a.topics.corpus.clone().or_else(|| inp.corpus.clone());
    let labels_path = a
        .fusion
        .labels
        .clone()
        .or_else(|| labels_fallback(&b))
        .or_else(|| corpus_path.clone());
    let gold_path = a.gold.clone().or_else(|| inp.gold.clone());
    let pred_path = a.pred.clone().or_else(|| inp.pred.clone());
    let emb_path = a
        .topics
        .embeddings
        .clone()
        .or_else(|| inp.embeddings.clone());
    let location = a
        .topics
        .location
        .clone()
        .or_else(|| b.file.topics.location.clone());
    let modes = match a.modes.clone().or_else(|| b.file.topics.modes.clone()) {
        Some(m) => m,
        None => {
            let mut m = vec![ModeArg::All];
            if pred_path.is_some() {
                m.push(ModeArg::Frequent);
                if location.is_some() {
                    m.push(ModeArg::Location);
                }
            }
            m
        }
    };
    let run_topics = emb_path.is_some() && corpus_path.is_some();
    if scores_path.is_none() && pred_path.is_none() && !run_topics {
        return Err(UsageError(
            "nothing to do: give --scores, --pred, or --corpus with --embeddings".into(),
        )
        .into());
    }
    if run_topics {
        needs_spans(&modes, pred_path.is_some())?;
    }

    let mut rec = Record::new(b.seed);
    let mut inputs = Inputs::default();
    let mut stages = Stages::default();
    let dir = out_dir(&b)?;

    if let Some(scores_path) = &scores_path {
        let labels_path = labels_path
            .as_ref()
            .ok_or_else(|| UsageError("fusion needs --labels or a labeled --corpus".into()))?;
        let settings = fusion_settings(
            &a.fusion,
            a.method,
            &b.file.fusion,
            rec.stage_seed("fusion"),
        )?;
        rec.set("fusion", &settings)?;
        let scores = inputs.scores(scores_path)?;
        let labels = inputs.labels_for(labels_path, &scores)?;
        let stage = fusion_stage(&scores, &labels, &settings)?;
        if let Some(dir) = &dir {
            dir.write(
                "weights.tsv",
                &format_weights(&stage.model_names, &stage.result.weights.0),
            )?;
        }
        stages.fusion = Some(stage);
    }

    let pred = match &pred_path {
        Some(p) => Some(inputs.tags("pred", p)?),
        None => None,
    };
    if let (Some(gold_path), Some(pred)) = (&gold_path, &pred) {
        let gold = inputs.tags("gold", gold_path)?;
        let stage = ner_stage(&gold, pred, gold_path)?;
        if let Some(dir) = &dir {
            dir.write("ner_scores.json", &to_json(&stage)?)?;
        }
        stages.ner = Some(stage);
    }
    if let Some(pred) = &pred {
        let k = top_k(a.top, &b)?;
        rec.set("locations", json!({ "top": k }))?;
        let table = locations(pred, k);
        if let Some(dir) = &dir {
            dir.write("locations.tsv", &table.to_tsv())?;
        }
        stages.locations = Some(table);
    }

    if let (Some(emb_path), Some(corpus_path)) = (&emb_path, &corpus_path) {
        let modes = modes
            .iter()
            .map(|&m| experiment_mode(m, location.as_deref()))
            .collect::<Result<Vec<_>>>()?;
        let cfg = topic_config(&a.topics, &b.file.topics, rec.stage_seed("topics"))?;
        rec.set("topics", json!({ "modes": modes, "config": cfg }))?;
        let records = inputs.corpus(corpus_path)?;
        let emb = inputs.embeddings(emb_path)?;
        let spans = pred.as_deref().map(spans).unwrap_or_default();
        let stop = inputs.stopwords(a.topics.stopwords.as_deref().or(inp.stopwords.as_deref()))?;
        let results = modes
            .iter()
            .map(|mode| {
                topics_stage(
                    &records,
                    &emb,
                    &spans,
                    mode,
                    stop.clone(),
                    &cfg,
                    corpus_path,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(dir) = &dir {
            dir.write("topics.json", &to_json(&results)?)?;
            write_topic_files(dir, &results)?;
        }
        stages.topics = Some(results);
    }

    let json = rec.report(inputs, stages).to_json()?;
    if let Some(dir) = &dir {
        dir.write("report.json", &json)?;
    }
    emit(stdout, &json)
}
