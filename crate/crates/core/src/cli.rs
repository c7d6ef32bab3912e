//! Command-line front end. Every subcommand delegates to the library; exit
//! codes are 0 on success, 1 on operational errors and 2 on usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{
    corpus_stats, load_corpus, read_corpus, stratified_split, write_corpus, Claim, CorpusSchema, Dataset, InputFormat,
    Split,
};
use crate::detect::Prediction;
use crate::error::{Error, Result};
use crate::eval::{self, F1Mode, MetricReport};
use crate::io;
use crate::pipeline::{self, ClaimEntities, Pipeline, PipelineConfig, StageOutput};
use crate::summarize::{ContextMode, ContextSummary};
use crate::wiki::KnowledgeBase;

#[derive(Parser, Debug)]
#[command(name = "contextclaim", version, about = "Context-augmented verifiable claim detection")]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set retrieval.theta=0.4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a delimited or JSON-lines corpus into canonical JSON-lines.
    Ingest(IngestArgs),
    /// Extract entities for each claim.
    Extract(ExtractArgs),
    /// Build per-claim knowledge bases from Wikipedia.
    Retrieve(RetrieveArgs),
    /// Materialize classifier context (none, raw or summary).
    Context(ContextArgs),
    /// Classify claims as verifiable or not.
    Classify(ClassifyArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Per-sample transition analysis between two systems.
    Compare(CompareArgs),
    /// Metric deltas along an ordered chain of systems.
    Ablate(AblateArgs),
    /// Fleiss' kappa and paired t-tests over 1-3 ratings.
    Agreement(AgreementArgs),
    /// Run every stage and write a manifest.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// csv, tsv or jsonl; inferred from the extension by default.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, default_value = "custom")]
    dataset: String,
    /// Split assigned to rows without a split column.
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long, default_value = "id")]
    id_column: String,
    #[arg(long, default_value = "text")]
    text_column: String,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    split_column: Option<String>,
    /// Carve a stratified dev set of this fraction out of the input.
    #[arg(long)]
    dev_fraction: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Where the dev half goes when `--dev-fraction` is set.
    #[arg(long)]
    dev_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RetrieveArgs {
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    entities: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ContextArgs {
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    kbs: Option<PathBuf>,
    #[arg(long)]
    mode: Option<ContextMode>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    contexts: Option<PathBuf>,
    #[arg(long)]
    mode: Option<ContextMode>,
    #[arg(long)]
    no_doubt_directive: bool,
    #[arg(long)]
    shots: Option<usize>,
    /// Corpus demonstrations are sampled from.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    preds: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_parser = ["positive", "macro"], default_value = "positive")]
    f1: String,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    gold: PathBuf,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(long)]
    gold: PathBuf,
    /// `NAME=predictions.jsonl`, in chain order; at least two.
    #[arg(long = "arm", required = true, num_args = 1)]
    arms: Vec<String>,
    #[arg(long, default_value_t = eval::DEFAULT_FLAG_THRESHOLD)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct AgreementArgs {
    #[arg(long)]
    ratings: PathBuf,
    /// Second ratings file for a paired t-test per dimension.
    #[arg(long)]
    compare: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Canonical JSON-lines corpus, as written by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

struct Output {
    json: bool,
}

impl Output {
    fn emit<T: Serialize>(&self, value: &T, human: impl FnOnce() -> String) -> Result<()> {
        let text = if self.json {
            serde_json::to_string_pretty(value)?
        } else {
            human()
        };
        let mut out = std::io::stdout().lock();
        writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(cli: &Cli, extra: Vec<String>) -> Result<PipelineConfig> {
    pipeline::self_check()?;
    let mut overrides = cli.overrides.clone();
    overrides.extend(extra);
    PipelineConfig::load(cli.config.as_deref(), &overrides)
}

fn sorted_claims(path: &Path) -> Result<Vec<Claim>> {
    let mut claims = read_corpus(path)?;
    claims.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(claims)
}

fn finish_stage<T: Serialize>(out: &Output, path: &Path, stage: StageOutput<T>) -> Result<()> {
    io::write_jsonl(path, &stage.records)?;
    for f in &stage.failures {
        eprintln!("warning: claim {} failed: {}", f.claim_id, f.error);
    }
    let summary = serde_json::json!({
        "out": path,
        "records": stage.records.len(),
        "failures": stage.failures,
    });
    out.emit(&summary, || {
        format!(
            "wrote {} records to {} ({} failed)",
            stage.records.len(),
            path.display(),
            stage.failures.len()
        )
    })
}

fn mode_override(mode: Option<ContextMode>) -> Vec<String> {
    mode.map(|m| vec![format!("context_mode=\"{m}\"")]).unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    let out = Output { json: cli.json };
    match &cli.command {
        Command::Ingest(a) => ingest(&out, a),
        Command::Extract(a) => {
            let p = Pipeline::from_config(load_config(&cli, Vec::new())?)?;
            let claims = sorted_claims(&a.claims)?;
            let refs: Vec<&Claim> = claims.iter().collect();
            finish_stage(&out, &a.out, p.extract(&refs)?)
        }
        Command::Retrieve(a) => {
            let p = Pipeline::from_config(load_config(&cli, Vec::new())?)?;
            let claims = sorted_claims(&a.claims)?;
            let refs: Vec<&Claim> = claims.iter().collect();
            let entities: Vec<ClaimEntities> = io::read_jsonl(&a.entities)?;
            finish_stage(&out, &a.out, p.retrieve(&refs, &entities)?)
        }
        Command::Context(a) => {
            let p = Pipeline::from_config(load_config(&cli, mode_override(a.mode))?)?;
            let claims = sorted_claims(&a.claims)?;
            let refs: Vec<&Claim> = claims.iter().collect();
            let kbs: Vec<KnowledgeBase> = match &a.kbs {
                Some(path) => io::read_jsonl(path)?,
                None if p.config().context_mode == ContextMode::None => Vec::new(),
                None => return Err(Error::InvalidArgument("--kbs is required unless --mode none".into())),
            };
            finish_stage(&out, &a.out, p.contextualize(&refs, &kbs)?)
        }
        Command::Classify(a) => {
            let mut extra = mode_override(a.mode);
            if a.no_doubt_directive {
                extra.push("prompt.doubt_directive=false".into());
            }
            if let Some(n) = a.shots {
                extra.push(format!("prompt.shots={n}"));
            }
            if let Some(train) = &a.train {
                let abs = std::path::absolute(train).map_err(|e| Error::io(train, e))?;
                extra.push(format!("prompt.train={}", toml::Value::String(abs.display().to_string())));
            }
            let p = Pipeline::from_config(load_config(&cli, extra)?)?;
            let claims = sorted_claims(&a.claims)?;
            let refs: Vec<&Claim> = claims.iter().collect();
            let contexts: Vec<ContextSummary> = match &a.contexts {
                Some(path) => io::read_jsonl(path)?,
                None => Vec::new(),
            };
            finish_stage(&out, &a.out, p.classify(&refs, &contexts)?)
        }
        Command::Evaluate(a) => evaluate(&out, a),
        Command::Compare(a) => {
            let gold = read_corpus(&a.gold)?;
            let base: Vec<Prediction> = io::read_jsonl(&a.baseline)?;
            let sys: Vec<Prediction> = io::read_jsonl(&a.system)?;
            let r = eval::transitions(&base, &sys, &gold)?;
            out.emit(&r, || {
                format!(
                    "n={}  fixed {} ({:.1}%: {} FN, {} FP)  regressed {} ({:.1}%: {} new FP, {} new FN)\n\
                     both right {}  both wrong {}  net FP {:+}  net FN {:+}",
                    r.n,
                    r.fixed,
                    r.fixed_share() * 100.0,
                    r.fixed_fn,
                    r.fixed_fp,
                    r.regressed,
                    r.regressed_share() * 100.0,
                    r.new_fp,
                    r.new_fn,
                    r.both_right,
                    r.both_wrong,
                    r.net_fp_delta,
                    r.net_fn_delta
                )
            })
        }
        Command::Ablate(a) => ablate(&out, a),
        Command::Agreement(a) => agreement(&out, a),
        Command::Run(a) => {
            let p = Pipeline::from_config(load_config(&cli, Vec::new())?)?;
            let manifest = p.run(&a.corpus, &a.out)?;
            pipeline::verify_manifest(&a.out)?;
            out.emit(&manifest, || {
                format!(
                    "{} claims, {} predictions, {} failures; artifacts in {}",
                    manifest.counts.claims,
                    manifest.counts.predictions,
                    manifest.counts.failures,
                    a.out.display()
                )
            })
        }
    }
}

fn ingest(out: &Output, a: &IngestArgs) -> Result<()> {
    let format = match a.format.as_deref() {
        None => InputFormat::infer(&a.input),
        Some("csv") => InputFormat::Delimited { delimiter: b',' },
        Some("tsv") => InputFormat::Delimited { delimiter: b'\t' },
        Some("jsonl") => InputFormat::JsonLines,
        Some(other) => return Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
    };
    let schema = CorpusSchema {
        id_column: Some(a.id_column.clone()),
        text_column: a.text_column.clone(),
        label_column: Some(a.label_column.clone()),
        split_column: a.split_column.clone(),
        dataset: a.dataset.parse::<Dataset>()?,
        split: a.split.parse::<Split>()?,
        ..CorpusSchema::default()
    };
    let loaded = load_corpus(&a.input, format, &schema)?;
    for r in &loaded.rejected {
        eprintln!("warning: line {}: {}", r.line, r.message);
    }
    let mut written = loaded.claims;
    if let Some(fraction) = a.dev_fraction {
        let dev_out = a
            .dev_out
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--dev-fraction needs --dev-out".into()))?;
        let (train, dev) = stratified_split(&written, fraction, a.seed)?;
        write_corpus(&a.out, &train)?;
        write_corpus(dev_out, &dev)?;
        written = train.into_iter().chain(dev).collect();
    } else {
        write_corpus(&a.out, &written)?;
    }
    let stats = corpus_stats(&written);
    out.emit(
        &serde_json::json!({"stats": stats, "rejected": loaded.rejected.len()}),
        || format!("{stats}\nrejected rows: {}", loaded.rejected.len()),
    )
}

fn evaluate(out: &Output, a: &EvaluateArgs) -> Result<()> {
    let gold = read_corpus(&a.gold)?;
    let preds: Vec<Prediction> = io::read_jsonl(&a.preds)?;
    let cm = eval::confusion(&preds, &gold)?;
    let mode = if a.f1 == "macro" { F1Mode::Macro } else { F1Mode::Positive };
    let m = eval::metrics_with(&cm, mode)?;
    let errors = cm.error_distribution();
    out.emit(
        &serde_json::json!({"metrics": m, "confusion": cm, "errors": errors}),
        || format!("{m}\nTP {}  FP {}  FN {}  TN {}\n{errors}", cm.tp, cm.fp, cm.fn_, cm.tn),
    )
}

fn ablate(out: &Output, a: &AblateArgs) -> Result<()> {
    if a.arms.len() < 2 {
        return Err(Error::InvalidArgument("ablation needs at least two --arm values".into()));
    }
    let gold = read_corpus(&a.gold)?;
    let arms = a
        .arms
        .iter()
        .map(|arm| {
            let (name, path) = arm
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--arm `{arm}` is not NAME=PATH")))?;
            let preds: Vec<Prediction> = io::read_jsonl(Path::new(path))?;
            let report: MetricReport = eval::metrics(&eval::confusion(&preds, &gold)?)?;
            Ok((name.to_string(), report))
        })
        .collect::<Result<Vec<_>>>()?;
    let steps = eval::ablation_chain(&arms, a.threshold);
    out.emit(&serde_json::json!({"arms": arms, "steps": steps}), || {
        let mut lines: Vec<String> = arms.iter().map(|(n, r)| format!("{n:<12} {r}")).collect();
        for s in &steps {
            lines.push(format!("\n{} -> {}", s.from, s.to));
            lines.push(eval::render_delta_table(&s.deltas));
        }
        lines.join("\n")
    })
}

fn agreement(out: &Output, a: &AgreementArgs) -> Result<()> {
    let tables = eval::read_ratings_csv(&a.ratings)?;
    let other = a.compare.as_deref().map(eval::read_ratings_csv).transpose()?;
    let mut rows = Vec::new();
    for (dimension, table) in &tables {
        let kappa = eval::fleiss_components(table)?;
        let test = match &other {
            Some(o) => {
                let b = o
                    .get(dimension)
                    .ok_or_else(|| Error::IdMismatch(format!("dimension `{dimension}` missing from --compare")))?;
                Some(eval::compare_tables(table, b)?)
            }
            None => None,
        };
        rows.push(serde_json::json!({"dimension": dimension, "fleiss": kappa, "paired_t": test}));
    }
    out.emit(&rows, || {
        rows.iter()
            .map(|r| {
                let mut line = format!(
                    "{:<14} kappa {:.2}",
                    r["dimension"].as_str().unwrap_or_default(),
                    r["fleiss"]["kappa"].as_f64().unwrap_or(f64::NAN)
                );
                if let Some(t) = r["paired_t"].as_object() {
                    line.push_str(&format!(
                        "  t {:.3}  df {}  p {:.4}",
                        t["t"].as_f64().unwrap_or(f64::NAN),
                        t["df"],
                        t["p_value"].as_f64().unwrap_or(f64::NAN)
                    ));
                }
                line
            })
            .collect::<Vec<_>>()
            .join("\n")
    })
}
