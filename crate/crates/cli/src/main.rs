mod config;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use briefbench::claim::Claim;
use briefbench::corpus::{ingest_corpus, read_documents, Corpus};
use briefbench::dataset::{split_check, Dataset};
use briefbench::entity::AliasTable;
use briefbench::index::Index;
use briefbench::metrics::{self, Prediction};
use briefbench::qabrief::backend::WireBackend;
use briefbench::qabrief::pipeline::PipelineConfig;
use briefbench::qabrief::{QaBriefer, QgMode};
use briefbench::retrieval::{generate_passage_brief, Bm25Retriever};
use briefbench::search::{BlockFilteringRetriever, Blocklist, SearchProxy};
use briefbench::workbench::events::{read_events, replay};
use briefbench::workbench::{http, report_from_sessions, report_from_state, Resources, StudyPlan, Workbench};
use briefbench::{compute_stats, generate_entity_brief, validate_record};

use config::Config;

/// Fact-checking briefs, dataset tooling, evaluation, and the study workbench.
#[derive(Debug, Parser)]
#[command(name = "briefbench", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true, env = "BRIEFBENCH_CONFIG")]
    config: Option<PathBuf>,
    /// Corpus JSONL file.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Saved index; built from the corpus when absent.
    #[arg(long, global = true)]
    index: Option<PathBuf>,
    /// Blocked domain list; the built-in list when absent.
    #[arg(long, global = true)]
    blocklist: Option<PathBuf>,
    /// Extra `{alias, doc_id}` records for entity linking.
    #[arg(long, global = true)]
    aliases: Option<PathBuf>,
    /// Dataset JSONL file.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Model backend address (host:port); baseline components when absent.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Backend request timeout in milliseconds.
    #[arg(long, global = true)]
    backend_timeout_ms: Option<u64>,
    /// Question generation conditioning mode.
    #[arg(long, global = true)]
    qg_mode: Option<QgMode>,
    /// Service bind address.
    #[arg(long, global = true)]
    bind: Option<SocketAddr>,
    /// Directory holding study plans and event logs.
    #[arg(long, global = true)]
    state_dir: Option<PathBuf>,
    /// Task-assignment seed; replaces the seed in a study plan.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl GlobalArgs {
    fn config(&self) -> Result<Config> {
        let file = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        Ok(file.merge(Config {
            corpus: self.corpus.clone(),
            index: self.index.clone(),
            blocklist: self.blocklist.clone(),
            aliases: self.aliases.clone(),
            dataset: self.dataset.clone(),
            backend: self.backend.clone(),
            backend_timeout_ms: self.backend_timeout_ms,
            qg_mode: self.qg_mode,
            bind: self.bind,
            state_dir: self.state_dir.clone(),
            seed: self.seed,
        }))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus ingestion and indexing.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Generate briefs for claims.
    #[command(subcommand)]
    Brief(BriefCmd),
    /// Dataset validation and statistics.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Automatic and study evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Study administration.
    #[command(subcommand)]
    Study(StudyCmd),
    /// Run the workbench service.
    Serve,
}

#[derive(Debug, Subcommand)]
enum CorpusCmd {
    /// Parse and segment a corpus, printing its statistics.
    Ingest {
        /// Corpus JSONL; defaults to the configured corpus.
        input: Option<PathBuf>,
    },
    /// Build the retrieval index and save it.
    Index {
        /// Output path; defaults to the configured index.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ClaimInput {
    /// Claim text.
    #[arg(long, conflicts_with = "claims")]
    claim: Option<String>,
    /// Claim id used with --claim.
    #[arg(long, default_value = "claim")]
    claim_id: String,
    /// Claim source used with --claim.
    #[arg(long, default_value = "")]
    source: String,
    /// JSONL file of `{claim_id, text, source}` claims.
    #[arg(long)]
    claims: Option<PathBuf>,
}

impl ClaimInput {
    fn load(&self) -> Result<Vec<Claim>> {
        match (&self.claim, &self.claims) {
            (Some(text), None) => Ok(vec![Claim { source: self.source.clone(), ..Claim::new(&self.claim_id, text) }]),
            (None, Some(path)) => read_jsonl(path),
            _ => bail!("give either --claim or --claims"),
        }
    }
}

#[derive(Debug, Subcommand)]
enum BriefCmd {
    /// Best BM25 passage for each claim.
    Passage(ClaimInput),
    /// Linked entity lead paragraphs for each claim.
    Entity(ClaimInput),
    /// Question-answer brief for each claim.
    Qa(ClaimInput),
}

#[derive(Debug, Subcommand)]
enum DatasetCmd {
    /// Check every record; exits 1 when any record has errors.
    Validate {
        /// Dataset JSONL; defaults to the configured dataset.
        path: Option<PathBuf>,
    },
    /// Corpus-level statistics.
    Stats { path: Option<PathBuf> },
    /// Check that no claim occurs in two splits.
    SplitCheck { path: Option<PathBuf> },
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    /// Corpus BLEU of generated questions against the dataset.
    Qg {
        /// JSONL predictions `{claim_id, text, mode?}`, one per question.
        predictions: PathBuf,
    },
    /// Token F1 of predicted answers against the dataset.
    Qa {
        /// JSONL predictions `{claim_id, qid, text, answer_type?}`.
        predictions: PathBuf,
    },
    /// Accuracy and timing from a session event log.
    Sessions {
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum StudyCmd {
    /// Plan a study and store it under the state directory.
    Create {
        #[arg(long)]
        plan: PathBuf,
    },
    /// Analytics for a stored study.
    Report { study_id: String },
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_jsonl<T: Serialize>(values: &[T]) -> Result<()> {
    let mut out = io::stdout().lock();
    for v in values {
        serde_json::to_writer(&mut out, v)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Lazily loaded shared state for commands that need the corpus.
struct Env {
    cfg: Config,
}

impl Env {
    fn blocklist(&self) -> Result<Blocklist> {
        match &self.cfg.blocklist {
            Some(p) => Blocklist::load(p).with_context(|| format!("reading blocklist {}", p.display())),
            None => Ok(Blocklist::default()),
        }
    }

    fn corpus(&self) -> Result<Corpus> {
        let path = self.cfg.corpus()?;
        Ok(ingest_corpus(path).with_context(|| format!("ingesting {}", path.display()))?.0)
    }

    fn index(&self, corpus: &Corpus) -> Result<Index> {
        match &self.cfg.index {
            Some(p) if p.exists() => Index::load(p).with_context(|| format!("loading index {}", p.display())),
            _ => Ok(Index::build(corpus)?),
        }
    }

    fn aliases(&self, corpus: &Corpus, blocklist: &Blocklist) -> Result<AliasTable> {
        let keep = |d: &briefbench::corpus::Document| !blocklist.is_blocked(&d.url);
        let mut table = AliasTable::from_corpus_filtered(corpus, keep);
        if let Some(p) = &self.cfg.aliases {
            let reader = BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?);
            table.extend_from_reader(reader, corpus, keep)?;
        }
        Ok(table)
    }

    fn dataset(&self, path: Option<&Path>) -> Result<Dataset> {
        let path = match path {
            Some(p) => p,
            None => self.cfg.dataset()?,
        };
        Dataset::load(path).with_context(|| format!("loading dataset {}", path.display()))
    }

    fn resources(&self, dataset: Dataset) -> Result<Resources> {
        let blocklist = self.blocklist()?;
        let corpus = Arc::new(self.corpus()?);
        let index = Arc::new(self.index(&corpus)?);
        let aliases = Arc::new(self.aliases(&corpus, &blocklist)?);
        let proxy = SearchProxy::local(Arc::clone(&index), blocklist);
        let mut briefer = QaBriefer::baseline(Arc::clone(&corpus), Arc::clone(&aliases), proxy.clone())
            .with_config(PipelineConfig { mode: self.cfg.qg_mode.unwrap_or_default(), ..PipelineConfig::default() });
        if let Some(addr) = &self.cfg.backend {
            let backend = Arc::new(WireBackend::new(addr.clone()).with_timeout(self.cfg.backend_timeout()));
            briefer = briefer.with_question_backend(backend.clone()).with_answer_backend(backend);
        }
        Ok(Resources { corpus, index, aliases, dataset: Arc::new(dataset), proxy, briefer: Arc::new(briefer) })
    }
}

/// Outcome of a command that completed: success or validation failure.
enum Status {
    Ok,
    Invalid,
}

fn run(cli: Cli) -> Result<Status> {
    let env = Env { cfg: cli.global.config()? };
    match cli.command {
        Command::Corpus(CorpusCmd::Ingest { input }) => {
            let path = match &input {
                Some(p) => p.as_path(),
                None => env.cfg.corpus()?,
            };
            let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
            let corpus = Corpus::from_documents(read_documents(reader)?)?;
            print_json(&corpus.stats())?;
        }
        Command::Corpus(CorpusCmd::Index { out }) => {
            let out = out.or_else(|| env.cfg.index.clone()).context("no index path (pass --out or set `index`)")?;
            let corpus = env.corpus()?;
            let index = Index::build(&corpus)?;
            index.save(&out).with_context(|| format!("writing {}", out.display()))?;
            print_json(&corpus.stats())?;
        }
        Command::Brief(cmd) => brief(&env, cmd)?,
        Command::Dataset(DatasetCmd::Validate { path }) => return validate(&env, path.as_deref()),
        Command::Dataset(DatasetCmd::Stats { path }) => print_json(&compute_stats(&env.dataset(path.as_deref())?))?,
        Command::Dataset(DatasetCmd::SplitCheck { path }) => {
            let report = split_check(&env.dataset(path.as_deref())?);
            print_json(&report)?;
            if !report.is_clean() {
                eprintln!(
                    "{} claims in several splits, {} duplicated within a split",
                    report.overlapping.len(),
                    report.duplicates.len()
                );
                return Ok(Status::Invalid);
            }
        }
        Command::Eval(EvalCmd::Qg { predictions }) => {
            let preds: Vec<Prediction> = read_jsonl(&predictions)?;
            print_json(&metrics::qg_eval(&preds, &env.dataset(None)?.records))?;
        }
        Command::Eval(EvalCmd::Qa { predictions }) => {
            let preds: Vec<Prediction> = read_jsonl(&predictions)?;
            print_json(&metrics::qa_eval(&preds, &env.dataset(None)?.records))?;
        }
        Command::Eval(EvalCmd::Sessions { log }) => {
            let replayed = replay(&read_events(&log)?)?;
            let report = report_from_sessions("log", replayed.len(), &replayed);
            print_json(&report)?;
        }
        Command::Study(StudyCmd::Create { plan }) => {
            let text = std::fs::read_to_string(&plan).with_context(|| format!("reading {}", plan.display()))?;
            let mut plan: StudyPlan =
                serde_json::from_str(&text).with_context(|| format!("parsing plan {}", plan.display()))?;
            if let Some(seed) = env.cfg.seed {
                plan.seed = seed;
            }
            let state_dir = env.cfg.state_dir()?.to_path_buf();
            let wb = Workbench::open(env.resources(env.dataset(None)?)?, state_dir)?;
            print_json(&wb.create_study(&plan)?)?;
        }
        Command::Study(StudyCmd::Report { study_id }) => {
            let report = report_from_state(env.cfg.state_dir()?, &study_id, &env.dataset(None)?)?;
            print_json(&report)?;
        }
        Command::Serve => {
            let wb = match &env.cfg.state_dir {
                Some(dir) => Workbench::open(env.resources(env.dataset(None)?)?, dir)?,
                None => Workbench::new(env.resources(env.dataset(None)?)?),
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(http::serve(Arc::new(wb), env.cfg.bind()))?;
        }
    }
    Ok(Status::Ok)
}

fn brief(env: &Env, cmd: BriefCmd) -> Result<()> {
    match cmd {
        BriefCmd::Passage(input) => {
            let claims = input.load()?;
            let blocklist = env.blocklist()?;
            let corpus = env.corpus()?;
            let index = env.index(&corpus)?;
            let retriever = BlockFilteringRetriever { inner: Bm25Retriever::default(), blocklist };
            let briefs =
                claims.iter().map(|c| generate_passage_brief(c, &index, &retriever)).collect::<Result<Vec<_>, _>>()?;
            print_jsonl(&briefs)
        }
        BriefCmd::Entity(input) => {
            let claims = input.load()?;
            let blocklist = env.blocklist()?;
            let corpus = env.corpus()?;
            let aliases = env.aliases(&corpus, &blocklist)?;
            let briefs = claims
                .iter()
                .map(|c| {
                    let mut b = generate_entity_brief(c, &aliases, &corpus)?;
                    b.entries.retain(|e| !blocklist.is_blocked(&e.url));
                    Ok(b)
                })
                .collect::<Result<Vec<_>>>()?;
            print_jsonl(&briefs)
        }
        BriefCmd::Qa(input) => {
            let claims = input.load()?;
            let resources = env.resources(Dataset::default())?;
            print_jsonl(&resources.briefer.generate_many(&claims))
        }
    }
}

#[derive(Serialize)]
struct RecordReport<'a> {
    claim_id: &'a str,
    violations: &'a [briefbench::Violation],
}

fn validate(env: &Env, path: Option<&Path>) -> Result<Status> {
    let dataset = env.dataset(path)?;
    let blocklist = env.blocklist()?;
    let index = match &env.cfg.corpus {
        Some(_) => {
            let corpus = env.corpus()?;
            Some(env.index(&corpus)?)
        }
        None => None,
    };
    let evidence = |url: &str| index.as_ref().and_then(|i| i.text_by_url(url));
    let (mut bad, mut errors, mut warnings) = (0usize, 0usize, 0usize);
    let mut out = io::stdout().lock();
    for r in &dataset.records {
        let report = validate_record(r, &blocklist, &evidence);
        let e = report.errors().count();
        errors += e;
        warnings += report.warnings().count();
        if e > 0 {
            bad += 1;
        }
        if !report.violations.is_empty() {
            serde_json::to_writer(&mut out, &RecordReport { claim_id: &r.claim_id, violations: &report.violations })?;
            writeln!(out)?;
        }
    }
    eprintln!(
        "{} records, {bad} with errors; {errors} errors, {warnings} warnings{}",
        dataset.records.len(),
        if index.is_none() { " (no corpus: evidence containment not checked)" } else { "" }
    );
    Ok(if bad > 0 { Status::Invalid } else { Status::Ok })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Invalid) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
