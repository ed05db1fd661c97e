//! Command-line front end: `build-index`, `search`, `rank`, `eval`, `sweep`.
//!
//! Settings come from flags, optionally layered over a `key = value` config
//! file (`--config`); flags win. Exit codes: 0 success, 1 usage, 2 data error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{parse_corpus, Corpus};
use crate::error::Error;
use crate::eval::evaluate_run;
use crate::index::{Bm25Params, Index, Query, DEFAULT_SEARCH_LIMIT};
use crate::ranker::{rank, RankParams, DEFAULT_N_TOP};
use crate::store;
use crate::sweep::{best_cell, run_sweep, SweepMetric};
use crate::topics::{load_topics, Topic};
use crate::trec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "entrank",
    version,
    about = "Entity ranking over Wikipedia-style XML corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a corpus, build the BM25 index and persist it
    BuildIndex(Flags),
    /// Run a plain full-text query
    Search {
        #[command(flatten)]
        flags: Flags,
        /// Query words
        #[arg(required = true)]
        query: Vec<String>,
    },
    /// Rank entities for every topic and write a run file
    Rank(Flags),
    /// Score a run file against qrels
    Eval(Flags),
    /// Sweep alpha/beta over a grid and report the best cell
    Sweep(Flags),
}

#[derive(Debug, Default, Args)]
struct Flags {
    /// Plain `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory, XML file, or persisted corpus store
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Persisted index file
    #[arg(long)]
    index: Option<PathBuf>,
    /// BM25 term-frequency saturation [default: 1.2]
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 length normalization [default: 0.75]
    #[arg(long)]
    b: Option<f64>,
    /// Top search results whose links are followed [default: 20]
    #[arg(long)]
    n_top: Option<usize>,
    /// Search result limit [default: 1500]
    #[arg(long)]
    limit: Option<usize>,
    /// Linkrank weight [default: 0]
    #[arg(long)]
    alpha: Option<f64>,
    /// Category weight [default: 0]
    #[arg(long)]
    beta: Option<f64>,
    /// Append example entity names to the query
    #[arg(long)]
    expand_examples: bool,
    /// Grid step for sweeps [default: 0.1]
    #[arg(long)]
    step: Option<f64>,
    /// Sweep metric: map or rprec [default: map]
    #[arg(long)]
    metric: Option<String>,
    /// Tag written in the last column of the run file [default: entrank]
    #[arg(long)]
    run_tag: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Topic file or directory
    #[arg(long)]
    topics: Option<PathBuf>,
    /// Relevance judgments file
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Run file to evaluate
    #[arg(long)]
    run: Option<PathBuf>,
}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub corpus_path: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    pub k1: f64,
    pub b: f64,
    pub n_top: usize,
    pub search_limit: usize,
    pub alpha: f64,
    pub beta: f64,
    pub expand_with_examples: bool,
    pub run_tag: String,
    pub step: f64,
    pub metric: SweepMetric,
    pub out: Option<PathBuf>,
    pub topics: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub run: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        let bm25 = Bm25Params::default();
        Self {
            corpus_path: None,
            index_path: None,
            k1: bm25.k1,
            b: bm25.b,
            n_top: DEFAULT_N_TOP,
            search_limit: DEFAULT_SEARCH_LIMIT,
            alpha: 0.0,
            beta: 0.0,
            expand_with_examples: false,
            run_tag: "entrank".into(),
            step: 0.1,
            metric: SweepMetric::Map,
            out: None,
            topics: None,
            qrels: None,
            run: None,
        }
    }
}

impl Config {
    pub fn rank_params(&self) -> RankParams {
        RankParams {
            alpha: self.alpha,
            beta: self.beta,
            n_top: self.n_top,
            search_limit: self.search_limit,
            expand_with_examples: self.expand_with_examples,
        }
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k1: self.k1,
            b: self.b,
        }
    }

    /// Applies `key = value` lines; `#` starts a comment. Keys match flag names.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim().replace('_', "-");
            self.set(&key, value.trim())
                .map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value {value:?} for {key}"))
        }
        match key {
            "corpus" => self.corpus_path = Some(value.into()),
            "index" => self.index_path = Some(value.into()),
            "k1" => self.k1 = num(key, value)?,
            "b" => self.b = num(key, value)?,
            "n-top" => self.n_top = num(key, value)?,
            "limit" => self.search_limit = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "expand-examples" => self.expand_with_examples = num(key, value)?,
            "step" => self.step = num(key, value)?,
            "metric" => self.metric = value.parse()?,
            "run-tag" => self.run_tag = value.to_string(),
            "out" => self.out = Some(value.into()),
            "topics" => self.topics = Some(value.into()),
            "qrels" => self.qrels = Some(value.into()),
            "run" => self.run = Some(value.into()),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    fn apply_flags(&mut self, flags: &Flags) -> Result<(), String> {
        macro_rules! take {
            ($field:ident => $target:ident) => {
                if let Some(v) = &flags.$field {
                    self.$target = v.clone().into();
                }
            };
        }
        take!(corpus => corpus_path);
        take!(index => index_path);
        take!(k1 => k1);
        take!(b => b);
        take!(n_top => n_top);
        take!(limit => search_limit);
        take!(alpha => alpha);
        take!(beta => beta);
        take!(step => step);
        take!(run_tag => run_tag);
        take!(out => out);
        take!(topics => topics);
        take!(qrels => qrels);
        take!(run => run);
        if let Some(m) = &flags.metric {
            self.metric = m.parse()?;
        }
        if flags.expand_examples {
            self.expand_with_examples = true;
        }
        Ok(())
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Params(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

type CmdResult = Result<i32, Failure>;

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<(), Failure> {
        match out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display()))),
            None => self
                .stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Data(e.to_string())),
        }
    }
}

/// Entry point shared by the binary and tests.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let mut io = Io { stdout, stderr };
    let result = dispatch(cli.command, &mut io);
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(
                io.stderr,
                "error: {msg}\n\nFor usage, run `entrank --help`."
            );
            EXIT_USAGE
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(io.stderr, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn resolve(flags: &Flags) -> Result<Config, Failure> {
    let mut config = Config::default();
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        config
            .apply_file(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    config.apply_flags(flags).map_err(Failure::Usage)?;
    Ok(config)
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("--{flag} is required")))
}

fn dispatch(command: Command, io: &mut Io<'_>) -> CmdResult {
    match command {
        Command::BuildIndex(flags) => cmd_build_index(&resolve(&flags)?, io),
        Command::Search { flags, query } => cmd_search(&resolve(&flags)?, &query.join(" "), io),
        Command::Rank(flags) => cmd_rank(&resolve(&flags)?, io),
        Command::Eval(flags) => cmd_eval(&resolve(&flags)?, io),
        Command::Sweep(flags) => cmd_sweep(&resolve(&flags)?, io),
    }
}

/// Loads a persisted corpus store, or parses XML sources.
fn open_corpus(path: &Path) -> Result<(Corpus, Option<crate::corpus::ParseReport>), Failure> {
    if store::is_corpus_store(path) {
        Ok((store::load_corpus(path)?, None))
    } else {
        let (corpus, report) = parse_corpus(path)?;
        Ok((corpus, Some(report)))
    }
}

/// Loads `--index` when given (checking it matches the corpus), else builds one.
fn open_index(config: &Config, corpus: &Corpus) -> Result<Index, Failure> {
    match &config.index_path {
        Some(path) => {
            let index = store::load_index(path)?;
            if let Some(stray) = index.doc_ids().find(|id| !corpus.contains(*id)) {
                return Err(Error::IndexMismatch(format!(
                    "indexed page {stray} is not in the corpus"
                ))
                .into());
            }
            if index.doc_count() != corpus.len() {
                return Err(Error::IndexMismatch(format!(
                    "index has {} documents, corpus has {} pages",
                    index.doc_count(),
                    corpus.len()
                ))
                .into());
            }
            Ok(index)
        }
        None => Ok(Index::build(corpus, config.bm25())),
    }
}

fn load_all_topics(path: &Path, io: &mut Io<'_>) -> Result<(Vec<Topic>, usize), Failure> {
    let mut topics = Vec::new();
    let mut failures = 0;
    for file in load_topics(path)? {
        match file.topics {
            Ok(parsed) => {
                for topic in parsed {
                    match topic {
                        Ok(t) => topics.push(t),
                        Err(e) => {
                            failures += 1;
                            let _ = writeln!(io.stderr, "error: {e}");
                        }
                    }
                }
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(io.stderr, "error: {e}");
            }
        }
    }
    Ok((topics, failures))
}

fn cmd_build_index(config: &Config, io: &mut Io<'_>) -> CmdResult {
    let corpus_path = require(&config.corpus_path, "corpus")?;
    let index_path = require(&config.index_path, "index")?;
    let (corpus, report) = open_corpus(corpus_path)?;
    let index = Index::build(&corpus, config.bm25());
    store::persist_index(&index, index_path)?;
    if let Some(out) = &config.out {
        store::persist_corpus(&corpus, out)?;
    }

    let mut text = String::new();
    text.push_str(&format!("pages: {}\n", corpus.len()));
    text.push_str(&format!("categories: {}\n", corpus.categories().len()));
    text.push_str(&format!("links: {}\n", corpus.link_count()));
    if let Some(report) = report {
        text.push_str(&format!(
            "dropped links: {} (dangling {}, external {}, self {})\n",
            report.dropped_links(),
            report.dangling_links,
            report.external_links,
            report.self_links
        ));
    }
    text.push_str(&format!("terms: {}\n", index.term_count()));
    text.push_str(&format!(
        "mean categories per page: {:.2}\n",
        corpus.mean_categories_per_page()
    ));
    io.emit(None, &text)?;
    Ok(EXIT_OK)
}

fn cmd_search(config: &Config, query: &str, io: &mut Io<'_>) -> CmdResult {
    let corpus = match &config.corpus_path {
        Some(path) => Some(open_corpus(path)?.0),
        None => None,
    };
    let index = match (&config.index_path, &corpus) {
        (Some(path), _) => store::load_index(path)?,
        (None, Some(corpus)) => Index::build(corpus, config.bm25()),
        (None, None) => return Err(Failure::Usage("--index or --corpus is required".into())),
    };
    if config.search_limit < 1 {
        return Err(Failure::Usage("--limit must be at least 1".into()));
    }
    let hits = index.search(&Query::parse(query), config.search_limit);
    let mut text = String::new();
    for (i, hit) in hits.iter().enumerate() {
        let title = corpus
            .as_ref()
            .and_then(|c| c.page(hit.page))
            .map_or("", |p| p.title.as_str());
        text.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\n",
            i + 1,
            hit.page,
            hit.score,
            title
        ));
    }
    io.emit(config.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_rank(config: &Config, io: &mut Io<'_>) -> CmdResult {
    let params = config.rank_params();
    params.validate()?;
    if config.run_tag.split_whitespace().count() != 1 {
        return Err(Failure::Usage(
            "--run-tag must be a single non-empty word".into(),
        ));
    }
    let corpus_path = require(&config.corpus_path, "corpus")?;
    let topics_path = require(&config.topics, "topics")?;
    let (corpus, _) = open_corpus(corpus_path)?;
    let index = open_index(config, &corpus)?;
    let (topics, mut failures) = load_all_topics(topics_path, io)?;

    let mut text = String::new();
    for topic in &topics {
        if topic.id.split_whitespace().count() != 1 {
            failures += 1;
            let _ = writeln!(
                io.stderr,
                "error: topic id {:?} cannot be written to a run file",
                topic.id
            );
            continue;
        }
        let ranked = rank(&corpus, &index, topic, &params)?;
        trec::write_topic_run(&mut text, &topic.id, &ranked, &config.run_tag);
    }
    io.emit(config.out.as_deref(), &text)?;
    Ok(if failures > 0 { EXIT_DATA } else { EXIT_OK })
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn cmd_eval(config: &Config, io: &mut Io<'_>) -> CmdResult {
    let run_path = require(&config.run, "run")?;
    let qrels_path = require(&config.qrels, "qrels")?;
    let run = trec::parse_run(&read_text(run_path)?, &run_path.display().to_string())?;
    let judgments = trec::parse_qrels(&read_text(qrels_path)?, &qrels_path.display().to_string())?;

    let mut failures = 0;
    let mut examples = BTreeMap::new();
    if let Some(topics_path) = &config.topics {
        let corpus = match &config.corpus_path {
            Some(path) => open_corpus(path)?.0,
            None => Corpus::default(),
        };
        let (topics, bad) = load_all_topics(topics_path, io)?;
        failures += bad;
        for topic in &topics {
            examples.insert(topic.id.clone(), topic.example_pages(&corpus));
        }
    }

    let report = evaluate_run(&trec::run_pages(&run), &judgments, &examples)?;
    let text = format!("{}\n{}", report.to_table(), report.to_lines());
    io.emit(config.out.as_deref(), &text)?;
    Ok(if failures > 0 { EXIT_DATA } else { EXIT_OK })
}

fn cmd_sweep(config: &Config, io: &mut Io<'_>) -> CmdResult {
    crate::sweep::grid_divisions(config.step)?;
    let params = RankParams {
        alpha: 0.0,
        beta: 0.0,
        ..config.rank_params()
    };
    params.validate()?;
    let corpus_path = require(&config.corpus_path, "corpus")?;
    let topics_path = require(&config.topics, "topics")?;
    let qrels_path = require(&config.qrels, "qrels")?;
    let (corpus, _) = open_corpus(corpus_path)?;
    let index = open_index(config, &corpus)?;
    let (topics, failures) = load_all_topics(topics_path, io)?;
    let judgments = trec::parse_qrels(&read_text(qrels_path)?, &qrels_path.display().to_string())?;

    let grid = run_sweep(
        &corpus,
        &index,
        &topics,
        &judgments,
        config.step,
        config.metric,
        &params,
    )
    .map_err(|e| match e {
        Error::Params(msg) => Failure::Data(msg),
        other => other.into(),
    })?;
    let mut text = format!(
        "{} over {} topics, {} cells\n",
        grid.metric().name(),
        topics.len(),
        grid.len()
    );
    text.push_str(&grid.to_matrix());
    text.push('\n');
    text.push_str(&grid.to_lines());
    if let Some((alpha, beta, value)) = best_cell(&grid) {
        text.push_str(&format!(
            "best alpha={alpha} beta={beta} {}={value:.6}\n",
            grid.metric().name()
        ));
    }
    io.emit(config.out.as_deref(), &text)?;
    Ok(if failures > 0 { EXIT_DATA } else { EXIT_OK })
}
