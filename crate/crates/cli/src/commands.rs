use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::{info, warn};
use qpp_core::correlate::{self, CorrelationKind, CorrelationReport, KendallSignificance};
use qpp_core::effectiveness::actuals_for_run;
use qpp_core::ingest::{self, CorpusReader};
use qpp_core::predictors::{self, ClarityResources, LengthNorm};
use qpp_core::synth::{self, SynthConfig};
use qpp_core::{
    CollectionStats, Gain, MetricSpec, PredictionTable, Predictor, PredictorParams, Tokenizer,
};
use sha2::{Digest, Sha256};

/// Ends the process with a specific exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;

fn fail(code: i32, message: impl Into<String>) -> anyhow::Error {
    Failure {
        code,
        message: message.into(),
    }
    .into()
}

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.code;
        }
        if let Some(e) = cause.downcast_ref::<qpp_core::Error>() {
            return if e.is_input_error() { EXIT_INPUT } else { EXIT_EMPTY };
        }
        if cause.is::<io::Error>() {
            return EXIT_INPUT;
        }
    }
    EXIT_INPUT
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> anyhow::Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush().with_context(|| format!("writing {}", path.display()))
}


/// Splits `NAME=PATH`.
pub fn named_path(arg: &str) -> anyhow::Result<(String, PathBuf)> {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() && !name.contains(['\t', '/']) => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(fail(EXIT_INPUT, format!("expected NAME=PATH, got {arg:?}"))),
    }
}

pub fn tokenizer(stopwords: Option<&Path>, lowercase: bool) -> anyhow::Result<Tokenizer> {
    let mut tok = Tokenizer {
        lowercase,
        ..Tokenizer::default()
    };
    if let Some(path) = stopwords {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut words = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.with_context(|| format!("reading {}", path.display()))?;
            let word = line.trim();
            if !word.is_empty() && !word.starts_with('#') {
                words.push(if lowercase { word.to_lowercase() } else { word.to_string() });
            }
        }
        tok = tok.with_stopwords(words);
    }
    Ok(tok)
}

pub struct EvalRunArgs {
    pub run: PathBuf,
    pub qrels: PathBuf,
    pub metrics: Vec<String>,
    pub recall_threshold: u32,
    pub gain: Gain,
    pub out: PathBuf,
}

pub fn eval_run(args: EvalRunArgs) -> anyhow::Result<()> {
    let specs = args
        .metrics
        .iter()
        .map(|m| {
            m.parse::<MetricSpec>()
                .map(|s| s.with_threshold(args.recall_threshold).with_gain(args.gain))
        })
        .collect::<qpp_core::Result<Vec<_>>>()?;
    let run = ingest::read_run_file(&args.run)?;
    let qrels = ingest::read_qrels(&args.qrels)?;
    info!("{} queries in run, {} judgments", run.len(), qrels.len());
    let mut out = io::stdout().lock();
    for spec in &specs {
        let actuals = actuals_for_run(&run, &qrels, spec)?;
        let Some(mean) = actuals.mean() else {
            return Err(fail(EXIT_EMPTY, "no judged query in the run"));
        };
        let path = args.out.join(format!("actuals.{spec}.tsv"));
        write_file(&path, |w| actuals.write_tsv(w))?;
        info!("{spec}: {} queries -> {}", actuals.records.len(), path.display());
        writeln!(out, "{spec}\t{mean}\t{}", actuals.records.len())?;
    }
    Ok(())
}

/// Hashes everything read through it.
struct HashingReader<'a, R> {
    inner: R,
    hasher: &'a mut Sha256,
}

impl<R: Read> Read for HashingReader<'_, R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

fn hash_sidecar(stats: &Path) -> PathBuf {
    let mut name = stats.as_os_str().to_owned();
    name.push(".sha256");
    PathBuf::from(name)
}

fn open_corpus(path: &Path) -> anyhow::Result<File> {
    File::open(path).with_context(|| format!("opening corpus {}", path.display()))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

pub struct BuildStatsArgs {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub lowercase: bool,
}

pub fn build_stats(args: BuildStatsArgs) -> anyhow::Result<()> {
    let tok = tokenizer(args.stopwords.as_deref(), args.lowercase)?;
    let mut hasher = Sha256::new();
    let file = open_corpus(&args.corpus)?;
    let reader = BufReader::new(HashingReader {
        inner: file,
        hasher: &mut hasher,
    });
    let docs = CorpusReader::new(reader, &source_name(&args.corpus));
    let stats = CollectionStats::from_corpus(docs, &tok, |n| {
        if n % 1_000_000 == 0 {
            info!("{n} documents");
        }
    })?;
    let digest = hex::encode(hasher.finalize());
    write_file(&args.out, |w| stats.write_sidecar(w))?;
    let hash_path = hash_sidecar(&args.out);
    write_file(&hash_path, |w| writeln!(w, "{digest}"))?;
    info!(
        "{} terms, {} tokens -> {} (corpus sha256 {digest})",
        stats.vocab_size(),
        stats.total_terms(),
        args.out.display()
    );
    Ok(())
}

pub struct PredictArgs {
    pub run: PathBuf,
    pub queries: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub predictors: Vec<Predictor>,
    pub params: PredictorParams,
    pub stopwords: Option<PathBuf>,
    pub lowercase: bool,
    pub out: PathBuf,
}

pub fn predict(args: PredictArgs) -> anyhow::Result<()> {
    args.params.validate()?;
    let want_clarity = args.predictors.contains(&Predictor::Clarity);
    if want_clarity && (args.stats.is_none() || args.corpus.is_none()) {
        return Err(fail(EXIT_INPUT, "clarity needs --stats and --corpus"));
    }
    if args.queries.is_none() && args.predictors.iter().any(|p| p.needs_query()) {
        return Err(fail(EXIT_INPUT, "wig and n_sigma_x need --queries"));
    }
    let tok = tokenizer(args.stopwords.as_deref(), args.lowercase)?;
    let run = ingest::read_run_file(&args.run)?;
    let queries = match &args.queries {
        Some(path) => ingest::read_queries(path, &tok)?,
        None => Default::default(),
    };
    if args.params.score_shift != 0.0 {
        info!("adding {} to every retrieval score", args.params.score_shift);
    }

    let mut stats = None;
    let mut doc_texts = Default::default();
    if want_clarity {
        let (stats_path, corpus_path) = (args.stats.as_ref().unwrap(), args.corpus.as_ref().unwrap());
        let file = File::open(stats_path).with_context(|| format!("opening {}", stats_path.display()))?;
        stats = Some(CollectionStats::read_sidecar(BufReader::new(file), &source_name(stats_path))?);
        let depth = args.params.clarity_top_docs;
        let wanted: HashSet<String> = run
            .values()
            .flat_map(|l| l.top(depth).iter().map(|d| d.doc_id.clone()))
            .collect();
        let mut hasher = Sha256::new();
        let reader = BufReader::new(HashingReader {
            inner: open_corpus(corpus_path)?,
            hasher: &mut hasher,
        });
        doc_texts = ingest::load_doc_texts(CorpusReader::new(reader, &source_name(corpus_path)), &wanted)?;
        let digest = hex::encode(hasher.finalize());
        verify_corpus_hash(stats_path, &digest)?;
        info!("loaded {} of {} wanted document texts", doc_texts.len(), wanted.len());
    }
    let clarity = stats.as_ref().map(|stats| ClarityResources {
        stats,
        doc_texts: &doc_texts,
        tokenizer: &tok,
    });

    let outcome = predictors::run_predictors(&queries, &run, &args.params, clarity, &args.predictors)?;
    for f in &outcome.failures {
        warn!("{} {}: {}", f.predictor, f.query_id, f.message);
    }
    if !outcome.skipped_empty.is_empty() {
        warn!("{} queries with an empty ranked list skipped", outcome.skipped_empty.len());
    }
    if outcome.table.is_empty() {
        return Err(fail(EXIT_EMPTY, "no prediction could be computed"));
    }
    write_file(&args.out, |w| predictors::write_prediction_table(w, &outcome.table))?;
    info!(
        "{} predictions, {} failures -> {}",
        outcome.table.len(),
        outcome.failures.len(),
        args.out.display()
    );
    Ok(())
}

fn verify_corpus_hash(stats_path: &Path, digest: &str) -> anyhow::Result<()> {
    let hash_path = hash_sidecar(stats_path);
    match fs::read_to_string(&hash_path) {
        Ok(expected) if expected.trim() == digest => Ok(()),
        Ok(expected) => Err(fail(
            EXIT_INPUT,
            format!(
                "corpus sha256 {digest} does not match {} ({})",
                hash_path.display(),
                expected.trim()
            ),
        )),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            warn!("{} not found, corpus hash not verified", hash_path.display());
            Ok(())
        }
        Err(e) => Err(e).with_context(|| format!("reading {}", hash_path.display())),
    }
}

pub struct CorrelateArgs {
    pub predictions: Vec<PathBuf>,
    pub external: Vec<(String, PathBuf)>,
    pub actuals: Vec<PathBuf>,
    pub out: PathBuf,
    pub per_turn: Option<CorrelationKind>,
    pub kendall: KendallSignificance,
}

pub fn correlate(args: CorrelateArgs) -> anyhow::Result<()> {
    if args.predictions.is_empty() && args.external.is_empty() {
        return Err(fail(EXIT_INPUT, "give at least one --predictions or --external file"));
    }
    if args.actuals.is_empty() {
        return Err(fail(EXIT_INPUT, "give at least one --actuals file"));
    }
    let mut table = PredictionTable::default();
    for path in &args.predictions {
        table = table.merge(ingest::read_prediction_table(path)?)?;
    }
    for (name, path) in &args.external {
        let records = ingest::read_predictions(path, name)?;
        table = table.merge(PredictionTable::new(records)?)?;
    }
    let mut metrics: BTreeMap<String, BTreeMap<_, _>> = BTreeMap::new();
    for path in &args.actuals {
        let records = ingest::read_actuals(path)?;
        let Some(first) = records.first() else {
            warn!("{} holds no per-query values", path.display());
            continue;
        };
        let metric = first.metric.clone();
        if metrics.insert(metric.clone(), correlate::actuals_map(&records)).is_some() {
            bail!(fail(EXIT_INPUT, format!("metric {metric} given twice")));
        }
    }

    let mut report = CorrelationReport::default();
    for (metric, actuals) in &metrics {
        report.extend(correlate::evaluate_predictors(&table, metric, actuals, args.kendall));
    }
    for row in report.rows.iter().filter(|r| !r.is_ok()) {
        warn!("{} vs {}: {}", row.predictor, row.metric, row.error.as_deref().unwrap_or(""));
    }
    write_file(&args.out.join("correlation.tsv"), |w| report.write_tsv(w))?;
    write_file(&args.out.join("correlation.json"), |w| writeln!(w, "{}", report.to_json()))?;

    if let Some(kind) = args.per_turn {
        for predictor in table.predictors() {
            let predictions = table.values_for(predictor);
            for (metric, actuals) in &metrics {
                match correlate::per_turn_correlation(&predictions, actuals, kind, args.kendall) {
                    Ok(turns) => {
                        let path = args.out.join(format!("per_turn.{predictor}.{metric}.tsv"));
                        write_file(&path, |w| correlate::write_per_turn_tsv(w, &turns))?;
                    }
                    Err(e) => warn!("per-turn {predictor} vs {metric}: {e}"),
                }
            }
        }
    }

    let ok = report.successful_rows();
    info!("{ok} of {} rows correlated", report.rows.len());
    if ok == 0 {
        return Err(fail(EXIT_EMPTY, "no predictor could be correlated with any metric"));
    }
    Ok(())
}

pub struct ScoreDistArgs {
    pub runs: Vec<(String, PathBuf)>,
    pub bins: usize,
    pub out: PathBuf,
}

pub fn score_dist(args: ScoreDistArgs) -> anyhow::Result<()> {
    if args.runs.is_empty() {
        return Err(fail(EXIT_INPUT, "give at least one --run NAME=PATH"));
    }
    if args.bins == 0 {
        return Err(fail(EXIT_INPUT, "--bins must be at least 1"));
    }
    let mut names = HashSet::new();
    let mut summaries = Vec::new();
    for (name, path) in &args.runs {
        if !names.insert(name.as_str()) {
            return Err(fail(EXIT_INPUT, format!("run name {name} given twice")));
        }
        let run = ingest::read_run_file(path)?;
        let dist = correlate::score_distribution(&run, args.bins);
        match &dist {
            Ok(d) => {
                let path = args.out.join(format!("{name}.hist.tsv"));
                write_file(&path, |w| correlate::write_histogram_tsv(w, d))?;
            }
            Err(e) => warn!("{name}: {e}"),
        }
        summaries.push((name.clone(), dist));
    }
    write_file(&args.out.join("summary.tsv"), |w| {
        correlate::write_distribution_summary(w, &summaries)
    })?;
    if summaries.iter().all(|(_, d)| d.is_err()) {
        return Err(fail(EXIT_EMPTY, "no run has a usable score distribution"));
    }
    Ok(())
}

pub fn synth_bench(config: SynthConfig, out: &Path) -> anyhow::Result<()> {
    let data = synth::generate(&config)?;
    data.write_to(out)?;
    info!(
        "{} queries, {} documents, {} judgments -> {}",
        data.run.len(),
        data.corpus.len(),
        data.qrels.len(),
        out.display()
    );
    Ok(())
}

pub fn length_norm(sqrt: bool) -> LengthNorm {
    if sqrt {
        LengthNorm::SqrtQueryLength
    } else {
        LengthNorm::QueryLength
    }
}
