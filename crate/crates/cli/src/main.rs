//! `qpp`: query performance prediction toolkit.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;
use qpp_core::correlate::{CorrelationKind, KendallSignificance};
use qpp_core::synth::SynthConfig;
use qpp_core::{Gain, Predictor, PredictorParams};

use commands::{exit_code, named_path};
use config::{pick, FileConfig};

#[derive(Parser)]
#[command(name = "qpp", version, about = "Post-retrieval query performance prediction and predictor evaluation")]
#[command(after_help = "Exit codes: 0 success, 2 input or format error, 3 empty or degenerate result.\nLogging goes to stderr; set RUST_LOG=debug for more.")]
struct Cli {
    /// TOML file with defaults for any flag; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for per-query work [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-query effectiveness of a run (nDCG@k, Recall@k).
    EvalRun(EvalRunCmd),
    /// Collection term statistics used by Clarity.
    BuildStats(BuildStatsCmd),
    /// Predictor values for every query of a run.
    Predict(PredictCmd),
    /// Correlation of predicted with actual effectiveness.
    Correlate(CorrelateCmd),
    /// Histograms of min-max normalized retrieval scores.
    ScoreDist(ScoreDistCmd),
    /// Seeded synthetic run, qrels, queries and corpus.
    SynthBench(SynthBenchCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum GainArg {
    /// rel_i, as in trec_eval.
    Linear,
    /// 2^rel_i - 1.
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum KendallPArg {
    /// Normal approximation with tie-corrected variance and continuity correction.
    Normal,
    /// t-test on tau with n-2 degrees of freedom.
    T,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrelationArg {
    Pearson,
    Kendall,
    Spearman,
}

#[derive(Args)]
struct TokenizerArgs {
    /// Stopword file, one word per line, applied after lowercasing [default: none].
    #[arg(long)]
    stopwords: Option<PathBuf>,

    /// Keep case when tokenizing [default: lowercase].
    #[arg(long)]
    no_lowercase: bool,
}

#[derive(Args)]
struct EvalRunCmd {
    /// TREC run file.
    #[arg(long)]
    run: Option<PathBuf>,
    /// TREC qrels file.
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Metrics to compute [default: ndcg@3,ndcg@100,recall@100].
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Minimum grade counted as relevant by recall [default: 1, trec_eval's convention].
    #[arg(long)]
    recall_threshold: Option<u32>,
    /// nDCG gain function.
    #[arg(long, value_enum, default_value = "linear")]
    gain: GainArg,
    /// Output directory for actuals.<metric>.tsv [default: .].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildStatsCmd {
    /// JSONL corpus with `id` and `contents` fields.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Sidecar file to write; the corpus hash goes to <out>.sha256.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

#[derive(Args)]
struct PredictCmd {
    /// TREC run file.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Query file `qid<TAB>text`; |q| is the token count of the text.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Term statistics sidecar from build-stats (Clarity only).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// JSONL corpus with the document texts (Clarity only).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Predictors to compute: clarity, wig, nqc, sigma_max, n_sigma_x, smv [default: all].
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    /// Documents used by WIG [default: 5, Zhou & Croft 2007].
    #[arg(long)]
    wig_k: Option<usize>,
    /// Documents used by NQC [default: 100, Shtok et al. 2012].
    #[arg(long)]
    nqc_k: Option<usize>,
    /// Documents used by SMV [default: 100, Tao & Wu 2014].
    #[arg(long)]
    smv_k: Option<usize>,
    /// Head threshold x of n(σ_x%) in percent of the top score [default: 50, Cummins et al. 2011].
    #[arg(long)]
    sigma_x_percent: Option<f64>,
    /// Feedback documents of the Clarity relevance model [default: 100, Cronen-Townsend et al. 2002].
    #[arg(long)]
    clarity_top_docs: Option<usize>,
    /// Terms kept in the Clarity relevance model [default: 100].
    #[arg(long)]
    clarity_clip_terms: Option<usize>,
    /// Depth of the top-score mean used as the corpus score Score(q;D) [default: 1000].
    #[arg(long)]
    corpus_score_depth: Option<usize>,
    /// Constant added to every retrieval score before prediction [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    score_shift: Option<f64>,
    /// Divide by the signed corpus score instead of its absolute value.
    #[arg(long)]
    strict_corpus_score: bool,
    /// Normalize n(σ_x%) by √|q| instead of |q|.
    #[arg(long)]
    n_sigma_sqrt_norm: bool,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Output TSV `qid<TAB>predictor<TAB>value` [default: predictions.tsv].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorrelateCmd {
    /// Prediction table written by `predict` (repeatable).
    #[arg(long)]
    predictions: Vec<PathBuf>,
    /// External predictor file `qid<TAB>value` as NAME=PATH (repeatable).
    #[arg(long)]
    external: Vec<String>,
    /// Actuals file written by `eval-run` (repeatable).
    #[arg(long)]
    actuals: Vec<PathBuf>,
    /// Also write per-turn correlations of this kind.
    #[arg(long, value_enum)]
    per_turn: Option<CorrelationArg>,
    /// Significance test for Kendall's tau.
    #[arg(long, value_enum, default_value = "normal")]
    kendall_p: KendallPArg,
    /// Output directory [default: .].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreDistCmd {
    /// Run file as NAME=PATH (repeatable).
    #[arg(long = "run", required = true)]
    runs: Vec<String>,
    /// Histogram bins over [0, 1] [default: 50].
    #[arg(long)]
    bins: Option<usize>,
    /// Output directory [default: .].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthBenchCmd {
    /// RNG seed [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// Number of queries.
    #[arg(long, default_value_t = 50)]
    queries: usize,
    /// Ranked list depth.
    #[arg(long, default_value_t = 1000)]
    depth: usize,
    /// Conversation turns per topic.
    #[arg(long, default_value_t = 5)]
    turns: usize,
    /// Sign and strength of the score-spread / quality coupling, in [-1, 1].
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    coupling: f64,
    /// Output directory [default: .].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn or_dot(path: Option<PathBuf>) -> PathBuf {
    path.unwrap_or_else(|| PathBuf::from("."))
}

fn need(path: Option<PathBuf>, flag: &str) -> anyhow::Result<PathBuf> {
    path.ok_or_else(|| {
        commands::Failure {
            code: commands::EXIT_INPUT,
            message: format!("missing required {flag}"),
        }
        .into()
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(threads) = pick(cli.threads, &file.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match cli.command {
        Command::EvalRun(c) => commands::eval_run(commands::EvalRunArgs {
            run: need(pick(c.run, &file.run), "--run")?,
            qrels: need(pick(c.qrels, &file.qrels), "--qrels")?,
            metrics: pick(c.metrics, &file.metrics).unwrap_or_else(|| {
                ["ndcg@3", "ndcg@100", "recall@100"].map(String::from).to_vec()
            }),
            recall_threshold: pick(c.recall_threshold, &file.recall_threshold).unwrap_or(1),
            gain: match c.gain {
                GainArg::Linear => Gain::Linear,
                GainArg::Exponential => Gain::Exponential,
            },
            out: or_dot(pick(c.out, &file.out)),
        }),
        Command::BuildStats(c) => commands::build_stats(commands::BuildStatsArgs {
            corpus: need(pick(c.corpus, &file.corpus), "--corpus")?,
            out: need(pick(c.out, &file.stats), "--out")?,
            stopwords: pick(c.tokenizer.stopwords, &file.stopwords),
            lowercase: !c.tokenizer.no_lowercase,
        }),
        Command::Predict(c) => {
            let names = pick(c.predictors, &file.predictors);
            let predictors = match names {
                None => Predictor::ALL.to_vec(),
                Some(names) => names
                    .iter()
                    .map(|n| n.parse::<Predictor>())
                    .collect::<qpp_core::Result<Vec<_>>>()?,
            };
            let fp = &file.params;
            let d = PredictorParams::default();
            let params = PredictorParams {
                wig_k: pick(c.wig_k, &fp.wig_k).unwrap_or(d.wig_k),
                nqc_k: pick(c.nqc_k, &fp.nqc_k).unwrap_or(d.nqc_k),
                smv_k: pick(c.smv_k, &fp.smv_k).unwrap_or(d.smv_k),
                sigma_x_percent: pick(c.sigma_x_percent, &fp.sigma_x_percent).unwrap_or(d.sigma_x_percent),
                clarity_top_docs: pick(c.clarity_top_docs, &fp.clarity_top_docs).unwrap_or(d.clarity_top_docs),
                clarity_clip_terms: pick(c.clarity_clip_terms, &fp.clarity_clip_terms)
                    .unwrap_or(d.clarity_clip_terms),
                corpus_score_depth: pick(c.corpus_score_depth, &fp.corpus_score_depth)
                    .unwrap_or(d.corpus_score_depth),
                n_sigma_norm: commands::length_norm(c.n_sigma_sqrt_norm),
                signed_corpus_score: c.strict_corpus_score,
                score_shift: pick(c.score_shift, &fp.score_shift).unwrap_or(d.score_shift),
            };
            commands::predict(commands::PredictArgs {
                run: need(pick(c.run, &file.run), "--run")?,
                queries: pick(c.queries, &file.queries),
                stats: pick(c.stats, &file.stats),
                corpus: pick(c.corpus, &file.corpus),
                predictors,
                params,
                stopwords: pick(c.tokenizer.stopwords, &file.stopwords),
                lowercase: !c.tokenizer.no_lowercase,
                out: pick(c.out, &file.out).unwrap_or_else(|| PathBuf::from("predictions.tsv")),
            })
        }
        Command::Correlate(c) => commands::correlate(commands::CorrelateArgs {
            predictions: c.predictions,
            external: c.external.iter().map(|a| named_path(a)).collect::<anyhow::Result<_>>()?,
            actuals: c.actuals,
            out: or_dot(pick(c.out, &file.out)),
            per_turn: c.per_turn.map(|k| match k {
                CorrelationArg::Pearson => CorrelationKind::Pearson,
                CorrelationArg::Kendall => CorrelationKind::Kendall,
                CorrelationArg::Spearman => CorrelationKind::Spearman,
            }),
            kendall: match c.kendall_p {
                KendallPArg::Normal => KendallSignificance::NormalApprox,
                KendallPArg::T => KendallSignificance::TTest,
            },
        }),
        Command::ScoreDist(c) => commands::score_dist(commands::ScoreDistArgs {
            runs: c.runs.iter().map(|a| named_path(a)).collect::<anyhow::Result<_>>()?,
            bins: pick(c.bins, &file.bins).unwrap_or(50),
            out: or_dot(pick(c.out, &file.out)),
        }),
        Command::SynthBench(c) => {
            let config = SynthConfig {
                seed: pick(c.seed, &file.seed).unwrap_or(7),
                queries: c.queries,
                depth: c.depth,
                turns_per_topic: c.turns,
                spread_coupling: c.coupling,
                ..SynthConfig::default()
            };
            commands::synth_bench(config, &or_dot(pick(c.out, &file.out)))
        }
    }
}

/// The error chain, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let text = cause.to_string();
        if !msg.ends_with(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{}", describe(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
