//! Unsupervised post-retrieval predictors.
//!
//! Score-based: WIG, NQC, σ_max, n(σ_x%) and SMV. Content-based: Clarity,
//! the KL divergence between a relevance model induced from the top-ranked
//! documents and the collection language model.
//!
//! Standard deviations are population (divide by n). When a list is shorter
//! than a predictor's cutoff the whole list is used.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::data_model::{PredictionRecord, PredictionTable, Query, QueryId, QuerySet, RankedList};
use crate::error::{Error, Result};
use crate::ingest::Run;
use crate::lm_stats::{
    build_relevance_model, weights_from_scores, CollectionStats, DocTextSource, Tokenizer, WeightMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Predictor {
    Clarity,
    Wig,
    Nqc,
    SigmaMax,
    NSigmaX,
    Smv,
}

impl Predictor {
    pub const ALL: [Predictor; 6] = [
        Predictor::Clarity,
        Predictor::Wig,
        Predictor::Nqc,
        Predictor::SigmaMax,
        Predictor::NSigmaX,
        Predictor::Smv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Clarity => "clarity",
            Predictor::Wig => "wig",
            Predictor::Nqc => "nqc",
            Predictor::SigmaMax => "sigma_max",
            Predictor::NSigmaX => "n_sigma_x",
            Predictor::Smv => "smv",
        }
    }

    /// Whether the predictor looks at |q|.
    pub fn needs_query(self) -> bool {
        matches!(self, Predictor::Wig | Predictor::NSigmaX)
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Predictor::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Predictor::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidInput(format!("unknown predictor {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// How n(σ_x%) normalizes by query length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LengthNorm {
    /// Divide by |q|.
    #[default]
    QueryLength,
    /// Divide by √|q|.
    SqrtQueryLength,
}

impl LengthNorm {
    fn apply(self, value: f64, term_count: usize) -> f64 {
        match self {
            LengthNorm::QueryLength => value / term_count as f64,
            LengthNorm::SqrtQueryLength => value / (term_count as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorParams {
    pub wig_k: usize,
    pub nqc_k: usize,
    pub smv_k: usize,
    pub sigma_x_percent: f64,
    pub clarity_top_docs: usize,
    pub clarity_clip_terms: usize,
    /// Depth of the top-of-list mean used as the corpus score Score(q;D).
    pub corpus_score_depth: usize,
    pub n_sigma_norm: LengthNorm,
    /// Divide by the raw corpus score instead of its absolute value.
    pub signed_corpus_score: bool,
    /// Added to every retrieval score before any predictor runs.
    pub score_shift: f64,
}

impl Default for PredictorParams {
    fn default() -> Self {
        PredictorParams {
            wig_k: 5,
            nqc_k: 100,
            smv_k: 100,
            sigma_x_percent: 50.0,
            clarity_top_docs: 100,
            clarity_clip_terms: 100,
            corpus_score_depth: 1000,
            n_sigma_norm: LengthNorm::QueryLength,
            signed_corpus_score: false,
            score_shift: 0.0,
        }
    }
}

impl PredictorParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("wig_k", self.wig_k),
            ("nqc_k", self.nqc_k),
            ("smv_k", self.smv_k),
            ("clarity_top_docs", self.clarity_top_docs),
            ("clarity_clip_terms", self.clarity_clip_terms),
            ("corpus_score_depth", self.corpus_score_depth),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidInput(format!("{name} must be at least 1")));
        }
        if !(self.sigma_x_percent > 0.0 && self.sigma_x_percent <= 100.0) {
            return Err(Error::InvalidInput(format!(
                "sigma_x_percent must lie in (0, 100], got {}",
                self.sigma_x_percent
            )));
        }
        if !self.score_shift.is_finite() {
            return Err(Error::InvalidInput("score_shift must be finite".into()));
        }
        Ok(())
    }
}

/// What Clarity needs beyond the ranked list.
#[derive(Clone, Copy)]
pub struct ClarityResources<'a> {
    pub stats: &'a CollectionStats,
    pub doc_texts: &'a (dyn DocTextSource + Sync),
    pub tokenizer: &'a Tokenizer,
}

/// Per-query inputs shared by all predictors.
#[derive(Clone, Copy)]
pub struct PredictorContext<'a> {
    /// Score(q;D).
    pub corpus_score: f64,
    pub clarity: Option<ClarityResources<'a>>,
    pub params: &'a PredictorParams,
}

impl<'a> PredictorContext<'a> {
    /// Context whose corpus score is the mean of the list's top
    /// `corpus_score_depth` scores.
    pub fn for_list(
        list: &RankedList,
        params: &'a PredictorParams,
        clarity: Option<ClarityResources<'a>>,
    ) -> Result<Self> {
        Ok(PredictorContext {
            corpus_score: corpus_score(list, params.corpus_score_depth)?,
            clarity,
            params,
        })
    }

    fn normalizer(&self) -> Result<f64> {
        if self.corpus_score == 0.0 {
            return Err(Error::UndefinedNormalization);
        }
        Ok(if self.params.signed_corpus_score {
            self.corpus_score
        } else {
            self.corpus_score.abs()
        })
    }
}

fn ensure_nonempty(list: &RankedList) -> Result<()> {
    if list.is_empty() {
        Err(Error::InvalidInput(format!("empty ranked list for {}", list.query_id())))
    } else {
        Ok(())
    }
}

/// Exact on constant input, so spread-based predictors give 0 there.
fn mean(xs: &[f64]) -> f64 {
    if xs.iter().all(|&x| x == xs[0]) {
        return xs[0];
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_std(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn top_scores(list: &RankedList, k: usize) -> Vec<f64> {
    list.top(k).iter().map(|d| d.score).collect()
}

/// Mean of the first `min(depth, n)` scores.
pub fn corpus_score(list: &RankedList, depth: usize) -> Result<f64> {
    ensure_nonempty(list)?;
    if depth == 0 {
        return Err(Error::InvalidInput("corpus score depth must be at least 1".into()));
    }
    Ok(mean(&top_scores(list, depth)))
}

/// Weighted information gain: mean divergence of the top-k scores from the
/// corpus score, scaled by 1/√|q|.
pub fn wig(query: &Query, list: &RankedList, ctx: &PredictorContext) -> Result<f64> {
    ensure_nonempty(list)?;
    let top = top_scores(list, ctx.params.wig_k);
    let scale = 1.0 / (query.term_count as f64).sqrt();
    let total: f64 = top.iter().map(|s| scale * (s - ctx.corpus_score)).sum();
    Ok(total / top.len() as f64)
}

/// Normalized query commitment: std of the top-k scores over |Score(q;D)|.
pub fn nqc(_query: &Query, list: &RankedList, ctx: &PredictorContext) -> Result<f64> {
    ensure_nonempty(list)?;
    let norm = ctx.normalizer()?;
    Ok(population_std(&top_scores(list, ctx.params.nqc_k)) / norm)
}

/// Largest population std over all prefixes of the list.
pub fn sigma_max(list: &RankedList) -> Result<f64> {
    ensure_nonempty(list)?;
    let scores = list.scores();
    // each prefix is evaluated from scratch; a running update would drift
    // from the direct definition in the last bits
    Ok((1..=scores.len())
        .map(|j| population_std(&scores[..j]))
        .fold(0.0, f64::max))
}

/// Std of the head of the list whose scores are at least `x_percent`% of the
/// top score, normalized by query length.
pub fn n_sigma_x(query: &Query, list: &RankedList, x_percent: f64, norm: LengthNorm) -> Result<f64> {
    ensure_nonempty(list)?;
    if !(x_percent > 0.0 && x_percent <= 100.0) {
        return Err(Error::InvalidInput(format!("x must lie in (0, 100], got {x_percent}")));
    }
    let scores = list.scores();
    let head = scores[0];
    if head <= 0.0 {
        return Err(Error::NonPositiveHeadScore(head));
    }
    let threshold = x_percent / 100.0 * head;
    let cut = scores.iter().take_while(|&&s| s >= threshold).count();
    Ok(norm.apply(population_std(&scores[..cut]), query.term_count))
}

/// Score magnitude and variance: mean of s·|ln(s/μ)| over the top-k scores,
/// over |Score(q;D)|.
pub fn smv(_query: &Query, list: &RankedList, ctx: &PredictorContext) -> Result<f64> {
    ensure_nonempty(list)?;
    let top = top_scores(list, ctx.params.smv_k);
    if let Some(&bad) = top.iter().find(|&&s| s <= 0.0) {
        return Err(Error::NonPositiveScore(bad));
    }
    let norm = ctx.normalizer()?;
    let mu = mean(&top);
    let total: f64 = top.iter().map(|&s| s * (s / mu).ln().abs()).sum();
    Ok(total / top.len() as f64 / norm)
}

/// KL divergence (natural log) between the relevance model of the top
/// documents, weighted by sum-normalized scores, and the collection model.
pub fn clarity(_query: &Query, list: &RankedList, ctx: &PredictorContext) -> Result<f64> {
    ensure_nonempty(list)?;
    let res = ctx
        .clarity
        .ok_or_else(|| Error::InvalidInput("clarity needs collection stats and document texts".into()))?;
    let params = ctx.params;
    let weights = weights_from_scores(list, params.clarity_top_docs, WeightMode::SumNormalized)?;
    let rm = build_relevance_model(
        list,
        res.doc_texts,
        &weights,
        params.clarity_top_docs,
        params.clarity_clip_terms,
        res.tokenizer,
    )?;
    let kl = rm.probs.iter().try_fold(0.0, |acc, (term, &p)| {
        let background = res
            .stats
            .prob(term)
            .ok_or_else(|| Error::TermNotInCollection(term.clone()))?;
        Ok::<_, Error>(acc + p * (p / background).ln())
    })?;
    // rounding can leave a tiny negative KL
    Ok(kl.max(0.0))
}

pub fn predict(
    predictor: Predictor,
    query: &Query,
    list: &RankedList,
    ctx: &PredictorContext,
) -> Result<f64> {
    match predictor {
        Predictor::Clarity => clarity(query, list, ctx),
        Predictor::Wig => wig(query, list, ctx),
        Predictor::Nqc => nqc(query, list, ctx),
        Predictor::SigmaMax => sigma_max(list),
        Predictor::NSigmaX => n_sigma_x(query, list, ctx.params.sigma_x_percent, ctx.params.n_sigma_norm),
        Predictor::Smv => smv(query, list, ctx),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionFailure {
    pub query_id: QueryId,
    pub predictor: Predictor,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRun {
    pub table: PredictionTable,
    pub failures: Vec<PredictionFailure>,
    /// Run queries with an empty ranked list.
    pub skipped_empty: Vec<QueryId>,
}

/// Computes every selected predictor for every query of the run. Per-query
/// failures are collected rather than aborting the run. Queries absent from
/// `queries` still get the predictors that ignore the query text.
pub fn run_predictors(
    queries: &QuerySet,
    run: &Run,
    params: &PredictorParams,
    clarity: Option<ClarityResources>,
    selection: &[Predictor],
) -> Result<PredictionRun> {
    params.validate()?;
    if selection.is_empty() {
        return Err(Error::InvalidInput("no predictor selected".into()));
    }
    if selection.contains(&Predictor::Clarity) && clarity.is_none() {
        return Err(Error::InvalidInput(
            "clarity selected but collection stats / document texts are missing".into(),
        ));
    }
    let mut selection = selection.to_vec();
    selection.sort();
    selection.dedup();
    if params.score_shift != 0.0 {
        info!("adding {} to every retrieval score", params.score_shift);
    }

    let lists: Vec<&RankedList> = run.values().collect();
    let per_query: Vec<(Vec<PredictionRecord>, Vec<PredictionFailure>, Option<QueryId>)> = lists
        .par_iter()
        .map(|list| predict_one(queries, list, params, clarity, &selection))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut skipped_empty = Vec::new();
    for (r, f, skipped) in per_query {
        records.extend(r);
        failures.extend(f);
        skipped_empty.extend(skipped);
    }
    if !skipped_empty.is_empty() {
        warn!("skipped {} queries with empty ranked lists", skipped_empty.len());
    }
    if !failures.is_empty() {
        warn!("{} (query, predictor) computations failed", failures.len());
    }
    Ok(PredictionRun {
        table: PredictionTable::new(records)?,
        failures,
        skipped_empty,
    })
}

fn predict_one(
    queries: &QuerySet,
    list: &RankedList,
    params: &PredictorParams,
    clarity: Option<ClarityResources>,
    selection: &[Predictor],
) -> (Vec<PredictionRecord>, Vec<PredictionFailure>, Option<QueryId>) {
    let qid = list.query_id().clone();
    if list.is_empty() {
        return (Vec::new(), Vec::new(), Some(qid));
    }
    let fail_all = |message: String| {
        let failures = selection
            .iter()
            .map(|&p| PredictionFailure {
                query_id: qid.clone(),
                predictor: p,
                message: message.clone(),
            })
            .collect();
        (Vec::new(), failures, None)
    };
    let shifted;
    let list = if params.score_shift != 0.0 {
        match list.shifted(params.score_shift) {
            Ok(l) => {
                shifted = l;
                &shifted
            }
            Err(e) => return fail_all(e.to_string()),
        }
    } else {
        list
    };
    let ctx = match PredictorContext::for_list(list, params, clarity) {
        Ok(ctx) => ctx,
        Err(e) => return fail_all(e.to_string()),
    };
    // predictors that ignore the query text may run without one
    let known = queries.get(&qid);
    let placeholder = Query {
        id: qid.clone(),
        text: String::new(),
        term_count: 1,
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &p in selection {
        let outcome = match known {
            Some(q) => predict(p, q, list, &ctx),
            None if p.needs_query() => Err(Error::InvalidInput(format!("no query text for {qid}"))),
            None => predict(p, &placeholder, list, &ctx),
        };
        match outcome.and_then(|v| PredictionRecord::new(qid.clone(), p.name(), v)) {
            Ok(r) => records.push(r),
            Err(e) => failures.push(PredictionFailure {
                query_id: qid.clone(),
                predictor: p,
                message: e.to_string(),
            }),
        }
    }
    (records, failures, None)
}

/// `qid<TAB>predictor<TAB>value`, rows sorted by (predictor, qid), values at
/// full round-trip precision.
pub fn write_prediction_table<W: Write>(mut w: W, table: &PredictionTable) -> std::io::Result<()> {
    for r in table.records() {
        writeln!(w, "{}\t{}\t{}", r.query_id, r.predictor, r.value)?;
    }
    w.flush()
}
