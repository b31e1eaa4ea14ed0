//! Actual per-query retrieval effectiveness: nDCG@k and Recall@k.
//!
//! nDCG uses linear gain with a log2(rank + 1) discount, the trec_eval
//! `ndcg_cut` convention. Exponential gain (2^g - 1) is available through
//! [`Gain::Exponential`]. Queries without any relevant judgment are
//! unjudgeable and never scored.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use serde::Serialize;

use crate::data_model::{ActualRecord, Qrels, RankedList};
use crate::error::{Error, Result};
use crate::ingest::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Ndcg,
    Recall,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Gain {
    #[default]
    Linear,
    Exponential,
}

impl Gain {
    fn apply(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => grade as f64,
            Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
        }
    }
}

/// `ndcg@K` or `recall@K`. The relevance threshold only affects recall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub cutoff: usize,
    pub relevance_threshold: u32,
    pub gain: Gain,
}

impl MetricSpec {
    pub fn ndcg(cutoff: usize) -> Self {
        MetricSpec {
            kind: MetricKind::Ndcg,
            cutoff,
            relevance_threshold: 1,
            gain: Gain::Linear,
        }
    }

    pub fn recall(cutoff: usize) -> Self {
        MetricSpec {
            kind: MetricKind::Recall,
            cutoff,
            relevance_threshold: 1,
            gain: Gain::Linear,
        }
    }

    pub fn with_threshold(mut self, threshold: u32) -> Self {
        self.relevance_threshold = threshold;
        self
    }

    pub fn with_gain(mut self, gain: Gain) -> Self {
        self.gain = gain;
        self
    }

    pub fn evaluate(&self, list: &RankedList, qrels: &Qrels) -> Result<f64> {
        match self.kind {
            MetricKind::Ndcg => ndcg_with_gain(list, qrels, self.cutoff, self.gain),
            MetricKind::Recall => recall_at_k(list, qrels, self.cutoff, self.relevance_threshold),
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            MetricKind::Ndcg => "ndcg",
            MetricKind::Recall => "recall",
        };
        write!(f, "{name}@{}", self.cutoff)
    }
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unknown metric {s:?} (expected ndcg@K or recall@K)"));
        let (name, cutoff) = s.trim().split_once('@').ok_or_else(bad)?;
        let cutoff: usize = cutoff.parse().map_err(|_| bad())?;
        if cutoff == 0 {
            return Err(Error::InvalidInput(format!("metric cutoff must be at least 1 in {s:?}")));
        }
        match name.to_ascii_lowercase().as_str() {
            "ndcg" => Ok(MetricSpec::ndcg(cutoff)),
            "recall" => Ok(MetricSpec::recall(cutoff)),
            _ => Err(bad()),
        }
    }
}

pub fn ndcg_at_k(list: &RankedList, qrels: &Qrels, k: usize) -> Result<f64> {
    ndcg_with_gain(list, qrels, k, Gain::Linear)
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

pub fn ndcg_with_gain(list: &RankedList, qrels: &Qrels, k: usize, gain: Gain) -> Result<f64> {
    let qid = list.query_id();
    let judged = qrels.for_query(qid);
    let mut ideal: Vec<u32> = judged
        .map(|m| m.values().copied().filter(|&g| g > 0).collect())
        .unwrap_or_default();
    if ideal.is_empty() {
        return Err(Error::Unjudgeable(qid.to_string()));
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain.apply(g) / discount(i + 1))
        .sum();
    let dcg: f64 = list
        .top(k)
        .iter()
        .map(|d| gain.apply(qrels.grade(qid, &d.doc_id)) / discount(d.rank))
        .sum();
    Ok(dcg / idcg)
}

/// Fraction of the documents graded `>= threshold` that appear in the top k.
pub fn recall_at_k(list: &RankedList, qrels: &Qrels, k: usize, threshold: u32) -> Result<f64> {
    let qid = list.query_id();
    let threshold = threshold.max(1);
    let relevant = qrels
        .for_query(qid)
        .map(|m| m.values().filter(|&&g| g >= threshold).count())
        .unwrap_or(0);
    if relevant == 0 {
        return Err(Error::Unjudgeable(qid.to_string()));
    }
    let retrieved = list
        .top(k)
        .iter()
        .filter(|d| qrels.grade(qid, &d.doc_id) >= threshold)
        .count();
    Ok(retrieved as f64 / relevant as f64)
}

/// Per-query actuals for one metric plus their mean over judged queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuals {
    pub metric: String,
    pub records: Vec<ActualRecord>,
    /// Run queries that could not be scored because they are unjudgeable.
    pub skipped_unjudged: usize,
}

impl Actuals {
    pub fn mean(&self) -> Option<f64> {
        if self.records.is_empty() {
            None
        } else {
            Some(self.records.iter().map(|r| r.value).sum::<f64>() / self.records.len() as f64)
        }
    }

    /// `qid<TAB>metric<TAB>value` per query, then `ALL<TAB>metric<TAB>mean`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(w, "{}\t{}\t{}", r.query_id, r.metric, r.value)?;
        }
        if let Some(mean) = self.mean() {
            writeln!(w, "ALL\t{}\t{mean}", self.metric)?;
        }
        w.flush()
    }
}

/// Scores every query of the run that has judgments. Queries in the qrels
/// that the run never retrieved for are not scored.
pub fn actuals_for_run(run: &Run, qrels: &Qrels, metric: &MetricSpec) -> Result<Actuals> {
    let name = metric.to_string();
    let mut records = Vec::new();
    let mut skipped = 0;
    for list in run.values() {
        match metric.evaluate(list, qrels) {
            Ok(value) => records.push(ActualRecord::new(list.query_id().clone(), name.as_str(), value)?),
            Err(Error::Unjudgeable(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        warn!("{name}: skipped {skipped} unjudged queries");
    }
    if records.is_empty() {
        warn!("{name}: no judged queries in run");
    }
    Ok(Actuals {
        metric: name,
        records,
        skipped_unjudged: skipped,
    })
}
