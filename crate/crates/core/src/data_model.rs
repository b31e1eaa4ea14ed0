//! Domain types shared by every other module. Nothing here performs I/O.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Query identifier. CAsT-style ids encode the conversation turn as
/// `<topic>_<turn>`; anything else is kept as an opaque topic with no turn.
///
/// Equality, hashing and ordering follow the raw string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryId {
    raw: String,
    topic: String,
    turn: Option<u32>,
}

impl QueryId {
    /// Splits at the last underscore. The suffix counts as a turn only when it
    /// is a canonical positive integer (no sign, no leading zero), so that
    /// `format!("{topic}_{turn}")` always reproduces the raw id.
    pub fn parse(raw: &str) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidQueryId(raw.to_string()));
        }
        let split = raw.rsplit_once('_').and_then(|(topic, suffix)| {
            let canonical = !suffix.is_empty()
                && !suffix.starts_with('0')
                && suffix.bytes().all(|b| b.is_ascii_digit());
            if topic.is_empty() || !canonical {
                return None;
            }
            suffix.parse::<u32>().ok().map(|turn| (topic, turn))
        });
        let (topic, turn) = match split {
            Some((topic, turn)) => (topic.to_string(), Some(turn)),
            None => (raw.to_string(), None),
        };
        Ok(QueryId {
            raw: raw.to_string(),
            topic,
            turn,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn turn(&self) -> Option<u32> {
        self.turn
    }
}

impl FromStr for QueryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QueryId::parse(s)
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Serialize for QueryId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

/// A rewritten query as fed to the retriever and the predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: QueryId,
    pub text: String,
    /// |q|: number of tokens the shared tokenizer produces for `text`.
    pub term_count: usize,
}

impl Query {
    pub fn new(id: QueryId, text: impl Into<String>, term_count: usize) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidInput(format!("query {id} has empty text")));
        }
        if term_count == 0 {
            return Err(Error::InvalidInput(format!(
                "query {id} has no tokens: {text:?}"
            )));
        }
        Ok(Query {
            id,
            text,
            term_count,
        })
    }
}

pub type QuerySet = BTreeMap<QueryId, Query>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    /// 1-based position in the canonical order.
    pub rank: usize,
    pub score: f64,
}

fn canonical_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// One query's retrieved documents in canonical order: score descending,
/// ties broken by doc id ascending, ranks 1..n.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    query_id: QueryId,
    docs: Vec<ScoredDoc>,
}

impl RankedList {
    /// Builds the canonical list from unordered `(doc_id, score)` pairs.
    /// Any incoming rank information is discarded.
    pub fn new(query_id: QueryId, docs: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut docs: Vec<(String, f64)> = docs.into_iter().collect();
        let mut seen = HashSet::with_capacity(docs.len());
        for (doc_id, score) in &docs {
            if doc_id.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "empty doc id in ranked list for {query_id}"
                )));
            }
            if !score.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite score {score} for {query_id}/{doc_id}"
                )));
            }
            if !seen.insert(doc_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate doc {doc_id} in ranked list for {query_id}"
                )));
            }
        }
        docs.sort_by(canonical_order);
        let docs = docs
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| ScoredDoc {
                doc_id,
                rank: i + 1,
                score,
            })
            .collect();
        Ok(RankedList { query_id, docs })
    }

    pub fn query_id(&self) -> &QueryId {
        &self.query_id
    }

    pub fn docs(&self) -> &[ScoredDoc] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Scores in rank order.
    pub fn scores(&self) -> Vec<f64> {
        self.docs.iter().map(|d| d.score).collect()
    }

    /// The first `min(k, len)` documents.
    pub fn top(&self, k: usize) -> &[ScoredDoc] {
        &self.docs[..k.min(self.docs.len())]
    }

    /// Adds `shift` to every score and re-canonicalizes.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        RankedList::new(
            self.query_id.clone(),
            self.docs.iter().map(|d| (d.doc_id.clone(), d.score + shift)),
        )
    }
}

/// Graded relevance judgments. A query is "judged" when it has at least one
/// judgment line, including grade-0 lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<QueryId, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a judgment. Repeating an identical judgment is a no-op; a
    /// conflicting grade for the same pair is an error.
    pub fn insert(&mut self, query_id: QueryId, doc_id: String, grade: u32) -> Result<()> {
        let per_query = self.judgments.entry(query_id.clone()).or_default();
        match per_query.get(&doc_id) {
            Some(&old) if old != grade => Err(Error::InvalidInput(format!(
                "conflicting grades {old} and {grade} for ({query_id}, {doc_id})"
            ))),
            Some(_) => Ok(()),
            None => {
                per_query.insert(doc_id, grade);
                Ok(())
            }
        }
    }

    pub fn grade(&self, query_id: &QueryId, doc_id: &str) -> u32 {
        self.judgments
            .get(query_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    pub fn for_query(&self, query_id: &QueryId) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn judged_queries(&self) -> BTreeSet<&QueryId> {
        self.judgments.keys().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &str, u32)> {
        self.judgments
            .iter()
            .flat_map(|(q, m)| m.iter().map(move |(d, g)| (q, d.as_str(), *g)))
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

/// A predicted quality value φ for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub query_id: QueryId,
    pub predictor: String,
    pub value: f64,
}

impl PredictionRecord {
    pub fn new(query_id: QueryId, predictor: impl Into<String>, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite prediction {value} for {query_id}"
            )));
        }
        Ok(PredictionRecord {
            query_id,
            predictor: predictor.into(),
            value,
        })
    }
}

/// An actual effectiveness value (nDCG@k or Recall@k) for one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActualRecord {
    pub query_id: QueryId,
    pub metric: String,
    pub value: f64,
}

impl ActualRecord {
    pub fn new(query_id: QueryId, metric: impl Into<String>, value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidInput(format!(
                "actual value {value} for {query_id} outside [0, 1]"
            )));
        }
        Ok(ActualRecord {
            query_id,
            metric: metric.into(),
            value,
        })
    }
}

/// Predictions from any number of predictors, kept sorted by
/// (predictor, query id). A (predictor, query) pair appears at most once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionTable {
    records: Vec<PredictionRecord>,
}

impl PredictionTable {
    pub fn new(records: impl IntoIterator<Item = PredictionRecord>) -> Result<Self> {
        let mut records: Vec<PredictionRecord> = records.into_iter().collect();
        records.sort_by(|a, b| {
            a.predictor
                .cmp(&b.predictor)
                .then_with(|| a.query_id.cmp(&b.query_id))
        });
        if let Some(w) = records
            .windows(2)
            .find(|w| w[0].predictor == w[1].predictor && w[0].query_id == w[1].query_id)
        {
            return Err(Error::InvalidInput(format!(
                "duplicate prediction for ({}, {})",
                w[0].predictor, w[0].query_id
            )));
        }
        Ok(PredictionTable { records })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Predictor names in sorted order.
    pub fn predictors(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.records.iter().map(|r| r.predictor.as_str()).collect();
        names.dedup();
        names
    }

    pub fn values_for(&self, predictor: &str) -> BTreeMap<QueryId, f64> {
        self.records
            .iter()
            .filter(|r| r.predictor == predictor)
            .map(|r| (r.query_id.clone(), r.value))
            .collect()
    }

    /// Combines two tables; fails if they share a (predictor, query) pair.
    pub fn merge(self, other: PredictionTable) -> Result<Self> {
        PredictionTable::new(self.records.into_iter().chain(other.records))
    }
}
