//! Post-retrieval query performance prediction (QPP) and evaluation of
//! predictor quality.
//!
//! The pipeline is: read runs, qrels and rewritten queries ([`ingest`]);
//! compute actual effectiveness per query ([`effectiveness`]); compute
//! predictor values per query ([`predictors`], backed by [`lm_stats`] for
//! Clarity); and correlate predicted with actual quality ([`correlate`]).
//! [`synth`] generates seeded synthetic datasets with a known
//! predictor-vs-effectiveness relationship.

pub mod correlate;
pub mod data_model;
pub mod effectiveness;
mod error;
pub mod ingest;
pub mod lm_stats;
pub mod predictors;
pub mod synth;

pub use data_model::{
    ActualRecord, PredictionRecord, PredictionTable, Qrels, Query, QueryId, QuerySet, RankedList,
    ScoredDoc,
};
pub use effectiveness::{Gain, MetricKind, MetricSpec};
pub use error::{Error, Result};
pub use ingest::{CorpusDoc, Run};
pub use lm_stats::{CollectionStats, Tokenizer};
pub use predictors::{Predictor, PredictorParams};
