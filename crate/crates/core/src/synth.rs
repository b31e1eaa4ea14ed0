//! Seeded synthetic benchmark data with a known relationship between
//! predictor signals and effectiveness.
//!
//! Every query draws a latent quality `u ∈ [0, 1)`. Relevant documents are
//! placed closer to the top as `u` grows, so nDCG rises with `u`. The spread
//! of the retrieval scores follows `u` when `spread_coupling` is +1, follows
//! `1 − u` when it is −1 and ignores `u` at 0. Score-spread predictors (WIG,
//! NQC) therefore correlate with nDCG with the sign of the coupling.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data_model::{Qrels, Query, QueryId, QuerySet, RankedList};
use crate::error::{Error, Result};
use crate::ingest::{self, CorpusDoc, Run};

pub const RUN_FILE: &str = "run.txt";
pub const QRELS_FILE: &str = "qrels.txt";
pub const QUERIES_FILE: &str = "queries.tsv";
pub const CORPUS_FILE: &str = "corpus.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub queries: usize,
    pub depth: usize,
    pub turns_per_topic: usize,
    /// In [-1, 1]; sign of the spread-quality relationship.
    pub spread_coupling: f64,
    pub vocab_size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            queries: 50,
            depth: 1000,
            turns_per_topic: 5,
            spread_coupling: 1.0,
            vocab_size: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub queries: QuerySet,
    pub run: Run,
    pub qrels: Qrels,
    pub corpus: Vec<CorpusDoc>,
    pub latent_quality: BTreeMap<QueryId, f64>,
}

const TOPIC_WORDS: usize = 20;

fn word(i: usize) -> String {
    format!("w{i}")
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    if config.queries == 0 || config.depth == 0 || config.turns_per_topic == 0 {
        return Err(Error::InvalidInput(
            "queries, depth and turns_per_topic must be at least 1".into(),
        ));
    }
    if !(-1.0..=1.0).contains(&config.spread_coupling) {
        return Err(Error::InvalidInput("spread_coupling must lie in [-1, 1]".into()));
    }
    if config.vocab_size < 2 * TOPIC_WORDS {
        return Err(Error::InvalidInput(format!(
            "vocab_size must be at least {}",
            2 * TOPIC_WORDS
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut data = SynthDataset {
        queries: QuerySet::new(),
        run: Run::new(),
        qrels: Qrels::new(),
        corpus: Vec::with_capacity(config.queries * config.depth),
        latent_quality: BTreeMap::new(),
    };

    for i in 0..config.queries {
        let topic = i / config.turns_per_topic + 1;
        let turn = i % config.turns_per_topic + 1;
        let qid = QueryId::parse(&format!("{topic}_{turn}"))?;
        let quality: f64 = rng.random();

        // query-specific vocabulary slice
        let base = rng.random_range(0..config.vocab_size - TOPIC_WORDS);
        let topic_terms: Vec<usize> = (base..base + TOPIC_WORDS).collect();
        let query_len = rng.random_range(2..=5);
        let query_text = topic_terms[..query_len]
            .iter()
            .map(|&w| word(w))
            .collect::<Vec<_>>()
            .join(" ");
        data.queries.insert(qid.clone(), Query::new(qid.clone(), query_text, query_len)?);

        let follows = (1.0 + config.spread_coupling) / 2.0;
        let signal = follows * quality + (1.0 - follows) * (1.0 - quality);
        let noise = (rng.random::<f64>() - 0.5) * 0.2;
        let spread = 0.5 + 4.0 * (signal + noise).clamp(0.0, 1.0);

        let doc_id = |r: usize| format!("D{i:03}_{r:04}");
        let mut docs = Vec::with_capacity(config.depth);
        for r in 0..config.depth {
            let decay = (-(r as f64) / 10.0).exp();
            let jitter: f64 = rng.random::<f64>() * 0.2;
            docs.push((doc_id(r), 10.0 + spread * 10.0 * decay + jitter));
        }
        let list = RankedList::new(qid.clone(), docs)?;

        // relevant docs: nearer the top for high quality
        let relevant_count = rng.random_range(3..=5);
        let relevant_count = relevant_count.min(list.len());
        let window = relevant_count as f64 + (1.0 - quality) * 40.0;
        let mut positions = BTreeSet::new();
        while positions.len() < relevant_count {
            let pos = (window * rng.random::<f64>()) as usize;
            positions.insert(pos.min(list.len() - 1));
        }
        let relevant: BTreeSet<&str> = positions
            .iter()
            .map(|&p| list.docs()[p].doc_id.as_str())
            .collect();
        for (rank, doc) in list.docs().iter().enumerate() {
            let grade = if relevant.contains(doc.doc_id.as_str()) {
                rng.random_range(1..=3)
            } else if rank < 10 {
                0
            } else {
                continue;
            };
            data.qrels.insert(qid.clone(), doc.doc_id.clone(), grade)?;
        }
        if rng.random::<f64>() < 0.3 {
            data.qrels.insert(qid.clone(), format!("D{i:03}_unretrieved"), 1)?;
        }

        for (rank, doc) in list.docs().iter().enumerate() {
            let on_topic = if relevant.contains(doc.doc_id.as_str()) {
                0.6
            } else {
                0.4 * (-(rank as f64) / 50.0).exp()
            };
            let len = rng.random_range(12..=30);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    if rng.random::<f64>() < on_topic {
                        word(topic_terms[rng.random_range(0..TOPIC_WORDS)])
                    } else {
                        // skewed toward low word ids
                        let u: f64 = rng.random();
                        word(((u * u) * config.vocab_size as f64) as usize)
                    }
                })
                .collect();
            data.corpus.push(CorpusDoc {
                id: doc.doc_id.clone(),
                contents: words.join(" "),
            });
        }
        data.latent_quality.insert(qid.clone(), quality);
        data.run.insert(qid, list);
    }
    Ok(data)
}

impl SynthDataset {
    /// Writes run, qrels, queries and corpus files into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let path = dir.join(name);
            File::create(&path)
                .map(BufWriter::new)
                .map_err(|e| Error::io(&path, e))
        };
        let io = |name: &str| {
            let path = dir.join(name);
            move |e| Error::io(path, e)
        };
        ingest::write_run(create(RUN_FILE)?, &self.run, "synth").map_err(io(RUN_FILE))?;
        ingest::write_qrels(create(QRELS_FILE)?, &self.qrels).map_err(io(QRELS_FILE))?;
        ingest::write_queries(create(QUERIES_FILE)?, &self.queries).map_err(io(QUERIES_FILE))?;
        ingest::write_corpus(create(CORPUS_FILE)?, &self.corpus).map_err(io(CORPUS_FILE))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            queries: 6,
            depth: 50,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate(&small(7)).unwrap(), generate(&small(7)).unwrap());
        assert_ne!(generate(&small(7)).unwrap(), generate(&small(8)).unwrap());
    }

    #[test]
    fn shape_of_dataset() {
        let data = generate(&small(1)).unwrap();
        assert_eq!(data.run.len(), 6);
        assert!(data.run.values().all(|l| l.len() == 50));
        assert_eq!(data.corpus.len(), 300);
        assert_eq!(data.queries.len(), 6);
        let turns: BTreeSet<u32> = data.run.keys().filter_map(QueryId::turn).collect();
        assert_eq!(turns, (1..=5).collect());
        for qid in data.run.keys() {
            let positives = data.qrels.for_query(qid).unwrap().values().filter(|&&g| g > 0).count();
            assert!(positives >= 3);
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig { queries: 0, ..small(1) }).is_err());
        assert!(generate(&SynthConfig { spread_coupling: 2.0, ..small(1) }).is_err());
    }
}
