//! Tokenization, the collection language model, and relevance-model
//! construction from top-ranked documents.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use crate::data_model::RankedList;
use crate::error::{Error, Result};
use crate::ingest::CorpusDoc;

/// Splits text into maximal runs of alphanumeric characters (Unicode
/// definition, independent of locale), optionally lowercased, with an
/// optional stopword list applied after lowercasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer {
            lowercase: true,
            stopwords: BTreeSet::new(),
        }
    }
}

impl Tokenizer {
    pub fn with_stopwords(mut self, stopwords: impl IntoIterator<Item = String>) -> Self {
        self.stopwords = stopwords.into_iter().collect();
        self
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| {
                if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                }
            })
            .filter(|t| !self.stopwords.contains(t))
            .collect()
    }
}

/// Term counts over a whole corpus; P(w|D) = term_freq[w] / total_terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollectionStats {
    total_terms: u64,
    term_freq: HashMap<String, u64>,
}

impl CollectionStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_document(&mut self, tokens: &[String]) {
        for token in tokens {
            *self.term_freq.entry(token.clone()).or_insert(0) += 1;
        }
        self.total_terms += tokens.len() as u64;
    }

    /// Combines stats built over disjoint shards of one corpus.
    pub fn merge(&mut self, other: &CollectionStats) {
        for (term, count) in &other.term_freq {
            *self.term_freq.entry(term.clone()).or_insert(0) += count;
        }
        self.total_terms += other.total_terms;
    }

    /// Streams a corpus through the tokenizer. `on_doc` is called with the
    /// running document count, which lets callers report progress.
    pub fn from_corpus<I>(
        docs: I,
        tokenizer: &Tokenizer,
        mut on_doc: impl FnMut(u64),
    ) -> Result<Self>
    where
        I: IntoIterator<Item = Result<CorpusDoc>>,
    {
        let mut stats = CollectionStats::new();
        let mut n = 0u64;
        for doc in docs {
            let doc = doc?;
            stats.add_document(&tokenizer.tokenize(&doc.contents));
            n += 1;
            on_doc(n);
        }
        stats.ensure_nonempty()?;
        Ok(stats)
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.total_terms == 0 {
            Err(Error::EmptyCorpus)
        } else {
            Ok(())
        }
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn vocab_size(&self) -> usize {
        self.term_freq.len()
    }

    pub fn term_freq(&self, term: &str) -> u64 {
        self.term_freq.get(term).copied().unwrap_or(0)
    }

    /// MLE collection probability, `None` for unseen terms.
    pub fn prob(&self, term: &str) -> Option<f64> {
        self.term_freq
            .get(term)
            .map(|&c| c as f64 / self.total_terms as f64)
    }

    pub fn sorted_terms(&self) -> Vec<(&str, u64)> {
        let mut terms: Vec<(&str, u64)> = self
            .term_freq
            .iter()
            .map(|(t, &c)| (t.as_str(), c))
            .collect();
        terms.sort_unstable();
        terms
    }

    /// Sidecar format: `total_terms<TAB>vocab_size`, then one
    /// `term<TAB>count` line per term in sorted order.
    pub fn write_sidecar<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}\t{}", self.total_terms, self.vocab_size())?;
        for (term, count) in self.sorted_terms() {
            writeln!(w, "{term}\t{count}")?;
        }
        w.flush()
    }

    pub fn read_sidecar<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (total_terms, vocab_size) = match lines.next() {
            None => return Err(Error::parse(source_name, 1, "missing header line")),
            Some((_, line)) => {
                let line = line.map_err(|e| Error::io(source_name, e))?;
                let (total, vocab) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(source_name, 1, "header must be total_terms<TAB>vocab_size"))?;
                let total: u64 = total
                    .parse()
                    .map_err(|_| Error::parse(source_name, 1, format!("bad total_terms {total:?}")))?;
                let vocab: usize = vocab
                    .parse()
                    .map_err(|_| Error::parse(source_name, 1, format!("bad vocab_size {vocab:?}")))?;
                (total, vocab)
            }
        };
        let mut term_freq = HashMap::with_capacity(vocab_size.min(1 << 24));
        let mut previous: Option<String> = None;
        let mut sum = 0u64;
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let (term, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(source_name, lineno, "expected term<TAB>count"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(source_name, lineno, format!("bad count {count:?}")))?;
            if term.is_empty() || count == 0 {
                return Err(Error::parse(source_name, lineno, "empty term or zero count"));
            }
            if previous.as_deref().is_some_and(|p| p >= term) {
                return Err(Error::parse(source_name, lineno, "terms not strictly sorted"));
            }
            sum = sum
                .checked_add(count)
                .ok_or_else(|| Error::parse(source_name, lineno, "count overflow"))?;
            term_freq.insert(term.to_string(), count);
            previous = Some(term.to_string());
        }
        if sum != total_terms || term_freq.len() != vocab_size {
            return Err(Error::parse(
                source_name,
                1,
                format!(
                    "header says {total_terms} terms / {vocab_size} types, body has {sum} / {}",
                    term_freq.len()
                ),
            ));
        }
        let stats = CollectionStats {
            total_terms,
            term_freq,
        };
        stats.ensure_nonempty()?;
        Ok(stats)
    }
}

/// Resolves document ids to their text.
pub trait DocTextSource {
    fn doc_text(&self, doc_id: &str) -> Option<&str>;
}

impl DocTextSource for HashMap<String, String> {
    fn doc_text(&self, doc_id: &str) -> Option<&str> {
        self.get(doc_id).map(String::as_str)
    }
}

impl DocTextSource for BTreeMap<String, String> {
    fn doc_text(&self, doc_id: &str) -> Option<&str> {
        self.get(doc_id).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    SumNormalized,
    Uniform,
}

const WEIGHT_SHIFT_EPSILON: f64 = 1e-9;

/// Per-document mixture weights for the first `min(top_docs, len)` docs.
///
/// Sum-normalized weights divide each score by the total. If any of those
/// scores is nonpositive, all of them are first shifted by `-min + 1e-9`.
pub fn weights_from_scores(list: &RankedList, top_docs: usize, mode: WeightMode) -> Result<Vec<f64>> {
    if list.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty ranked list for {}",
            list.query_id()
        )));
    }
    if top_docs == 0 {
        return Err(Error::InvalidInput("top_docs must be at least 1".into()));
    }
    let top = list.top(top_docs);
    let k = top.len();
    match mode {
        WeightMode::Uniform => Ok(vec![1.0 / k as f64; k]),
        WeightMode::SumNormalized => {
            let min = top.iter().map(|d| d.score).fold(f64::INFINITY, f64::min);
            let raw: Vec<f64> = if min <= 0.0 {
                top.iter()
                    .map(|d| d.score - min + WEIGHT_SHIFT_EPSILON)
                    .collect()
            } else {
                top.iter().map(|d| d.score).collect()
            };
            let total: f64 = raw.iter().sum();
            Ok(raw.into_iter().map(|w| w / total).collect())
        }
    }
}

/// A term distribution mixed from the MLE language models of top-ranked
/// documents, clipped to its most probable terms and renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceModel {
    pub probs: BTreeMap<String, f64>,
    pub source_doc_count: usize,
    pub clipped_at: usize,
}

/// P(w|RM) = Σ_d w'_d · P_MLE(w|d) over the first `top_docs` documents, with
/// w'_d the weights divided by their sum. Only the `clip_terms` most probable
/// terms survive (ties go to the lexicographically smaller term) and the
/// result is renormalized. Documents with no tokens contribute nothing.
pub fn build_relevance_model(
    list: &RankedList,
    doc_texts: &dyn DocTextSource,
    weights: &[f64],
    top_docs: usize,
    clip_terms: usize,
    tokenizer: &Tokenizer,
) -> Result<RelevanceModel> {
    if top_docs == 0 || clip_terms == 0 {
        return Err(Error::InvalidInput(
            "top_docs and clip_terms must be at least 1".into(),
        ));
    }
    let top = list.top(top_docs);
    if top.is_empty() {
        return Err(Error::InvalidInput(format!(
            "empty ranked list for {}",
            list.query_id()
        )));
    }
    if weights.len() != top.len() {
        return Err(Error::InvalidInput(format!(
            "{} weights for {} documents",
            weights.len(),
            top.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
    }
    let weight_sum: f64 = weights.iter().sum();
    if weight_sum <= 0.0 {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }

    let mut mixture: BTreeMap<String, f64> = BTreeMap::new();
    let mut contributing = 0usize;
    for (doc, &weight) in top.iter().zip(weights) {
        let text = doc_texts
            .doc_text(&doc.doc_id)
            .ok_or_else(|| Error::MissingDocText(doc.doc_id.clone()))?;
        let tokens = tokenizer.tokenize(text);
        if tokens.is_empty() {
            continue;
        }
        contributing += 1;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in &tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        let doc_weight = weight / weight_sum;
        let len = tokens.len() as f64;
        for (term, count) in counts {
            *mixture.entry(term.to_string()).or_insert(0.0) += doc_weight * (count as f64 / len);
        }
    }
    if contributing == 0 {
        return Err(Error::EmptyRelevanceModel);
    }

    let mut ranked: Vec<(String, f64)> = mixture.into_iter().filter(|(_, p)| *p > 0.0).collect();
    if ranked.is_empty() {
        return Err(Error::EmptyRelevanceModel);
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(clip_terms);
    let mass: f64 = ranked.iter().map(|(_, p)| p).sum();
    let probs = ranked.into_iter().map(|(t, p)| (t, p / mass)).collect();
    Ok(RelevanceModel {
        probs,
        source_doc_count: contributing,
        clipped_at: clip_terms,
    })
}
