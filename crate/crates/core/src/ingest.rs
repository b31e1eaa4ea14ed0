//! Readers and writers for the on-disk formats:
//!
//! * run files, `qid Q0 docid rank score tag` (whitespace separated)
//! * qrels, `qid 0 docid grade`
//! * queries, `qid<TAB>text`
//! * corpus, JSON lines with string fields `id` and `contents`
//! * external predictions, `qid<TAB>value`
//! * prediction tables, `qid<TAB>predictor<TAB>value`
//! * actuals, `qid<TAB>metric<TAB>value` with an optional `ALL` aggregate line
//!
//! Every parser fails on the first offending line and reports its 1-based
//! line number. Blank lines are skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Deserialize;

use crate::data_model::{
    ActualRecord, PredictionRecord, PredictionTable, Qrels, Query, QueryId, QuerySet, RankedList,
};
use crate::error::{Error, Result};
use crate::lm_stats::Tokenizer;

pub type Run = BTreeMap<QueryId, RankedList>;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CorpusDoc {
    pub id: String,
    pub contents: String,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn source_name(path: &Path) -> String {
    path.display().to_string()
}

/// Reads one line at a time as UTF-8, tracking the line number.
struct Lines<R> {
    reader: R,
    source: String,
    lineno: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R, source: &str) -> Self {
        Lines {
            reader,
            source: source.to_string(),
            lineno: 0,
            buf: Vec::new(),
        }
    }

    /// Next non-blank line, without its line terminator.
    fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        loop {
            self.buf.clear();
            let n = self
                .reader
                .read_until(b'\n', &mut self.buf)
                .map_err(|e| Error::io(&self.source, e))?;
            if n == 0 {
                return Ok(None);
            }
            self.lineno += 1;
            while matches!(self.buf.last(), Some(b'\n' | b'\r')) {
                self.buf.pop();
            }
            let blank = std::str::from_utf8(&self.buf)
                .map_err(|_| Error::parse(&self.source, self.lineno, "invalid UTF-8"))?
                .trim()
                .is_empty();
            if !blank {
                let text = std::str::from_utf8(&self.buf).expect("validated above");
                return Ok(Some((self.lineno, text)));
            }
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::parse(&self.source, line, message)
    }
}

fn parse_qid(lines_source: &str, line: usize, raw: &str) -> Result<QueryId> {
    QueryId::parse(raw).map_err(|_| Error::parse(lines_source, line, format!("bad query id {raw:?}")))
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses a run. The rank column is ignored; ranks come from the canonical
/// order (score descending, doc id ascending).
pub fn parse_run<R: BufRead>(reader: R, source: &str) -> Result<Run> {
    let mut lines = Lines::new(reader, source);
    let mut per_query: BTreeMap<QueryId, Vec<(String, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(QueryId, String)> = HashSet::new();
    while let Some((lineno, line)) = lines.next_line()? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(source, 
                lineno,
                format!("expected 6 fields (qid Q0 docid rank score tag), found {}", fields.len()),
            ));
        }
        let qid = parse_qid(source, lineno, fields[0])?;
        let doc_id = fields[2].to_string();
        let score = parse_finite(fields[4])
            .ok_or_else(|| Error::parse(source, lineno, format!("score {:?} is not a finite number", fields[4])))?;
        if !seen.insert((qid.clone(), doc_id.clone())) {
            return Err(Error::parse(source, lineno, format!("duplicate document {doc_id} for query {qid}")));
        }
        per_query.entry(qid).or_default().push((doc_id, score));
    }
    per_query
        .into_iter()
        .map(|(qid, docs)| RankedList::new(qid.clone(), docs).map(|list| (qid, list)))
        .collect()
}

pub fn read_run_file(path: impl AsRef<Path>) -> Result<Run> {
    let path = path.as_ref();
    parse_run(open(path)?, &source_name(path))
}

/// Writes a run in canonical order. Scores use the shortest decimal that
/// round-trips to the same `f64`.
pub fn write_run<W: Write>(mut w: W, run: &Run, tag: &str) -> std::io::Result<()> {
    for (qid, list) in run {
        for d in list.docs() {
            writeln!(w, "{qid} Q0 {} {} {} {tag}", d.doc_id, d.rank, d.score)?;
        }
    }
    w.flush()
}

pub fn parse_qrels<R: BufRead>(reader: R, source: &str) -> Result<Qrels> {
    let mut lines = Lines::new(reader, source);
    let mut qrels = Qrels::new();
    while let Some((lineno, line)) = lines.next_line()? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(source, 
                lineno,
                format!("expected 4 fields (qid 0 docid grade), found {}", fields.len()),
            ));
        }
        let qid = parse_qid(source, lineno, fields[0])?;
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("grade {:?} is not an integer", fields[3])))?;
        let grade = u32::try_from(grade)
            .map_err(|_| Error::parse(source, lineno, format!("grade {grade} must be a nonnegative integer")))?;
        qrels
            .insert(qid, fields[2].to_string(), grade)
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
    }
    Ok(qrels)
}

pub fn read_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    parse_qrels(open(path)?, &source_name(path))
}

pub fn write_qrels<W: Write>(mut w: W, qrels: &Qrels) -> std::io::Result<()> {
    for (qid, doc, grade) in qrels.iter() {
        writeln!(w, "{qid} 0 {doc} {grade}")?;
    }
    w.flush()
}

pub fn parse_queries<R: BufRead>(reader: R, source: &str, tokenizer: &Tokenizer) -> Result<QuerySet> {
    let mut lines = Lines::new(reader, source);
    let mut queries = QuerySet::new();
    while let Some((lineno, line)) = lines.next_line()? {
        let (raw_id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source, lineno, "expected qid<TAB>text"))?;
        let qid = parse_qid(source, lineno, raw_id.trim())?;
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::parse(source, lineno, format!("empty query text for {qid}")));
        }
        if queries.contains_key(&qid) {
            return Err(Error::parse(source, lineno, format!("duplicate query id {qid}")));
        }
        let term_count = tokenizer.tokenize(text).len();
        let query = Query::new(qid.clone(), text, term_count)
            .map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        queries.insert(qid, query);
    }
    Ok(queries)
}

pub fn read_queries(path: impl AsRef<Path>, tokenizer: &Tokenizer) -> Result<QuerySet> {
    let path = path.as_ref();
    parse_queries(open(path)?, &source_name(path), tokenizer)
}

pub fn write_queries<W: Write>(mut w: W, queries: &QuerySet) -> std::io::Result<()> {
    for (qid, q) in queries {
        writeln!(w, "{qid}\t{}", q.text)?;
    }
    w.flush()
}

/// Streaming corpus reader; yields documents in file order.
pub struct CorpusReader<R> {
    lines: Lines<R>,
    failed: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, source: &str) -> Self {
        CorpusReader {
            lines: Lines::new(reader, source),
            failed: false,
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<CorpusDoc>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let result = match self.lines.next_line() {
            Ok(None) => return None,
            Ok(Some((lineno, line))) => match serde_json::from_str::<CorpusDoc>(line) {
                Ok(doc) if doc.id.is_empty() => Err(self.lines.error(lineno, "empty document id")),
                Ok(doc) => Ok(doc),
                Err(e) => Err(self.lines.error(lineno, format!("bad JSON record: {e}"))),
            },
            Err(e) => Err(e),
        };
        self.failed = result.is_err();
        Some(result)
    }
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<CorpusReader<BufReader<File>>> {
    let path = path.as_ref();
    Ok(CorpusReader::new(open(path)?, &source_name(path)))
}

pub fn write_corpus<'a, W: Write>(
    mut w: W,
    docs: impl IntoIterator<Item = &'a CorpusDoc>,
) -> std::io::Result<()> {
    for doc in docs {
        let record = serde_json::json!({ "id": doc.id, "contents": doc.contents });
        writeln!(w, "{record}")?;
    }
    w.flush()
}

/// Streams a corpus and keeps only the texts of `wanted` documents.
/// A wanted id that occurs twice is an error.
pub fn load_doc_texts<I>(docs: I, wanted: &HashSet<String>) -> Result<HashMap<String, String>>
where
    I: IntoIterator<Item = Result<CorpusDoc>>,
{
    let mut texts = HashMap::with_capacity(wanted.len());
    for doc in docs {
        let doc = doc?;
        if wanted.contains(&doc.id) {
            if texts.contains_key(&doc.id) {
                return Err(Error::InvalidInput(format!("duplicate corpus document {}", doc.id)));
            }
            texts.insert(doc.id, doc.contents);
        }
    }
    Ok(texts)
}

/// Parses an externally produced `qid<TAB>value` prediction file.
pub fn parse_predictions<R: BufRead>(
    reader: R,
    source: &str,
    predictor: &str,
) -> Result<Vec<PredictionRecord>> {
    let mut lines = Lines::new(reader, source);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    while let Some((lineno, line)) = lines.next_line()? {
        let (raw_id, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source, lineno, "expected qid<TAB>value"))?;
        let qid = parse_qid(source, lineno, raw_id.trim())?;
        let value = value.trim();
        let value = parse_finite(value)
            .ok_or_else(|| Error::parse(source, lineno, format!("value {value:?} is not a finite number")))?;
        if !seen.insert(qid.clone()) {
            return Err(Error::parse(source, lineno, format!("duplicate query id {qid}")));
        }
        records.push(PredictionRecord::new(qid, predictor, value)?);
    }
    Ok(records)
}

pub fn read_predictions(path: impl AsRef<Path>, predictor: &str) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    parse_predictions(open(path)?, &source_name(path), predictor)
}

pub fn parse_prediction_table<R: BufRead>(reader: R, source: &str) -> Result<PredictionTable> {
    let mut lines = Lines::new(reader, source);
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    while let Some((lineno, line)) = lines.next_line()? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(source, lineno, "expected qid<TAB>predictor<TAB>value"));
        }
        let qid = parse_qid(source, lineno, fields[0].trim())?;
        let predictor = fields[1].trim();
        if predictor.is_empty() {
            return Err(Error::parse(source, lineno, "empty predictor name"));
        }
        let value = parse_finite(fields[2].trim())
            .ok_or_else(|| Error::parse(source, lineno, format!("value {:?} is not a finite number", fields[2])))?;
        if !seen.insert((predictor.to_string(), qid.clone())) {
            return Err(Error::parse(source, lineno, format!("duplicate prediction ({predictor}, {qid})")));
        }
        records.push(PredictionRecord::new(qid, predictor, value)?);
    }
    PredictionTable::new(records)
}

pub fn read_prediction_table(path: impl AsRef<Path>) -> Result<PredictionTable> {
    let path = path.as_ref();
    parse_prediction_table(open(path)?, &source_name(path))
}

/// Parses an actuals file. The `ALL` aggregate line is skipped; every other
/// line must carry the same metric name.
pub fn parse_actuals<R: BufRead>(reader: R, source: &str) -> Result<Vec<ActualRecord>> {
    let mut lines = Lines::new(reader, source);
    let mut records: Vec<ActualRecord> = Vec::new();
    let mut seen = HashSet::new();
    while let Some((lineno, line)) = lines.next_line()? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(source, lineno, "expected qid<TAB>metric<TAB>value"));
        }
        if fields[0] == "ALL" {
            continue;
        }
        let qid = parse_qid(source, lineno, fields[0].trim())?;
        let metric = fields[1].trim();
        if let Some(first) = records.first() {
            if first.metric != metric {
                return Err(Error::parse(source, 
                    lineno,
                    format!("mixed metrics {} and {metric} in one actuals file", first.metric),
                ));
            }
        }
        let value = parse_finite(fields[2].trim())
            .ok_or_else(|| Error::parse(source, lineno, format!("value {:?} is not a finite number", fields[2])))?;
        if !seen.insert(qid.clone()) {
            return Err(Error::parse(source, lineno, format!("duplicate query id {qid}")));
        }
        records.push(ActualRecord::new(qid, metric, value).map_err(|e| Error::parse(source, lineno, e.to_string()))?);
    }
    Ok(records)
}

pub fn read_actuals(path: impl AsRef<Path>) -> Result<Vec<ActualRecord>> {
    let path = path.as_ref();
    parse_actuals(open(path)?, &source_name(path))
}
