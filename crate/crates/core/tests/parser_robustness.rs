use std::collections::BTreeMap;

use proptest::prelude::*;
use qpp_core::ingest::{self, CorpusDoc, CorpusReader};
use qpp_core::{Error, Qrels, QueryId, RankedList, Run, Tokenizer};

/// Every rejection must be a parse error that points into the input.
fn check_rejection<T>(result: qpp_core::Result<T>, input: &[u8]) -> Result<(), TestCaseError> {
    if let Err(e) = result {
        let lines = input.split(|&b| b == b'\n').count();
        match e {
            Error::Parse { line, .. } => prop_assert!(line >= 1 && line <= lines, "line {line} of {lines}"),
            other => prop_assert!(false, "rejection without line number: {other}"),
        }
    }
    Ok(())
}

fn corpus(input: &[u8]) -> qpp_core::Result<Vec<CorpusDoc>> {
    CorpusReader::new(input, "fuzz").collect()
}

fn all_parsers(input: &[u8]) -> Result<(), TestCaseError> {
    check_rejection(ingest::parse_run(input, "fuzz"), input)?;
    check_rejection(ingest::parse_qrels(input, "fuzz"), input)?;
    check_rejection(ingest::parse_queries(input, "fuzz", &Tokenizer::default()), input)?;
    check_rejection(corpus(input), input)?;
    check_rejection(ingest::parse_actuals(input, "fuzz"), input)?;
    check_rejection(ingest::parse_prediction_table(input, "fuzz"), input)?;
    check_rejection(ingest::parse_predictions(input, "fuzz", "p"), input)
}

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        "[0-9]{1,3}_[0-9]{1,2}",
        "Q0|0|1|-1|2",
        "d[a-z0-9]{0,4}",
        "-?[0-9]{1,3}\\.[0-9]{0,3}",
        "(NaN|inf|-inf|1e999|ALL)",
        "[ \t]{1,2}",
        "\\{\"id\": ?\"[a-z0-9]{0,3}\", ?\"contents\": ?\"[a-z ]{0,6}\"\\}",
        "[\\{\\}\":,\\[\\]]",
        ".{0,4}",
    ]
}

fn line() -> impl Strategy<Value = String> {
    prop::collection::vec(token(), 0..8).prop_map(|t| t.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn arbitrary_bytes_never_panic(input in prop::collection::vec(any::<u8>(), 0..400)) {
        all_parsers(&input)?;
    }

    #[test]
    fn near_valid_lines_never_panic(lines in prop::collection::vec(line(), 0..12), crlf in any::<bool>()) {
        let sep = if crlf { "\r\n" } else { "\n" };
        let input = lines.join(sep);
        all_parsers(input.as_bytes())?;
        let tabbed = input.replace(' ', "\t");
        all_parsers(tabbed.as_bytes())?;
    }
}

fn qid_strategy() -> impl Strategy<Value = QueryId> {
    prop_oneof!["[1-9][0-9]{0,2}_[1-9][0-9]?", "q[a-z0-9]{0,4}"].prop_map(|s| QueryId::parse(&s).unwrap())
}

fn run_strategy() -> impl Strategy<Value = Run> {
    prop::collection::btree_map(
        qid_strategy(),
        prop::collection::btree_map("d[a-z0-9]{1,6}", -1e6f64..1e6, 0..20),
        1..6,
    )
    .prop_map(|m| {
        m.into_iter()
            .filter(|(_, docs)| !docs.is_empty())
            .map(|(q, docs)| (q.clone(), RankedList::new(q, docs).unwrap()))
            .collect()
    })
}

proptest! {
    #[test]
    fn run_round_trip(run in run_strategy()) {
        let mut buf = Vec::new();
        ingest::write_run(&mut buf, &run, "tag").unwrap();
        let back = ingest::parse_run(&buf[..], "rt").unwrap();
        prop_assert_eq!(&back, &run);
        let mut again = Vec::new();
        ingest::write_run(&mut again, &back, "tag").unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn qrels_round_trip(entries in prop::collection::btree_map((qid_strategy(), "d[a-z0-9]{1,6}"), 0u32..4, 0..40)) {
        let mut qrels = Qrels::new();
        for ((q, d), g) in &entries {
            qrels.insert(q.clone(), d.clone(), *g).unwrap();
        }
        let mut buf = Vec::new();
        ingest::write_qrels(&mut buf, &qrels).unwrap();
        let back = ingest::parse_qrels(&buf[..], "rt").unwrap();
        prop_assert_eq!(back, qrels);
    }

    #[test]
    fn queries_round_trip(texts in prop::collection::btree_map(qid_strategy(), "[a-zA-Z0-9][a-zA-Z0-9 ,?']{0,30}[a-zA-Z0-9?]", 0..10)) {
        let tok = Tokenizer::default();
        let input: String = texts.iter().map(|(q, t)| format!("{q}\t{t}\n")).collect();
        let queries = ingest::parse_queries(input.as_bytes(), "rt", &tok).unwrap();
        let mut buf = Vec::new();
        ingest::write_queries(&mut buf, &queries).unwrap();
        prop_assert_eq!(&buf, input.as_bytes());
        prop_assert_eq!(ingest::parse_queries(&buf[..], "rt", &tok).unwrap(), queries);
    }

    #[test]
    fn corpus_round_trip(docs in prop::collection::vec(("[a-zA-Z0-9_-]{1,8}", "\\PC{0,40}"), 0..10)) {
        let docs: Vec<CorpusDoc> = docs.into_iter().map(|(id, contents)| CorpusDoc { id, contents }).collect();
        let mut buf = Vec::new();
        ingest::write_corpus(&mut buf, &docs).unwrap();
        prop_assert_eq!(corpus(&buf).unwrap(), docs);
    }
}

#[test]
fn rejections_name_the_line() {
    let cases: [(&str, &[u8]); 4] = [
        ("run", b"1_1 Q0 d1 1 2.0 t\n1_1 Q0 d2 2 x t\n"),
        ("qrels", b"1_1 0 d1 1\n\n1_1 0 d2\n"),
        ("queries", b"1_1\tfine\n1_2 no tab\n"),
        ("corpus", b"{\"id\":\"a\",\"contents\":\"x\"}\n{\"id\":\"b\",\n"),
    ];
    let expected = BTreeMap::from([("run", 2), ("qrels", 3), ("queries", 2), ("corpus", 2)]);
    for (kind, input) in cases {
        let err = match kind {
            "run" => ingest::parse_run(input, "f").err(),
            "qrels" => ingest::parse_qrels(input, "f").err(),
            "queries" => ingest::parse_queries(input, "f", &Tokenizer::default()).err(),
            _ => corpus(input).err(),
        };
        match err {
            Some(Error::Parse { line, .. }) => assert_eq!(line, expected[kind], "{kind}"),
            other => panic!("{kind}: {other:?}"),
        }
    }
}
