mod common;

use std::collections::BTreeMap;

use aii_core::corpus::{
    filter_ai_patents, load_patents, load_tasks, FormatSpec, KeywordSet, PatentColumns, TaskColumns, YearRange,
};
use aii_core::table::TableFormat;
use common::{fixture, mini};
use tempfile::tempdir;

fn onet_spec() -> FormatSpec<TaskColumns> {
    FormatSpec {
        table: TableFormat::TSV,
        columns: TaskColumns {
            task_id: "Task ID".into(),
            occupation_id: "O*NET-SOC Code".into(),
            occupation_title: "Title".into(),
            task_text: "Task".into(),
        },
    }
}

#[test]
fn onet_shaped_fixture_counts() {
    let corpus = load_tasks(&fixture("onet_tasks.tsv"), &onet_spec()).unwrap();
    assert_eq!(corpus.len(), 20);
    assert_eq!(corpus.report().duplicates, 0);
    let expected: BTreeMap<&str, usize> = [
        ("11-1011.00", 3),
        ("15-1252.00", 4),
        ("29-2035.00", 3),
        ("43-9021.00", 5),
        ("47-4021.00", 5),
    ]
    .into();
    assert_eq!(corpus.tasks_per_occupation(), expected);
    assert_eq!(corpus.records()[7].task_text, "Operate MRI scanners to produce diagnostic images.");
}

#[test]
fn five_rows_one_duplicate() {
    let corpus = load_tasks(&fixture("tasks5_dup.tsv"), &FormatSpec::default()).unwrap();
    assert_eq!(corpus.len(), 4);
    assert_eq!(corpus.report().duplicates, 1);
    let ids: Vec<&str> = corpus.records().iter().map(|t| t.task_id.as_str()).collect();
    assert_eq!(ids, vec!["a1", "a2", "a4", "a5"]);
}

#[test]
fn ten_patent_fixture_years() {
    let corpus = load_patents(&fixture("patents10.tsv"), &FormatSpec::<PatentColumns>::default()).unwrap();
    assert_eq!(corpus.len(), 10);
    let years: Vec<i32> = corpus.records().iter().map(|p| p.grant_year).collect();
    assert_eq!(years, vec![2015, 2016, 2017, 2018, 2019, 2020, 2015, 2016, 2019, 2020]);
}

#[test]
fn loading_twice_serializes_identically() {
    let dir = tempdir().unwrap();
    let spec = FormatSpec {
        table: TableFormat::TSV,
        columns: TaskColumns::default(),
    };
    let a = load_tasks(&mini("tasks.tsv"), &spec).unwrap();
    let b = load_tasks(&mini("tasks.tsv"), &spec).unwrap();
    assert_eq!(a, b);
    a.write_csv(&dir.path().join("a.csv")).unwrap();
    b.write_csv(&dir.path().join("b.csv")).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn mini_corpus_filter() {
    let patents = load_patents(&mini("patents.tsv"), &FormatSpec::default()).unwrap();
    assert_eq!(patents.len(), 24);
    assert_eq!(patents.report().duplicates, 1);
    let keywords = KeywordSet::load(&mini("keywords.txt")).unwrap();
    let out = filter_ai_patents(&patents, &keywords, YearRange::default());
    // Two non-AI patents and two AI patents outside 2015-2020 are dropped.
    assert_eq!(out.corpus.len(), 20);
    assert!(out.corpus.get("US8000003").is_none());
    assert!(out.corpus.get("US8000004").is_none());
    let total: usize = out.keyword_counts.iter().map(|(_, n)| n).sum();
    assert!(total >= out.corpus.len());
    let again = filter_ai_patents(&out.corpus, &keywords, YearRange::default());
    assert_eq!(again.corpus.records(), out.corpus.records());
}
