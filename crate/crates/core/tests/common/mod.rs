#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aii_core::corpus::YearRange;
use aii_core::pipeline::RunConfig;
use aii_core::table::TableFormat;

pub fn mini(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini").join(name)
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Configuration for a full run over the bundled miniature corpus.
pub fn mini_config(out: &Path) -> RunConfig {
    let mut c = RunConfig {
        tasks: Some(mini("tasks.tsv")),
        patents: Some(mini("patents.tsv")),
        keywords: Some(mini("keywords.txt")),
        metadata: Some(mini("occupation_meta.csv")),
        region_employment: Some(mini("region_employment.csv")),
        gini: Some(mini("gini.csv")),
        creativity: Some(mini("creativity.csv")),
        out_dir: out.to_path_buf(),
        years: YearRange { start: 2015, end: 2020 },
        sample_size: 20,
        ..RunConfig::default()
    };
    c.task_format.table = TableFormat::TSV;
    c.patent_format.table = TableFormat::TSV;
    c
}

/// Flags pointing the binary at the miniature corpus.
pub fn mini_args(out: &Path) -> Vec<String> {
    let mut v = Vec::new();
    for (flag, file) in [
        ("--tasks", "tasks.tsv"),
        ("--patents", "patents.tsv"),
        ("--keywords", "keywords.txt"),
        ("--metadata", "occupation_meta.csv"),
        ("--region-employment", "region_employment.csv"),
        ("--gini", "gini.csv"),
        ("--creativity", "creativity.csv"),
    ] {
        v.push(flag.to_string());
        v.push(mini(file).display().to_string());
    }
    v.extend(["--sample-size".to_string(), "20".to_string()]);
    v.push("--out".to_string());
    v.push(out.display().to_string());
    v
}

pub fn aii(command: &str, args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aii"))
        .arg(command)
        .args(args)
        .env("AII_LOG", "warn")
        .output()
        .expect("binary runs")
}

/// Sorted names and contents of every CSV in `dir`.
pub fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}
