//! Task and patent corpora: loading, deduplication and the AI keyword filter.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use thiserror::Error;

use crate::table::{read_table, TableError, TableFormat};
use crate::text::parse_word_list;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{path}: no valid rows")]
    EmptyCorpus { path: String },
    #[error("{path}: line {line}: cannot parse grant year `{value}`")]
    BadYear {
        path: String,
        line: u64,
        value: String,
    },
    #[error("{path}: line {line}: task id `{id}` already used for a different task")]
    DuplicateId { path: String, line: u64, id: String },
    #[error("keyword set is empty")]
    EmptyKeywords,
    #[error("empty year range {start}..={end}")]
    EmptyYearRange { start: i32, end: i32 },
    #[error("occupation {occupation_id}: sector shares sum to {sum}, expected 1")]
    InvalidShares { occupation_id: String, sum: f64 },
}

impl CorpusError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, CorpusError::Table(t) if t.is_not_found())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRecord {
    pub task_id: String,
    pub occupation_id: String,
    pub occupation_title: String,
    pub task_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatentRecord {
    pub patent_id: String,
    pub title: String,
    pub abstract_text: String,
    pub grant_year: i32,
    pub matched_keywords: BTreeSet<String>,
}

impl PatentRecord {
    /// Text that represents the patent for matching: title, a space, abstract.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.abstract_text)
    }
}

/// Counts gathered while loading a corpus file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    pub duplicates: usize,
    pub skipped_invalid: usize,
}

/// Column names for a task file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskColumns {
    pub task_id: String,
    pub occupation_id: String,
    pub occupation_title: String,
    pub task_text: String,
}

impl Default for TaskColumns {
    fn default() -> Self {
        TaskColumns {
            task_id: "task_id".into(),
            occupation_id: "occupation_id".into(),
            occupation_title: "occupation_title".into(),
            task_text: "task_text".into(),
        }
    }
}

/// Column names for a patent file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatentColumns {
    pub patent_id: String,
    pub title: String,
    pub abstract_text: String,
    pub grant_year: String,
}

impl Default for PatentColumns {
    fn default() -> Self {
        PatentColumns {
            patent_id: "patent_id".into(),
            title: "title".into(),
            abstract_text: "abstract".into(),
            grant_year: "grant_year".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormatSpec<C> {
    pub table: TableFormat,
    pub columns: C,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskCorpus {
    records: Vec<TaskRecord>,
    report: LoadReport,
}

impl TaskCorpus {
    /// Build from records already known to be valid. Later duplicates of an
    /// (occupation, text) pair are dropped.
    pub fn from_records(records: Vec<TaskRecord>) -> TaskCorpus {
        let mut seen = HashSet::new();
        let mut report = LoadReport {
            rows_read: records.len(),
            ..LoadReport::default()
        };
        let records = records
            .into_iter()
            .filter(|r| {
                let fresh = seen.insert((r.occupation_id.clone(), r.task_text.clone()));
                report.duplicates += usize::from(!fresh);
                fresh
            })
            .collect();
        TaskCorpus { records, report }
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn report(&self) -> LoadReport {
        self.report
    }

    /// Task count per occupation, keyed by occupation id.
    pub fn tasks_per_occupation(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.occupation_id.as_str()).or_insert(0) += 1;
        }
        counts
    }

    /// Occupation id to title, first title seen wins.
    pub fn occupation_titles(&self) -> BTreeMap<&str, &str> {
        let mut titles = BTreeMap::new();
        for r in &self.records {
            titles
                .entry(r.occupation_id.as_str())
                .or_insert(r.occupation_title.as_str());
        }
        titles
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["task_id", "occupation_id", "occupation_title", "task_text"])?;
        for r in &self.records {
            w.write_record([&r.task_id, &r.occupation_id, &r.occupation_title, &r.task_text])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatentCorpus {
    records: Vec<PatentRecord>,
    report: LoadReport,
}

impl PatentCorpus {
    /// Build from records; later records repeating a patent id are dropped.
    pub fn from_records(records: Vec<PatentRecord>) -> PatentCorpus {
        let mut seen = HashSet::new();
        let mut report = LoadReport {
            rows_read: records.len(),
            ..LoadReport::default()
        };
        let records = records
            .into_iter()
            .filter(|r| {
                let fresh = seen.insert(r.patent_id.clone());
                report.duplicates += usize::from(!fresh);
                fresh
            })
            .collect();
        PatentCorpus { records, report }
    }

    pub fn records(&self) -> &[PatentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn report(&self) -> LoadReport {
        self.report
    }

    pub fn get(&self, patent_id: &str) -> Option<&PatentRecord> {
        self.records.iter().find(|p| p.patent_id == patent_id)
    }

    pub fn index(&self) -> HashMap<&str, &PatentRecord> {
        self.records.iter().map(|p| (p.patent_id.as_str(), p)).collect()
    }

    /// Distinct grant years, ascending.
    pub fn years(&self) -> Vec<i32> {
        let years: BTreeSet<i32> = self.records.iter().map(|p| p.grant_year).collect();
        years.into_iter().collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["patent_id", "title", "abstract", "grant_year", "matched_keywords"])?;
        for r in &self.records {
            let keywords = r.matched_keywords.iter().cloned().collect::<Vec<_>>().join(";");
            w.write_record([
                r.patent_id.as_str(),
                r.title.as_str(),
                r.abstract_text.as_str(),
                &r.grant_year.to_string(),
                &keywords,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Lowercase, deduplicated, nonempty keyword phrases in their given order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: Vec<String>,
}

impl KeywordSet {
    pub fn new<I, S>(phrases: I) -> Result<KeywordSet, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let keywords: Vec<String> = phrases
            .into_iter()
            .map(|p| p.as_ref().trim().to_lowercase())
            .filter(|p| !p.is_empty() && seen.insert(p.clone()))
            .collect();
        if keywords.is_empty() {
            return Err(CorpusError::EmptyKeywords);
        }
        Ok(KeywordSet { keywords })
    }

    /// Parse the keyword file format: one phrase per line, `#` comments.
    pub fn parse(source: &str) -> Result<KeywordSet, CorpusError> {
        KeywordSet::new(parse_word_list(source))
    }

    pub fn load(path: &Path) -> Result<KeywordSet, CorpusError> {
        let source = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        KeywordSet::parse(&source)
    }

    /// The shipped core AI keyword list.
    pub fn default_ai() -> KeywordSet {
        KeywordSet::parse(include_str!("../data/keywords.txt")).expect("bundled keywords are nonempty")
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }
}

/// Inclusive range of grant years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Result<YearRange, CorpusError> {
        if start > end {
            return Err(CorpusError::EmptyYearRange { start, end });
        }
        Ok(YearRange { start, end })
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }
}

impl Default for YearRange {
    fn default() -> Self {
        YearRange { start: 2015, end: 2020 }
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub corpus: PatentCorpus,
    /// Patents retained per keyword, in keyword-set order.
    pub keyword_counts: Vec<(String, usize)>,
}

pub fn load_tasks(path: &Path, spec: &FormatSpec<TaskColumns>) -> Result<TaskCorpus, CorpusError> {
    let c = &spec.columns;
    let table = read_table(
        path,
        spec.table,
        &[&c.task_id, &c.occupation_id, &c.occupation_title, &c.task_text],
    )?;

    let mut records = Vec::with_capacity(table.rows.len());
    let mut by_id: HashMap<String, (String, String)> = HashMap::new();
    let mut skipped = 0;
    for row in &table.rows {
        let task_id = table.field(row, 0).trim();
        let occupation_id = table.field(row, 1).trim();
        let task_text = table.field(row, 3).trim();
        if task_id.is_empty() || occupation_id.is_empty() || task_text.is_empty() {
            skipped += 1;
            continue;
        }
        let key = (occupation_id.to_string(), task_text.to_string());
        match by_id.get(task_id) {
            Some(existing) if *existing != key => {
                return Err(CorpusError::DuplicateId {
                    path: path.display().to_string(),
                    line: row.line,
                    id: task_id.to_string(),
                })
            }
            Some(_) => {}
            None => {
                by_id.insert(task_id.to_string(), key);
            }
        }
        records.push(TaskRecord {
            task_id: task_id.to_string(),
            occupation_id: occupation_id.to_string(),
            occupation_title: table.field(row, 2).trim().to_string(),
            task_text: task_text.to_string(),
        });
    }

    let mut corpus = TaskCorpus::from_records(records);
    corpus.report.rows_read = table.rows.len();
    corpus.report.skipped_invalid = skipped;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus {
            path: path.display().to_string(),
        });
    }
    info!(
        "loaded {} tasks from {} ({} rows, {} duplicates, {} invalid)",
        corpus.len(),
        path.display(),
        corpus.report.rows_read,
        corpus.report.duplicates,
        skipped
    );
    Ok(corpus)
}

pub fn load_patents(path: &Path, spec: &FormatSpec<PatentColumns>) -> Result<PatentCorpus, CorpusError> {
    let c = &spec.columns;
    let table = read_table(
        path,
        spec.table,
        &[&c.patent_id, &c.title, &c.abstract_text, &c.grant_year],
    )?;

    let mut records = Vec::with_capacity(table.rows.len());
    let mut skipped = 0;
    for row in &table.rows {
        let patent_id = table.field(row, 0).trim();
        let title = table.field(row, 1).trim();
        let abstract_text = table.field(row, 2).trim();
        let year_field = table.field(row, 3).trim();
        let grant_year = year_field.parse::<i32>().map_err(|_| CorpusError::BadYear {
            path: path.display().to_string(),
            line: row.line,
            value: year_field.to_string(),
        })?;
        if patent_id.is_empty() || (title.is_empty() && abstract_text.is_empty()) {
            skipped += 1;
            continue;
        }
        records.push(PatentRecord {
            patent_id: patent_id.to_string(),
            title: title.to_string(),
            abstract_text: abstract_text.to_string(),
            grant_year,
            matched_keywords: BTreeSet::new(),
        });
    }

    let mut corpus = PatentCorpus::from_records(records);
    corpus.report.rows_read = table.rows.len();
    corpus.report.skipped_invalid = skipped;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus {
            path: path.display().to_string(),
        });
    }
    info!(
        "loaded {} patents from {} ({} duplicate ids)",
        corpus.len(),
        path.display(),
        corpus.report.duplicates
    );
    Ok(corpus)
}

/// Keep patents granted within `years` whose lowercased title + abstract
/// contains at least one keyword phrase.
pub fn filter_ai_patents(corpus: &PatentCorpus, keywords: &KeywordSet, years: YearRange) -> FilterOutcome {
    let mut counts = vec![0usize; keywords.keywords.len()];
    let mut kept = Vec::new();
    for patent in &corpus.records {
        if !years.contains(patent.grant_year) {
            continue;
        }
        let haystack = patent.text().to_lowercase();
        let mut matched = BTreeSet::new();
        for (i, kw) in keywords.keywords.iter().enumerate() {
            if haystack.contains(kw.as_str()) {
                matched.insert(kw.clone());
                counts[i] += 1;
            }
        }
        if !matched.is_empty() {
            kept.push(PatentRecord {
                matched_keywords: matched,
                ..patent.clone()
            });
        }
    }
    if kept.is_empty() {
        warn!("keyword filter kept no patents in {years}");
    }
    FilterOutcome {
        corpus: PatentCorpus {
            report: LoadReport {
                rows_read: corpus.len(),
                duplicates: 0,
                skipped_invalid: corpus.len() - kept.len(),
            },
            records: kept,
        },
        keyword_counts: keywords.keywords.iter().cloned().zip(counts).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EducationLevel {
    HighSchool,
    Associate,
    Bachelor,
    Master,
}

impl EducationLevel {
    pub const ALL: [EducationLevel; 4] = [
        EducationLevel::HighSchool,
        EducationLevel::Associate,
        EducationLevel::Bachelor,
        EducationLevel::Master,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EducationLevel::HighSchool => "HighSchool",
            EducationLevel::Associate => "Associate",
            EducationLevel::Bachelor => "Bachelor",
            EducationLevel::Master => "Master",
        }
    }
}

impl fmt::Display for EducationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EducationLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "highschool" | "highschooldiploma" => Ok(EducationLevel::HighSchool),
            "associate" | "associates" | "associatesdegree" => Ok(EducationLevel::Associate),
            "bachelor" | "bachelors" | "bachelorsdegree" => Ok(EducationLevel::Bachelor),
            "master" | "masters" | "mastersdegree" => Ok(EducationLevel::Master),
            _ => Err(format!("unknown education level `{s}`")),
        }
    }
}

/// Employment, sector mix and education level for one occupation.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeta {
    pub occupation_id: String,
    pub sector_shares: BTreeMap<String, f64>,
    pub education_level: Option<EducationLevel>,
    pub employment: Option<u64>,
}

pub const SHARE_TOLERANCE: f64 = 1e-9;

impl OccupationMeta {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.sector_shares.is_empty() {
            return Ok(());
        }
        let sum: f64 = self.sector_shares.values().sum();
        if (sum - 1.0).abs() > SHARE_TOLERANCE {
            return Err(CorpusError::InvalidShares {
                occupation_id: self.occupation_id.clone(),
                sum,
            });
        }
        Ok(())
    }
}

/// Load the long-format occupation metadata file
/// (`occupation_id, sector_id, share, education_level, employment`), one
/// sector share per row. Empty cells mean "unknown".
pub fn load_occupation_meta(path: &Path, format: TableFormat) -> Result<Vec<OccupationMeta>, CorpusError> {
    let table = read_table(
        path,
        format,
        &["occupation_id", "sector_id", "share", "education_level", "employment"],
    )?;

    let mut metas: Vec<OccupationMeta> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    let mut unknown_levels = 0usize;
    for row in &table.rows {
        let occupation_id = table.field(row, 0).trim();
        if occupation_id.is_empty() {
            return Err(table.invalid(row, "empty occupation_id").into());
        }
        let idx = *position.entry(occupation_id.to_string()).or_insert_with(|| {
            metas.push(OccupationMeta {
                occupation_id: occupation_id.to_string(),
                sector_shares: BTreeMap::new(),
                education_level: None,
                employment: None,
            });
            metas.len() - 1
        });
        let meta = &mut metas[idx];

        let sector = table.field(row, 1).trim();
        let share = table.field(row, 2).trim();
        if !sector.is_empty() && !share.is_empty() {
            let value: f64 = share
                .parse()
                .ok()
                .filter(|v: &f64| (0.0..=1.0).contains(v))
                .ok_or_else(|| table.invalid(row, format!("share `{share}` is not a fraction in [0,1]")))?;
            *meta.sector_shares.entry(sector.to_string()).or_insert(0.0) += value;
        }

        let level = table.field(row, 3).trim();
        if !level.is_empty() {
            match level.parse::<EducationLevel>() {
                Ok(l) => {
                    if meta.education_level.is_some_and(|prev| prev != l) {
                        return Err(table.invalid(row, "conflicting education_level").into());
                    }
                    meta.education_level = Some(l);
                }
                Err(_) => unknown_levels += 1,
            }
        }

        let employment = table.field(row, 4).trim();
        if !employment.is_empty() {
            let value: u64 = employment
                .parse()
                .map_err(|_| table.invalid(row, format!("employment `{employment}` is not a count")))?;
            if meta.employment.is_some_and(|prev| prev != value) {
                return Err(table.invalid(row, "conflicting employment").into());
            }
            meta.employment = Some(value);
        }
    }

    for meta in &metas {
        meta.validate()?;
    }
    if unknown_levels > 0 {
        warn!("{unknown_levels} metadata rows carry an education level outside the four bins");
    }
    Ok(metas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn patent(id: &str, title: &str, abstract_text: &str, year: i32) -> PatentRecord {
        PatentRecord {
            patent_id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            grant_year: year,
            matched_keywords: BTreeSet::new(),
        }
    }

    #[test]
    fn exact_duplicate_task_collapses() {
        let f = temp(
            "task_id\toccupation_id\toccupation_title\ttask_text\n\
             1\t15-1252\tDevs\tWrite code.\n\
             2\t15-1252\tDevs\tTest code.\n\
             1\t15-1252\tDevs\tWrite code.\n\
             3\t29-2031\tTechs\tObserve gauges.\n\
             4\t29-2031\tTechs\tPrepare patients.\n",
        );
        let c = load_tasks(f.path(), &FormatSpec::default()).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.report().duplicates, 1);
        assert_eq!(c.report().rows_read, 5);
    }

    #[test]
    fn header_only_is_empty_corpus() {
        let f = temp("task_id\toccupation_id\toccupation_title\ttask_text\n");
        let err = load_tasks(f.path(), &FormatSpec::default()).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyCorpus { .. }));
    }

    #[test]
    fn missing_task_column() {
        let f = temp("task_id\toccupation_id\ttask_text\n1\ta\tb\n");
        let err = load_tasks(f.path(), &FormatSpec::default()).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::Table(TableError::MissingColumn { ref column, .. }) if column == "occupation_title"
        ));
    }

    #[test]
    fn reused_task_id_is_rejected() {
        let f = temp("task_id\toccupation_id\toccupation_title\ttask_text\n1\ta\tA\tx\n1\ta\tA\ty\n");
        let err = load_tasks(f.path(), &FormatSpec::default()).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { line: 3, .. }));
    }

    #[test]
    fn blank_task_text_is_skipped() {
        let f = temp("task_id\toccupation_id\toccupation_title\ttask_text\n1\ta\tA\t   \n2\ta\tA\ty\n");
        let c = load_tasks(f.path(), &FormatSpec::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.report().skipped_invalid, 1);
    }

    #[test]
    fn repeated_patent_id_first_wins() {
        let f = temp(
            "patent_id\ttitle\tabstract\tgrant_year\n\
             P1\tFirst\tabc\t2016\n\
             P2\tSecond\tdef\t2017\n\
             P1\tReplay\tghi\t2018\n",
        );
        let c = load_patents(f.path(), &FormatSpec::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.records()[0].title, "First");
        assert_eq!(c.report().duplicates, 1);
    }

    #[test]
    fn unparseable_year() {
        let f = temp("patent_id\ttitle\tabstract\tgrant_year\nP1\tT\tA\t20x5\n");
        let err = load_patents(f.path(), &FormatSpec::default()).unwrap_err();
        assert!(matches!(err, CorpusError::BadYear { line: 2, ref value, .. } if value == "20x5"));
    }

    #[test]
    fn keyword_filter_keeps_machine_learning_in_range() {
        let corpus = PatentCorpus::from_records(vec![
            patent("P1", "Crop yield", "A machine learning model predicts yield.", 2016),
            patent("P2", "Door hinge", "A hinge for heavy doors.", 2016),
            patent("P3", "Old work", "Machine learning for sorting.", 2012),
        ]);
        let out = filter_ai_patents(&corpus, &KeywordSet::default_ai(), YearRange::default());
        assert_eq!(out.corpus.len(), 1);
        let kept = &out.corpus.records()[0];
        assert_eq!(kept.patent_id, "P1");
        assert!(kept.matched_keywords.contains("machine learning"));
        let ml = out.keyword_counts.iter().find(|(k, _)| k == "machine learning").unwrap();
        assert_eq!(ml.1, 1);
    }

    #[test]
    fn keyword_match_spans_title_and_abstract_case_insensitively() {
        let corpus = PatentCorpus::from_records(vec![patent("P1", "Deep", "LEARNING systems", 2018)]);
        let kws = KeywordSet::new(["Deep Learning"]).unwrap();
        let out = filter_ai_patents(&corpus, &kws, YearRange::default());
        assert_eq!(out.corpus.len(), 1);
    }

    #[test]
    fn keyword_set_normalizes() {
        let k = KeywordSet::new(["  Robotics", "robotics", "Planning"]).unwrap();
        assert_eq!(k.keywords(), ["robotics", "planning"]);
        assert!(matches!(KeywordSet::new(Vec::<String>::new()), Err(CorpusError::EmptyKeywords)));
        assert!(matches!(KeywordSet::parse("# only comments\n"), Err(CorpusError::EmptyKeywords)));
    }

    #[test]
    fn year_range_rejects_inverted() {
        assert!(YearRange::new(2020, 2015).is_err());
        assert!(YearRange::new(2015, 2015).unwrap().contains(2015));
    }

    #[test]
    fn occupation_meta_long_format() {
        let f = temp(
            "occupation_id\tsector_id\tshare\teducation_level\temployment\n\
             A\tS1\t0.6\tBachelor\t100\n\
             A\tS2\t0.4\tBachelor\t100\n\
             B\t\t\tPhD\t50\n",
        );
        let metas = load_occupation_meta(f.path(), TableFormat::TSV).unwrap();
        assert_eq!(metas.len(), 2);
        assert_eq!(metas[0].sector_shares.len(), 2);
        assert_eq!(metas[0].education_level, Some(EducationLevel::Bachelor));
        assert_eq!(metas[0].employment, Some(100));
        assert!(metas[1].sector_shares.is_empty());
        assert_eq!(metas[1].education_level, None);
    }

    #[test]
    fn occupation_meta_shares_must_sum_to_one() {
        let f = temp(
            "occupation_id\tsector_id\tshare\teducation_level\temployment\n\
             A\tS1\t0.6\t\t\n\
             A\tS2\t0.3\t\t\n",
        );
        let err = load_occupation_meta(f.path(), TableFormat::TSV).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidShares { .. }));
    }

    #[test]
    fn education_level_parsing() {
        assert_eq!("High School".parse(), Ok(EducationLevel::HighSchool));
        assert_eq!("master's degree".parse(), Ok(EducationLevel::Master));
        assert!("doctorate".parse::<EducationLevel>().is_err());
    }
}
