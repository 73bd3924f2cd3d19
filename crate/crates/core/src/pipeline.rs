//! Staged pipeline behind the `aii` command line.
//!
//! Each command reads raw inputs named in [`RunConfig`] and/or files that an
//! earlier command left in the output directory, writes its own files there,
//! validates their headers, and records a `manifest-<command>.json`.
//!
//! | command     | reads                                         | writes |
//! |-------------|-----------------------------------------------|--------|
//! | `ingest`    | tasks, patents, keywords                      | `tasks_clean.csv`, `patents_ai.csv`, `keyword_counts.csv` |
//! | `embed-ref` | ingest outputs                                | `task_embeddings.aiem`, `patent_embeddings.aiem` (+ `.ids`) |
//! | `match`     | ingest outputs, embeddings                    | `impact_table.csv`, `alpha_distribution.csv` (mean mode) |
//! | `temporal`  | ingest outputs, embeddings, metadata          | `first_impact.csv`, `newly_impacted.csv`, `sector_yearly.csv`, `sector_trends.csv`, `top_terms.csv` |
//! | `score`     | `impact_table.csv`, metadata                  | `occupation_scores.csv`, `sector_assignment.csv`, `sector_scores.csv`, `education_bins.csv` |
//! | `region`    | `impact_table.csv`, metadata, employment      | `region_scores.csv` |
//! | `correlate` | as `region`, plus indicator files             | `correlations.csv`, `region_outliers.csv`, `quadratic_fit.csv`, `histograms.csv` |
//! | `baseline`  | ingest outputs, lexicons                      | `baseline_scores.csv` |
//! | `sample`    | `impact_table.csv`, ingest outputs, labels    | `agreement_sample.csv`, `agreement.csv` (with labels) |
//! | `report`    | outputs of `score`, `temporal`, `region`      | `report.md`, `table_occupations.csv`, `table_sectors.csv`, `table_regions.csv` |

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use thiserror::Error;

use crate::baseline::{self, Lexicons};
use crate::corpus::{
    self, load_occupation_meta, load_patents, load_tasks, CorpusError, FormatSpec, KeywordSet, OccupationMeta,
    PatentColumns, PatentCorpus, TaskColumns, TaskCorpus, YearRange,
};
use crate::embed_store::{self, EmbedError, EmbeddingMatrix, EncoderConfig};
use crate::matcher::{
    self, Execution, ImpactTable, MatchError, MatchOptions, PatentTimeline, TemporalMode, IMPACT_TABLE_HEADER,
};
use crate::metrics::{self, MetricsError, OccupationScore, RateOfChange, RegionEmployment, SectorAssignment};
use crate::output::{self, fixed, Manifest, OutputError, AII_PLACES, ENTROPY_PLACES, SIMILARITY_PLACES};
use crate::stats::{self, IndicatorTable, StatsError};
use crate::table::{read_table, TableError, TableFormat};

pub const TASKS_CLEAN: &str = "tasks_clean.csv";
pub const PATENTS_AI: &str = "patents_ai.csv";
pub const KEYWORD_COUNTS: &str = "keyword_counts.csv";
pub const TASK_EMBEDDINGS: &str = "task_embeddings.aiem";
pub const PATENT_EMBEDDINGS: &str = "patent_embeddings.aiem";
pub const IMPACT_TABLE: &str = "impact_table.csv";
pub const ALPHA_DISTRIBUTION: &str = "alpha_distribution.csv";
pub const FIRST_IMPACT: &str = "first_impact.csv";
pub const NEWLY_IMPACTED: &str = "newly_impacted.csv";
pub const SECTOR_YEARLY: &str = "sector_yearly.csv";
pub const SECTOR_TRENDS: &str = "sector_trends.csv";
pub const TOP_TERMS: &str = "top_terms.csv";
pub const OCCUPATION_SCORES: &str = "occupation_scores.csv";
pub const SECTOR_ASSIGNMENT: &str = "sector_assignment.csv";
pub const SECTOR_SCORES: &str = "sector_scores.csv";
pub const EDUCATION_BINS: &str = "education_bins.csv";
pub const REGION_SCORES: &str = "region_scores.csv";
pub const CORRELATIONS: &str = "correlations.csv";
pub const REGION_OUTLIERS: &str = "region_outliers.csv";
pub const QUADRATIC_FIT: &str = "quadratic_fit.csv";
pub const HISTOGRAMS: &str = "histograms.csv";
pub const BASELINE_SCORES: &str = "baseline_scores.csv";
pub const AGREEMENT_SAMPLE: &str = "agreement_sample.csv";
pub const AGREEMENT: &str = "agreement.csv";
pub const REPORT: &str = "report.md";
pub const TABLE_OCCUPATIONS: &str = "table_occupations.csv";
pub const TABLE_SECTORS: &str = "table_sectors.csv";
pub const TABLE_REGIONS: &str = "table_regions.csv";

pub const KEYWORD_COUNTS_HEADER: [&str; 2] = ["keyword", "patents"];
pub const ALPHA_DISTRIBUTION_HEADER: [&str; 4] = ["aggregation", "bin_lower", "bin_upper", "count"];
pub const FIRST_IMPACT_HEADER: [&str; 5] = ["task_id", "occupation_id", "first_impact_year", "patent_id", "mode"];
pub const NEWLY_IMPACTED_HEADER: [&str; 4] = ["year", "newly_impacted", "cumulative_impacted", "mode"];
pub const SECTOR_YEARLY_HEADER: [&str; 3] = ["sector_id", "year", "aii"];
pub const SECTOR_TRENDS_HEADER: [&str; 3] = ["sector_id", "rate_of_change", "method"];
pub const TOP_TERMS_HEADER: [&str; 5] = ["year", "sector_id", "rank", "term", "count"];
pub const OCCUPATION_SCORES_HEADER: [&str; 5] = ["occupation_id", "title", "impacted", "total", "aii"];
pub const SECTOR_ASSIGNMENT_HEADER: [&str; 3] = ["occupation_id", "sector_id", "status"];
pub const SECTOR_SCORES_HEADER: [&str; 3] = ["sector_id", "occupations", "aii"];
pub const EDUCATION_BINS_HEADER: [&str; 4] = ["education_level", "occupations", "employment", "aii"];
pub const REGION_SCORES_HEADER: [&str; 5] = ["region_id", "aii", "entropy", "employment", "top_sector"];
pub const CORRELATIONS_HEADER: [&str; 3] = ["indicator", "n", "pearson_r"];
pub const REGION_OUTLIERS_HEADER: [&str; 4] = ["region_id", "aii", "z", "outlier"];
pub const QUADRATIC_FIT_HEADER: [&str; 6] = ["x", "y", "n", "c0", "c1", "c2"];
pub const HISTOGRAMS_HEADER: [&str; 4] = ["variable", "bin_lower", "bin_upper", "count"];
pub const BASELINE_SCORES_HEADER: [&str; 4] = ["task_id", "pair_count", "matched_pairs", "exposure_score"];
pub const AGREEMENT_SAMPLE_HEADER: [&str; 6] = ["task_id", "patent_id", "task_text", "patent_title", "label_a", "label_b"];
pub const AGREEMENT_HEADER: [&str; 4] = ["n", "observed", "expected", "kappa"];
pub const TABLE_OCCUPATIONS_HEADER: [&str; 11] = [
    "group",
    "rank",
    "occupation_id",
    "occupation",
    "sector",
    "task",
    "patent",
    "similarity",
    "impacted",
    "total",
    "aii",
];
pub const TABLE_SECTORS_HEADER: [&str; 4] = ["rank", "sector_id", "occupations", "aii"];
pub const TABLE_REGIONS_HEADER: [&str; 5] = ["rank", "region_id", "aii", "entropy", "top_sector"];

/// Alpha histogram resolution for the max-vs-mean comparison.
const ALPHA_BINS: usize = 40;
/// Histogram resolution for the regional variables.
const REGION_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("empty result: {0}")]
    EmptyResult(String),
    #[error("io error: {0}")]
    Io(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(_) => 1,
            PipelineError::BadArguments(_) => 2,
            PipelineError::MissingInput(_) => 3,
            PipelineError::Format(_) => 4,
            PipelineError::EmptyResult(_) => 5,
        }
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        match &e {
            _ if e.is_not_found() => PipelineError::MissingInput(e.to_string()),
            CorpusError::EmptyCorpus { .. } => PipelineError::EmptyResult(e.to_string()),
            CorpusError::EmptyKeywords | CorpusError::EmptyYearRange { .. } => PipelineError::BadArguments(e.to_string()),
            _ => PipelineError::Format(e.to_string()),
        }
    }
}

impl From<TableError> for PipelineError {
    fn from(e: TableError) -> Self {
        CorpusError::from(e).into()
    }
}

impl From<EmbedError> for PipelineError {
    fn from(e: EmbedError) -> Self {
        match &e {
            EmbedError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                PipelineError::MissingInput(e.to_string())
            }
            EmbedError::Io { .. } => PipelineError::Io(e.to_string()),
            EmbedError::DimTooSmall(_) => PipelineError::BadArguments(e.to_string()),
            _ => PipelineError::Format(e.to_string()),
        }
    }
}

impl From<MatchError> for PipelineError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::BadPercentile(_) => PipelineError::BadArguments(e.to_string()),
            MatchError::EmptyInput | MatchError::EmptyPatentSet => PipelineError::EmptyResult(e.to_string()),
            _ => PipelineError::Format(e.to_string()),
        }
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::MissingFlag(_) => PipelineError::Format(e.to_string()),
            _ => PipelineError::EmptyResult(e.to_string()),
        }
    }
}

impl From<StatsError> for PipelineError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::SampleTooLarge { .. } => PipelineError::BadArguments(e.to_string()),
            _ => PipelineError::EmptyResult(e.to_string()),
        }
    }
}

impl From<OutputError> for PipelineError {
    fn from(e: OutputError) -> Self {
        match &e {
            _ if e.is_not_found() => PipelineError::MissingInput(e.to_string()),
            OutputError::Io { .. } => PipelineError::Io(e.to_string()),
            _ => PipelineError::Format(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    EmbedRef,
    Match,
    Score,
    Temporal,
    Region,
    Correlate,
    Baseline,
    Sample,
    Report,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Ingest,
        Command::EmbedRef,
        Command::Match,
        Command::Temporal,
        Command::Score,
        Command::Region,
        Command::Correlate,
        Command::Baseline,
        Command::Sample,
        Command::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::EmbedRef => "embed-ref",
            Command::Match => "match",
            Command::Score => "score",
            Command::Temporal => "temporal",
            Command::Region => "region",
            Command::Correlate => "correlate",
            Command::Baseline => "baseline",
            Command::Sample => "sample",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Max,
    /// Also emit the mean-similarity distribution next to the max one.
    Mean,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Max => "max",
            Aggregation::Mean => "mean",
        }
    }
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Aggregation::Max),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(format!("unknown aggregation `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EncoderKind {
    /// Embeddings written by `embed-ref` into the output directory.
    #[default]
    Reference,
    /// Embeddings supplied through `task_embeddings` / `patent_embeddings`.
    ExternalFile,
}

impl EncoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Reference => "reference",
            EncoderKind::ExternalFile => "external-file",
        }
    }
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reference" => Ok(EncoderKind::Reference),
            "external-file" | "external_file" | "external" => Ok(EncoderKind::ExternalFile),
            _ => Err(format!("unknown encoder `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tasks: Option<PathBuf>,
    pub patents: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub region_employment: Option<PathBuf>,
    pub gini: Option<PathBuf>,
    pub creativity: Option<PathBuf>,
    pub task_embeddings: Option<PathBuf>,
    pub patent_embeddings: Option<PathBuf>,
    pub lexicon_dir: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub task_format: FormatSpec<TaskColumns>,
    pub patent_format: FormatSpec<PatentColumns>,
    pub percentile: f64,
    pub years: YearRange,
    pub aggregation: Aggregation,
    pub temporal_mode: TemporalMode,
    pub rate_of_change: RateOfChange,
    pub encoder: EncoderKind,
    pub encoder_config: EncoderConfig,
    pub execution: Execution,
    pub seed: u64,
    pub sample_size: usize,
    pub top_terms: usize,
    pub report_rows: usize,
    pub zscore_cutoff: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tasks: None,
            patents: None,
            keywords: None,
            metadata: None,
            region_employment: None,
            gini: None,
            creativity: None,
            task_embeddings: None,
            patent_embeddings: None,
            lexicon_dir: None,
            stopwords: None,
            labels: None,
            out_dir: PathBuf::from("out"),
            task_format: FormatSpec::default(),
            patent_format: FormatSpec::default(),
            percentile: 90.0,
            years: YearRange::default(),
            aggregation: Aggregation::Max,
            temporal_mode: TemporalMode::CumulativeFixed,
            rate_of_change: RateOfChange::OlsSlope,
            encoder: EncoderKind::Reference,
            encoder_config: EncoderConfig::default(),
            execution: Execution::Parallel,
            seed: 0,
            sample_size: 100,
            top_terms: 10,
            report_rows: 10,
            zscore_cutoff: 2.0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::BadArguments(m));
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return bad(format!("percentile {} must lie strictly between 0 and 100", self.percentile));
        }
        if self.years.start > self.years.end {
            return bad(format!("year range {} is empty", self.years));
        }
        if self.encoder_config.dim < 8 {
            return bad(format!("encoder dimension {} is below 8", self.encoder_config.dim));
        }
        if self.top_terms == 0 || self.report_rows == 0 {
            return bad("top-terms and report-rows must be at least 1".into());
        }
        if !(self.zscore_cutoff.is_finite() && self.zscore_cutoff > 0.0) {
            return bad(format!("z-score cutoff {} must be positive", self.zscore_cutoff));
        }
        Ok(())
    }

    /// Every setting as text, for the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let mut m = BTreeMap::new();
        for (k, v) in [
            ("tasks", &self.tasks),
            ("patents", &self.patents),
            ("keywords", &self.keywords),
            ("metadata", &self.metadata),
            ("region_employment", &self.region_employment),
            ("gini", &self.gini),
            ("creativity", &self.creativity),
            ("task_embeddings", &self.task_embeddings),
            ("patent_embeddings", &self.patent_embeddings),
            ("lexicon_dir", &self.lexicon_dir),
            ("stopwords", &self.stopwords),
            ("labels", &self.labels),
        ] {
            m.insert(k.to_string(), path(v));
        }
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m.insert("task_delimiter".into(), (self.task_format.table.delimiter as char).escape_default().to_string());
        m.insert("patent_delimiter".into(), (self.patent_format.table.delimiter as char).escape_default().to_string());
        m.insert("percentile".into(), self.percentile.to_string());
        m.insert("years".into(), self.years.to_string());
        m.insert("aggregation".into(), self.aggregation.as_str().into());
        m.insert("temporal_mode".into(), self.temporal_mode.to_string());
        m.insert("rate_of_change".into(), self.rate_of_change.as_str().into());
        m.insert("encoder".into(), self.encoder.as_str().into());
        m.insert("encoder_dim".into(), self.encoder_config.dim.to_string());
        m.insert("encoder_bigrams".into(), self.encoder_config.use_bigrams.to_string());
        m.insert("encoder_seed".into(), self.encoder_config.hash_seed.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("sample_size".into(), self.sample_size.to_string());
        m.insert("top_terms".into(), self.top_terms.to_string());
        m.insert("report_rows".into(), self.report_rows.to_string());
        m.insert("zscore_cutoff".into(), self.zscore_cutoff.to_string());
        m
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn required<'a>(&self, value: &'a Option<PathBuf>, flag: &str, command: Command) -> Result<&'a Path, PipelineError> {
        value
            .as_deref()
            .ok_or_else(|| PipelineError::BadArguments(format!("`{command}` needs --{flag}")))
    }
}

/// Run one command. Configuration is validated before anything is written.
pub fn run(command: Command, config: &RunConfig) -> Result<Manifest, PipelineError> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let mut ctx = Stage {
        config,
        manifest: Manifest::new(command.as_str()),
        outputs: Vec::new(),
    };
    ctx.manifest.config = config.echo();
    match command {
        Command::Ingest => ingest(&mut ctx)?,
        Command::EmbedRef => embed_ref(&mut ctx)?,
        Command::Match => match_stage(&mut ctx)?,
        Command::Score => score(&mut ctx)?,
        Command::Temporal => temporal(&mut ctx)?,
        Command::Region => region(&mut ctx)?,
        Command::Correlate => correlate(&mut ctx)?,
        Command::Baseline => baseline_stage(&mut ctx)?,
        Command::Sample => sample(&mut ctx)?,
        Command::Report => report(&mut ctx)?,
    }
    ctx.finish()
}

/// Run every command in pipeline order. `embed-ref` is skipped for external
/// embeddings and `correlate` when no indicator file is configured.
pub fn run_all(config: &RunConfig) -> Result<Vec<Manifest>, PipelineError> {
    let mut manifests = Vec::new();
    for command in Command::ALL {
        let skip = match command {
            Command::EmbedRef => config.encoder == EncoderKind::ExternalFile,
            Command::Correlate => config.gini.is_none() && config.creativity.is_none(),
            _ => false,
        };
        if skip {
            info!("skipping {command}");
            continue;
        }
        manifests.push(run(command, config)?);
    }
    Ok(manifests)
}

struct Stage<'a> {
    config: &'a RunConfig,
    manifest: Manifest,
    /// Emitted CSVs with their documented headers, plus other emitted files.
    outputs: Vec<(PathBuf, Option<&'static [&'static str]>)>,
}

impl Stage<'_> {
    fn input(&mut self, name: &str, path: &Path) -> Result<(), PipelineError> {
        self.manifest.hash_input(name, path)?;
        Ok(())
    }

    fn write(&mut self, name: &str, header: &'static [&'static str], rows: Vec<Vec<String>>) -> Result<(), PipelineError> {
        let path = self.config.out(name);
        output::write_csv(&path, header, rows)?;
        self.outputs.push((path, Some(header)));
        Ok(())
    }

    fn emitted(&mut self, path: PathBuf) {
        self.outputs.push((path, None));
    }

    fn size(&mut self, name: &str, n: usize) {
        self.manifest.sizes.insert(name.to_string(), n);
    }

    fn finish(mut self) -> Result<Manifest, PipelineError> {
        for (path, header) in &self.outputs {
            if let Some(header) = header {
                output::validate_csv(path, header)?;
            }
            self.manifest.hash_output(path)?;
        }
        self.manifest.write(&self.config.out_dir)?;
        Ok(self.manifest)
    }

    fn tasks(&mut self) -> Result<TaskCorpus, PipelineError> {
        let path = self.config.out(TASKS_CLEAN);
        self.input(TASKS_CLEAN, &path)?;
        let corpus = load_tasks(
            &path,
            &FormatSpec {
                table: TableFormat::CSV,
                columns: TaskColumns::default(),
            },
        )?;
        self.size("tasks", corpus.len());
        Ok(corpus)
    }

    fn patents(&mut self) -> Result<PatentCorpus, PipelineError> {
        let path = self.config.out(PATENTS_AI);
        self.input(PATENTS_AI, &path)?;
        let corpus = read_ai_patents(&path)?;
        self.size("patents", corpus.len());
        Ok(corpus)
    }

    fn impact_table(&mut self) -> Result<ImpactTable, PipelineError> {
        let path = self.config.out(IMPACT_TABLE);
        self.input(IMPACT_TABLE, &path)?;
        output::validate_csv(&path, &IMPACT_TABLE_HEADER)?;
        ImpactTable::read_csv(&path).map_err(PipelineError::Format)
    }

    fn metadata(&mut self, command: Command) -> Result<Vec<OccupationMeta>, PipelineError> {
        let path = self.config.required(&self.config.metadata, "metadata", command)?;
        self.input("metadata", path)?;
        let meta = load_occupation_meta(path, TableFormat::for_path(path))?;
        self.size("occupations_with_metadata", meta.len());
        Ok(meta)
    }

    fn employment(&mut self, command: Command) -> Result<RegionEmployment, PipelineError> {
        let path = self.config.required(&self.config.region_employment, "region-employment", command)?;
        self.input("region_employment", path)?;
        let e = metrics::load_region_employment(path, TableFormat::for_path(path))?;
        self.size("regions", e.len());
        Ok(e)
    }

    fn embeddings(&mut self, command: Command) -> Result<(EmbeddingMatrix, EmbeddingMatrix), PipelineError> {
        let (task_path, patent_path) = match self.config.encoder {
            EncoderKind::Reference => (self.config.out(TASK_EMBEDDINGS), self.config.out(PATENT_EMBEDDINGS)),
            EncoderKind::ExternalFile => (
                self.config.required(&self.config.task_embeddings, "task-embeddings", command)?.to_path_buf(),
                self.config.required(&self.config.patent_embeddings, "patent-embeddings", command)?.to_path_buf(),
            ),
        };
        self.input("task_embeddings", &task_path)?;
        self.input("patent_embeddings", &patent_path)?;
        let tasks = embed_store::read_embeddings(&task_path)?;
        let patents = embed_store::read_embeddings(&patent_path)?;
        if tasks.dim() != patents.dim() {
            return Err(PipelineError::Format(format!(
                "task embeddings have dimension {} but patent embeddings {}",
                tasks.dim(),
                patents.dim()
            )));
        }
        Ok((tasks, patents))
    }
}

/// Load `patents_ai.csv`, restoring the matched keyword sets.
pub fn read_ai_patents(path: &Path) -> Result<PatentCorpus, PipelineError> {
    let spec = FormatSpec {
        table: TableFormat::CSV,
        columns: PatentColumns::default(),
    };
    let corpus = load_patents(path, &spec)?;
    let table = read_table(path, TableFormat::CSV, &["patent_id", "matched_keywords"])?;
    let keywords: HashMap<String, BTreeSet<String>> = table
        .rows
        .iter()
        .map(|r| {
            let set = table
                .field(r, 1)
                .split(';')
                .filter(|k| !k.is_empty())
                .map(str::to_string)
                .collect();
            (table.field(r, 0).trim().to_string(), set)
        })
        .collect();
    let records = corpus
        .records()
        .iter()
        .map(|p| corpus::PatentRecord {
            matched_keywords: keywords.get(&p.patent_id).cloned().unwrap_or_default(),
            ..p.clone()
        })
        .collect();
    Ok(PatentCorpus::from_records(records))
}

fn ingest(ctx: &mut Stage) -> Result<(), PipelineError> {
    let cfg = ctx.config;
    let tasks_path = cfg.required(&cfg.tasks, "tasks", Command::Ingest)?;
    let patents_path = cfg.required(&cfg.patents, "patents", Command::Ingest)?;
    ctx.input("tasks", tasks_path)?;
    ctx.input("patents", patents_path)?;
    let keywords = match &cfg.keywords {
        Some(p) => {
            ctx.input("keywords", p)?;
            KeywordSet::load(p)?
        }
        None => KeywordSet::default_ai(),
    };

    let tasks = load_tasks(tasks_path, &cfg.task_format)?;
    let patents = load_patents(patents_path, &cfg.patent_format)?;
    let filtered = corpus::filter_ai_patents(&patents, &keywords, cfg.years);
    if filtered.corpus.is_empty() {
        return Err(PipelineError::EmptyResult(format!(
            "no patent in {} matches any keyword",
            cfg.years
        )));
    }

    ctx.size("task_rows", tasks.report().rows_read);
    ctx.size("task_duplicates", tasks.report().duplicates);
    ctx.size("task_invalid", tasks.report().skipped_invalid);
    ctx.size("tasks", tasks.len());
    ctx.size("occupations", tasks.tasks_per_occupation().len());
    ctx.size("patent_rows", patents.report().rows_read);
    ctx.size("patent_duplicates", patents.report().duplicates);
    ctx.size("patents", patents.len());
    ctx.size("ai_patents", filtered.corpus.len());

    let tasks_out = cfg.out(TASKS_CLEAN);
    tasks
        .write_csv(&tasks_out)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", tasks_out.display())))?;
    ctx.emitted(tasks_out);
    let patents_out = cfg.out(PATENTS_AI);
    filtered
        .corpus
        .write_csv(&patents_out)
        .map_err(|e| PipelineError::Io(format!("{}: {e}", patents_out.display())))?;
    ctx.emitted(patents_out);

    let rows = filtered
        .keyword_counts
        .iter()
        .map(|(k, n)| vec![k.clone(), n.to_string()])
        .collect();
    ctx.write(KEYWORD_COUNTS, &KEYWORD_COUNTS_HEADER, rows)
}

fn embed_ref(ctx: &mut Stage) -> Result<(), PipelineError> {
    let tasks = ctx.tasks()?;
    let patents = ctx.patents()?;
    let enc = &ctx.config.encoder_config;
    let task_m = embed_store::encode_all(
        tasks.records().iter().map(|t| (t.task_id.clone(), t.task_text.as_str())),
        enc,
    )?;
    let patent_m = embed_store::encode_all(patents.records().iter().map(|p| (p.patent_id.clone(), p.text())), enc)?;
    for (name, m) in [(TASK_EMBEDDINGS, &task_m), (PATENT_EMBEDDINGS, &patent_m)] {
        let path = ctx.config.out(name);
        embed_store::write_embeddings(m, &path)?;
        ctx.emitted(embed_store::sidecar_path(&path));
        ctx.emitted(path);
    }
    ctx.size("dim", enc.dim);
    Ok(())
}

/// Patent rows for exactly the filtered corpus, in corpus order.
fn corpus_patent_rows(all: &EmbeddingMatrix, patents: &PatentCorpus) -> Result<EmbeddingMatrix, PipelineError> {
    let ids: Vec<&str> = patents.records().iter().map(|p| p.patent_id.as_str()).collect();
    all.select(&ids)
        .map_err(|id| PipelineError::Format(format!("no embedding for patent `{id}`")))
}

fn run_match(ctx: &mut Stage, command: Command, with_mean: bool) -> Result<MatchContext, PipelineError> {
    let tasks = ctx.tasks()?;
    let patents = ctx.patents()?;
    let (task_m, patent_all) = ctx.embeddings(command)?;
    let patent_m = corpus_patent_rows(&patent_all, &patents)?;
    let timeline = PatentTimeline::for_matrix(&patent_m, &patents)
        .map_err(|id| PipelineError::Format(format!("patent `{id}` missing from corpus")))?;
    let options = MatchOptions {
        percentile: ctx.config.percentile,
        execution: ctx.config.execution,
        with_mean,
    };
    let outcome = matcher::match_tasks(&tasks, &task_m, &patent_m, Some(&timeline), &options)?;
    ctx.manifest.threshold = Some(outcome.threshold.value);
    ctx.size("impacted_tasks", outcome.table.impacted_count());
    let task_m = matcher::align_tasks(&tasks, &task_m)?;
    Ok(MatchContext {
        tasks,
        patents,
        task_m,
        patent_m,
        timeline,
        outcome,
    })
}

struct MatchContext {
    tasks: TaskCorpus,
    patents: PatentCorpus,
    task_m: EmbeddingMatrix,
    patent_m: EmbeddingMatrix,
    timeline: PatentTimeline,
    outcome: matcher::MatchOutcome,
}

fn match_stage(ctx: &mut Stage) -> Result<(), PipelineError> {
    let with_mean = ctx.config.aggregation == Aggregation::Mean;
    let m = run_match(ctx, Command::Match, with_mean)?;
    let path = ctx.config.out(IMPACT_TABLE);
    m.outcome.table.write_csv(&path)?;
    ctx.outputs.push((path, Some(&IMPACT_TABLE_HEADER)));

    if let Some(means) = &m.outcome.mean_alphas {
        let mut rows = Vec::new();
        for (label, values) in [("max", m.outcome.table.alphas()), ("mean", means.clone())] {
            for (lo, hi, count) in stats::histogram(&values, ALPHA_BINS, -1.0, 1.0) {
                rows.push(vec![label.to_string(), fixed(lo, 2), fixed(hi, 2), count.to_string()]);
            }
        }
        ctx.write(ALPHA_DISTRIBUTION, &ALPHA_DISTRIBUTION_HEADER, rows)?;
    }
    Ok(())
}

fn temporal(ctx: &mut Stage) -> Result<(), PipelineError> {
    let m = run_match(ctx, Command::Temporal, false)?;
    let meta = ctx.metadata(Command::Temporal)?;
    let cfg = ctx.config;
    let mode = cfg.temporal_mode;

    let firsts = matcher::first_impacts(
        &m.task_m,
        &m.patent_m,
        &m.timeline,
        &m.outcome.threshold,
        mode,
        cfg.execution,
    )?;
    let years: Vec<i32> = cfg.years.years().collect();

    let mut rows = Vec::new();
    for (task, first) in m.tasks.records().iter().zip(&firsts) {
        rows.push(vec![
            task.task_id.clone(),
            task.occupation_id.clone(),
            first.as_ref().map(|f| f.year.to_string()).unwrap_or_default(),
            first.as_ref().map(|f| f.patent_id.clone()).unwrap_or_default(),
            mode.to_string(),
        ]);
    }
    ctx.write(FIRST_IMPACT, &FIRST_IMPACT_HEADER, rows)?;

    let first_years: Vec<Option<i32>> = firsts.iter().map(|f| f.as_ref().map(|f| f.year)).collect();
    let rows = matcher::newly_impacted_per_year(&first_years, &years)
        .into_iter()
        .map(|(y, new, cum)| vec![y.to_string(), new.to_string(), cum.to_string(), mode.to_string()])
        .collect();
    ctx.write(NEWLY_IMPACTED, &NEWLY_IMPACTED_HEADER, rows)?;

    let assignment = metrics::assign_sectors(&meta);
    let by_task: HashMap<String, Option<i32>> = m
        .tasks
        .records()
        .iter()
        .zip(&first_years)
        .map(|(t, f)| (t.task_id.clone(), *f))
        .collect();
    let series = metrics::sector_yearly_series(&by_task, &m.tasks, &assignment, &years, cfg.rate_of_change);
    let mut yearly = Vec::new();
    let mut trends = Vec::new();
    for s in &series {
        for (y, v) in &s.values {
            yearly.push(vec![s.sector_id.clone(), y.to_string(), fixed(*v, AII_PLACES)]);
        }
        trends.push(vec![
            s.sector_id.clone(),
            fixed(s.rate_of_change, SIMILARITY_PLACES),
            cfg.rate_of_change.as_str().to_string(),
        ]);
    }
    ctx.write(SECTOR_YEARLY, &SECTOR_YEARLY_HEADER, yearly)?;
    ctx.write(SECTOR_TRENDS, &SECTOR_TRENDS_HEADER, trends)?;

    let stopwords = match &cfg.stopwords {
        Some(p) => {
            ctx.input("stopwords", p)?;
            metrics::parse_stopwords(&fs::read_to_string(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => PipelineError::MissingInput(p.display().to_string()),
                _ => PipelineError::Io(format!("{}: {e}", p.display())),
            })?)
        }
        None => metrics::default_stopwords(),
    };
    let mut groups: BTreeMap<(i32, &str), Vec<&str>> = BTreeMap::new();
    for (task, first) in m.tasks.records().iter().zip(&firsts) {
        let (Some(first), Some(sector)) = (first, assignment.sector_of(&task.occupation_id)) else {
            continue;
        };
        groups.entry((first.year, sector)).or_default().push(&first.patent_id);
    }
    let mut rows = Vec::new();
    for ((year, sector), ids) in &groups {
        for (rank, (term, count)) in metrics::top_terms(ids, &m.patents, cfg.top_terms, &stopwords)
            .into_iter()
            .enumerate()
        {
            rows.push(vec![year.to_string(), sector.to_string(), (rank + 1).to_string(), term, count.to_string()]);
        }
    }
    ctx.write(TOP_TERMS, &TOP_TERMS_HEADER, rows)
}

/// Occupation, sector and assignment results shared by `score`, `region` and `correlate`.
struct Scores {
    occupations: Vec<OccupationScore>,
    assignment: SectorAssignment,
    sectors: Vec<metrics::SectorScore>,
    meta: Vec<OccupationMeta>,
}

fn compute_scores(ctx: &mut Stage, command: Command) -> Result<(TaskCorpus, ImpactTable, Scores), PipelineError> {
    let tasks = ctx.tasks()?;
    let table = ctx.impact_table()?;
    let meta = ctx.metadata(command)?;
    let occupations = metrics::occupation_aii(&table, &tasks)?;
    let scored: HashSet<&str> = occupations.iter().map(|o| o.occupation_id.as_str()).collect();
    let meta: Vec<OccupationMeta> = meta
        .into_iter()
        .filter(|m| scored.contains(m.occupation_id.as_str()))
        .collect();
    let without_meta = scored.len() - meta.len();
    if without_meta > 0 {
        warn!("{without_meta} scored occupations have no metadata; left out of sector, region and education results");
    }
    let assignment = metrics::assign_sectors(&meta);
    let sectors = metrics::sector_aii(&occupations, &assignment)?;
    ctx.size("occupations", occupations.len());
    ctx.size("occupations_without_metadata", without_meta);
    ctx.size("occupations_assigned", assignment.assigned.len());
    ctx.size("occupations_unassigned", assignment.unassigned.len() + assignment.missing_shares.len());
    ctx.size("sectors", sectors.len());
    Ok((
        tasks,
        table,
        Scores {
            occupations,
            assignment,
            sectors,
            meta,
        },
    ))
}

fn score(ctx: &mut Stage) -> Result<(), PipelineError> {
    let (_, _, s) = compute_scores(ctx, Command::Score)?;

    let rows = s
        .occupations
        .iter()
        .map(|o| {
            vec![
                o.occupation_id.clone(),
                o.title.clone(),
                o.impacted_count.to_string(),
                o.total_tasks.to_string(),
                fixed(o.aii, AII_PLACES),
            ]
        })
        .collect();
    ctx.write(OCCUPATION_SCORES, &OCCUPATION_SCORES_HEADER, rows)?;

    let mut rows: Vec<Vec<String>> = s
        .assignment
        .assigned
        .iter()
        .map(|(o, sec)| vec![o.clone(), sec.clone(), "assigned".into()])
        .collect();
    rows.extend(s.assignment.unassigned.iter().map(|o| vec![o.clone(), String::new(), "no_majority".into()]));
    rows.extend(s.assignment.missing_shares.iter().map(|o| vec![o.clone(), String::new(), "no_sector_data".into()]));
    rows.sort();
    ctx.write(SECTOR_ASSIGNMENT, &SECTOR_ASSIGNMENT_HEADER, rows)?;

    let rows = s
        .sectors
        .iter()
        .map(|sec| {
            vec![
                sec.sector_id.clone(),
                sec.member_occupations.len().to_string(),
                fixed(sec.aii, AII_PLACES),
            ]
        })
        .collect();
    ctx.write(SECTOR_SCORES, &SECTOR_SCORES_HEADER, rows)?;

    let bins = metrics::education_bin_aii(&s.occupations, &s.meta);
    let rows = bins
        .values()
        .map(|b| {
            vec![
                b.level.to_string(),
                b.occupations.to_string(),
                b.employment.to_string(),
                fixed(b.aii, AII_PLACES),
            ]
        })
        .collect();
    ctx.write(EDUCATION_BINS, &EDUCATION_BINS_HEADER, rows)
}

struct RegionRow {
    region_id: String,
    aii: f64,
    entropy: f64,
    employment: u64,
    top_sector: String,
}

fn compute_regions(ctx: &mut Stage, command: Command) -> Result<Vec<RegionRow>, PipelineError> {
    let (_, _, s) = compute_scores(ctx, command)?;
    let employment = ctx.employment(command)?;
    let regions = metrics::region_aii(&s.sectors, &employment);
    if regions.is_empty() {
        return Err(PipelineError::EmptyResult("no region has employment in a scored sector".into()));
    }
    let mut rows = Vec::with_capacity(regions.len());
    for r in regions {
        let weights = &employment[&r.region_id];
        let entropy = metrics::region_diversity(&r.region_id, weights)?.entropy;
        rows.push(RegionRow {
            entropy,
            employment: weights.values().sum(),
            top_sector: metrics::most_prevalent_sector(weights).unwrap_or_default().to_string(),
            aii: r.aii,
            region_id: r.region_id,
        });
    }
    ctx.size("regions_scored", rows.len());
    Ok(rows)
}

fn region(ctx: &mut Stage) -> Result<(), PipelineError> {
    let regions = compute_regions(ctx, Command::Region)?;
    let rows = regions
        .iter()
        .map(|r| {
            vec![
                r.region_id.clone(),
                fixed(r.aii, AII_PLACES),
                fixed(r.entropy, ENTROPY_PLACES),
                r.employment.to_string(),
                r.top_sector.clone(),
            ]
        })
        .collect();
    ctx.write(REGION_SCORES, &REGION_SCORES_HEADER, rows)
}

fn histogram_rows(variable: &str, values: &[f64]) -> Vec<Vec<String>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || lo >= hi {
        return Vec::new();
    }
    stats::histogram(values, REGION_BINS, lo, hi)
        .into_iter()
        .map(|(a, b, c)| vec![variable.to_string(), fixed(a, 6), fixed(b, 6), c.to_string()])
        .collect()
}

fn correlate(ctx: &mut Stage) -> Result<(), PipelineError> {
    let cfg = ctx.config;
    let regions = compute_regions(ctx, Command::Correlate)?;
    let aii: BTreeMap<String, f64> = regions.iter().map(|r| (r.region_id.clone(), r.aii)).collect();

    let mut indicators = Vec::new();
    for (name, path) in [("gini", &cfg.gini), ("creativity", &cfg.creativity)] {
        if let Some(p) = path {
            ctx.input(name, p)?;
            indicators.push(IndicatorTable::load(name, p, TableFormat::for_path(p))?);
        }
    }
    if indicators.is_empty() {
        return Err(PipelineError::BadArguments("`correlate` needs --gini and/or --creativity".into()));
    }

    let mut corr_rows = Vec::new();
    let mut hist_rows = histogram_rows("aii", &aii.values().copied().collect::<Vec<_>>());
    hist_rows.extend(histogram_rows(
        "entropy",
        &regions.iter().map(|r| r.entropy).collect::<Vec<_>>(),
    ));
    for ind in &indicators {
        let (ids, xs, ys) = ind.join(&aii);
        if ids.len() < aii.len() {
            warn!(
                "{} of {} scored regions have no {} value",
                aii.len() - ids.len(),
                aii.len(),
                ind.name
            );
        }
        let r = match stats::pearson(&xs, &ys) {
            Ok(r) => fixed(r, SIMILARITY_PLACES),
            Err(e) => {
                warn!("{}: {e}", ind.name);
                String::new()
            }
        };
        corr_rows.push(vec![ind.name.clone(), ids.len().to_string(), r]);
        hist_rows.extend(histogram_rows(&ind.name, &ys));
    }
    ctx.write(CORRELATIONS, &CORRELATIONS_HEADER, corr_rows)?;

    let values: Vec<f64> = aii.values().copied().collect();
    let z = stats::zscore_outliers(&values, cfg.zscore_cutoff)?;
    let rows = aii
        .iter()
        .zip(z.z.iter().zip(&z.outlier))
        .map(|((id, a), (z, o))| vec![id.clone(), fixed(*a, AII_PLACES), fixed(*z, 4), u8::from(*o).to_string()])
        .collect();
    ctx.write(REGION_OUTLIERS, &REGION_OUTLIERS_HEADER, rows)?;

    let entropy: Vec<f64> = regions.iter().map(|r| r.entropy).collect();
    let region_aii: Vec<f64> = regions.iter().map(|r| r.aii).collect();
    let mut rows = Vec::new();
    match stats::quadratic_fit(&entropy, &region_aii) {
        Ok(q) => rows.push(vec![
            "entropy".into(),
            "aii".into(),
            entropy.len().to_string(),
            fixed(q.c0, SIMILARITY_PLACES),
            fixed(q.c1, SIMILARITY_PLACES),
            fixed(q.c2, SIMILARITY_PLACES),
        ]),
        Err(e) => warn!("quadratic fit of aii on entropy: {e}"),
    }
    ctx.write(QUADRATIC_FIT, &QUADRATIC_FIT_HEADER, rows)?;
    ctx.write(HISTOGRAMS, &HISTOGRAMS_HEADER, hist_rows)
}

fn baseline_stage(ctx: &mut Stage) -> Result<(), PipelineError> {
    let tasks = ctx.tasks()?;
    let patents = ctx.patents()?;
    let lexicons = match &ctx.config.lexicon_dir {
        Some(dir) => Lexicons::load_dir(dir).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => PipelineError::MissingInput(format!("lexicons in {}", dir.display())),
            _ => PipelineError::Io(format!("{}: {e}", dir.display())),
        })?,
        None => Lexicons::bundled(),
    };
    if lexicons.is_empty() {
        return Err(PipelineError::Format("verb and noun lexicons must be nonempty".into()));
    }
    let pool = baseline::pair_pool(patents.records().iter().map(|p| p.title.as_str()), &lexicons);
    ctx.size("patent_title_pairs", pool.len());
    let rows = tasks
        .records()
        .iter()
        .map(|t| {
            let pairs = baseline::extract_verb_noun_pairs(&t.task_text, &lexicons);
            let matched: Vec<String> = pairs.iter().filter(|p| pool.contains(*p)).map(|p| p.to_string()).collect();
            vec![
                t.task_id.clone(),
                pairs.len().to_string(),
                matched.join(";"),
                fixed(baseline::word_match_exposure(&pairs, &pool), SIMILARITY_PLACES),
            ]
        })
        .collect();
    ctx.write(BASELINE_SCORES, &BASELINE_SCORES_HEADER, rows)
}

fn sample(ctx: &mut Stage) -> Result<(), PipelineError> {
    let tasks = ctx.tasks()?;
    let patents = ctx.patents()?;
    let table = ctx.impact_table()?;
    let cfg = ctx.config;
    let drawn = stats::sample_pairs(&table, cfg.sample_size, cfg.seed)?;
    let task_text: HashMap<&str, &str> = tasks
        .records()
        .iter()
        .map(|t| (t.task_id.as_str(), t.task_text.as_str()))
        .collect();
    let index = patents.index();
    let rows = drawn
        .pairs
        .iter()
        .map(|(t, p)| {
            vec![
                t.clone(),
                p.clone(),
                task_text.get(t.as_str()).copied().unwrap_or_default().to_string(),
                index.get(p.as_str()).map(|p| p.title.clone()).unwrap_or_default(),
                String::new(),
                String::new(),
            ]
        })
        .collect();
    ctx.write(AGREEMENT_SAMPLE, &AGREEMENT_SAMPLE_HEADER, rows)?;

    if let Some(labels) = &cfg.labels {
        ctx.input("labels", labels)?;
        output::validate_csv(labels, &AGREEMENT_SAMPLE_HEADER)?;
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut unlabeled = 0;
        for row in output::read_csv(labels)? {
            match (stats::parse_label(&row["label_a"]), stats::parse_label(&row["label_b"])) {
                (Some(x), Some(y)) => {
                    a.push(x);
                    b.push(y);
                }
                _ => unlabeled += 1,
            }
        }
        if unlabeled > 0 {
            warn!("{unlabeled} sample rows lack a label from one annotator; ignored");
        }
        let agreement = stats::cohens_kappa(&a, &b)?;
        ctx.write(
            AGREEMENT,
            &AGREEMENT_HEADER,
            vec![vec![
                agreement.n.to_string(),
                fixed(agreement.observed, 4),
                fixed(agreement.expected, 4),
                fixed(agreement.kappa, 4),
            ]],
        )?;
    }
    Ok(())
}

/// One row of `occupation_scores.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationLine {
    pub occupation_id: String,
    pub title: String,
    pub impacted: u64,
    pub total: u64,
}

impl OccupationLine {
    /// Descending AII (compared exactly as fractions), then ascending id.
    pub fn rank_cmp(&self, other: &OccupationLine) -> Ordering {
        let lhs = u128::from(self.impacted) * u128::from(other.total);
        let rhs = u128::from(other.impacted) * u128::from(self.total);
        rhs.cmp(&lhs).then_with(|| self.occupation_id.cmp(&other.occupation_id))
    }

    /// Ascending AII, then ascending id.
    pub fn reverse_rank_cmp(&self, other: &OccupationLine) -> Ordering {
        let lhs = u128::from(self.impacted) * u128::from(other.total);
        let rhs = u128::from(other.impacted) * u128::from(self.total);
        lhs.cmp(&rhs).then_with(|| self.occupation_id.cmp(&other.occupation_id))
    }

    pub fn aii(&self) -> f64 {
        self.impacted as f64 / self.total as f64
    }
}

pub fn read_occupation_scores(path: &Path) -> Result<Vec<OccupationLine>, PipelineError> {
    output::validate_csv(path, &OCCUPATION_SCORES_HEADER)?;
    output::read_csv(path)?
        .into_iter()
        .map(|r| {
            let num = |k: &str| {
                r[k].parse::<u64>()
                    .map_err(|_| PipelineError::Format(format!("{}: bad {k} `{}`", path.display(), r[k])))
            };
            let (impacted, total) = (num("impacted")?, num("total")?);
            if total == 0 || impacted > total {
                return Err(PipelineError::Format(format!("{}: bad counts {impacted}/{total}", path.display())));
            }
            Ok(OccupationLine {
                occupation_id: r["occupation_id"].clone(),
                title: r["title"].clone(),
                impacted,
                total,
            })
        })
        .collect()
}

fn require_upstream(ctx: &mut Stage, names: &[&str]) -> Result<(), PipelineError> {
    for name in names {
        let path = ctx.config.out(name);
        if !path.exists() {
            return Err(PipelineError::MissingInput(format!(
                "upstream output {} not found; run the command that produces it first",
                path.display()
            )));
        }
        ctx.input(name, &path)?;
    }
    Ok(())
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn report(ctx: &mut Stage) -> Result<(), PipelineError> {
    require_upstream(
        ctx,
        &[OCCUPATION_SCORES, SECTOR_ASSIGNMENT, SECTOR_SCORES, REGION_SCORES, NEWLY_IMPACTED],
    )?;
    let cfg = ctx.config;
    let tasks = ctx.tasks()?;
    let patents = ctx.patents()?;
    let table = ctx.impact_table()?;
    let occupations = read_occupation_scores(&cfg.out(OCCUPATION_SCORES))?;

    output::validate_csv(&cfg.out(SECTOR_ASSIGNMENT), &SECTOR_ASSIGNMENT_HEADER)?;
    let sector_of: HashMap<String, String> = output::read_csv(&cfg.out(SECTOR_ASSIGNMENT))?
        .into_iter()
        .map(|r| (r["occupation_id"].clone(), r["sector_id"].clone()))
        .collect();

    // Best task-patent pair per occupation: highest alpha, smallest task id on ties.
    let task_text: HashMap<&str, &str> = tasks
        .records()
        .iter()
        .map(|t| (t.task_id.as_str(), t.task_text.as_str()))
        .collect();
    let mut best: HashMap<&str, &matcher::ImpactRow> = HashMap::new();
    for row in table.rows() {
        let slot = best.entry(row.occupation_id.as_str()).or_insert(row);
        if row.alpha > slot.alpha || (row.alpha == slot.alpha && row.task_id < slot.task_id) {
            *slot = row;
        }
    }
    let patent_index = patents.index();

    let mut top = occupations.clone();
    top.sort_by(OccupationLine::rank_cmp);
    let mut bottom = occupations.clone();
    bottom.sort_by(OccupationLine::reverse_rank_cmp);
    let n = cfg.report_rows.min(occupations.len());

    let mut md = String::new();
    let _ = writeln!(md, "# AI impact report\n");
    let _ = writeln!(
        md,
        "{} tasks in {} occupations matched against {} AI patents; {} tasks impacted.\n",
        tasks.len(),
        occupations.len(),
        patents.len(),
        table.impacted_count()
    );

    let mut occ_rows = Vec::new();
    for (group, list) in [("most", &top[..n]), ("least", &bottom[..n])] {
        let _ = writeln!(md, "## {} impacted occupations\n", if group == "most" { "Most" } else { "Least" });
        let _ = writeln!(md, "| Rank | Occupation | Sector | Task | Patent | Similarity | Impacted | Total | AII |");
        let _ = writeln!(md, "|---|---|---|---|---|---|---|---|---|");
        for (i, o) in list.iter().enumerate() {
            let sector = sector_of.get(&o.occupation_id).cloned().unwrap_or_default();
            let pair = best.get(o.occupation_id.as_str());
            let task = pair.and_then(|r| task_text.get(r.task_id.as_str())).copied().unwrap_or_default();
            let patent = pair
                .and_then(|r| patent_index.get(r.best_patent_id.as_str()))
                .map(|p| p.title.as_str())
                .unwrap_or_default();
            let similarity = pair.map(|r| fixed(r.alpha, SIMILARITY_PLACES)).unwrap_or_default();
            let aii = fixed(o.aii(), AII_PLACES);
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                i + 1,
                md_escape(&o.title),
                md_escape(&sector),
                md_escape(task),
                md_escape(patent),
                similarity,
                o.impacted,
                o.total,
                aii
            );
            occ_rows.push(vec![
                group.to_string(),
                (i + 1).to_string(),
                o.occupation_id.clone(),
                o.title.clone(),
                sector,
                task.to_string(),
                patent.to_string(),
                similarity,
                o.impacted.to_string(),
                o.total.to_string(),
                aii,
            ]);
        }
        md.push('\n');
    }

    output::validate_csv(&cfg.out(SECTOR_SCORES), &SECTOR_SCORES_HEADER)?;
    let mut sectors = output::read_csv(&cfg.out(SECTOR_SCORES))?;
    sort_by_score_desc(&mut sectors, "aii", "sector_id");
    let _ = writeln!(md, "## Sectors\n\n| Rank | Sector | Occupations | AII |\n|---|---|---|---|");
    let mut sector_rows = Vec::new();
    for (i, s) in sectors.iter().enumerate() {
        let _ = writeln!(md, "| {} | {} | {} | {} |", i + 1, md_escape(&s["sector_id"]), s["occupations"], s["aii"]);
        sector_rows.push(vec![(i + 1).to_string(), s["sector_id"].clone(), s["occupations"].clone(), s["aii"].clone()]);
    }
    md.push('\n');

    output::validate_csv(&cfg.out(REGION_SCORES), &REGION_SCORES_HEADER)?;
    let mut regions = output::read_csv(&cfg.out(REGION_SCORES))?;
    sort_by_score_desc(&mut regions, "aii", "region_id");
    let _ = writeln!(
        md,
        "## Regions\n\n| Rank | Region | AII | Diversity | Most prevalent sector |\n|---|---|---|---|---|"
    );
    let mut region_rows = Vec::new();
    for (i, r) in regions.iter().enumerate() {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} |",
            i + 1,
            md_escape(&r["region_id"]),
            r["aii"],
            r["entropy"],
            md_escape(&r["top_sector"])
        );
        region_rows.push(vec![
            (i + 1).to_string(),
            r["region_id"].clone(),
            r["aii"].clone(),
            r["entropy"].clone(),
            r["top_sector"].clone(),
        ]);
    }
    md.push('\n');

    output::validate_csv(&cfg.out(NEWLY_IMPACTED), &NEWLY_IMPACTED_HEADER)?;
    let newly = output::read_csv(&cfg.out(NEWLY_IMPACTED))?;
    let mode = newly.first().map(|r| r["mode"].clone()).unwrap_or_default();
    let _ = writeln!(md, "## Newly impacted tasks per year ({mode})\n\n| Year | New | Cumulative |\n|---|---|---|");
    for r in &newly {
        let _ = writeln!(md, "| {} | {} | {} |", r["year"], r["newly_impacted"], r["cumulative_impacted"]);
    }

    let report_path = cfg.out(REPORT);
    fs::write(&report_path, md).map_err(io_err(&report_path))?;
    ctx.emitted(report_path);
    ctx.write(TABLE_OCCUPATIONS, &TABLE_OCCUPATIONS_HEADER, occ_rows)?;
    ctx.write(TABLE_SECTORS, &TABLE_SECTORS_HEADER, sector_rows)?;
    ctx.write(TABLE_REGIONS, &TABLE_REGIONS_HEADER, region_rows)
}

fn sort_by_score_desc(rows: &mut [BTreeMap<String, String>], score: &str, id: &str) {
    let value = |r: &BTreeMap<String, String>| r[score].parse::<f64>().unwrap_or(f64::NEG_INFINITY);
    rows.sort_by(|a, b| value(b).total_cmp(&value(a)).then_with(|| a[id].cmp(&b[id])));
}
