use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aii_core::corpus::{FormatSpec, PatentColumns, TaskColumns, YearRange};
use aii_core::embed_store::EncoderConfig;
use aii_core::matcher::{Execution, TemporalMode};
use aii_core::metrics::RateOfChange;
use aii_core::pipeline::{self, Aggregation, Command, EncoderKind, PipelineError, RunConfig};
use aii_core::table::TableFormat;

/// Score occupations by how closely their tasks match AI patents.
#[derive(Debug, Parser)]
#[command(name = "aii", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Clean the task file and filter AI patents by keyword and year.
    Ingest,
    /// Encode cleaned tasks and patents with the built-in hashing encoder.
    EmbedRef,
    /// Find each task's best patent and flag impacted tasks.
    Match,
    /// Occupation, sector and education-level scores.
    Score,
    /// First-impact years, yearly sector scores and top terms.
    Temporal,
    /// Employment-weighted regional scores and economic diversity.
    Region,
    /// Correlate regional scores with indicator files.
    Correlate,
    /// Verb-noun word-matching baseline.
    Baseline,
    /// Draw task-patent pairs for annotation, and score agreement when labels exist.
    Sample,
    /// Markdown report with ranked tables.
    Report,
    /// Every command in order.
    All,
}

#[derive(Debug, Args)]
struct Opts {
    /// Raw task file (tab-separated unless it ends in .csv).
    #[arg(long, global = true)]
    tasks: Option<PathBuf>,
    /// Raw patent file (tab-separated unless it ends in .csv).
    #[arg(long, global = true)]
    patents: Option<PathBuf>,
    /// Keyword list, one phrase per line. Defaults to the bundled AI list.
    #[arg(long, global = true)]
    keywords: Option<PathBuf>,
    /// Occupation metadata: occupation_id, sector_id, share, education_level, employment.
    #[arg(long, global = true)]
    metadata: Option<PathBuf>,
    /// Regional employment: region_id, sector_id, employment.
    #[arg(long, global = true)]
    region_employment: Option<PathBuf>,
    /// Regional Gini indicator: region id and value.
    #[arg(long, global = true)]
    gini: Option<PathBuf>,
    /// Regional creativity indicator: region id and value.
    #[arg(long, global = true)]
    creativity: Option<PathBuf>,
    /// Task embeddings for --encoder external-file.
    #[arg(long, global = true)]
    task_embeddings: Option<PathBuf>,
    /// Patent embeddings for --encoder external-file.
    #[arg(long, global = true)]
    patent_embeddings: Option<PathBuf>,
    /// Directory with verbs.txt, nouns.txt and lemmas.tsv. Defaults to the bundled lexicons.
    #[arg(long, global = true)]
    lexicon_dir: Option<PathBuf>,
    /// Stopword list for top terms. Defaults to the bundled list.
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    /// Filled-in agreement sample with label_a and label_b.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Percentile of the alpha distribution used as the impact threshold.
    #[arg(long, global = true, default_value_t = 90.0)]
    percentile: f64,
    /// First grant year kept.
    #[arg(long, global = true, default_value_t = 2015)]
    year_start: i32,
    /// Last grant year kept.
    #[arg(long, global = true, default_value_t = 2020)]
    year_end: i32,
    #[arg(long, global = true, value_enum, default_value_t = AggregationArg::Max)]
    aggregation: AggregationArg,
    #[arg(long, global = true, value_enum, default_value_t = TemporalArg::CumulativeFixed)]
    temporal_mode: TemporalArg,
    #[arg(long, global = true, value_enum, default_value_t = RateArg::OlsSlope)]
    rate_of_change: RateArg,
    #[arg(long, global = true, value_enum, default_value_t = EncoderArg::Reference)]
    encoder: EncoderArg,
    /// Reference encoder dimension.
    #[arg(long, global = true, default_value_t = 256)]
    dim: usize,
    /// Reference encoder: unigrams only.
    #[arg(long, global = true)]
    no_bigrams: bool,
    /// Reference encoder hash seed.
    #[arg(long, global = true, default_value_t = 0)]
    hash_seed: u64,
    /// Match tasks on one thread.
    #[arg(long, global = true)]
    serial: bool,
    /// Seed for the agreement sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    sample_size: usize,
    /// Terms kept per year and sector.
    #[arg(long, global = true, default_value_t = 10)]
    top_terms: usize,
    /// Occupations listed in each report table.
    #[arg(long, global = true, default_value_t = 10)]
    report_rows: usize,
    #[arg(long, global = true, default_value_t = 2.0)]
    zscore_cutoff: f64,
    /// Task file column names, as task_id,occupation_id,occupation_title,task_text.
    #[arg(long, global = true, value_parser = four_names)]
    task_columns: Option<ColumnNames>,
    /// Patent file column names, as patent_id,title,abstract,grant_year.
    #[arg(long, global = true, value_parser = four_names)]
    patent_columns: Option<ColumnNames>,
}

#[derive(Debug, Clone)]
struct ColumnNames([String; 4]);

fn four_names(s: &str) -> Result<ColumnNames, String> {
    let names: Vec<String> = s.split(',').map(|n| n.trim().to_string()).collect();
    match <[String; 4]>::try_from(names) {
        Ok(n) if n.iter().all(|n| !n.is_empty()) => Ok(ColumnNames(n)),
        _ => Err(format!("expected four comma-separated column names, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Max,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TemporalArg {
    CumulativeFixed,
    PerYear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RateArg {
    OlsSlope,
    EndpointDifference,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncoderArg {
    Reference,
    ExternalFile,
}

impl Opts {
    fn into_config(self) -> RunConfig {
        let table = |p: &Option<PathBuf>| p.as_deref().map(TableFormat::for_path).unwrap_or_default();
        let task_columns = match self.task_columns {
            Some(ColumnNames([task_id, occupation_id, occupation_title, task_text])) => TaskColumns {
                task_id,
                occupation_id,
                occupation_title,
                task_text,
            },
            None => TaskColumns::default(),
        };
        let patent_columns = match self.patent_columns {
            Some(ColumnNames([patent_id, title, abstract_text, grant_year])) => PatentColumns {
                patent_id,
                title,
                abstract_text,
                grant_year,
            },
            None => PatentColumns::default(),
        };
        RunConfig {
            task_format: FormatSpec {
                table: table(&self.tasks),
                columns: task_columns,
            },
            patent_format: FormatSpec {
                table: table(&self.patents),
                columns: patent_columns,
            },
            tasks: self.tasks,
            patents: self.patents,
            keywords: self.keywords,
            metadata: self.metadata,
            region_employment: self.region_employment,
            gini: self.gini,
            creativity: self.creativity,
            task_embeddings: self.task_embeddings,
            patent_embeddings: self.patent_embeddings,
            lexicon_dir: self.lexicon_dir,
            stopwords: self.stopwords,
            labels: self.labels,
            out_dir: self.out,
            percentile: self.percentile,
            years: YearRange {
                start: self.year_start,
                end: self.year_end,
            },
            aggregation: match self.aggregation {
                AggregationArg::Max => Aggregation::Max,
                AggregationArg::Mean => Aggregation::Mean,
            },
            temporal_mode: match self.temporal_mode {
                TemporalArg::CumulativeFixed => TemporalMode::CumulativeFixed,
                TemporalArg::PerYear => TemporalMode::PerYear,
            },
            rate_of_change: match self.rate_of_change {
                RateArg::OlsSlope => RateOfChange::OlsSlope,
                RateArg::EndpointDifference => RateOfChange::EndpointDifference,
            },
            encoder: match self.encoder {
                EncoderArg::Reference => EncoderKind::Reference,
                EncoderArg::ExternalFile => EncoderKind::ExternalFile,
            },
            encoder_config: EncoderConfig {
                dim: self.dim,
                use_bigrams: !self.no_bigrams,
                hash_seed: self.hash_seed,
            },
            execution: if self.serial { Execution::Serial } else { Execution::Parallel },
            seed: self.seed,
            sample_size: self.sample_size,
            top_terms: self.top_terms,
            report_rows: self.report_rows,
            zscore_cutoff: self.zscore_cutoff,
        }
    }
}

fn execute(command: Cmd, config: &RunConfig) -> Result<(), PipelineError> {
    let single = match command {
        Cmd::Ingest => Command::Ingest,
        Cmd::EmbedRef => Command::EmbedRef,
        Cmd::Match => Command::Match,
        Cmd::Score => Command::Score,
        Cmd::Temporal => Command::Temporal,
        Cmd::Region => Command::Region,
        Cmd::Correlate => Command::Correlate,
        Cmd::Baseline => Command::Baseline,
        Cmd::Sample => Command::Sample,
        Cmd::Report => Command::Report,
        Cmd::All => {
            for m in pipeline::run_all(config)? {
                log::info!("{} done: {} outputs", m.command, m.outputs.len());
            }
            return Ok(());
        }
    };
    let m = pipeline::run(single, config)?;
    log::info!("{} done: {} outputs", m.command, m.outputs.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AII_LOG", "info")).init();
    let cli = Cli::parse();
    let config = cli.opts.into_config();
    match execute(cli.command, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
