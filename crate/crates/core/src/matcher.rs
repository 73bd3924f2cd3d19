//! Task-to-patent matching: per-task maximum similarity, the percentile
//! threshold, impact flags and first-impact years.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{PatentCorpus, TaskCorpus};
use crate::embed_store::{l2_norm, EmbeddingMatrix};
use crate::output::{self, fixed, OutputError, SIMILARITY_PLACES};

#[derive(Debug, Error, PartialEq)]
pub enum MatchError {
    #[error("vectors have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("no patents to match against")]
    EmptyPatentSet,
    #[error("no values to threshold")]
    EmptyInput,
    #[error("percentile {0} is outside (0, 100)")]
    BadPercentile(f64),
    #[error("no embedding for task `{0}`")]
    MissingEmbedding(String),
}

/// Cosine similarity, accumulated in `f64`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, MatchError> {
    if u.len() != v.len() {
        return Err(MatchError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut uv, mut uu, mut vv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (f64::from(a), f64::from(b));
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(MatchError::ZeroVector);
    }
    Ok(uv / (uu * vv).sqrt())
}

#[inline]
fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum()
}

fn check_query(task_vec: &[f32], patents: &EmbeddingMatrix) -> Result<f64, MatchError> {
    if patents.is_empty() {
        return Err(MatchError::EmptyPatentSet);
    }
    if task_vec.len() != patents.dim() {
        return Err(MatchError::DimensionMismatch {
            left: task_vec.len(),
            right: patents.dim(),
        });
    }
    let norm = l2_norm(task_vec);
    if norm == 0.0 {
        return Err(MatchError::ZeroVector);
    }
    Ok(norm)
}

/// Running maximum with the smallest-id tie-break.
#[derive(Debug, Clone, Copy)]
struct Best<'a> {
    id: &'a str,
    score: f64,
}

impl<'a> Best<'a> {
    fn offer(slot: &mut Option<Best<'a>>, id: &'a str, score: f64) {
        match slot {
            Some(b) if score < b.score || (score == b.score && id >= b.id) => {}
            _ => *slot = Some(Best { id, score }),
        }
    }
}

/// The patent with the highest cosine to `task_vec` and that cosine.
/// Ties go to the lexicographically smallest patent id.
///
/// Patent rows are unit length, so the cosine is the dot product over the
/// task norm.
pub fn best_match<'a>(task_vec: &[f32], patents: &'a EmbeddingMatrix) -> Result<(&'a str, f64), MatchError> {
    let norm = check_query(task_vec, patents)?;
    let mut best = None;
    for (id, row) in patents.rows() {
        Best::offer(&mut best, id, dot(task_vec, row) / norm);
    }
    let b = best.expect("nonempty patent set");
    Ok((b.id, b.score))
}

/// Mean cosine over all patents. Diagnostic only: used to contrast the
/// max and mean aggregations.
pub fn mean_similarity(task_vec: &[f32], patents: &EmbeddingMatrix) -> Result<f64, MatchError> {
    let norm = check_query(task_vec, patents)?;
    let total: f64 = patents.rows().map(|(_, row)| dot(task_vec, row) / norm).sum();
    Ok(total / patents.len() as f64)
}

/// A percentile of the alpha population and the value it resolved to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub percentile: f64,
    pub value: f64,
}

/// Nearest-rank percentile: the ascending order statistic at 1-based rank
/// `ceil(percentile / 100 * N)`.
pub fn impact_threshold(alphas: &[f64], percentile: f64) -> Result<Threshold, MatchError> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(MatchError::BadPercentile(percentile));
    }
    if alphas.is_empty() {
        return Err(MatchError::EmptyInput);
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((percentile * n as f64 / 100.0).ceil() as usize).clamp(1, n);
    Ok(Threshold {
        percentile,
        value: sorted[rank - 1],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactRow {
    pub task_id: String,
    pub occupation_id: String,
    pub alpha: f64,
    pub best_patent_id: String,
    pub impacted: bool,
    pub first_impact_year: Option<i32>,
}

/// Per-task match results, in task corpus order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImpactTable {
    rows: Vec<ImpactRow>,
}

pub const IMPACT_TABLE_HEADER: [&str; 6] = [
    "task_id",
    "occupation_id",
    "alpha",
    "best_patent_id",
    "impacted",
    "first_impact_year",
];

impl ImpactTable {
    pub fn new(rows: Vec<ImpactRow>) -> ImpactTable {
        ImpactTable { rows }
    }

    pub fn rows(&self) -> &[ImpactRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.alpha).collect()
    }

    pub fn impacted_count(&self) -> usize {
        self.rows.iter().filter(|r| r.impacted).count()
    }

    pub fn index(&self) -> HashMap<&str, &ImpactRow> {
        self.rows.iter().map(|r| (r.task_id.as_str(), r)).collect()
    }

    pub fn get(&self, task_id: &str) -> Option<&ImpactRow> {
        self.rows.iter().find(|r| r.task_id == task_id)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), OutputError> {
        output::write_csv(
            path,
            &IMPACT_TABLE_HEADER,
            self.rows.iter().map(|r| {
                vec![
                    r.task_id.clone(),
                    r.occupation_id.clone(),
                    fixed(r.alpha, SIMILARITY_PLACES),
                    r.best_patent_id.clone(),
                    u8::from(r.impacted).to_string(),
                    r.first_impact_year.map(|y| y.to_string()).unwrap_or_default(),
                ]
            }),
        )
    }

    /// Read back an emitted `impact_table.csv`. Alphas carry the file's precision.
    pub fn read_csv(path: &Path) -> Result<ImpactTable, String> {
        let rows = output::read_csv(path).map_err(|e| e.to_string())?;
        let mut out = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let field = |k: &str| r.get(k).cloned().ok_or_else(|| format!("{}: missing column {k}", path.display()));
            let bad = |k: &str| format!("{}: record {}: bad {k}", path.display(), i + 1);
            let year = field("first_impact_year")?;
            out.push(ImpactRow {
                task_id: field("task_id")?,
                occupation_id: field("occupation_id")?,
                alpha: field("alpha")?.parse().map_err(|_| bad("alpha"))?,
                best_patent_id: field("best_patent_id")?,
                impacted: match field("impacted")?.as_str() {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad("impacted")),
                },
                first_impact_year: if year.is_empty() {
                    None
                } else {
                    Some(year.parse().map_err(|_| bad("first_impact_year"))?)
                },
            });
        }
        Ok(ImpactTable { rows: out })
    }
}

/// Set `impacted = alpha > threshold` (strict) on every row.
pub fn flag_impacted(mut table: ImpactTable, threshold: &Threshold) -> ImpactTable {
    for row in &mut table.rows {
        row.impacted = row.alpha > threshold.value;
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Patent row indices grouped by grant year, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatentTimeline {
    groups: Vec<(i32, Vec<usize>)>,
}

impl PatentTimeline {
    /// `years[i]` is the grant year of patent row `i`.
    pub fn from_years(years: &[i32]) -> PatentTimeline {
        let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
        for (i, &y) in years.iter().enumerate() {
            by_year.entry(y).or_default().push(i);
        }
        PatentTimeline {
            groups: by_year.into_iter().collect(),
        }
    }

    /// Timeline for the rows of `patents`, looking grant years up in `corpus`.
    pub fn for_matrix(patents: &EmbeddingMatrix, corpus: &PatentCorpus) -> Result<PatentTimeline, String> {
        let index = corpus.index();
        let years = patents
            .ids()
            .iter()
            .map(|id| index.get(id.as_str()).map(|p| p.grant_year).ok_or_else(|| id.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PatentTimeline::from_years(&years))
    }

    pub fn years(&self) -> Vec<i32> {
        self.groups.iter().map(|(y, _)| *y).collect()
    }

    pub fn groups(&self) -> &[(i32, Vec<usize>)] {
        &self.groups
    }
}

/// The year a task first crossed the threshold and the patent that did it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstImpact {
    pub year: i32,
    pub patent_id: String,
}

/// Smallest year whose cumulative patent set (all grants up to and including
/// that year) lifts the task's maximum similarity above `threshold`.
pub fn first_impact_year(
    task_vec: &[f32],
    patents: &EmbeddingMatrix,
    timeline: &PatentTimeline,
    threshold: &Threshold,
) -> Result<Option<FirstImpact>, MatchError> {
    let norm = check_query(task_vec, patents)?;
    let ids = patents.ids();
    let mut best = None;
    for (year, rows) in &timeline.groups {
        for &i in rows {
            Best::offer(&mut best, &ids[i], dot(task_vec, patents.row(i)) / norm);
        }
        if let Some(b) = best {
            if b.score > threshold.value {
                return Ok(Some(FirstImpact {
                    year: *year,
                    patent_id: b.id.to_string(),
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalMode {
    /// Threshold fixed from the full window, patents accumulated year by year.
    #[default]
    CumulativeFixed,
    /// Each year on its own: that year's patents, that year's threshold.
    PerYear,
}

impl TemporalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TemporalMode::CumulativeFixed => "cumulative_fixed",
            TemporalMode::PerYear => "per_year",
        }
    }
}

impl fmt::Display for TemporalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemporalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cumulative_fixed" | "cumulative-fixed" => Ok(TemporalMode::CumulativeFixed),
            "per_year" | "per-year" => Ok(TemporalMode::PerYear),
            _ => Err(format!("unknown temporal mode `{s}`")),
        }
    }
}

fn map_tasks<T, F>(tasks: &EmbeddingMatrix, exec: Execution, f: F) -> Result<Vec<T>, MatchError>
where
    T: Send,
    F: Fn(&[f32]) -> Result<T, MatchError> + Sync,
{
    match exec {
        Execution::Serial => (0..tasks.len()).map(|i| f(tasks.row(i))).collect(),
        Execution::Parallel => (0..tasks.len()).into_par_iter().map(|i| f(tasks.row(i))).collect(),
    }
}

/// Task embeddings in corpus order. Fails naming the first task without a row.
pub fn align_tasks(tasks: &TaskCorpus, embeddings: &EmbeddingMatrix) -> Result<EmbeddingMatrix, MatchError> {
    let ids: Vec<&str> = tasks.records().iter().map(|t| t.task_id.as_str()).collect();
    embeddings.select(&ids).map_err(MatchError::MissingEmbedding)
}

/// First-impact results under `mode`, one per task row.
pub fn first_impacts(
    task_vecs: &EmbeddingMatrix,
    patents: &EmbeddingMatrix,
    timeline: &PatentTimeline,
    threshold: &Threshold,
    mode: TemporalMode,
    exec: Execution,
) -> Result<Vec<Option<FirstImpact>>, MatchError> {
    match mode {
        TemporalMode::CumulativeFixed => map_tasks(task_vecs, exec, |t| first_impact_year(t, patents, timeline, threshold)),
        TemporalMode::PerYear => {
            let mut result: Vec<Option<FirstImpact>> = vec![None; task_vecs.len()];
            for (year, rows) in &timeline.groups {
                let ids: Vec<&str> = rows.iter().map(|&i| patents.ids()[i].as_str()).collect();
                let year_set = patents.select(&ids).expect("rows come from this matrix");
                let best = map_tasks(task_vecs, exec, |t| best_match(t, &year_set).map(|(id, a)| (id.to_string(), a)))?;
                let alphas: Vec<f64> = best.iter().map(|b| b.1).collect();
                let year_threshold = impact_threshold(&alphas, threshold.percentile)?;
                for (slot, (id, alpha)) in result.iter_mut().zip(best) {
                    if slot.is_none() && alpha > year_threshold.value {
                        *slot = Some(FirstImpact {
                            year: *year,
                            patent_id: id,
                        });
                    }
                }
            }
            Ok(result)
        }
    }
}

/// Everything the match stage produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub table: ImpactTable,
    pub threshold: Threshold,
    /// Mean similarity per task, when requested.
    pub mean_alphas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub percentile: f64,
    pub execution: Execution,
    pub with_mean: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            percentile: 90.0,
            execution: Execution::Parallel,
            with_mean: false,
        }
    }
}

/// Match every task, threshold the alpha population, flag tasks and, when a
/// timeline is given, fill first-impact years in cumulative fixed-threshold mode.
pub fn match_tasks(
    tasks: &TaskCorpus,
    task_vecs: &EmbeddingMatrix,
    patents: &EmbeddingMatrix,
    timeline: Option<&PatentTimeline>,
    options: &MatchOptions,
) -> Result<MatchOutcome, MatchError> {
    if !(options.percentile > 0.0 && options.percentile < 100.0) {
        return Err(MatchError::BadPercentile(options.percentile));
    }
    let task_vecs = align_tasks(tasks, task_vecs)?;
    let best = map_tasks(&task_vecs, options.execution, |t| {
        best_match(t, patents).map(|(id, a)| (id.to_string(), a))
    })?;
    let alphas: Vec<f64> = best.iter().map(|b| b.1).collect();
    let threshold = impact_threshold(&alphas, options.percentile)?;

    let rows = tasks
        .records()
        .iter()
        .zip(best)
        .map(|(t, (best_patent_id, alpha))| ImpactRow {
            task_id: t.task_id.clone(),
            occupation_id: t.occupation_id.clone(),
            alpha,
            best_patent_id,
            impacted: false,
            first_impact_year: None,
        })
        .collect();
    let mut table = flag_impacted(ImpactTable::new(rows), &threshold);

    if let Some(timeline) = timeline {
        let firsts = first_impacts(
            &task_vecs,
            patents,
            timeline,
            &threshold,
            TemporalMode::CumulativeFixed,
            options.execution,
        )?;
        for (row, first) in table.rows.iter_mut().zip(firsts) {
            row.first_impact_year = first.map(|f| f.year);
        }
    }

    let mean_alphas = if options.with_mean {
        Some(map_tasks(&task_vecs, options.execution, |t| mean_similarity(t, patents))?)
    } else {
        None
    };

    Ok(MatchOutcome {
        table,
        threshold,
        mean_alphas,
    })
}

/// Tasks first impacted in each year, and the running total, for `years`.
pub fn newly_impacted_per_year(firsts: &[Option<i32>], years: &[i32]) -> Vec<(i32, usize, usize)> {
    let mut cumulative = 0;
    years
        .iter()
        .map(|&y| {
            let new = firsts.iter().filter(|f| **f == Some(y)).count();
            cumulative += new;
            (y, new, cumulative)
        })
        .collect()
}
