//! Roll task impact up to occupations, sectors, regions and education bins,
//! plus regional economic diversity and the temporal sector series.
//!
//! Occupation scores are ratios of task counts and employment weights are
//! head counts, so every AII aggregate here is a rational number. They are
//! carried exactly as [`BigRational`] and rounded to `f64` once, at the end.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use log::warn;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::corpus::{EducationLevel, OccupationMeta, PatentCorpus, TaskCorpus};
use crate::matcher::ImpactTable;
use crate::table::{read_table, TableError, TableFormat};
use crate::text::tokenize;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("task `{0}` has no impact row")]
    MissingFlag(String),
    #[error("region `{0}` has no employment")]
    NoEmployment(String),
    #[error("no occupation is assigned to any sector")]
    EmptyAssignment,
}

/// Exact rational to the nearest `f64`.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationScore {
    pub occupation_id: String,
    pub title: String,
    pub impacted_count: usize,
    pub total_tasks: usize,
    /// `impacted_count / total_tasks`, correctly rounded.
    pub aii: f64,
}

impl OccupationScore {
    pub fn new(occupation_id: impl Into<String>, title: impl Into<String>, impacted: usize, total: usize) -> Self {
        assert!(total > 0 && impacted <= total, "invalid task counts {impacted}/{total}");
        OccupationScore {
            occupation_id: occupation_id.into(),
            title: title.into(),
            impacted_count: impacted,
            total_tasks: total,
            aii: impacted as f64 / total as f64,
        }
    }

    pub fn exact(&self) -> BigRational {
        ratio(self.impacted_count as u64, self.total_tasks as u64)
    }
}

/// Fraction of each occupation's tasks that are impacted, one score per
/// occupation, ordered by occupation id.
pub fn occupation_aii(flags: &ImpactTable, tasks: &TaskCorpus) -> Result<Vec<OccupationScore>, MetricsError> {
    let index = flags.index();
    let titles = tasks.occupation_titles();
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for task in tasks.records() {
        let row = index
            .get(task.task_id.as_str())
            .ok_or_else(|| MetricsError::MissingFlag(task.task_id.clone()))?;
        let c = counts.entry(task.occupation_id.as_str()).or_insert((0, 0));
        c.0 += usize::from(row.impacted);
        c.1 += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(occ, (impacted, total))| OccupationScore::new(occ, titles[occ], impacted, total))
        .collect())
}

/// Occupation to sector, for occupations with a strict majority sector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SectorAssignment {
    pub assigned: BTreeMap<String, String>,
    /// Occupations with shares but no sector above one half.
    pub unassigned: Vec<String>,
    /// Occupations with no sector shares at all.
    pub missing_shares: Vec<String>,
}

impl SectorAssignment {
    pub fn sector_of(&self, occupation_id: &str) -> Option<&str> {
        self.assigned.get(occupation_id).map(String::as_str)
    }
}

/// An occupation belongs to a sector when more than half its workers are
/// employed there.
pub fn assign_sectors(meta: &[OccupationMeta]) -> SectorAssignment {
    let mut out = SectorAssignment::default();
    for m in meta {
        if m.sector_shares.is_empty() {
            out.missing_shares.push(m.occupation_id.clone());
            continue;
        }
        match m.sector_shares.iter().find(|(_, &share)| share > 0.5) {
            Some((sector, _)) => {
                out.assigned.insert(m.occupation_id.clone(), sector.clone());
            }
            None => out.unassigned.push(m.occupation_id.clone()),
        }
    }
    if !out.unassigned.is_empty() || !out.missing_shares.is_empty() {
        warn!(
            "{} occupations have no majority sector and {} have no sector data; both are left out of sector and region scores",
            out.unassigned.len(),
            out.missing_shares.len()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorScore {
    pub sector_id: String,
    pub member_occupations: Vec<String>,
    pub exact: BigRational,
    pub aii: f64,
}

/// Unweighted mean occupation AII per sector, ordered by sector id.
pub fn sector_aii(scores: &[OccupationScore], assignment: &SectorAssignment) -> Result<Vec<SectorScore>, MetricsError> {
    if assignment.assigned.is_empty() {
        return Err(MetricsError::EmptyAssignment);
    }
    let by_occ: HashMap<&str, &OccupationScore> = scores.iter().map(|s| (s.occupation_id.as_str(), s)).collect();
    let mut members: BTreeMap<&str, Vec<&OccupationScore>> = BTreeMap::new();
    for sector in assignment.assigned.values() {
        members.entry(sector.as_str()).or_default();
    }
    for (occ, sector) in &assignment.assigned {
        if let Some(score) = by_occ.get(occ.as_str()) {
            members.get_mut(sector.as_str()).expect("seeded above").push(score);
        }
    }

    let mut out = Vec::new();
    for (sector, occs) in members {
        if occs.is_empty() {
            warn!("sector {sector} has no scored occupations; skipped");
            continue;
        }
        let sum = occs.iter().fold(BigRational::zero(), |acc, s| acc + s.exact());
        let mean = sum / BigRational::from_integer(BigInt::from(occs.len()));
        out.push(SectorScore {
            sector_id: sector.to_string(),
            member_occupations: occs.iter().map(|s| s.occupation_id.clone()).collect(),
            aii: to_f64(&mean),
            exact: mean,
        });
    }
    Ok(out)
}

/// Head counts per region and sector.
pub type RegionEmployment = BTreeMap<String, BTreeMap<String, u64>>;

/// Load a `region_id, sector_id, employment` table. Repeated pairs add up.
pub fn load_region_employment(path: &Path, format: TableFormat) -> Result<RegionEmployment, TableError> {
    let table = read_table(path, format, &["region_id", "sector_id", "employment"])?;
    let mut out = RegionEmployment::new();
    for row in &table.rows {
        let region = table.field(row, 0).trim();
        let sector = table.field(row, 1).trim();
        let raw = table.field(row, 2).trim();
        if region.is_empty() || sector.is_empty() {
            return Err(table.invalid(row, "empty region_id or sector_id"));
        }
        let count: u64 = raw
            .parse()
            .map_err(|_| table.invalid(row, format!("employment `{raw}` is not a count")))?;
        *out.entry(region.to_string()).or_default().entry(sector.to_string()).or_insert(0) += count;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionScore {
    pub region_id: String,
    pub exact: BigRational,
    pub aii: f64,
    /// Positive employment in sectors that carry a score.
    pub sector_weights: BTreeMap<String, u64>,
}

/// Employment-weighted sector AII for one region, or `None` when no scored
/// sector has positive employment there.
pub fn region_score(
    region_id: &str,
    sectors: &HashMap<&str, &SectorScore>,
    weights: &BTreeMap<String, u64>,
) -> Option<RegionScore> {
    let used: BTreeMap<String, u64> = weights
        .iter()
        .filter(|(s, &w)| w > 0 && sectors.contains_key(s.as_str()))
        .map(|(s, &w)| (s.clone(), w))
        .collect();
    let total: u64 = used.values().sum();
    if total == 0 {
        return None;
    }
    let weighted = used.iter().fold(BigRational::zero(), |acc, (s, &w)| {
        acc + &sectors[s.as_str()].exact * BigRational::from_integer(BigInt::from(w))
    });
    let value = weighted / BigRational::from_integer(BigInt::from(total));
    Some(RegionScore {
        region_id: region_id.to_string(),
        aii: to_f64(&value),
        exact: value,
        sector_weights: used,
    })
}

/// Regional AII for every region with positive scored employment. Regions
/// without any are left out with a warning.
pub fn region_aii(sector_scores: &[SectorScore], employment: &RegionEmployment) -> Vec<RegionScore> {
    let sectors: HashMap<&str, &SectorScore> = sector_scores.iter().map(|s| (s.sector_id.as_str(), s)).collect();
    let mut out = Vec::new();
    for (region, weights) in employment {
        match region_score(region, &sectors, weights) {
            Some(score) => out.push(score),
            None => warn!("region {region} has no employment in scored sectors; excluded"),
        }
    }
    out
}

/// Shannon entropy (nats) of a workforce distribution. Zero counts are skipped.
pub fn entropy(weights: &[u64]) -> Option<f64> {
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return None;
    }
    let n = total as f64;
    Some(
        -weights
            .iter()
            .filter(|&&w| w > 0)
            .map(|&w| {
                let p = w as f64 / n;
                p * p.ln()
            })
            .sum::<f64>(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityScore {
    pub region_id: String,
    pub entropy: f64,
}

pub fn region_diversity(region_id: &str, weights: &BTreeMap<String, u64>) -> Result<DiversityScore, MetricsError> {
    let counts: Vec<u64> = weights.values().copied().collect();
    let h = entropy(&counts).ok_or_else(|| MetricsError::NoEmployment(region_id.to_string()))?;
    Ok(DiversityScore {
        region_id: region_id.to_string(),
        entropy: h,
    })
}

/// Entropy of the sector mix for every region with employment.
pub fn economic_diversity(employment: &RegionEmployment) -> Vec<DiversityScore> {
    employment
        .iter()
        .filter_map(|(region, weights)| match region_diversity(region, weights) {
            Ok(d) => Some(d),
            Err(e) => {
                warn!("{e}; excluded from diversity");
                None
            }
        })
        .collect()
}

/// Sector with the most employees in a region; ties go to the smaller id.
pub fn most_prevalent_sector(weights: &BTreeMap<String, u64>) -> Option<&str> {
    weights
        .iter()
        .filter(|(_, &w)| w > 0)
        .fold(None, |best: Option<(&str, u64)>, (s, &w)| match best {
            Some((_, bw)) if bw >= w => best,
            _ => Some((s.as_str(), w)),
        })
        .map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EducationBin {
    pub level: EducationLevel,
    pub occupations: usize,
    pub employment: u64,
    pub exact: BigRational,
    pub aii: f64,
}

/// Employment-weighted mean occupation AII per education level.
pub fn education_bin_aii(scores: &[OccupationScore], meta: &[OccupationMeta]) -> BTreeMap<EducationLevel, EducationBin> {
    let by_occ: HashMap<&str, &OccupationScore> = scores.iter().map(|s| (s.occupation_id.as_str(), s)).collect();
    let mut acc: BTreeMap<EducationLevel, (usize, u64, BigRational)> = BTreeMap::new();
    let mut excluded = 0usize;
    for m in meta {
        let (Some(level), Some(emp), Some(score)) = (m.education_level, m.employment, by_occ.get(m.occupation_id.as_str()))
        else {
            excluded += 1;
            continue;
        };
        let e = acc.entry(level).or_insert((0, 0, BigRational::zero()));
        e.0 += 1;
        e.1 += emp;
        e.2 += score.exact() * BigRational::from_integer(BigInt::from(emp));
    }
    if excluded > 0 {
        warn!("{excluded} occupations lack education level, employment or a score; left out of education bins");
    }
    let mut out = BTreeMap::new();
    for (level, (occupations, employment, weighted)) in acc {
        if employment == 0 {
            warn!("education bin {level} has no employment; skipped");
            continue;
        }
        let value = weighted / BigRational::from_integer(BigInt::from(employment));
        out.insert(
            level,
            EducationBin {
                level,
                occupations,
                employment,
                aii: to_f64(&value),
                exact: value,
            },
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateOfChange {
    /// Least-squares slope over the year index.
    #[default]
    OlsSlope,
    /// Last value minus first value.
    EndpointDifference,
}

impl RateOfChange {
    pub fn as_str(self) -> &'static str {
        match self {
            RateOfChange::OlsSlope => "ols_slope",
            RateOfChange::EndpointDifference => "endpoint_difference",
        }
    }
}

/// Least-squares slope of `values` against `0, 1, 2, ...`. Zero for fewer than two points.
pub fn ols_slope(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean_x = (n - 1) as f64 / 2.0;
    let mean_y = values.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in values.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

pub fn rate_of_change(values: &[f64], method: RateOfChange) -> f64 {
    match method {
        RateOfChange::OlsSlope => ols_slope(values),
        RateOfChange::EndpointDifference => match (values.first(), values.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorSeries {
    pub sector_id: String,
    /// `(year, sector AII)` with tasks counted once their first-impact year has passed.
    pub values: Vec<(i32, f64)>,
    pub rate_of_change: f64,
}

/// Sector AII year by year from first-impact years.
pub fn sector_yearly_series(
    first_impact_years: &HashMap<String, Option<i32>>,
    tasks: &TaskCorpus,
    assignment: &SectorAssignment,
    years: &[i32],
    method: RateOfChange,
) -> Vec<SectorSeries> {
    let mut per_sector: BTreeMap<&str, BTreeMap<&str, Vec<Option<i32>>>> = BTreeMap::new();
    for task in tasks.records() {
        let Some(sector) = assignment.sector_of(&task.occupation_id) else {
            continue;
        };
        let first = first_impact_years.get(&task.task_id).copied().flatten();
        per_sector
            .entry(sector)
            .or_default()
            .entry(task.occupation_id.as_str())
            .or_default()
            .push(first);
    }

    per_sector
        .into_iter()
        .map(|(sector, occupations)| {
            let values: Vec<(i32, f64)> = years
                .iter()
                .map(|&y| {
                    let sum = occupations.values().fold(BigRational::zero(), |acc, firsts| {
                        let hit = firsts.iter().filter(|f| f.is_some_and(|fy| fy <= y)).count();
                        acc + ratio(hit as u64, firsts.len() as u64)
                    });
                    let mean = sum / BigRational::from_integer(BigInt::from(occupations.len()));
                    (y, to_f64(&mean))
                })
                .collect();
            let series: Vec<f64> = values.iter().map(|v| v.1).collect();
            SectorSeries {
                sector_id: sector.to_string(),
                rate_of_change: rate_of_change(&series, method),
                values,
            }
        })
        .collect()
}

/// Load a stopword list (one word per line, `#` comments).
pub fn parse_stopwords(source: &str) -> HashSet<String> {
    crate::text::parse_word_list(source).into_iter().collect()
}

pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(include_str!("../data/stopwords.txt"))
}

/// Most frequent abstract terms over a group of patents. Each distinct
/// patent id counts once; unknown ids are ignored. Ties are broken
/// lexicographically.
pub fn top_terms<S: AsRef<str>>(
    patent_ids: &[S],
    patents: &PatentCorpus,
    k: usize,
    stopwords: &HashSet<String>,
) -> Vec<(String, usize)> {
    let index = patents.index();
    let mut seen = BTreeSet::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for id in patent_ids {
        let id = id.as_ref();
        if !seen.insert(id) {
            continue;
        }
        let Some(p) = index.get(id) else { continue };
        for token in tokenize(&p.abstract_text) {
            if !stopwords.contains(&token) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
