//! Correlations, outliers, polynomial fits, annotation sampling and agreement.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matcher::ImpactTable;
use crate::table::{read_table, TableError, TableFormat};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("input is constant")]
    ConstantInput,
    #[error("values have zero variance")]
    ZeroVariance,
    #[error("need at least 3 distinct x values for a quadratic fit")]
    InsufficientPoints,
    #[error("least-squares system is numerically singular")]
    SingularSystem,
    #[error("cannot sample {requested} of {available} rows")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("no labels to compare")]
    EmptyLabels,
    #[error("both annotators used one identical label throughout; kappa is undefined")]
    DegenerateAgreement,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewValues { needed: 3, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub z: Vec<f64>,
    pub outlier: Vec<bool>,
}

/// Standard scores against the sample mean and sample (n - 1) standard
/// deviation; a value is an outlier when `|z| > cutoff`.
pub fn zscore_outliers(values: &[f64], cutoff: f64) -> Result<ZScores, StatsError> {
    if values.len() < 3 {
        return Err(StatsError::TooFewValues {
            needed: 3,
            got: values.len(),
        });
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    if var == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let sd = var.sqrt();
    let z: Vec<f64> = values.iter().map(|v| (v - m) / sd).collect();
    let outlier = z.iter().map(|z| z.abs() > cutoff).collect();
    Ok(ZScores { z, outlier })
}

/// Least-squares polynomial coefficients, constant term first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * self.c2)
    }
}

/// Fit `y = c0 + c1 x + c2 x^2` by Householder QR on the Vandermonde matrix.
/// `x` is centred and scaled before factoring and the coefficients mapped back.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<Quadratic, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(StatsError::InsufficientPoints);
    }

    let center = mean(x);
    let scale = x.iter().map(|v| (v - center).abs()).fold(0.0, f64::max);
    let n = x.len();
    // Column-major n x 3 design on the standardized abscissa.
    let mut a: Vec<[f64; 3]> = x
        .iter()
        .map(|v| {
            let t = (v - center) / scale;
            [1.0, t, t * t]
        })
        .collect();
    let mut b = y.to_vec();

    let mut r_diag = [0.0; 3];
    for k in 0..3 {
        let norm = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(StatsError::SingularSystem);
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        // v = a[k..][k] - alpha e_k, stored in place.
        a[k][k] -= alpha;
        let vnorm2: f64 = (k..n).map(|i| a[i][k] * a[i][k]).sum();
        for j in k + 1..3 {
            let s: f64 = (k..n).map(|i| a[i][k] * a[i][j]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                a[i][j] -= s * a[i][k];
            }
        }
        let s: f64 = (k..n).map(|i| a[i][k] * b[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in k..n {
            b[i] -= s * a[i][k];
        }
        r_diag[k] = alpha;
    }

    let max_diag = r_diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if r_diag.iter().any(|d| d.abs() <= max_diag * 1e-12) {
        return Err(StatsError::SingularSystem);
    }

    // Back substitution; R's strict upper triangle sits in a[k][j] for j > k.
    let mut beta = [0.0; 3];
    for k in (0..3).rev() {
        let mut s = b[k];
        for j in k + 1..3 {
            s -= a[k][j] * beta[j];
        }
        beta[k] = s / r_diag[k];
    }

    // y = b0 + b1 t + b2 t^2 with t = (x - c) / s.
    let (b0, b1, b2) = (beta[0], beta[1] / scale, beta[2] / (scale * scale));
    Ok(Quadratic {
        c0: b0 - b1 * center + b2 * center * center,
        c1: b1 - 2.0 * b2 * center,
        c2: b2,
    })
}

/// Ordinary least-squares line `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewValues { needed: 2, got: x.len() });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Equal-width histogram over `[lo, hi]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<(f64, f64, usize)> {
    assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v < lo || v > hi || v.is_nan() {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

/// Task-patent pairs drawn for manual relevance labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementSample {
    pub pairs: Vec<(String, String)>,
    pub labels_a: Vec<Option<bool>>,
    pub labels_b: Vec<Option<bool>>,
}

/// Draw `n` rows uniformly without replacement.
///
/// The stream is ChaCha8 seeded with `seed` via `seed_from_u64`; a partial
/// Fisher-Yates shuffle of row indices picks the sample, which is then
/// returned in table order.
pub fn sample_pairs(table: &ImpactTable, n: usize, seed: u64) -> Result<AgreementSample, StatsError> {
    if n > table.len() {
        return Err(StatsError::SampleTooLarge {
            requested: n,
            available: table.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..table.len()).collect();
    let (chosen, _) = indices.partial_shuffle(&mut rng, n);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let pairs: Vec<(String, String)> = chosen
        .into_iter()
        .map(|i| {
            let r = &table.rows()[i];
            (r.task_id.clone(), r.best_patent_id.clone())
        })
        .collect();
    Ok(AgreementSample {
        labels_a: vec![None; pairs.len()],
        labels_b: vec![None; pairs.len()],
        pairs,
    })
}

/// Parse an annotator label: `1/0`, `yes/no`, `true/false`, `relevant/not relevant`.
pub fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_lowercase().as_str() {
        "1" | "yes" | "y" | "true" | "relevant" => Some(true),
        "0" | "no" | "n" | "false" | "not relevant" | "irrelevant" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub n: usize,
    pub observed: f64,
    pub expected: f64,
    pub kappa: f64,
}

/// Cohen's kappa for two binary annotators.
pub fn cohens_kappa(labels_a: &[bool], labels_b: &[bool]) -> Result<Agreement, StatsError> {
    if labels_a.len() != labels_b.len() {
        return Err(StatsError::LengthMismatch(labels_a.len(), labels_b.len()));
    }
    if labels_a.is_empty() {
        return Err(StatsError::EmptyLabels);
    }
    let n = labels_a.len() as f64;
    let agree = labels_a.iter().zip(labels_b).filter(|(a, b)| a == b).count() as f64;
    let yes_a = labels_a.iter().filter(|&&a| a).count() as f64 / n;
    let yes_b = labels_b.iter().filter(|&&b| b).count() as f64 / n;
    let observed = agree / n;
    let expected = yes_a * yes_b + (1.0 - yes_a) * (1.0 - yes_b);
    if expected == 1.0 {
        return Err(StatsError::DegenerateAgreement);
    }
    Ok(Agreement {
        n: labels_a.len(),
        observed,
        expected,
        kappa: (observed - expected) / (1.0 - expected),
    })
}

/// One value per region for an external indicator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndicatorTable {
    pub name: String,
    pub values: BTreeMap<String, f64>,
}

impl IndicatorTable {
    /// Two-column `region_id, value` file with a header. Column names are
    /// taken positionally.
    pub fn load(name: &str, path: &Path, format: TableFormat) -> Result<IndicatorTable, TableError> {
        let table = read_table(path, format, &[])?;
        let mut values = BTreeMap::new();
        for row in &table.rows {
            if row.fields.len() != 2 {
                return Err(table.invalid(row, "expected two columns: region_id, value"));
            }
            let region = row.fields[0].trim();
            let raw = row.fields[1].trim();
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| table.invalid(row, format!("`{raw}` is not a finite number")))?;
            values.insert(region.to_string(), v);
        }
        Ok(IndicatorTable {
            name: name.to_string(),
            values,
        })
    }

    /// Values paired with `scores` on exact region id; unmatched ids are dropped.
    pub fn join(&self, scores: &BTreeMap<String, f64>) -> (Vec<String>, Vec<f64>, Vec<f64>) {
        let mut ids = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (region, &score) in scores {
            if let Some(&v) = self.values.get(region) {
                ids.push(region.clone());
                xs.push(score);
                ys.push(v);
            }
        }
        (ids, xs, ys)
    }
}
