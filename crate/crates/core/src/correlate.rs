//! Correlation between predicted and actual per-query effectiveness.
//!
//! Pearson's r and Spearman's ρ are tested with the usual t statistic
//! `r·√((n−2)/(1−r²))` on n−2 degrees of freedom. Kendall's τ_b defaults to
//! the normal approximation of S = C − D with the tie-corrected variance and
//! a continuity correction of one; the t statistic on τ is also available.
//! All p-values are two-sided and significance means p < 0.05.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::data_model::{ActualRecord, PredictionTable, QueryId};
use crate::error::{Error, Result};
use crate::ingest::Run;

pub const MIN_SAMPLE: usize = 3;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub query_ids: Vec<QueryId>,
    pub predicted: Vec<f64>,
    pub actual: Vec<f64>,
}

impl PairedSample {
    pub fn len(&self) -> usize {
        self.query_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_ids.is_empty()
    }

    /// Builds a sample from parallel vectors, naming queries by position.
    pub fn from_vectors(predicted: Vec<f64>, actual: Vec<f64>) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::InvalidInput(format!(
                "vector lengths differ: {} vs {}",
                predicted.len(),
                actual.len()
            )));
        }
        let query_ids = (0..predicted.len())
            .map(|i| QueryId::parse(&i.to_string()))
            .collect::<Result<_>>()?;
        Ok(PairedSample {
            query_ids,
            predicted,
            actual,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub sample: PairedSample,
    /// Predicted queries with no actual value.
    pub dropped_predictions: usize,
    /// Judged queries with no prediction.
    pub dropped_actuals: usize,
}

/// Inner join on query id, in query id order.
pub fn pair(predictions: &BTreeMap<QueryId, f64>, actuals: &BTreeMap<QueryId, f64>) -> Result<Pairing> {
    let mut sample = PairedSample {
        query_ids: Vec::new(),
        predicted: Vec::new(),
        actual: Vec::new(),
    };
    for (qid, &p) in predictions {
        if let Some(&a) = actuals.get(qid) {
            sample.query_ids.push(qid.clone());
            sample.predicted.push(p);
            sample.actual.push(a);
        }
    }
    let n = sample.len();
    if n < MIN_SAMPLE {
        return Err(Error::InsufficientSample {
            found: n,
            needed: MIN_SAMPLE,
        });
    }
    Ok(Pairing {
        dropped_predictions: predictions.len() - n,
        dropped_actuals: actuals.len() - n,
        sample,
    })
}

pub fn actuals_map(records: &[ActualRecord]) -> BTreeMap<QueryId, f64> {
    records.iter().map(|r| (r.query_id.clone(), r.value)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant: bool,
}

impl CorrelationResult {
    fn new(coefficient: f64, p_value: f64, n: usize) -> Self {
        let coefficient = coefficient.clamp(-1.0, 1.0);
        let p_value = p_value.clamp(0.0, 1.0);
        CorrelationResult {
            coefficient,
            p_value,
            n,
            significant: p_value < SIGNIFICANCE_LEVEL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Pearson,
    Kendall,
    Spearman,
}

impl FromStr for CorrelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pearson" => Ok(CorrelationKind::Pearson),
            "kendall" => Ok(CorrelationKind::Kendall),
            "spearman" => Ok(CorrelationKind::Spearman),
            other => Err(Error::InvalidInput(format!(
                "unknown correlation {other:?} (pearson, kendall, spearman)"
            ))),
        }
    }
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationKind::Pearson => "pearson",
            CorrelationKind::Kendall => "kendall",
            CorrelationKind::Spearman => "spearman",
        })
    }
}

/// Significance test used for Kendall's τ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KendallSignificance {
    #[default]
    NormalApprox,
    TTest,
}

fn check_len(x: &[f64], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "vector lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_SAMPLE {
        return Err(Error::InsufficientSample {
            found: x.len(),
            needed: MIN_SAMPLE,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in sample".into()));
    }
    Ok(x.len())
}

/// Product-moment correlation of two equal-length vectors.
pub fn pearson_coefficient(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = check_len(x, y)? as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance in one of the vectors".into()));
    }
    // sqrt of the product is exact when x and y coincide
    let product = sxx * syy;
    let denom = if product.is_finite() && product > 0.0 {
        product.sqrt()
    } else {
        sxx.sqrt() * syy.sqrt()
    };
    Ok((sxy / denom).clamp(-1.0, 1.0))
}

/// Two-sided p-value of the t statistic for a correlation coefficient.
fn t_test_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    2.0 * dist.sf(t.abs())
}

pub fn pearson(sample: &PairedSample) -> Result<CorrelationResult> {
    let r = pearson_coefficient(&sample.predicted, &sample.actual)?;
    let n = sample.len();
    Ok(CorrelationResult::new(r, t_test_p(r, n), n))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn spearman(sample: &PairedSample) -> Result<CorrelationResult> {
    check_len(&sample.predicted, &sample.actual)?;
    let rx = average_ranks(&sample.predicted);
    let ry = average_ranks(&sample.actual);
    let rho = pearson_coefficient(&rx, &ry)
        .map_err(|_| Error::Degenerate("all values tied in one of the vectors".into()))?;
    let n = sample.len();
    Ok(CorrelationResult::new(rho, t_test_p(rho, n), n))
}

/// Pair counts underlying Kendall's τ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KendallCounts {
    pub n: usize,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including pairs tied in both).
    pub tied_x: u64,
    /// Pairs tied in y (including pairs tied in both).
    pub tied_y: u64,
    /// Sizes of the groups of tied x values.
    pub x_tie_groups: Vec<u64>,
    pub y_tie_groups: Vec<u64>,
}

impl KendallCounts {
    pub fn total_pairs(&self) -> u64 {
        let n = self.n as u64;
        n * (n - 1) / 2
    }

    pub fn tau_b(&self) -> Result<f64> {
        let n0 = self.total_pairs();
        if self.tied_x == n0 || self.tied_y == n0 {
            return Err(Error::Degenerate("all pairs tied in one of the vectors".into()));
        }
        let s = self.concordant as f64 - self.discordant as f64;
        Ok(s / (((n0 - self.tied_x) as f64) * ((n0 - self.tied_y) as f64)).sqrt())
    }
}

fn pairs(t: u64) -> u64 {
    t * (t - 1) / 2
}

/// Sizes of runs of equal adjacent elements in already-sorted data.
fn tie_groups<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> Vec<u64> {
    let mut groups = Vec::new();
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 && !sorted.is_empty() {
        groups.push(run);
    }
    groups
}

/// Merge sort returning the number of strict inversions.
fn sort_counting_inversions(v: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_inversions(&mut v[..mid], &mut scratch[..mid]);
    swaps += sort_counting_inversions(&mut v[mid..], &mut scratch[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            scratch[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            scratch[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&scratch[..n]);
    swaps
}

/// Concordance counts in O(n log n) (Knight's algorithm).
pub fn kendall_counts(x: &[f64], y: &[f64]) -> Result<KendallCounts> {
    let n = check_len(x, y)?;
    // + 0.0 folds -0.0 into 0.0 so equal values also sort together
    let mut pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let x_tie_groups = tie_groups(&pts, |a, b| a.0 == b.0);
    let joint_groups = tie_groups(&pts, |a, b| a.0 == b.0 && a.1 == b.1);
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut scratch = vec![0.0; n];
    let discordant = sort_counting_inversions(&mut ys, &mut scratch);
    let y_tie_groups = tie_groups(&ys, |a, b| a == b);

    let tied_x: u64 = x_tie_groups.iter().map(|&t| pairs(t)).sum();
    let tied_y: u64 = y_tie_groups.iter().map(|&t| pairs(t)).sum();
    let tied_both: u64 = joint_groups.iter().map(|&t| pairs(t)).sum();
    let n0 = pairs(n as u64);
    let concordant = n0 + tied_both - tied_x - tied_y - discordant;
    Ok(KendallCounts {
        n,
        concordant,
        discordant,
        tied_x,
        tied_y,
        x_tie_groups,
        y_tie_groups,
    })
}

/// Variance of S = C − D under independence, corrected for ties.
fn kendall_s_variance(c: &KendallCounts) -> f64 {
    let n = c.n as f64;
    let v = |t: f64| t * (t - 1.0) * (2.0 * t + 5.0);
    let t1 = |g: &[u64]| g.iter().map(|&t| (t * (t - 1)) as f64).sum::<f64>();
    let t2 = |g: &[u64]| g.iter().map(|&t| (t * (t - 1) * (t - 2)) as f64).sum::<f64>();
    let v0 = v(n);
    let vx: f64 = c.x_tie_groups.iter().map(|&t| v(t as f64)).sum();
    let vy: f64 = c.y_tie_groups.iter().map(|&t| v(t as f64)).sum();
    (v0 - vx - vy) / 18.0
        + t1(&c.x_tie_groups) * t1(&c.y_tie_groups) / (2.0 * n * (n - 1.0))
        + t2(&c.x_tie_groups) * t2(&c.y_tie_groups) / (9.0 * n * (n - 1.0) * (n - 2.0))
}

pub fn kendall(sample: &PairedSample, significance: KendallSignificance) -> Result<CorrelationResult> {
    let counts = kendall_counts(&sample.predicted, &sample.actual)?;
    let tau = counts.tau_b()?;
    let n = counts.n;
    let p = match significance {
        KendallSignificance::TTest => t_test_p(tau, n),
        KendallSignificance::NormalApprox => {
            let s = counts.concordant as f64 - counts.discordant as f64;
            let corrected = s.signum() * (s.abs() - 1.0).max(0.0);
            let var = kendall_s_variance(&counts);
            if var <= 0.0 {
                return Err(Error::Degenerate("zero variance of the Kendall statistic".into()));
            }
            let z = corrected / var.sqrt();
            2.0 * Normal::standard().sf(z.abs())
        }
    };
    Ok(CorrelationResult::new(tau, p, n))
}

pub fn correlation(
    kind: CorrelationKind,
    sample: &PairedSample,
    kendall_significance: KendallSignificance,
) -> Result<CorrelationResult> {
    match kind {
        CorrelationKind::Pearson => pearson(sample),
        CorrelationKind::Kendall => kendall(sample, kendall_significance),
        CorrelationKind::Spearman => spearman(sample),
    }
}

/// One predictor × metric row of a correlation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub predictor: String,
    pub metric: String,
    pub n: usize,
    pub dropped_predictions: usize,
    pub dropped_actuals: usize,
    pub pearson: Option<CorrelationResult>,
    pub kendall: Option<CorrelationResult>,
    pub spearman: Option<CorrelationResult>,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub rows: Vec<ReportRow>,
}

const REPORT_HEADER: &str =
    "predictor\tmetric\tpearson\tpearson_p\tkendall\tkendall_p\tspearman\tspearman_p\tn\tstatus";

fn clean(message: &str) -> String {
    message.replace(['\t', '\n', '\r'], " ")
}

impl CorrelationReport {
    pub fn extend(&mut self, other: CorrelationReport) {
        self.rows.extend(other.rows);
    }

    pub fn successful_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.is_ok()).count()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        for row in &self.rows {
            let cells = |c: &Option<CorrelationResult>| match c {
                Some(c) => format!("{}\t{}", c.coefficient, c.p_value),
                None => "NA\tNA".to_string(),
            };
            let status = row.error.as_deref().map_or_else(|| "ok".to_string(), clean);
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{status}",
                row.predictor,
                row.metric,
                cells(&row.pearson),
                cells(&row.kendall),
                cells(&row.spearman),
                row.n,
            )?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

/// Correlates every predictor of `table` with the actual values of `metric`.
/// A predictor whose sample is too small or degenerate gets an annotated row.
pub fn evaluate_predictors(
    table: &PredictionTable,
    metric: &str,
    actuals: &BTreeMap<QueryId, f64>,
    kendall_significance: KendallSignificance,
) -> CorrelationReport {
    let rows = table
        .predictors()
        .into_iter()
        .map(|predictor| {
            let predictions = table.values_for(predictor);
            let mut row = ReportRow {
                predictor: predictor.to_string(),
                metric: metric.to_string(),
                n: 0,
                dropped_predictions: 0,
                dropped_actuals: 0,
                pearson: None,
                kendall: None,
                spearman: None,
                error: None,
            };
            let pairing = match pair(&predictions, actuals) {
                Ok(p) => p,
                Err(e) => {
                    row.error = Some(e.to_string());
                    return row;
                }
            };
            row.n = pairing.sample.len();
            row.dropped_predictions = pairing.dropped_predictions;
            row.dropped_actuals = pairing.dropped_actuals;
            let mut errors = Vec::new();
            let mut keep = |r: Result<CorrelationResult>| match r {
                Ok(c) => Some(c),
                Err(e) => {
                    errors.push(e.to_string());
                    None
                }
            };
            row.pearson = keep(pearson(&pairing.sample));
            row.kendall = keep(kendall(&pairing.sample, kendall_significance));
            row.spearman = keep(spearman(&pairing.sample));
            errors.dedup();
            if !errors.is_empty() {
                row.error = Some(errors.join("; "));
            }
            row
        })
        .collect();
    CorrelationReport { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TurnOutcome {
    Ok(CorrelationResult),
    /// Fewer than three paired queries at this turn.
    Insufficient { n: usize },
    Degenerate { n: usize, reason: String },
}

/// Correlation computed separately over the queries of each conversation
/// turn. Queries whose id has no turn are ignored.
pub fn per_turn_correlation(
    predictions: &BTreeMap<QueryId, f64>,
    actuals: &BTreeMap<QueryId, f64>,
    kind: CorrelationKind,
    kendall_significance: KendallSignificance,
) -> Result<BTreeMap<u32, TurnOutcome>> {
    type Values = BTreeMap<QueryId, f64>;
    let mut by_turn: BTreeMap<u32, (Values, Values)> = BTreeMap::new();
    for (qid, &p) in predictions {
        if let (Some(turn), Some(&a)) = (qid.turn(), actuals.get(qid)) {
            let entry = by_turn.entry(turn).or_default();
            entry.0.insert(qid.clone(), p);
            entry.1.insert(qid.clone(), a);
        }
    }
    if by_turn.is_empty() {
        return Err(Error::InvalidInput(
            "no paired query id carries a turn number (expected <topic>_<turn>)".into(),
        ));
    }
    Ok(by_turn
        .into_iter()
        .map(|(turn, (p, a))| {
            let n = p.len();
            let outcome = match pair(&p, &a) {
                Err(_) => TurnOutcome::Insufficient { n },
                Ok(pairing) => match correlation(kind, &pairing.sample, kendall_significance) {
                    Ok(c) => TurnOutcome::Ok(c),
                    Err(e) => TurnOutcome::Degenerate {
                        n,
                        reason: e.to_string(),
                    },
                },
            };
            (turn, outcome)
        })
        .collect())
}

/// `turn<TAB>n<TAB>coefficient<TAB>p<TAB>status`, with a header line.
pub fn write_per_turn_tsv<W: Write>(mut w: W, turns: &BTreeMap<u32, TurnOutcome>) -> std::io::Result<()> {
    writeln!(w, "turn\tn\tcoefficient\tp\tstatus")?;
    for (turn, outcome) in turns {
        match outcome {
            TurnOutcome::Ok(c) => writeln!(w, "{turn}\t{}\t{}\t{}\tok", c.n, c.coefficient, c.p_value)?,
            TurnOutcome::Insufficient { n } => writeln!(w, "{turn}\t{n}\tNA\tNA\tinsufficient")?,
            TurnOutcome::Degenerate { n, reason } => {
                writeln!(w, "{turn}\t{n}\tNA\tNA\tdegenerate: {}", clean(reason))?
            }
        }
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: u64,
}

/// Min-max normalized pooled scores of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreDistribution {
    pub n: usize,
    pub raw_min: f64,
    pub raw_max: f64,
    pub mean: f64,
    pub std: f64,
    pub bins: Vec<HistogramBin>,
}

pub fn min_max_normalize(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores to normalize".into()));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(Error::Degenerate("min = max, normalization undefined".into()));
    }
    let range = max - min;
    Ok(scores.iter().map(|s| ((s - min) / range).clamp(0.0, 1.0)).collect())
}

/// Pools the scores of every query, min-max normalizes them to [0, 1] and
/// summarizes them in `bins` uniform bins (the last bin is closed).
pub fn score_distribution(run: &Run, bins: usize) -> Result<ScoreDistribution> {
    if bins == 0 {
        return Err(Error::InvalidInput("bins must be at least 1".into()));
    }
    let pooled: Vec<f64> = run.values().flat_map(|l| l.docs().iter().map(|d| d.score)).collect();
    let normalized = min_max_normalize(&pooled)?;
    let n = normalized.len();
    let mean = normalized.iter().sum::<f64>() / n as f64;
    let std = (normalized.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    let mut counts = vec![0u64; bins];
    for v in &normalized {
        let idx = ((v * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let raw_min = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_max = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ScoreDistribution {
        n,
        raw_min,
        raw_max,
        mean,
        std,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                low: i as f64 / bins as f64,
                high: (i + 1) as f64 / bins as f64,
                count,
            })
            .collect(),
    })
}

/// Histogram rows `bin_low<TAB>bin_high<TAB>count` after a header, then a
/// `# n=… mean=… std=…` summary line.
pub fn write_histogram_tsv<W: Write>(mut w: W, dist: &ScoreDistribution) -> std::io::Result<()> {
    writeln!(w, "bin_low\tbin_high\tcount")?;
    for b in &dist.bins {
        writeln!(w, "{}\t{}\t{}", b.low, b.high, b.count)?;
    }
    writeln!(w, "# n={} mean={} std={}", dist.n, dist.mean, dist.std)?;
    w.flush()
}

pub fn write_distribution_summary<W: Write>(
    mut w: W,
    runs: &[(String, Result<ScoreDistribution>)],
) -> std::io::Result<()> {
    writeln!(w, "run\tn\traw_min\traw_max\tmean\tstd\tstatus")?;
    for (name, dist) in runs {
        match dist {
            Ok(d) => writeln!(w, "{name}\t{}\t{}\t{}\t{}\t{}\tok", d.n, d.raw_min, d.raw_max, d.mean, d.std)?,
            Err(e) => writeln!(w, "{name}\tNA\tNA\tNA\tNA\tNA\t{}", clean(&e.to_string()))?,
        }
    }
    w.flush()
}
