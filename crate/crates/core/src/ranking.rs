//! Rank weighting and survey rank aggregation.
//!
//! A survey asks respondents to place items (criteria or metrics) on ranks
//! `1..=n`. The aggregated input is the fraction `p[i][k]` of respondents who
//! put item `i` on rank `k`. Each item is scored with the weighted arithmetic
//! mean `sum_k w_k * p[i][k] / sum_k w_k`, where the rank weights `w_k` come
//! from one of five weighting schemes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;

/// Tolerance on `sum_k p[i][k] == 1`.
pub const PLACEMENT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("rank {k} out of range 1..={n}")]
    RankOutOfRange { n: usize, k: usize },
    #[error("number of ranks must be at least 1")]
    NoRanks,
    #[error("invalid method parameter: {0}")]
    InvalidParameter(String),
    #[error("placement/weight length mismatch: {placements} placements, {weights} weights")]
    LengthMismatch { placements: usize, weights: usize },
    #[error("weight w_{k} = {weight} is not strictly positive")]
    NonPositiveWeight { k: usize, weight: f64 },
    #[error("item `{item}`: {reason}")]
    InvalidPlacements { item: String, reason: String },
    #[error("duplicate item `{0}`")]
    DuplicateItem(String),
    #[error("respondent count must be positive")]
    NoRespondents,
    #[error("survey file line {line}: {reason}")]
    Format { line: u64, reason: String },
    #[error("survey file: {0}")]
    Csv(String),
}

/// Rank weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum RankMethod {
    /// `w_k = n - k + 1`
    RankSum,
    /// `w_k = 1 / k`
    ReciprocalRank,
    /// `w_k = (n - k + 1)^p`
    RankExponent { p: f64 },
    /// `w_k = 1 / log2(k + 1)`
    DiscountedCumulativeGain,
    /// Distance normalized logarithm: `w_k = 10^((n - k) * log10(d) / (n - 1))`.
    /// Rank 1 weighs `d`, rank `n` weighs 1; a single rank weighs `d`.
    DnLog { d: f64 },
}

impl RankMethod {
    pub const DEFAULT_EXPONENT: f64 = 2.0;
    pub const DEFAULT_D: f64 = 10.0;

    /// The five schemes with their default parameters, in comparison order.
    pub fn defaults() -> [RankMethod; 5] {
        [
            RankMethod::RankSum,
            RankMethod::ReciprocalRank,
            RankMethod::RankExponent {
                p: Self::DEFAULT_EXPONENT,
            },
            RankMethod::DiscountedCumulativeGain,
            RankMethod::DnLog {
                d: Self::DEFAULT_D,
            },
        ]
    }

    pub fn validate(&self) -> Result<(), RankingError> {
        match *self {
            RankMethod::RankExponent { p } if !(p > 0.0 && p.is_finite()) => Err(
                RankingError::InvalidParameter(format!("rank exponent p must be > 0, got {p}")),
            ),
            RankMethod::DnLog { d } if !(d > 1.0 && d.is_finite()) => Err(
                RankingError::InvalidParameter(format!("DNLog d must be > 1, got {d}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RankMethod::RankSum => "rank-sum",
            RankMethod::ReciprocalRank => "reciprocal-rank",
            RankMethod::RankExponent { .. } => "rank-exponent",
            RankMethod::DiscountedCumulativeGain => "dcg",
            RankMethod::DnLog { .. } => "dnlog",
        }
    }

    /// Parses a method name (`rank-sum`, `reciprocal-rank`, `rank-exponent`,
    /// `dcg`, `dnlog`), filling in the given parameters.
    pub fn parse(name: &str, exponent: f64, d: f64) -> Result<RankMethod, RankingError> {
        let method = match name.to_ascii_lowercase().as_str() {
            "rank-sum" | "ranksum" => RankMethod::RankSum,
            "reciprocal-rank" | "reciprocal" | "rr" => RankMethod::ReciprocalRank,
            "rank-exponent" | "exponent" => RankMethod::RankExponent { p: exponent },
            "dcg" | "discounted-cumulative-gain" => RankMethod::DiscountedCumulativeGain,
            "dnlog" => RankMethod::DnLog { d },
            other => {
                return Err(RankingError::InvalidParameter(format!(
                    "unknown rank method `{other}`"
                )))
            }
        };
        method.validate()?;
        Ok(method)
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankMethod::RankExponent { p } => write!(f, "rank-exponent(p={p})"),
            RankMethod::DnLog { d } => write!(f, "dnlog(d={d})"),
            other => f.write_str(other.name()),
        }
    }
}

/// DNLog weight for rank `k` of `n`. Singletons get `d`.
pub fn dnlog_weight(d: f64, n: usize, k: usize) -> f64 {
    if n <= 1 {
        return d;
    }
    let exponent = (n - k) as f64 * d.log10() / (n - 1) as f64;
    10f64.powf(exponent)
}

/// Weight of rank `k` (1-based) among `n` ranks.
pub fn method_weight(method: RankMethod, n: usize, k: usize) -> Result<f64, RankingError> {
    method.validate()?;
    if n == 0 {
        return Err(RankingError::NoRanks);
    }
    if k == 0 || k > n {
        return Err(RankingError::RankOutOfRange { n, k });
    }
    let kf = k as f64;
    let w = match method {
        RankMethod::RankSum => (n - k + 1) as f64,
        RankMethod::ReciprocalRank => 1.0 / kf,
        RankMethod::RankExponent { p } => ((n - k + 1) as f64).powf(p),
        RankMethod::DiscountedCumulativeGain => 1.0 / (kf + 1.0).log2(),
        RankMethod::DnLog { d } => dnlog_weight(d, n, k),
    };
    Ok(w)
}

/// Weights `w_1..=w_n`.
pub fn method_weights(method: RankMethod, n: usize) -> Result<Vec<f64>, RankingError> {
    if n == 0 {
        return Err(RankingError::NoRanks);
    }
    (1..=n).map(|k| method_weight(method, n, k)).collect()
}

/// Weighted arithmetic mean of one item's placements.
pub fn weighted_mean_rank(placements: &[f64], weights: &[f64]) -> Result<f64, RankingError> {
    if placements.len() != weights.len() {
        return Err(RankingError::LengthMismatch {
            placements: placements.len(),
            weights: weights.len(),
        });
    }
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| w.is_nan() || **w <= 0.0) {
        return Err(RankingError::NonPositiveWeight { k: i + 1, weight: w });
    }
    let numerator: f64 = weights.iter().zip(placements).map(|(w, p)| w * p).sum();
    let denominator: f64 = weights.iter().sum();
    Ok(numerator / denominator)
}

/// Aggregated survey placements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDataset {
    items: Vec<String>,
    ranks: usize,
    /// `placements[i][k - 1]`
    placements: Vec<Vec<f64>>,
    respondent_count: u32,
}

impl SurveyDataset {
    pub fn new(
        items: Vec<String>,
        placements: Vec<Vec<f64>>,
        respondent_count: u32,
    ) -> Result<Self, RankingError> {
        let ranks = placements.first().map_or(1, Vec::len);
        let dataset = SurveyDataset {
            items,
            ranks,
            placements,
            respondent_count,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn empty(ranks: usize, respondent_count: u32) -> Result<Self, RankingError> {
        let dataset = SurveyDataset {
            items: Vec::new(),
            ranks,
            placements: Vec::new(),
            respondent_count,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    fn validate(&self) -> Result<(), RankingError> {
        if self.ranks == 0 {
            return Err(RankingError::NoRanks);
        }
        if self.respondent_count == 0 {
            return Err(RankingError::NoRespondents);
        }
        if self.items.len() != self.placements.len() {
            return Err(RankingError::InvalidPlacements {
                item: String::from("<dataset>"),
                reason: format!(
                    "{} items but {} placement rows",
                    self.items.len(),
                    self.placements.len()
                ),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for (item, row) in self.items.iter().zip(&self.placements) {
            if !seen.insert(item.as_str()) {
                return Err(RankingError::DuplicateItem(item.clone()));
            }
            let invalid = |reason: String| RankingError::InvalidPlacements {
                item: item.clone(),
                reason,
            };
            if row.len() != self.ranks {
                return Err(invalid(format!(
                    "{} ranks given, expected {}",
                    row.len(),
                    self.ranks
                )));
            }
            if let Some(p) = row.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
                return Err(invalid(format!("fraction {p} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PLACEMENT_SUM_TOLERANCE {
                return Err(invalid(format!("fractions sum to {sum}, expected 1")));
            }
        }
        Ok(())
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn ranks(&self) -> usize {
        self.ranks
    }

    pub fn respondent_count(&self) -> u32 {
        self.respondent_count
    }

    pub fn placements(&self, item_index: usize) -> &[f64] {
        &self.placements[item_index]
    }

    /// Reads the tabular survey format: a header `item,rank,fraction` followed
    /// by one row per (item, rank). Missing (item, rank) pairs count as 0. An
    /// optional comment line `# respondents = N` sets the respondent count
    /// (default 1). The number of ranks is the largest rank present.
    pub fn from_csv<R: Read>(mut reader: R) -> Result<Self, RankingError> {
        let mut text = String::new();
        reader
            .read_to_string(&mut text)
            .map_err(|e| RankingError::Csv(e.to_string()))?;
        let mut respondents = 1u32;
        for (lineno, line) in text.lines().enumerate() {
            let Some(comment) = line.trim().strip_prefix('#') else {
                continue;
            };
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "respondents" {
                    respondents =
                        value.trim().parse().map_err(|_| RankingError::Format {
                            line: lineno as u64 + 1,
                            reason: format!("invalid respondent count `{}`", value.trim()),
                        })?;
                }
            }
        }

        #[derive(Deserialize)]
        struct Row {
            item: String,
            rank: usize,
            fraction: f64,
        }

        let mut csv = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut max_rank = 0usize;
        for record in csv.deserialize::<Row>() {
            let row = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                RankingError::Format {
                    line,
                    reason: e.to_string(),
                }
            })?;
            if row.rank == 0 {
                return Err(RankingError::InvalidPlacements {
                    item: row.item,
                    reason: String::from("rank 0 (ranks start at 1)"),
                });
            }
            max_rank = max_rank.max(row.rank);
            if !rows.contains_key(&row.item) {
                order.push(row.item.clone());
            }
            let entry = rows.entry(row.item.clone()).or_default();
            if entry.insert(row.rank, row.fraction).is_some() {
                return Err(RankingError::InvalidPlacements {
                    item: row.item,
                    reason: format!("rank {} given twice", row.rank),
                });
            }
        }
        if order.is_empty() {
            return SurveyDataset::empty(1, respondents);
        }
        let placements = order
            .iter()
            .map(|item| {
                let ranks = &rows[item];
                (1..=max_rank)
                    .map(|k| ranks.get(&k).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        SurveyDataset::new(order, placements, respondents)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub item: String,
    pub score: f64,
}

/// Scores every item and orders them by score, descending; equal scores are
/// ordered by item id.
pub fn rank_items(dataset: &SurveyDataset, method: RankMethod) -> Result<Vec<RankedItem>, RankingError> {
    rank_items_with(dataset, method, Execution::default())
}

pub fn rank_items_with(
    dataset: &SurveyDataset,
    method: RankMethod,
    exec: Execution,
) -> Result<Vec<RankedItem>, RankingError> {
    let weights = method_weights(method, dataset.ranks)?;
    let indices: Vec<usize> = (0..dataset.items.len()).collect();
    let mut ranked = exec.try_map(&indices, |&i| {
        weighted_mean_rank(&dataset.placements[i], &weights).map(|score| RankedItem {
            item: dataset.items[i].clone(),
            score,
        })
    })?;
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.item.cmp(&b.item)));
    Ok(ranked)
}

/// Shape of a weight sequence read from the least to the most important rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    /// Constant difference between consecutive ranks.
    LinearLike,
    /// Neither constant difference nor constant ratio.
    Polynomial,
    /// Constant ratio between consecutive ranks.
    Exponential,
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Growth::LinearLike => "linear-like",
            Growth::Polynomial => "polynomial",
            Growth::Exponential => "exponential",
        })
    }
}

/// Sequences shorter than this cannot separate the growth classes, so they
/// are classified at this length instead.
pub const GROWTH_REFERENCE_RANKS: usize = 5;

fn constant(values: &[f64]) -> bool {
    let scale = values.iter().fold(0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    values
        .windows(2)
        .all(|w| (w[0] - w[1]).abs() <= 1e-9 * scale)
}

/// Classifies a weight sequence `w_1..=w_n` by ratio and difference tests.
pub fn classify_growth(weights: &[f64]) -> Growth {
    let ascending: Vec<f64> = weights.iter().rev().copied().collect();
    let diffs: Vec<f64> = ascending.windows(2).map(|w| w[1] - w[0]).collect();
    if constant(&diffs) {
        return Growth::LinearLike;
    }
    let ratios: Vec<f64> = ascending.windows(2).map(|w| w[1] / w[0]).collect();
    if constant(&ratios) {
        Growth::Exponential
    } else {
        Growth::Polynomial
    }
}

/// Growth class of a method, tested on `n` ranks (or the reference length
/// when `n` is too short to tell).
pub fn method_growth(method: RankMethod, n: usize) -> Result<Growth, RankingError> {
    let n = n.max(GROWTH_REFERENCE_RANKS);
    Ok(classify_growth(&method_weights(method, n)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: RankMethod,
    pub weights: Vec<f64>,
    pub growth: Growth,
    pub ranking: Vec<RankedItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub ranks: usize,
    pub rows: Vec<MethodRow>,
}

impl MethodComparison {
    pub fn row(&self, name: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method.name() == name)
    }
}

/// Runs all five weighting schemes (default parameters) over the dataset.
pub fn compare_methods(dataset: &SurveyDataset) -> MethodComparison {
    compare_methods_with(dataset, &RankMethod::defaults(), Execution::default())
        .expect("default methods are valid")
}

pub fn compare_methods_with(
    dataset: &SurveyDataset,
    methods: &[RankMethod],
    exec: Execution,
) -> Result<MethodComparison, RankingError> {
    let rows = exec.try_map(methods, |&method| {
        Ok(MethodRow {
            method,
            weights: method_weights(method, dataset.ranks)?,
            growth: method_growth(method, dataset.ranks)?,
            // items are already scored in parallel across methods
            ranking: rank_items_with(dataset, method, Execution::Sequential)?,
        })
    })?;
    Ok(MethodComparison {
        ranks: dataset.ranks,
        rows,
    })
}
