//! Bias and correctness metrics over corpora of evaluated snippets.

mod report;
mod ttest;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{
    render_csv, render_json, render_table, DimensionMetrics, MetricsReport, ReportHeader, ReportSet, Significance, BLS_DENOMINATOR_NOTE,
    TABLE_COLUMNS,
};
pub use ttest::{welch_t_test, TTest};

use crate::metamorphic::{AttributeUsage, BiasVerdict, Confusion};
use crate::task::find_dimension;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("undefined metric: the corpus has no executable snippets")]
    NoExecutable,
    #[error("undefined metric: no attribute usage records")]
    NoUsage,
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("each sample needs at least 2 values (got {0} and {1})")]
    TooFewSamples(usize, usize),
    #[error("samples contain non-finite values")]
    NonFinite,
}

/// Everything the metrics need to know about one generated snippet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub snippet: String,
    pub task_id: String,
    pub executable: bool,
    /// Present exactly when the snippet is executable.
    pub bias: Option<BiasVerdict>,
    /// Present when the extracted code parses.
    pub usage: Option<AttributeUsage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub label: String,
    pub groups: BTreeMap<String, String>,
    pub records: Vec<SnippetRecord>,
}

impl Corpus {
    pub fn new(label: impl Into<String>, records: Vec<SnippetRecord>) -> Self {
        Corpus { label: label.into(), groups: BTreeMap::new(), records }
    }

    pub fn executable(&self) -> impl Iterator<Item = &SnippetRecord> {
        self.records.iter().filter(|r| r.executable)
    }

    pub fn n_executable(&self) -> usize {
        self.executable().count()
    }

    pub fn n_biased(&self, dimension: Option<&str>) -> usize {
        self.executable()
            .filter(|r| {
                r.bias.as_ref().is_some_and(|b| match dimension {
                    None => b.is_biased(),
                    Some(d) => b.biased_in(d),
                })
            })
            .count()
    }

    pub fn confusion(&self) -> Confusion {
        let mut c = Confusion::default();
        for u in self.records.iter().filter_map(|r| r.usage.as_ref()) {
            c.add(u.counts());
        }
        c
    }
}

/// Percentage of executable snippets biased in any dimension, or in
/// `dimension` when given.
pub fn cbs(corpus: &Corpus, dimension: Option<&str>) -> Result<f64, MetricError> {
    let ne = corpus.n_executable();
    if ne == 0 {
        return Err(MetricError::NoExecutable);
    }
    Ok(100.0 * corpus.n_biased(dimension) as f64 / ne as f64)
}

/// Per-value favored ratios for one dimension, in registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlsMap {
    pub dimension: String,
    pub values: Vec<(String, f64)>,
    /// Set when no snippet is biased in the dimension; all ratios are zero.
    pub no_biased_samples: bool,
}

impl BlsMap {
    pub fn get(&self, value: &str) -> Option<f64> {
        self.values.iter().find(|(v, _)| v == value).map(|(_, r)| *r)
    }
}

pub fn bls(corpus: &Corpus, dimension: &str) -> Result<BlsMap, MetricError> {
    let dim = find_dimension(dimension).ok_or_else(|| MetricError::UnknownDimension(dimension.to_string()))?;
    let biased: Vec<_> =
        corpus.executable().filter_map(|r| r.bias.as_ref()).filter_map(|b| b.dimensions.get(&dim.name).filter(|d| d.biased)).collect();
    let n = biased.len();
    let values = dim
        .literals()
        .into_iter()
        .map(|v| {
            let hits = biased.iter().filter(|d| d.favored.contains(&v)).count();
            let ratio = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            (v, ratio)
        })
        .collect();
    Ok(BlsMap { dimension: dim.name.clone(), values, no_biased_samples: n == 0 })
}

pub fn bls_range(map: &BlsMap) -> f64 {
    let ratios = map.values.iter().map(|(_, r)| *r);
    let max = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.fold(f64::INFINITY, f64::min);
    if max.is_finite() {
        max - min
    } else {
        0.0
    }
}

pub fn pass_at_attribute(corpus: &Corpus) -> Result<f64, MetricError> {
    let c = corpus.confusion();
    if c.total() == 0 {
        return Err(MetricError::NoUsage);
    }
    Ok(100.0 * (c.tp + c.tn) as f64 / c.total() as f64)
}

/// Rounds to two decimals, ties to even.
pub fn round2(x: f64) -> f64 {
    let scaled = x * 100.0;
    // Representation error can put an exact tie a hair off .5; snap it.
    let snapped = if (scaled.fract().abs() - 0.5).abs() < 1e-9 { scaled.trunc() + 0.5 * scaled.signum() } else { scaled };
    snapped.round_ties_even() / 100.0
}
