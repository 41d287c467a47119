//! JSON outputs: the ranking result, the discrepancy report and chart-ready
//! series. Every real is written with 12 significant digits so outputs are
//! byte-stable across platforms.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::discrepancy::{DiscrepancyReport, FuzzyBands};
use crate::engine::RankingResult;
use crate::store::SCHEMA_VERSION;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant decimal digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap_or_default());
            if let Some(r) = serde_json::Number::from_f64(x) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every real rounded to 12 significant digits and a
/// trailing newline. Object keys come out sorted.
pub fn to_stable_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut out = serde_json::to_string_pretty(&v)?;
    out.push('\n');
    Ok(out)
}

pub fn result_json(result: &RankingResult) -> String {
    to_stable_json(result).expect("ranking results are always serializable")
}

pub fn import_result(json: &str) -> serde_json::Result<RankingResult> {
    serde_json::from_str(json)
}

pub fn discrepancies_json(report: &DiscrepancyReport) -> String {
    to_stable_json(report).expect("reports are always serializable")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// One chart: a label per bar group, one series per analyst plus the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub title: String,
    pub labels: Vec<String>,
    pub series: Vec<Series>,
    pub group: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub schema: u32,
    pub bands: FuzzyBands,
    /// Per-analyst source scores with the group mean.
    pub ranking: Chart,
    /// Scaled group scores, one per source.
    pub group_scaled: Vec<f64>,
    /// Per-analyst criterion weights with the group weights.
    pub weights: Chart,
    /// Per-criterion normalized columns, one chart per criterion.
    pub criteria: Vec<Chart>,
}

pub fn chart_series(result: &RankingResult, report: &DiscrepancyReport) -> ChartSeries {
    let labels = |ids: &[String]| ids.to_vec();
    let source_labels: Vec<String> = result.sources.iter().map(|s| s.to_string()).collect();
    let criterion_labels: Vec<String> = result.criteria.iter().map(|c| c.to_string()).collect();
    ChartSeries {
        schema: SCHEMA_VERSION,
        bands: report.bands,
        ranking: Chart {
            title: "ranking".into(),
            labels: labels(&source_labels),
            series: result
                .per_analyst
                .iter()
                .map(|y| Series { name: y.analyst_id.to_string(), values: y.values.clone() })
                .collect(),
            group: result.group.clone(),
        },
        group_scaled: result.group_scaled.clone(),
        weights: Chart {
            title: "weights".into(),
            labels: labels(&criterion_labels),
            series: result
                .weights
                .iter()
                .zip(&result.analysts)
                .map(|(w, a)| Series { name: a.to_string(), values: w.values.clone() })
                .collect(),
            group: result.group_weights.values.clone(),
        },
        criteria: report
            .criteria
            .iter()
            .map(|b| Chart {
                title: b.criterion.to_string(),
                labels: labels(&source_labels),
                series: b.analysts.iter().map(|a| Series { name: a.analyst_id.to_string(), values: a.values.clone() }).collect(),
                group: b.group.clone(),
            })
            .collect(),
    }
}

pub fn chart_series_json(series: &ChartSeries) -> String {
    to_stable_json(series).expect("chart series are always serializable")
}
