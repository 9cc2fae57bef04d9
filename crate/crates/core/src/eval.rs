//! Accuracy metrics against ground-truth rename maps.
//!
//! Four metrics cross two axes: locals only vs. all names (globals count as
//! trivially correct since they are never renamed), and once per binding vs.
//! once per occurrence. Correctness is exact string equality with the
//! original name. Corpus numbers pool counts across files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::js::{Analysis, BindingId, RenameMap};
use crate::recovery::PredictionMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locality {
    LocalOnly,
    AllNames,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Once,
    Repeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricKind {
    pub locality: Locality,
    pub weighting: Weighting,
}

pub const LOCAL_ONCE: MetricKind =
    MetricKind { locality: Locality::LocalOnly, weighting: Weighting::Once };
pub const LOCAL_REPEAT: MetricKind =
    MetricKind { locality: Locality::LocalOnly, weighting: Weighting::Repeat };
pub const ALL_ONCE: MetricKind =
    MetricKind { locality: Locality::AllNames, weighting: Weighting::Once };
pub const ALL_REPEAT: MetricKind =
    MetricKind { locality: Locality::AllNames, weighting: Weighting::Repeat };

pub const ALL_METRICS: [MetricKind; 4] = [LOCAL_ONCE, LOCAL_REPEAT, ALL_ONCE, ALL_REPEAT];

/// Correct and total counts for one file under one metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FileScore {
    pub correct: u64,
    pub total: u64,
}

impl FileScore {
    pub fn ratio(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Resolves each (scope, min) key of the truth map to a binding of the
/// minified file's analysis.
fn binding_for_key(analysis: &Analysis, scope: &str, min: &str) -> Result<BindingId> {
    analysis.scopes.lookup(scope, min).ok_or_else(|| {
        Error::MapMismatch(format!("no binding for scope {scope} name {min}"))
    })
}

/// Distinct global names with their reference counts.
fn global_counts(analysis: &Analysis) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for g in analysis.scopes.global_refs() {
        *counts.entry(g.name.clone()).or_insert(0) += 1;
    }
    counts
}

fn local_scores(
    truth: &RenameMap,
    predictions: Option<&PredictionMap>,
    analysis: &Analysis,
    weighting: Weighting,
) -> Result<FileScore> {
    if let Some(pred) = predictions {
        let truth_keys: Vec<(&str, &str)> =
            truth.entries.iter().map(|e| (e.scope.as_str(), e.min.as_str())).collect();
        let mut pred_keys: Vec<(&str, &str)> =
            pred.entries.iter().map(|e| (e.scope.as_str(), e.min.as_str())).collect();
        let mut sorted_truth = truth_keys.clone();
        sorted_truth.sort();
        pred_keys.sort();
        if sorted_truth != pred_keys {
            return Err(Error::MapMismatch(
                "truth and prediction maps cover different bindings".into(),
            ));
        }
    }
    let mut score = FileScore::default();
    for entry in &truth.entries {
        let binding = binding_for_key(analysis, &entry.scope, &entry.min)?;
        let weight = match weighting {
            Weighting::Once => 1,
            Weighting::Repeat => analysis.scopes.binding(binding).occurrences.len() as u64,
        };
        score.total += weight;
        let predicted = predictions.and_then(|p| {
            p.entries
                .iter()
                .find(|e| e.scope == entry.scope && e.min == entry.min)
                .map(|e| e.pred.as_str())
        });
        if predicted == Some(entry.orig.as_str()) {
            score.correct += weight;
        }
    }
    Ok(score)
}

/// Scores one file's predictions against the ground truth under `kind`.
/// `analysis` is the minified file's analysis.
pub fn score_file(
    truth: &RenameMap,
    predictions: &PredictionMap,
    analysis: &Analysis,
    kind: MetricKind,
) -> Result<FileScore> {
    let mut score = local_scores(truth, Some(predictions), analysis, kind.weighting)?;
    if kind.locality == Locality::AllNames {
        for (_, occurrences) in global_counts(analysis) {
            let weight = match kind.weighting {
                Weighting::Once => 1,
                Weighting::Repeat => occurrences,
            };
            score.total += weight;
            score.correct += weight;
        }
    }
    Ok(score)
}

/// Score of a tool that predicts nothing: only globals contribute.
pub fn baseline(truth: &RenameMap, analysis: &Analysis, kind: MetricKind) -> Result<FileScore> {
    let mut score = local_scores(truth, None, analysis, kind.weighting)?;
    if kind.locality == Locality::AllNames {
        for (_, occurrences) in global_counts(analysis) {
            let weight = match kind.weighting {
                Weighting::Once => 1,
                Weighting::Repeat => occurrences,
            };
            score.total += weight;
            score.correct += weight;
        }
    }
    Ok(score)
}

/// Pooled percentage `Σcorrect / Σtotal`, to one decimal. Files with zero
/// total simply contribute nothing.
pub fn aggregate(scores: &[FileScore]) -> Result<f64> {
    let correct: u64 = scores.iter().map(|s| s.correct).sum();
    let total: u64 = scores.iter().map(|s| s.total).sum();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(round1(100.0 * correct as f64 / total as f64))
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Corpus-level timing summary in milliseconds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TimingStats {
    pub min_ms: f64,
    pub max_ms: f64,
    pub mean_ms: f64,
    pub median_ms: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Ok(TimingStats {
            min_ms: sorted[0],
            max_ms: sorted[n - 1],
            mean_ms: sorted.iter().sum::<f64>() / n as f64,
            median_ms: median,
        })
    }
}

/// Machine-readable corpus report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub local_once: f64,
    pub local_repeat: f64,
    pub all_once: f64,
    pub all_repeat: f64,
    pub baseline_all_once: f64,
    pub timing: TimingStats,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Plain-text table for humans.
    pub fn table(&self) -> String {
        format!(
            "metric          accuracy\n\
             local-once      {:>6.1}%\n\
             local-repeat    {:>6.1}%\n\
             all-once        {:>6.1}%\n\
             all-repeat      {:>6.1}%\n\
             baseline (all-once) {:>6.1}%\n\
             timing ms: min {:.1} / max {:.1} / mean {:.1} / median {:.1}\n",
            self.local_once,
            self.local_repeat,
            self.all_once,
            self.all_repeat,
            self.baseline_all_once,
            self.timing.min_ms,
            self.timing.max_ms,
            self.timing.mean_ms,
            self.timing.median_ms,
        )
    }
}
