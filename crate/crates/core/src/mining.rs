//! Well timelines and the analytics queries over them.
//!
//! A timeline holds every classified sentence of one well in chronological
//! order. Queries are pure functions of the timelines.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierError, Label, TrainedClassifier};
use crate::corpus::{segment_sentences, Report};

#[derive(Debug, thiserror::Error)]
pub enum MiningError {
    #[error("no wells in input")]
    NoWells,
    #[error("unknown well {0:?}")]
    UnknownWell(String),
    #[error("no labeled sentences")]
    NoSentences,
    #[error("degenerate regression input: {0}")]
    Degenerate(&'static str),
    #[error("sequence horizon must be at least 1")]
    ZeroHorizon,
    #[error("timeline line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// One classified sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub date: NaiveDate,
    pub operator_id: String,
    /// Position of the source report in the input.
    pub report_index: usize,
    pub sentence_index: usize,
    pub sentence: String,
    pub label: Label,
    pub probabilities: Vec<f64>,
}

/// Entries sorted by `(date, report_index, sentence_index)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellTimeline {
    pub well_id: String,
    pub entries: Vec<TimelineEntry>,
}

impl WellTimeline {
    pub fn sort(&mut self) {
        self.entries.sort_by_key(|e| (e.date, e.report_index, e.sentence_index));
    }
}

/// Labels every sentence of every selected report, one timeline per well,
/// wells in ascending id order.
pub fn classify_corpus(
    reports: &[Report],
    classifier: &TrainedClassifier,
    npt_only: bool,
) -> Result<Vec<WellTimeline>, MiningError> {
    classify_corpus_with(reports, npt_only, |tokens| Ok(classifier.predict(tokens)?))
}

/// [`classify_corpus`] with an arbitrary sentence labeler.
pub fn classify_corpus_with<F>(
    reports: &[Report],
    npt_only: bool,
    mut label: F,
) -> Result<Vec<WellTimeline>, MiningError>
where
    F: FnMut(&[String]) -> Result<(Label, Vec<f64>), MiningError>,
{
    let mut wells: BTreeMap<&str, Vec<TimelineEntry>> = BTreeMap::new();
    for (report_index, report) in reports.iter().enumerate() {
        if npt_only && !report.npt {
            continue;
        }
        let entries = wells.entry(&report.well_id).or_default();
        for sentence in segment_sentences(report) {
            let (l, probabilities) = label(&sentence.tokens)?;
            entries.push(TimelineEntry {
                date: report.date,
                operator_id: report.operator_id.clone(),
                report_index,
                sentence_index: sentence.source.map_or(0, |s| s.index),
                sentence: sentence.tokens.join(" "),
                label: l,
                probabilities,
            });
        }
    }
    Ok(wells
        .into_iter()
        .map(|(well_id, entries)| {
            let mut t = WellTimeline {
                well_id: well_id.to_owned(),
                entries,
            };
            t.sort();
            t
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub wells_total: usize,
    pub wells_with_npt: usize,
    /// `1 − wells_with_npt / wells_total`.
    pub performance_estimate: f64,
    /// Distinct NPT report dates per well.
    pub npt_duration_per_well: BTreeMap<String, u64>,
    pub reports_per_well: BTreeMap<String, u64>,
}

impl FieldSummary {
    /// `(report count, NPT duration)` per well, in well order.
    pub fn duration_vs_reports(&self) -> (Vec<f64>, Vec<f64>) {
        self.reports_per_well
            .iter()
            .map(|(well, &n)| (n as f64, self.npt_duration_per_well[well] as f64))
            .unzip()
    }
}

pub fn field_summary(reports: &[Report]) -> Result<FieldSummary, MiningError> {
    let mut reports_per_well: BTreeMap<String, u64> = BTreeMap::new();
    let mut npt_dates: BTreeMap<&str, BTreeSet<NaiveDate>> = BTreeMap::new();
    for r in reports {
        *reports_per_well.entry(r.well_id.clone()).or_default() += 1;
        let dates = npt_dates.entry(&r.well_id).or_default();
        if r.npt {
            dates.insert(r.date);
        }
    }
    if reports_per_well.is_empty() {
        return Err(MiningError::NoWells);
    }
    let npt_duration_per_well: BTreeMap<String, u64> = npt_dates
        .into_iter()
        .map(|(w, d)| (w.to_owned(), d.len() as u64))
        .collect();
    let wells_total = reports_per_well.len();
    let wells_with_npt = npt_duration_per_well.values().filter(|&&d| d > 0).count();
    Ok(FieldSummary {
        wells_total,
        wells_with_npt,
        performance_estimate: 1.0 - wells_with_npt as f64 / wells_total as f64,
        npt_duration_per_well,
        reports_per_well,
    })
}

/// Wells by descending EVENT count, ties by well id; at most `top_n`.
pub fn rank_problematic_wells(timelines: &[WellTimeline], top_n: usize) -> Vec<(String, usize)> {
    let mut ranked: Vec<(String, usize)> = timelines
        .iter()
        .map(|t| {
            let events = t.entries.iter().filter(|e| e.label == Label::Event).count();
            (t.well_id.clone(), events)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    ranked
}

/// Label mix of one operator on one well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorProfile {
    pub operator_id: String,
    pub sentences: usize,
    /// EVENT, SYMPTOM, ACTION shares; they sum to 1.
    pub proportions: [f64; 3],
}

/// Per-operator label proportions on `well_id`, sorted by operator id.
pub fn operator_behavior(timelines: &[WellTimeline], well_id: &str) -> Result<Vec<OperatorProfile>, MiningError> {
    let timeline = timelines
        .iter()
        .find(|t| t.well_id == well_id)
        .ok_or_else(|| MiningError::UnknownWell(well_id.to_owned()))?;
    let mut counts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for e in &timeline.entries {
        counts.entry(&e.operator_id).or_default()[e.label.id()] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(op, c)| {
            let n: usize = c.iter().sum();
            OperatorProfile {
                operator_id: op.to_owned(),
                sentences: n,
                proportions: c.map(|x| x as f64 / n as f64),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; 0 when `ys` is constant.
    pub r: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn fit_regression(xs: &[f64], ys: &[f64]) -> Result<RegressionFit, MiningError> {
    if xs.len() != ys.len() {
        return Err(MiningError::Degenerate("xs and ys differ in length"));
    }
    if xs.len() < 2 {
        return Err(MiningError::Degenerate("fewer than two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(MiningError::Degenerate("non-finite value"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MiningError::Degenerate("all xs are equal"));
    }
    let slope = sxy / sxx;
    let r = if syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    Ok(RegressionFit {
        slope,
        intercept: my - slope * mx,
        r,
    })
}

/// A label plus an optional case-sensitive substring the sentence must contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelFilter {
    pub label: Label,
    pub contains: Option<String>,
}

impl LabelFilter {
    pub fn new(label: Label) -> Self {
        LabelFilter { label, contains: None }
    }

    pub fn containing(label: Label, text: impl Into<String>) -> Self {
        LabelFilter {
            label,
            contains: Some(text.into()),
        }
    }

    pub fn matches(&self, entry: &TimelineEntry) -> bool {
        entry.label == self.label && self.contains.as_deref().map_or(true, |s| entry.sentence.contains(s))
    }
}

/// An antecedent followed by a consequent within `horizon` entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequencePattern {
    pub antecedent: LabelFilter,
    pub consequent: LabelFilter,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMatch {
    pub well_id: String,
    pub antecedent_index: usize,
    pub consequent_index: usize,
    pub antecedent: TimelineEntry,
    pub consequent: TimelineEntry,
    /// Up to `horizon` entries after the consequent.
    pub outcome: Vec<TimelineEntry>,
}

/// Every antecedent/consequent pair with `0 < j − i ≤ horizon` in one well,
/// sorted by `(well, i, j)`.
pub fn find_sequences(
    timelines: &[WellTimeline],
    pattern: &SequencePattern,
) -> Result<Vec<SequenceMatch>, MiningError> {
    if pattern.horizon == 0 {
        return Err(MiningError::ZeroHorizon);
    }
    let mut out = Vec::new();
    for t in timelines {
        let es = &t.entries;
        for i in (0..es.len()).filter(|&i| pattern.antecedent.matches(&es[i])) {
            let end = (i + pattern.horizon).min(es.len() - 1);
            for j in (i + 1..=end).filter(|&j| pattern.consequent.matches(&es[j])) {
                let outcome_end = (j + 1 + pattern.horizon).min(es.len());
                out.push(SequenceMatch {
                    well_id: t.well_id.clone(),
                    antecedent_index: i,
                    consequent_index: j,
                    antecedent: es[i].clone(),
                    consequent: es[j].clone(),
                    outcome: es[j + 1..outcome_end].to_vec(),
                });
            }
        }
    }
    out.sort_by(|a, b| {
        (&a.well_id, a.antecedent_index, a.consequent_index).cmp(&(&b.well_id, b.antecedent_index, b.consequent_index))
    });
    Ok(out)
}

/// EVENT, SYMPTOM, ACTION shares over all entries.
pub fn label_distribution(timelines: &[WellTimeline]) -> Result<[f64; 3], MiningError> {
    let mut counts = [0usize; 3];
    for e in timelines.iter().flat_map(|t| &t.entries) {
        counts[e.label.id()] += 1;
    }
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(MiningError::NoSentences);
    }
    Ok(counts.map(|c| c as f64 / n as f64))
}

#[derive(Serialize, Deserialize)]
struct EntryLine {
    well_id: String,
    #[serde(flatten)]
    entry: TimelineEntry,
}

/// Writes one JSON object per entry.
pub fn write_timelines<W: Write>(timelines: &[WellTimeline], mut w: W) -> Result<(), MiningError> {
    for t in timelines {
        for e in &t.entries {
            let line = EntryLine {
                well_id: t.well_id.clone(),
                entry: e.clone(),
            };
            serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads the output of [`write_timelines`], regrouping entries by well.
pub fn read_timelines<R: BufRead>(r: R) -> Result<Vec<WellTimeline>, MiningError> {
    let mut wells: BTreeMap<String, Vec<TimelineEntry>> = BTreeMap::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EntryLine = serde_json::from_str(&line).map_err(|e| MiningError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        wells.entry(parsed.well_id).or_default().push(parsed.entry);
    }
    Ok(wells
        .into_iter()
        .map(|(well_id, entries)| {
            let mut t = WellTimeline { well_id, entries };
            t.sort();
            t
        })
        .collect())
}
