//! Temporal Jaccard-index scoring and the annotation text format.
//!
//! Intervals are 1-based inclusive in files and in memory; scoring
//! materializes binary frame indicators over an explicit per-sequence
//! horizon. A sequence's score averages per-class Jaccard indices over its
//! distinct ground-truth labels, and the corpus score is the arithmetic
//! mean over sequences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One labeled gesture occurrence, frames 1-based inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledInterval {
    pub start: u32,
    pub end: u32,
    pub label: u32,
}

impl LabeledInterval {
    pub fn new(start: u32, end: u32, label: u32) -> Result<Self> {
        if start < 1 || start > end {
            return Err(Error::InvalidParameter(format!(
                "interval {start}:{end} violates 1 <= start <= end"
            )));
        }
        if label == 0 {
            return Err(Error::InvalidParameter("label must be positive".into()));
        }
        Ok(Self { start, end, label })
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }
}

/// Per-sequence interval lists, ordered by sequence id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    sequences: BTreeMap<String, Vec<LabeledInterval>>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, intervals: Vec<LabeledInterval>) {
        self.sequences.insert(id.into(), intervals);
    }

    pub fn sequences(&self) -> &BTreeMap<String, Vec<LabeledInterval>> {
        &self.sequences
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Per-sequence scores plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct JaccardReport {
    pub per_sequence: BTreeMap<String, f64>,
    pub mean: f64,
}

fn indicator(intervals: &[LabeledInterval], label: u32, horizon: u32) -> Result<Vec<bool>> {
    let mut v = vec![false; horizon as usize];
    for iv in intervals.iter().filter(|iv| iv.label == label) {
        if iv.end > horizon {
            return Err(Error::IntervalBeyondHorizon {
                start: iv.start,
                end: iv.end,
                horizon,
            });
        }
        for f in iv.start..=iv.end {
            v[(f - 1) as usize] = true;
        }
    }
    Ok(v)
}

/// Jaccard index for one class: |G and P| / |G or P| over frame indicators,
/// 0 when both sides are empty.
pub fn jaccard_class(
    gt: &[LabeledInterval],
    pred: &[LabeledInterval],
    label: u32,
    horizon: u32,
) -> Result<f64> {
    let g = indicator(gt, label, horizon)?;
    let p = indicator(pred, label, horizon)?;
    let mut inter = 0u32;
    let mut union = 0u32;
    for (a, b) in g.iter().zip(&p) {
        inter += (*a && *b) as u32;
        union += (*a || *b) as u32;
    }
    if union == 0 {
        Ok(0.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

fn check_gt_disjoint(id: &str, gt: &[LabeledInterval]) -> Result<()> {
    let mut sorted: Vec<_> = gt.to_vec();
    sorted.sort_by_key(|iv| iv.start);
    for w in sorted.windows(2) {
        if w[1].start <= w[0].end {
            return Err(Error::OverlappingGroundTruth(id.to_string()));
        }
    }
    Ok(())
}

/// Sequence score: the sum of per-class Jaccard indices over every label
/// present in ground truth or prediction, divided by the count of distinct
/// ground-truth labels.
pub fn jaccard_sequence(
    id: &str,
    gt: &[LabeledInterval],
    pred: &[LabeledInterval],
    horizon: u32,
) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth(id.to_string()));
    }
    check_gt_disjoint(id, gt)?;
    let true_labels: BTreeSet<u32> = gt.iter().map(|iv| iv.label).collect();
    let all_labels: BTreeSet<u32> = true_labels
        .iter()
        .copied()
        .chain(pred.iter().map(|iv| iv.label))
        .collect();
    let mut sum = 0.0;
    for &label in &all_labels {
        sum += jaccard_class(gt, pred, label, horizon)?;
    }
    Ok(sum / true_labels.len() as f64)
}

/// Corpus score over every ground-truth sequence. A sequence with no
/// prediction entry scores against an empty prediction.
pub fn mean_jaccard(
    gt: &AnnotationSet,
    pred: &AnnotationSet,
    horizons: &BTreeMap<String, u32>,
) -> Result<JaccardReport> {
    if gt.is_empty() {
        return Err(Error::EmptyAnnotations);
    }
    let mut per_sequence = BTreeMap::new();
    let mut sum = 0.0;
    for (id, gt_intervals) in gt.sequences() {
        let horizon = *horizons.get(id).ok_or_else(|| {
            Error::InvalidParameter(format!("no horizon given for sequence {id}"))
        })?;
        let empty = Vec::new();
        let pred_intervals = pred.sequences().get(id).unwrap_or(&empty);
        let score = jaccard_sequence(id, gt_intervals, pred_intervals, horizon)?;
        sum += score;
        per_sequence.insert(id.clone(), score);
    }
    let mean = sum / per_sequence.len() as f64;
    Ok(JaccardReport { per_sequence, mean })
}

/// Parses the annotation text format: one line per sequence,
/// `<sequence_id> <start>:<end>:<label> ...`, whitespace separated,
/// frames 1-based inclusive. Blank lines are skipped.
pub fn parse_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_annotation_text(&text, path)
}

pub fn parse_annotation_text(text: &str, path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let mut set = AnnotationSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| Error::AnnotationParse {
            path: path.to_path_buf(),
            line: lineno + 1,
            detail,
        };
        let mut fields = line.split_whitespace();
        let id = fields.next().ok_or_else(|| err("missing sequence id".into()))?;
        let mut intervals = Vec::new();
        for field in fields {
            let parts: Vec<&str> = field.split(':').collect();
            if parts.len() != 3 {
                return Err(err(format!("bad interval token '{field}'")));
            }
            let nums: Vec<u32> = parts
                .iter()
                .map(|p| p.parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(format!("bad number in '{field}': {e}")))?;
            let interval = LabeledInterval::new(nums[0], nums[1], nums[2])
                .map_err(|e| err(e.to_string()))?;
            intervals.push(interval);
        }
        set.insert(id, intervals);
    }
    Ok(set)
}

/// Writes the annotation text format; [`parse_annotations`] inverts it.
pub fn write_annotations(set: &AnnotationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_annotations(set)).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn format_annotations(set: &AnnotationSet) -> String {
    let mut out = String::new();
    for (id, intervals) in set.sequences() {
        out.push_str(id);
        for iv in intervals {
            write!(out, " {}:{}:{}", iv.start, iv.end, iv.label).unwrap();
        }
        out.push('\n');
    }
    out
}
