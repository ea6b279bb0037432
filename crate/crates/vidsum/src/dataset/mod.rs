//! Dataset records, annotation normalization, and fold splitting.
//!
//! The on-disk schema is line-delimited structured text with explicit
//! version headers (see [`schema`]); fixtures stay diffable and every
//! artifact round-trips exactly.

pub mod folds;
pub mod schema;

pub use folds::{make_folds, FoldSplit};
pub use schema::load_dataset;

use crate::caption::CaptionSequence;
use crate::mat::Mat;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: expected header {expected:?}, found {found:?}")]
    Version {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("video {video_id}: {field}: {message}")]
    Invariant {
        video_id: String,
        field: String,
        message: String,
    },
    #[error("fold count {k} out of range for {videos} videos")]
    FoldRange { k: usize, videos: usize },
}

/// Frame-level user annotations in one of the two benchmark styles.
///
/// `regression_target` is the single per-frame training target: the mean
/// over users for per-user scores, the averaged summary otherwise. All
/// values live in [0, 1] after ingestion normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum AnnotationSet {
    /// One score row per user (TVSum style).
    PerUserScores {
        user_scores: Vec<Vec<f64>>,
        regression_target: Vec<f64>,
    },
    /// Averaged binary user summaries (SumMe style).
    AveragedSummary {
        averaged_summary: Vec<f64>,
        regression_target: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationMode {
    PerUserScores,
    AveragedSummary,
}

impl AnnotationMode {
    pub fn name(self) -> &'static str {
        match self {
            AnnotationMode::PerUserScores => "per-user-scores",
            AnnotationMode::AveragedSummary => "averaged-summary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per-user-scores" => Some(AnnotationMode::PerUserScores),
            "averaged-summary" => Some(AnnotationMode::AveragedSummary),
            _ => None,
        }
    }
}

impl AnnotationSet {
    /// Build from raw per-user rows on a declared `[lo, hi]` scale.
    /// The regression target is the per-frame mean over users.
    pub fn per_user_from_raw(
        video_id: &str,
        mut rows: Vec<Vec<f64>>,
        scale: (f64, f64),
    ) -> Result<Self, DatasetError> {
        if rows.is_empty() {
            return Err(invariant(video_id, "annotations", "no user rows"));
        }
        let t = rows[0].len();
        for row in &mut rows {
            if row.len() != t {
                return Err(invariant(video_id, "annotations", "ragged user rows"));
            }
            normalize_into_unit(video_id, row, scale)?;
        }
        let mut target = vec![0.0; t];
        for row in &rows {
            for (acc, v) in target.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let users = rows.len() as f64;
        for v in &mut target {
            *v /= users;
        }
        Ok(AnnotationSet::PerUserScores {
            user_scores: rows,
            regression_target: target,
        })
    }

    /// Build from a raw averaged-summary vector on a declared scale; the
    /// normalized vector doubles as the regression target.
    pub fn averaged_from_raw(
        video_id: &str,
        mut summary: Vec<f64>,
        scale: (f64, f64),
    ) -> Result<Self, DatasetError> {
        if summary.is_empty() {
            return Err(invariant(video_id, "annotations", "empty summary"));
        }
        normalize_into_unit(video_id, &mut summary, scale)?;
        Ok(AnnotationSet::AveragedSummary {
            averaged_summary: summary.clone(),
            regression_target: summary,
        })
    }

    pub fn mode(&self) -> AnnotationMode {
        match self {
            AnnotationSet::PerUserScores { .. } => AnnotationMode::PerUserScores,
            AnnotationSet::AveragedSummary { .. } => AnnotationMode::AveragedSummary,
        }
    }

    pub fn regression_target(&self) -> &[f64] {
        match self {
            AnnotationSet::PerUserScores {
                regression_target, ..
            }
            | AnnotationSet::AveragedSummary {
                regression_target, ..
            } => regression_target,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.regression_target().len()
    }
}

/// Map values from a declared `[lo, hi]` scale linearly onto [0, 1].
/// The identity scale (0, 1) makes this idempotent on normalized data.
pub fn normalize_value(v: f64, lo: f64, hi: f64) -> f64 {
    (v - lo) / (hi - lo)
}

fn normalize_into_unit(
    video_id: &str,
    values: &mut [f64],
    (lo, hi): (f64, f64),
) -> Result<(), DatasetError> {
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(invariant(
            video_id,
            "annotations",
            "scale upper bound must exceed lower bound",
        ));
    }
    for v in values.iter_mut() {
        if !v.is_finite() || *v < lo || *v > hi {
            return Err(invariant(
                video_id,
                "annotations",
                &format!("value {v} outside declared scale [{lo}, {hi}]"),
            ));
        }
        *v = normalize_value(*v, lo, hi);
    }
    Ok(())
}

fn invariant(video_id: &str, field: &str, message: &str) -> DatasetError {
    DatasetError::Invariant {
        video_id: video_id.to_string(),
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// One video: frame references plus whatever per-video artifacts the
/// dataset ships (captions, change points, features, annotations).
#[derive(Debug, Clone)]
pub struct VideoRecord {
    pub video_id: String,
    pub frame_count: usize,
    pub frame_refs: Vec<String>,
    pub captions: Option<CaptionSequence>,
    /// Inclusive (start, end) shot boundaries partitioning [0, T-1].
    pub change_points: Option<Vec<(usize, usize)>>,
    /// Per-frame feature rows for KTS when change points are absent.
    pub frame_features: Option<Mat>,
    pub annotations: Option<AnnotationSet>,
}

impl VideoRecord {
    pub fn new(video_id: impl Into<String>, frame_refs: Vec<String>) -> Self {
        VideoRecord {
            video_id: video_id.into(),
            frame_count: frame_refs.len(),
            frame_refs,
            captions: None,
            change_points: None,
            frame_features: None,
            annotations: None,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let id = &self.video_id;
        if self.frame_count == 0 {
            return Err(invariant(id, "frame_count", "must be at least 1"));
        }
        if self.frame_refs.len() != self.frame_count {
            return Err(invariant(
                id,
                "frame_refs",
                &format!(
                    "{} refs for {} frames",
                    self.frame_refs.len(),
                    self.frame_count
                ),
            ));
        }
        if let Some(captions) = &self.captions {
            if captions.len() != self.frame_count {
                return Err(invariant(
                    id,
                    "captions",
                    &format!("{} captions for {} frames", captions.len(), self.frame_count),
                ));
            }
        }
        if let Some(points) = &self.change_points {
            validate_partition(points, self.frame_count)
                .map_err(|m| invariant(id, "change_points", &m))?;
        }
        if let Some(features) = &self.frame_features {
            if features.rows() != self.frame_count {
                return Err(invariant(
                    id,
                    "frame_features",
                    &format!("{} rows for {} frames", features.rows(), self.frame_count),
                ));
            }
        }
        if let Some(ann) = &self.annotations {
            if ann.frame_count() != self.frame_count {
                return Err(invariant(
                    id,
                    "annotations",
                    &format!("{} values for {} frames", ann.frame_count(), self.frame_count),
                ));
            }
            let in_unit = |vs: &[f64]| vs.iter().all(|v| (0.0..=1.0).contains(v));
            let ok = match ann {
                AnnotationSet::PerUserScores { user_scores, .. } => {
                    user_scores.iter().all(|row| in_unit(row))
                }
                AnnotationSet::AveragedSummary {
                    averaged_summary, ..
                } => in_unit(averaged_summary),
            };
            if !ok {
                return Err(invariant(id, "annotations", "values outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn regression_target(&self) -> Option<&[f64]> {
        self.annotations.as_ref().map(|a| a.regression_target())
    }
}

/// Check that inclusive (start, end) pairs partition [0, t-1] exactly:
/// contiguous, non-overlapping, sorted.
pub fn validate_partition(points: &[(usize, usize)], t: usize) -> Result<(), String> {
    if points.is_empty() {
        return Err("empty partition".into());
    }
    if points[0].0 != 0 {
        return Err(format!("non-contiguous partition: first start is {}", points[0].0));
    }
    let mut expected = 0usize;
    for &(start, end) in points {
        if start != expected {
            return Err(format!("non-contiguous partition at index {expected}"));
        }
        if end < start {
            return Err(format!("empty shot ({start}, {end})"));
        }
        expected = end + 1;
    }
    if expected != t {
        return Err(format!(
            "non-contiguous partition: last end is {}, expected {}",
            expected - 1,
            t - 1
        ));
    }
    Ok(())
}
