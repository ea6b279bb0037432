//! Evaluation protocol: shot segmentation, knapsack summary selection under
//! the 15% budget, rank statistics, and cross-validation.

pub mod crossval;
pub mod knapsack;
pub mod kts;
pub mod plot;
pub mod rank;
pub mod report;

pub use crossval::{cross_validate, CrossValConfig, CrossValError, EvalReport, EvalRow};
pub use knapsack::{knapsack_select, KnapsackError, KnapsackSolution};
pub use kts::{kts_segment, kts_segment_with, KtsError, KtsKernel};
pub use rank::{kendall_tau, spearman_rho, RankError};
pub use report::{render_report_csv, write_report_csv};

use crate::dataset::{validate_partition, AnnotationSet, VideoRecord};
use crate::series::ScoreSeries;
use thiserror::Error;

/// Summary length budget: at most 15% of the frame count, rounded down.
/// Integer arithmetic so exact multiples stay exact.
pub fn summary_budget(frames: usize) -> usize {
    frames * 15 / 100
}

/// Contiguous inclusive (start, end) shots partitioning [0, T-1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotSegmentation {
    pub boundaries: Vec<(usize, usize)>,
}

impl ShotSegmentation {
    pub fn new(boundaries: Vec<(usize, usize)>, frames: usize) -> Result<Self, EvalError> {
        validate_partition(&boundaries, frames).map_err(EvalError::BadPartition)?;
        Ok(ShotSegmentation { boundaries })
    }

    pub fn frame_count(&self) -> usize {
        self.boundaries.last().map(|&(_, end)| end + 1).unwrap_or(0)
    }

    pub fn shot_lengths(&self) -> Vec<usize> {
        self.boundaries.iter().map(|&(s, e)| e - s + 1).collect()
    }
}

/// Shots chosen for the summary plus the induced binary frame mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummarySelection {
    pub selected_shots: Vec<usize>,
    pub mask: Vec<bool>,
    pub budget_frames: usize,
}

impl SummarySelection {
    pub fn selected_frames(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid shot partition: {0}")]
    BadPartition(String),
    #[error("scores cover {scores} frames but segmentation covers {frames}")]
    PartitionMismatch { scores: usize, frames: usize },
    #[error("video {video_id}: missing annotations")]
    MissingAnnotations { video_id: String },
    #[error("video {video_id}: scores cover {scores} frames, expected {frames}")]
    ScoreLength {
        video_id: String,
        scores: usize,
        frames: usize,
    },
    #[error("video {video_id}: no change points and no frame features for segmentation")]
    MissingSegmentation { video_id: String },
    #[error(transparent)]
    Kts(#[from] KtsError),
    #[error(transparent)]
    Knapsack(#[from] KnapsackError),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Mean frame score per shot.
pub fn shot_scores(scores: &ScoreSeries, seg: &ShotSegmentation) -> Result<Vec<f64>, EvalError> {
    if seg.frame_count() != scores.len() {
        return Err(EvalError::PartitionMismatch {
            scores: scores.len(),
            frames: seg.frame_count(),
        });
    }
    let values = scores.values();
    Ok(seg
        .boundaries
        .iter()
        .map(|&(s, e)| values[s..=e].iter().sum::<f64>() / (e - s + 1) as f64)
        .collect())
}

/// Score shots, solve the knapsack under the 15% budget, and expand the
/// selection into a frame mask.
pub fn select_summary(
    scores: &ScoreSeries,
    seg: &ShotSegmentation,
) -> Result<SummarySelection, EvalError> {
    let values = shot_scores(scores, seg)?;
    let lengths = seg.shot_lengths();
    let budget = summary_budget(scores.len());
    let solution = knapsack_select(&values, &lengths, budget)?;
    let mut mask = vec![false; scores.len()];
    for &shot in &solution.selected {
        let (s, e) = seg.boundaries[shot];
        for m in &mut mask[s..=e] {
            *m = true;
        }
    }
    Ok(SummarySelection {
        selected_shots: solution.selected,
        mask,
        budget_frames: budget,
    })
}

/// How rank statistics are computed for averaged-summary annotations.
/// The default converts predictions into a binary mask first; the
/// alternative correlates raw scores against the averaged curve directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryProtocol {
    MaskVsAverage,
    ScoresVsAverage,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub summary_protocol: SummaryProtocol,
    /// KTS settings used when a record carries features but no change points.
    pub kts_max_segments: usize,
    pub kts_penalty: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            summary_protocol: SummaryProtocol::MaskVsAverage,
            kts_max_segments: 12,
            kts_penalty: 0.5,
        }
    }
}

/// Per-video rank statistics. `None` marks an undefined coefficient (zero
/// variance); such videos are excluded from dataset means with a warning
/// counted in `undefined_comparisons`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoEval {
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub undefined_comparisons: usize,
}

fn rank_or_undefined(r: Result<f64, RankError>) -> Result<Option<f64>, EvalError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(RankError::ZeroVariance { .. }) => Ok(None),
        Err(e) => Err(EvalError::Rank(e)),
    }
}

/// Shot boundaries for a record: provided change points win; otherwise KTS
/// runs over the frame features.
pub fn record_segmentation(
    record: &VideoRecord,
    options: &EvalOptions,
) -> Result<ShotSegmentation, EvalError> {
    if let Some(points) = &record.change_points {
        return ShotSegmentation::new(points.clone(), record.frame_count);
    }
    if let Some(features) = &record.frame_features {
        let max_segments = options.kts_max_segments.min(record.frame_count).max(1);
        return Ok(kts_segment(features, max_segments, options.kts_penalty)?);
    }
    Err(EvalError::MissingSegmentation {
        video_id: record.video_id.clone(),
    })
}

/// Evaluate predicted scores against a record's annotations.
///
/// Per-user scores: tau/rho between the raw score series and each user's
/// row, averaged over users (undefined rows excluded). Averaged summary:
/// the default protocol converts scores to a binary mask via segmentation
/// plus knapsack selection under the 15% budget, then correlates the mask
/// with the averaged user summary.
pub fn evaluate_video(
    record: &VideoRecord,
    scores: &ScoreSeries,
    options: &EvalOptions,
) -> Result<VideoEval, EvalError> {
    let annotations = record
        .annotations
        .as_ref()
        .ok_or_else(|| EvalError::MissingAnnotations {
            video_id: record.video_id.clone(),
        })?;
    if scores.len() != record.frame_count {
        return Err(EvalError::ScoreLength {
            video_id: record.video_id.clone(),
            scores: scores.len(),
            frames: record.frame_count,
        });
    }

    match annotations {
        AnnotationSet::PerUserScores { user_scores, .. } => {
            let mut taus = Vec::new();
            let mut rhos = Vec::new();
            let mut undefined = 0usize;
            for row in user_scores {
                let tau = rank_or_undefined(kendall_tau(scores.values(), row))?;
                let rho = rank_or_undefined(spearman_rho(scores.values(), row))?;
                undefined += usize::from(tau.is_none()) + usize::from(rho.is_none());
                taus.extend(tau);
                rhos.extend(rho);
            }
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            Ok(VideoEval {
                tau: mean(&taus),
                rho: mean(&rhos),
                undefined_comparisons: undefined,
            })
        }
        AnnotationSet::AveragedSummary {
            averaged_summary, ..
        } => {
            let predicted: Vec<f64> = match options.summary_protocol {
                SummaryProtocol::MaskVsAverage => {
                    let seg = record_segmentation(record, options)?;
                    let summary = select_summary(scores, &seg)?;
                    summary
                        .mask
                        .iter()
                        .map(|&m| if m { 1.0 } else { 0.0 })
                        .collect()
                }
                SummaryProtocol::ScoresVsAverage => scores.values().to_vec(),
            };
            let tau = rank_or_undefined(kendall_tau(&predicted, averaged_summary))?;
            let rho = rank_or_undefined(spearman_rho(&predicted, averaged_summary))?;
            let undefined = usize::from(tau.is_none()) + usize::from(rho.is_none());
            Ok(VideoEval {
                tau,
                rho,
                undefined_comparisons: undefined,
            })
        }
    }
}
