//! Local importance scoring: sliding-window prompts against the LLM
//! backend, yielding either parsed integer scores (zero-shot path) or
//! query/answer embedding pairs for the trainable aggregator.

pub mod parse;
pub mod prompt;

pub use parse::{format_score, parse_score, ScoreParseError};
pub use prompt::{PromptTemplate, TemplateError, WindowPrompt};

use crate::backend::{BackendClient, BackendError, EmbeddingPair};
use crate::dataset::{schema, DatasetError, VideoRecord};
use crate::series::ScoreSeries;
use crate::util::atomic_write;
use std::path::Path;
use thiserror::Error;

/// A sliding window clamped to the sequence boundaries. `center_position`
/// is the 1-based index of the center inside the window, as named in the
/// prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSpec {
    pub center: usize,
    pub lo: usize,
    pub hi: usize,
    pub center_position: usize,
    pub window_size: usize,
}

impl WindowSpec {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// One parsed local score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalScore {
    pub frame: usize,
    pub value: u8,
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("frame index {t} out of range for {frames} frames")]
    FrameOutOfRange { t: usize, frames: usize },
    #[error("window size must be an odd integer >= 3, got {0}")]
    BadWindow(usize),
    #[error("video {0}: captions required but absent")]
    CaptionsMissing(String),
    #[error("scoring failed at frame {resume_index}: {source}")]
    Backend {
        resume_index: usize,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("cache: {0}")]
    Cache(#[from] DatasetError),
    #[error("cached artifact covers {cached} frames but the video has {frames}")]
    CacheMismatch { cached: usize, frames: usize },
    #[error("no frame produced a parsable score")]
    AllMissing,
    #[error("inconsistent hidden width: frame {frame} has {got}, expected {expected}")]
    InconsistentWidth {
        frame: usize,
        expected: usize,
        got: usize,
    },
}

/// Clamp the window of size `w` around frame `t` to `[0, frames-1]`.
pub fn build_window(t: usize, w: usize, frames: usize) -> Result<WindowSpec, ScorerError> {
    if t >= frames {
        return Err(ScorerError::FrameOutOfRange { t, frames });
    }
    if w < 3 || w % 2 == 0 {
        return Err(ScorerError::BadWindow(w));
    }
    let half = w / 2;
    let lo = t.saturating_sub(half);
    let hi = (t + half).min(frames - 1);
    Ok(WindowSpec {
        center: t,
        lo,
        hi,
        center_position: t - lo + 1,
        window_size: w,
    })
}

/// Zero-shot scores: parsed integers rescaled to [0, 1], with unparsable
/// frames filled by their nearest scored neighbor and listed in `filled`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotScores {
    pub series: ScoreSeries,
    pub filled: Vec<usize>,
}

/// Score every frame through the in-context prompt. An unparsable answer is
/// retried once, then recorded as missing and filled at the end. With
/// `cache` set, progress persists across transport failures just like
/// caption generation.
pub fn score_video_zero_shot(
    record: &VideoRecord,
    scorer: &BackendClient,
    w: usize,
    template: &PromptTemplate,
    cache: Option<&Path>,
) -> Result<ZeroShotScores, ScorerError> {
    let captions = record
        .captions
        .as_ref()
        .ok_or_else(|| ScorerError::CaptionsMissing(record.video_id.clone()))?;
    let total = record.frame_count;

    let mut raw: Vec<Option<u8>> = match cache {
        Some(path) if path.exists() => {
            let cached = load_partial_scores(path)?;
            if cached.len() > total {
                return Err(ScorerError::CacheMismatch {
                    cached: cached.len(),
                    frames: total,
                });
            }
            cached
        }
        _ => Vec::new(),
    };

    for t in raw.len()..total {
        let window = build_window(t, w, total)?;
        let prompt = template.render(captions, &window)?;
        let value = match ask_for_score(scorer, &prompt.text) {
            Ok(v) => v,
            Err(source) => {
                if let Some(path) = cache {
                    save_partial_scores(path, &raw)?;
                }
                return Err(ScorerError::Backend {
                    resume_index: t,
                    source,
                });
            }
        };
        raw.push(value);
        if let Some(path) = cache {
            save_partial_scores(path, &raw)?;
        }
    }

    let (values, filled) = fill_missing(&raw)?;
    Ok(ZeroShotScores {
        series: ScoreSeries::new(values.iter().map(|&v| v as f64 / 10.0).collect()),
        filled,
    })
}

/// One backend call plus a single retry on an unparsable answer; `Ok(None)`
/// marks the frame as missing for nearest-neighbor filling.
fn ask_for_score(scorer: &BackendClient, prompt: &str) -> Result<Option<u8>, BackendError> {
    for attempt in 0..2 {
        let answer = scorer.complete_text(prompt)?;
        match parse_score(&answer) {
            Ok(v) => return Ok(Some(v)),
            Err(_) if attempt == 0 => continue,
            Err(_) => return Ok(None),
        }
    }
    Ok(None)
}

/// Fill missing entries with the value of the nearest scored frame,
/// preferring the left neighbor on ties.
fn fill_missing(raw: &[Option<u8>]) -> Result<(Vec<u8>, Vec<usize>), ScorerError> {
    if raw.iter().all(|v| v.is_none()) {
        return Err(ScorerError::AllMissing);
    }
    let n = raw.len();
    let mut left: Vec<Option<(usize, u8)>> = vec![None; n]; // (distance, value)
    let mut last: Option<(usize, u8)> = None;
    for i in 0..n {
        if let Some(v) = raw[i] {
            last = Some((i, v));
        }
        left[i] = last.map(|(j, v)| (i - j, v));
    }
    let mut right: Vec<Option<(usize, u8)>> = vec![None; n];
    let mut next: Option<(usize, u8)> = None;
    for i in (0..n).rev() {
        if let Some(v) = raw[i] {
            next = Some((i, v));
        }
        right[i] = next.map(|(j, v)| (j - i, v));
    }

    let mut values = Vec::with_capacity(n);
    let mut filled = Vec::new();
    for i in 0..n {
        match raw[i] {
            Some(v) => values.push(v),
            None => {
                let v = match (left[i], right[i]) {
                    (Some((dl, vl)), Some((dr, vr))) => {
                        if dl <= dr {
                            vl
                        } else {
                            vr
                        }
                    }
                    (Some((_, vl)), None) => vl,
                    (None, Some((_, vr))) => vr,
                    (None, None) => unreachable!("all-missing handled above"),
                };
                values.push(v);
                filled.push(i);
            }
        }
    }
    Ok((values, filled))
}

/// One embedding pair per frame, persisted through `cache` for training
/// reuse. A complete cache short-circuits without any backend call; a
/// partial cache resumes where it stopped.
pub fn embed_video(
    record: &VideoRecord,
    scorer: &BackendClient,
    w: usize,
    template: &PromptTemplate,
    cache: Option<&Path>,
) -> Result<Vec<EmbeddingPair>, ScorerError> {
    let captions = record
        .captions
        .as_ref()
        .ok_or_else(|| ScorerError::CaptionsMissing(record.video_id.clone()))?;
    let total = record.frame_count;

    let mut pairs: Vec<EmbeddingPair> = match cache {
        Some(path) if path.exists() => {
            let cached = schema::load_embeddings(path)?;
            if cached.len() > total {
                return Err(ScorerError::CacheMismatch {
                    cached: cached.len(),
                    frames: total,
                });
            }
            cached
        }
        _ => Vec::new(),
    };
    if pairs.len() == total {
        check_widths(&pairs)?;
        return Ok(pairs);
    }

    for t in pairs.len()..total {
        let window = build_window(t, w, total)?;
        let prompt = template.render(captions, &window)?;
        match scorer.complete_with_embeddings(&prompt.text, prompt.query_span.clone()) {
            Ok((_, pair)) => {
                if let Some(first) = pairs.first() {
                    if pair.hidden_width() != first.hidden_width() {
                        return Err(ScorerError::InconsistentWidth {
                            frame: t,
                            expected: first.hidden_width(),
                            got: pair.hidden_width(),
                        });
                    }
                }
                pairs.push(pair);
            }
            Err(source) => {
                if let Some(path) = cache {
                    if !pairs.is_empty() {
                        schema::save_embeddings(path, &pairs)?;
                    }
                }
                return Err(ScorerError::Backend {
                    resume_index: t,
                    source,
                });
            }
        }
    }

    if let Some(path) = cache {
        schema::save_embeddings(path, &pairs)?;
    }
    Ok(pairs)
}

fn check_widths(pairs: &[EmbeddingPair]) -> Result<(), ScorerError> {
    if let Some(first) = pairs.first() {
        for (i, p) in pairs.iter().enumerate() {
            if p.hidden_width() != first.hidden_width() {
                return Err(ScorerError::InconsistentWidth {
                    frame: i,
                    expected: first.hidden_width(),
                    got: p.hidden_width(),
                });
            }
        }
    }
    Ok(())
}

// Partial zero-shot scores: an internal resume artifact, one line per
// completed frame, either an integer or "missing".
const PARTIAL_SCORES_VERSION: &str = "vidsum local-scores v1";

fn save_partial_scores(path: &Path, raw: &[Option<u8>]) -> Result<(), ScorerError> {
    let mut s = format!("{PARTIAL_SCORES_VERSION}\nframes {}\n---\n", raw.len());
    for v in raw {
        match v {
            Some(v) => s.push_str(&format!("{v}\n")),
            None => s.push_str("missing\n"),
        }
    }
    atomic_write(path, s.as_bytes()).map_err(|source| {
        ScorerError::Cache(DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn load_partial_scores(path: &Path) -> Result<Vec<Option<u8>>, ScorerError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        ScorerError::Cache(DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
    })?;
    let schema_err = |line: usize, message: String| {
        ScorerError::Cache(DatasetError::Schema {
            path: path.to_path_buf(),
            line,
            message,
        })
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(v) if v == PARTIAL_SCORES_VERSION => {}
        other => {
            return Err(ScorerError::Cache(DatasetError::Version {
                path: path.to_path_buf(),
                expected: PARTIAL_SCORES_VERSION.into(),
                found: other.unwrap_or("").into(),
            }))
        }
    }
    let count: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("frames "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| schema_err(2, "expected 'frames N'".into()))?;
    if lines.next() != Some("---") {
        return Err(schema_err(3, "expected separator".into()));
    }
    let mut raw = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        if line == "missing" {
            raw.push(None);
        } else {
            let v: u8 = line
                .trim()
                .parse()
                .map_err(|_| schema_err(i + 4, format!("bad score line {line:?}")))?;
            raw.push(Some(v));
        }
    }
    if raw.len() != count {
        return Err(schema_err(0, format!("declared {count} frames, found {}", raw.len())));
    }
    Ok(raw)
}
