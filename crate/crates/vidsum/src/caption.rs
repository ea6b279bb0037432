//! Frame captioning: drive the captioner backend frame-by-frame, or pass
//! through precomputed captions.
//!
//! Captioning T frames over a network is the slowest pipeline stage, so
//! generation is resumable: the completed prefix is persisted after every
//! frame and a rerun picks up where the failure happened.

use crate::backend::{truncate_tokens, BackendClient, BackendError};
use crate::dataset::{schema, DatasetError, VideoRecord};
use std::path::Path;
use thiserror::Error;

/// Prompt sent for the default one-sentence caption.
pub const GENERIC_PROMPT: &str = "Provide a detailed one-sentence description.";
/// Prompts for the two-part center/background captioning style.
pub const CENTER_PROMPT: &str = "Describe the center part of this image in one detailed sentence.";
pub const BACKGROUND_PROMPT: &str =
    "Describe the background part of this image in one detailed sentence.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptStyle {
    /// One generic request per frame.
    Generic,
    /// Separate center and background sentences, joined with a space.
    CentralBackground,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptionSource {
    Generated,
    Loaded,
}

/// One caption per frame. Every caption is non-empty and within the
/// whitespace-token cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionSequence {
    captions: Vec<String>,
    source: CaptionSource,
    token_cap: usize,
}

impl CaptionSequence {
    pub fn new(
        captions: Vec<String>,
        source: CaptionSource,
        token_cap: usize,
    ) -> Result<Self, CaptionError> {
        if captions.is_empty() {
            return Err(CaptionError::Empty);
        }
        for (i, c) in captions.iter().enumerate() {
            if c.trim().is_empty() {
                return Err(CaptionError::BlankCaption { frame: i });
            }
            let tokens = c.split_whitespace().count();
            if tokens > token_cap {
                return Err(CaptionError::OverCap {
                    frame: i,
                    tokens,
                    cap: token_cap,
                });
            }
        }
        Ok(CaptionSequence {
            captions,
            source,
            token_cap,
        })
    }

    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }

    pub fn get(&self, frame: usize) -> &str {
        &self.captions[frame]
    }

    pub fn captions(&self) -> &[String] {
        &self.captions
    }

    pub fn source(&self) -> CaptionSource {
        self.source
    }

    pub fn token_cap(&self) -> usize {
        self.token_cap
    }
}

#[derive(Debug, Error)]
pub enum CaptionError {
    #[error("caption sequence must not be empty")]
    Empty,
    #[error("caption for frame {frame} is blank")]
    BlankCaption { frame: usize },
    #[error("caption for frame {frame} has {tokens} tokens, cap is {cap}")]
    OverCap { frame: usize, tokens: usize, cap: usize },
}

#[derive(Debug, Error)]
pub enum CaptionGenError {
    /// Backend failed at `resume_index`; frames before it are persisted
    /// when a cache path was given, and a rerun resumes there.
    #[error("captioning failed at frame {resume_index}: {source}")]
    Backend {
        resume_index: usize,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Invalid(#[from] CaptionError),
    #[error("caption cache: {0}")]
    Cache(#[from] DatasetError),
    #[error("cached captions cover {cached} frames but the video has {frames}")]
    CacheMismatch { cached: usize, frames: usize },
}

/// Caption every frame of `record`, in order. With `cache` set, progress is
/// persisted after each frame and an existing prefix is reused, so a rerun
/// after a failure produces the same sequence an uninterrupted run would.
pub fn generate_captions(
    record: &VideoRecord,
    captioner: &BackendClient,
    style: PromptStyle,
    cache: Option<&Path>,
) -> Result<CaptionSequence, CaptionGenError> {
    let total = record.frame_count;
    let cap = captioner.config().caption_token_cap;

    let mut captions: Vec<String> = match cache {
        Some(path) if path.exists() => {
            let cached = schema::load_captions(path)?;
            if cached.len() > total {
                return Err(CaptionGenError::CacheMismatch {
                    cached: cached.len(),
                    frames: total,
                });
            }
            cached.captions().to_vec()
        }
        _ => Vec::new(),
    };

    for frame in captions.len()..total {
        let image_ref = &record.frame_refs[frame];
        let caption = match style {
            PromptStyle::Generic => captioner.caption_image(image_ref, GENERIC_PROMPT),
            PromptStyle::CentralBackground => {
                caption_two_part(captioner, image_ref, cap)
            }
        };
        match caption {
            Ok(caption) => {
                captions.push(caption);
                if let Some(path) = cache {
                    persist_prefix(path, &captions, cap)?;
                }
            }
            Err(source) => {
                if let Some(path) = cache {
                    if !captions.is_empty() {
                        persist_prefix(path, &captions, cap)?;
                    }
                }
                return Err(CaptionGenError::Backend {
                    resume_index: frame,
                    source,
                });
            }
        }
    }

    let sequence = CaptionSequence::new(captions, CaptionSource::Generated, cap)?;
    if let Some(path) = cache {
        schema::save_captions(path, &sequence)?;
    }
    Ok(sequence)
}

fn caption_two_part(
    captioner: &BackendClient,
    image_ref: &str,
    cap: usize,
) -> Result<String, BackendError> {
    let center = captioner.caption_image(image_ref, CENTER_PROMPT)?;
    let background = captioner.caption_image(image_ref, BACKGROUND_PROMPT)?;
    Ok(truncate_tokens(&format!("{center} {background}"), cap))
}

fn persist_prefix(path: &Path, captions: &[String], cap: usize) -> Result<(), CaptionGenError> {
    let prefix = CaptionSequence::new(captions.to_vec(), CaptionSource::Generated, cap)?;
    schema::save_captions(path, &prefix)?;
    Ok(())
}
