//! Caption-driven video summarization.
//!
//! The pipeline turns a video (a sequence of frame references) into
//! per-frame importance scores and a shot-level summary:
//!
//! 1. **Caption** every frame through a captioning backend.
//! 2. **Score locally**: slide a window over the captions, build an
//!    in-context prompt per center frame, and query an LLM backend either
//!    for an integer score (zero-shot path) or for query/answer output
//!    embeddings.
//! 3. **Aggregate globally**: pool each frame's embeddings and run trainable
//!    self-attention blocks over the whole video to regress final scores.
//! 4. **Evaluate**: kernel temporal segmentation, 0/1-knapsack shot
//!    selection under a 15% length budget, Kendall's tau / Spearman's rho
//!    against user annotations, k-fold cross-validation.
//!
//! Every stage runs against an in-process deterministic mock backend, so the
//! full pipeline is reproducible offline.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p vidsum --example write_dataset
//! cargo run -p vidsum --example render_prompt
//! cargo run -p vidsum --example caption_video
//! cargo run -p vidsum --example score_zero_shot
//! cargo run -p vidsum --example embed_video
//! cargo run -p vidsum --example train_aggregator
//! cargo run -p vidsum --example cross_validate
//! cargo run -p vidsum --example summarize_video
//! cargo run -p vidsum --example export_plots
//! ```
//!
//! The `vidsum` binary exposes the same stages as subcommands; see the
//! crate README.

pub mod aggregator;
pub mod backend;
pub mod caption;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod mat;
pub mod sample;
pub mod scorer;
pub mod series;
mod util;

pub use backend::{BackendClient, BackendConfig, EmbeddingPair, MockEndpoint};
pub use mat::Mat;
pub use series::ScoreSeries;
