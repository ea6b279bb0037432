//! Extract query/answer output embeddings for every frame and persist them
//! for training reuse; a second call hits the cache without touching the
//! backend.
//!
//! ```bash
//! cargo run -p vidsum --example embed_video
//! ```

use std::sync::Arc;
use vidsum::backend::{BackendClient, BackendConfig, MockEndpoint};
use vidsum::sample::mini_dataset;
use vidsum::scorer::{embed_video, PromptTemplate};

fn main() {
    let records = mini_dataset();
    let record = &records[0];

    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("embeddings.txt");

    let mock = Arc::new(MockEndpoint::new(5).with_hidden_width(16));
    let client = BackendClient::new(Box::new(mock.clone()), BackendConfig::default()).unwrap();

    let pairs = embed_video(record, &client, 7, PromptTemplate::builtin(), Some(&cache)).unwrap();
    println!(
        "extracted {} embedding pairs (hidden width {}) with {} backend calls",
        pairs.len(),
        pairs[0].hidden_width(),
        mock.calls()
    );
    for (t, pair) in pairs.iter().take(3).enumerate() {
        println!(
            "  frame {t}: L_q = {:>3} query tokens, L_a = {} answer tokens",
            pair.query_len(),
            pair.answer_len()
        );
    }

    let before = mock.calls();
    let cached = embed_video(record, &client, 7, PromptTemplate::builtin(), Some(&cache)).unwrap();
    assert_eq!(cached, pairs);
    println!(
        "second call served from {} with {} additional backend calls",
        cache.display(),
        mock.calls() - before
    );
}
