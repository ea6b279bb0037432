//! Caption a video frame-by-frame through the mock backend, then show the
//! resumability contract: a failing run persists its prefix and a rerun
//! completes it with identical results.
//!
//! ```bash
//! cargo run -p vidsum --example caption_video
//! ```

use vidsum::backend::{BackendClient, BackendConfig, MockEndpoint};
use vidsum::caption::{generate_captions, CaptionGenError, PromptStyle};
use vidsum::sample::mini_dataset;

fn client(mock: MockEndpoint) -> BackendClient {
    BackendClient::new(Box::new(mock), BackendConfig::default()).unwrap()
}

fn main() {
    let records = mini_dataset();
    let record = &records[1]; // bike_show ships without captions

    let captioner = client(MockEndpoint::new(7));
    let sequence = generate_captions(record, &captioner, PromptStyle::Generic, None).unwrap();
    println!("captioned {} frames:", sequence.len());
    for (i, caption) in sequence.captions().iter().take(5).enumerate() {
        println!("  #{i}: {caption}");
    }
    println!("  ...");

    // interrupt at frame 6, persist the prefix, then resume
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("captions.txt");
    let flaky = MockEndpoint::new(7);
    flaky.fail_image_times("bike_f006", 5);
    match generate_captions(record, &client(flaky), PromptStyle::Generic, Some(&cache)) {
        Err(CaptionGenError::Backend { resume_index, .. }) => {
            println!("\ninterrupted at frame {resume_index}; prefix persisted");
        }
        other => panic!("expected an interrupted run, got {other:?}"),
    }
    let resumed =
        generate_captions(record, &client(MockEndpoint::new(7)), PromptStyle::Generic, Some(&cache))
            .unwrap();
    assert_eq!(resumed, sequence);
    println!("resumed run matches the uninterrupted sequence exactly");
}
