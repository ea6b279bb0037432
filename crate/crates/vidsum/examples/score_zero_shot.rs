//! Zero-shot local scoring: one in-context prompt per frame, integer
//! answers parsed and rescaled to [0, 1].
//!
//! ```bash
//! cargo run -p vidsum --example score_zero_shot
//! ```

use vidsum::backend::{BackendClient, BackendConfig, MockEndpoint};
use vidsum::sample::mini_dataset;
use vidsum::scorer::{score_video_zero_shot, PromptTemplate};

fn main() {
    let records = mini_dataset();
    let record = &records[0]; // rail_crossing ships with captions

    let scorer =
        BackendClient::new(Box::new(MockEndpoint::new(3)), BackendConfig::default()).unwrap();
    let scores =
        score_video_zero_shot(record, &scorer, 7, PromptTemplate::builtin(), None).unwrap();

    println!("frame  caption (truncated)                              score");
    let captions = record.captions.as_ref().unwrap();
    for (t, &value) in scores.series.values().iter().enumerate() {
        let caption: String = captions.get(t).chars().take(48).collect();
        println!("{t:>5}  {caption:<48} {value:.1}");
    }
    if scores.filled.is_empty() {
        println!("\nno frames needed nearest-neighbor filling");
    } else {
        println!("\nfilled frames: {:?}", scores.filled);
    }
}
