//! Materialize the bundled two-video sample dataset on disk in the
//! documented schema, ready for the CLI:
//!
//! ```bash
//! cargo run -p vidsum --example write_dataset -- data/demo
//! vidsum caption --dataset data/demo --out runs/demo --mock
//! ```

use vidsum::dataset::{load_dataset, schema};
use vidsum::sample::mini_dataset;

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/demo".to_string());
    let root = std::path::PathBuf::from(root);

    schema::save_dataset(&root, &mini_dataset()).unwrap();

    // read it back through the loader to show the round trip
    let records = load_dataset(&root).unwrap();
    println!("wrote {} videos under {}:", records.len(), root.display());
    for record in &records {
        println!(
            "  {}: {} frames, captions {}, change points {}, features {}, annotations {}",
            record.video_id,
            record.frame_count,
            if record.captions.is_some() { "yes" } else { "no" },
            if record.change_points.is_some() { "yes" } else { "no" },
            if record.frame_features.is_some() { "yes" } else { "no" },
            record
                .annotations
                .as_ref()
                .map(|a| a.mode().name())
                .unwrap_or("none"),
        );
    }
    println!("\nlayout:");
    println!("  {}/manifest.txt", root.display());
    for record in &records {
        println!("  {}/{}/...", root.display(), record.video_id);
    }
}
