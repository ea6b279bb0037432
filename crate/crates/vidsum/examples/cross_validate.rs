//! The full evaluation protocol on a planted-signal dataset: seeded 5-fold
//! split, per-fold training, held-out rank statistics, report CSV.
//!
//! ```bash
//! cargo run -p vidsum --example cross_validate
//! ```

use vidsum::dataset::make_folds;
use vidsum::eval::{cross_validate, render_report_csv, CrossValConfig};
use vidsum::sample::{planted_dataset, PlantedSpec};

fn main() {
    let spec = PlantedSpec {
        videos: 15,
        frames: 16,
        hidden_width: 16,
        noise: 0.05,
        seed: 4,
        ..PlantedSpec::default()
    };
    let (records, embeddings) = planted_dataset(&spec);
    let split = make_folds(&records, 5, 7).unwrap();

    let mut config = CrossValConfig::default();
    config.aggregator.projection_width = 16;
    config.aggregator.num_blocks = 1;
    config.aggregator.learning_rate = 5e-3;
    config.aggregator.epochs = 60;

    let report = cross_validate(&records, &embeddings, &split, &config).unwrap();
    print!("{}", render_report_csv(&report));
}
