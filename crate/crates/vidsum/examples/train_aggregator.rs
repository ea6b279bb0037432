//! Train the attention aggregator on a planted-signal dataset and watch the
//! loss fall; the held-out video is then scored with the trained weights.
//!
//! ```bash
//! cargo run -p vidsum --example train_aggregator
//! ```

use vidsum::aggregator::{predict, train, AggregatorConfig, TrainItem};
use vidsum::eval::kendall_tau;
use vidsum::sample::{planted_dataset, PlantedSpec};

fn main() {
    let spec = PlantedSpec {
        videos: 8,
        frames: 16,
        hidden_width: 16,
        noise: 0.05,
        seed: 21,
        ..PlantedSpec::default()
    };
    let (records, embeddings) = planted_dataset(&spec);

    let items: Vec<TrainItem> = records
        .iter()
        .map(|r| TrainItem {
            pairs: embeddings[&r.video_id].clone(),
            target: r.regression_target().unwrap().to_vec(),
        })
        .collect();

    let mut config = AggregatorConfig::default();
    config.projection_width = 16;
    config.num_blocks = 1;
    config.learning_rate = 5e-3;
    config.epochs = 80;
    config.seed = 2;

    let (held_out, train_set) = items.split_last().unwrap();
    let outcome = train(train_set, &config).unwrap();

    println!("epoch    mse");
    for (epoch, loss) in outcome.history.iter().enumerate() {
        if epoch % 10 == 0 || epoch + 1 == outcome.history.len() {
            println!("{epoch:>5}  {loss:.6}");
        }
    }

    let series = predict(&held_out.pairs, &outcome.params, &config, false).unwrap();
    let tau = kendall_tau(series.values(), &held_out.target).unwrap();
    println!("\nheld-out video: Kendall tau {tau:.3} against the planted target");
}
