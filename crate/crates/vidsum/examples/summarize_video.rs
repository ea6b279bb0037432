//! Turn frame scores into a shot-level summary: segment (provided change
//! points, or kernel temporal segmentation over features), aggregate scores
//! per shot, and solve the 0/1 knapsack under the 15% frame budget.
//!
//! ```bash
//! cargo run -p vidsum --example summarize_video
//! ```

use vidsum::eval::{record_segmentation, select_summary, shot_scores, EvalOptions};
use vidsum::sample::mini_dataset;
use vidsum::series::ScoreSeries;

fn main() {
    let records = mini_dataset();
    let options = EvalOptions::default();

    for record in &records {
        // synthetic scores peaking in the middle of the video
        let t = record.frame_count;
        let scores = ScoreSeries::new(
            (0..t)
                .map(|i| {
                    let x = i as f64 / (t - 1) as f64;
                    1.0 - (2.0 * x - 1.0) * (2.0 * x - 1.0)
                })
                .collect(),
        );

        let seg = record_segmentation(record, &options).unwrap();
        let values = shot_scores(&scores, &seg).unwrap();
        let summary = select_summary(&scores, &seg).unwrap();

        println!("{} ({t} frames, budget {} frames)", record.video_id, summary.budget_frames);
        for (i, (&(lo, hi), value)) in seg.boundaries.iter().zip(&values).enumerate() {
            let marker = if summary.selected_shots.contains(&i) {
                "selected"
            } else {
                ""
            };
            println!("  shot {i}: frames {lo:>2}-{hi:<2}  mean score {value:.3}  {marker}");
        }
        let mask: String = summary
            .mask
            .iter()
            .map(|&m| if m { '#' } else { '.' })
            .collect();
        println!("  mask: {mask}\n");
    }
}
