//! Export a score curve against its ground truth as CSV plus a static SVG
//! line chart.
//!
//! ```bash
//! cargo run -p vidsum --example export_plots
//! ```

use vidsum::eval::plot::{render_curve_csv, render_curve_svg};
use vidsum::sample::mini_dataset;
use vidsum::series::ScoreSeries;

fn main() {
    let records = mini_dataset();
    let record = &records[0];
    let target = record.regression_target().unwrap();

    // a noisy echo of the target stands in for model output
    let predicted = ScoreSeries::new(
        target
            .iter()
            .enumerate()
            .map(|(i, &v)| 2.0 * v + 0.3 * ((i as f64 * 0.7).sin()))
            .collect(),
    );

    let csv = render_curve_csv(&predicted, target);
    let svg = render_curve_svg(&record.video_id, &predicted, target);

    let dir = std::env::temp_dir().join("vidsum_plots");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("curve.csv");
    let svg_path = dir.join("curve.svg");
    std::fs::write(&csv_path, &csv).unwrap();
    std::fs::write(&svg_path, &svg).unwrap();

    println!("first rows of {}:", csv_path.display());
    for line in csv.lines().take(6) {
        println!("  {line}");
    }
    println!("\nwrote {} ({} bytes)", svg_path.display(), svg.len());
}
