//! Build a sliding window over a caption sequence and render the in-context
//! scoring prompt for its center frame.
//!
//! ```bash
//! cargo run -p vidsum --example render_prompt
//! ```

use vidsum::sample::mini_dataset;
use vidsum::scorer::{build_window, PromptTemplate};

fn main() {
    let records = mini_dataset();
    let record = &records[0];
    let captions = record.captions.as_ref().expect("sample video has captions");

    for t in [0, 5, record.frame_count - 1] {
        let window = build_window(t, 7, record.frame_count).unwrap();
        println!(
            "frame {t}: window [{}, {}], center position {} of {}",
            window.lo,
            window.hi,
            window.center_position,
            window.len()
        );
    }

    let window = build_window(5, 7, record.frame_count).unwrap();
    let prompt = PromptTemplate::builtin().render(captions, &window).unwrap();
    println!(
        "\nfull prompt is {} bytes; the query section spans bytes {}..{}:\n",
        prompt.text.len(),
        prompt.query_span.start,
        prompt.query_span.end
    );
    println!("{}", prompt.query_text());
}
