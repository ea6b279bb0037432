//! Small synthetic datasets for examples and tests: a two-video mini
//! dataset exercising both annotation modes, and planted-signal datasets
//! where the training target is recoverable from the embeddings by
//! construction.

use crate::backend::EmbeddingPair;
use crate::dataset::{AnnotationSet, VideoRecord};
use crate::mat::Mat;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Two small videos: one with captions, change points, and an
/// averaged-summary annotation; one with frame features and per-user
/// scores, captions left to the captioning stage.
pub fn mini_dataset() -> Vec<VideoRecord> {
    let rail_captions = [
        "A group of people are standing in the middle of a street.",
        "A group of people are standing in front of a traffic light.",
        "A group of people are standing on a roadway near a railroad crossing.",
        "A man is standing on a railroad crossing.",
        "A man is standing on a railroad crossing.",
        "A car is driving on a street with a red light.",
        "A car is driving on a road with a man standing next to a railroad crossing.",
        "A man is pushing a large metal object in front of a train.",
        "A man is sitting on a couch in the middle of a street.",
        "A car is driving through a red light.",
        "A man is standing on a railroad crossing.",
        "A group of people are standing on a street corner.",
        "A group of people are standing on a ramp in the middle of a street.",
        "A group of people are standing on a road that is blocked off.",
        "A group of people are standing around a car that is stuck in a puddle.",
        "A group of people are standing around a car that is on its side.",
        "A group of people are standing around a car that is on its side.",
        "A man is holding a rock in his hand.",
        "A man is sitting on a chair and holding a car hood.",
        "A man is holding a car door open while another man is holding a piece of paper.",
    ];
    let t = rail_captions.len();
    let mut rail = VideoRecord::new(
        "rail_crossing",
        (0..t).map(|i| format!("rail_f{i:03}")).collect(),
    );
    rail.captions = Some(
        crate::caption::CaptionSequence::new(
            rail_captions.iter().map(|c| c.to_string()).collect(),
            crate::caption::CaptionSource::Loaded,
            77,
        )
        .expect("fixture captions are valid"),
    );
    rail.change_points = Some(vec![(0, 4), (5, 10), (11, 16), (17, 19)]);
    // the middle shots carry the action
    let summary: Vec<f64> = (0..t)
        .map(|i| if (5..=10).contains(&i) { 1.0 } else { 0.0 })
        .collect();
    rail.annotations =
        Some(AnnotationSet::averaged_from_raw("rail_crossing", summary, (0.0, 1.0)).unwrap());

    let t2 = 15;
    let mut bike = VideoRecord::new(
        "bike_show",
        (0..t2).map(|i| format!("bike_f{i:03}")).collect(),
    );
    // piecewise-constant features give KTS clean plateaus
    bike.frame_features = Some(
        Mat::from_rows(
            &(0..t2)
                .map(|i| vec![if i < 5 { 0.0 } else if i < 10 { 3.0 } else { 1.0 }, 0.5])
                .collect::<Vec<_>>(),
        )
        .unwrap(),
    );
    let users: Vec<Vec<f64>> = (0..3)
        .map(|u| {
            (0..t2)
                .map(|i| {
                    let base = if (5..10).contains(&i) { 4.0 } else { 1.0 };
                    ((base + ((i + u) % 2) as f64).min(5.0)).max(1.0)
                })
                .collect()
        })
        .collect();
    bike.annotations =
        Some(AnnotationSet::per_user_from_raw("bike_show", users, (1.0, 5.0)).unwrap());

    vec![rail, bike]
}

/// Where the recoverable signal sits in a planted dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedSignal {
    /// Coordinate 0 of the query embedding equals the target plus noise.
    Query,
    /// Coordinate 0 of the answer embedding equals the target plus noise.
    Answer,
    /// Coordinate 0 of the query embedding carries a latent; the target is
    /// the windowed mean of that latent (radius given), so recovering it
    /// needs cross-frame context.
    ContextualQuery { radius: usize },
}

#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub videos: usize,
    pub frames: usize,
    pub hidden_width: usize,
    pub noise: f64,
    pub seed: u64,
    pub signal: PlantedSignal,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            videos: 25,
            frames: 16,
            hidden_width: 16,
            noise: 0.05,
            seed: 0,
            signal: PlantedSignal::Query,
        }
    }
}

/// Build records (one synthetic user per video) plus their embedding pairs.
/// Targets are a shuffled uniform grid over [0, 1], so ranks are well
/// separated relative to the noise.
pub fn planted_dataset(
    spec: &PlantedSpec,
) -> (Vec<VideoRecord>, BTreeMap<String, Vec<EmbeddingPair>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.hidden_width;
    let t = spec.frames;
    let mut records = Vec::with_capacity(spec.videos);
    let mut embeddings = BTreeMap::new();

    for i in 0..spec.videos {
        let id = format!("v{i:02}");
        let latent: Vec<f64> = {
            let mut grid: Vec<f64> = (0..t).map(|j| j as f64 / (t - 1) as f64).collect();
            grid.shuffle(&mut rng);
            grid
        };
        let target: Vec<f64> = match spec.signal {
            PlantedSignal::Query | PlantedSignal::Answer => latent.clone(),
            PlantedSignal::ContextualQuery { radius } => (0..t)
                .map(|j| {
                    let lo = j.saturating_sub(radius);
                    let hi = (j + radius).min(t - 1);
                    latent[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
                })
                .collect(),
        };

        let mut pairs = Vec::with_capacity(t);
        for &z in &latent {
            let jitter = if spec.noise > 0.0 {
                rng.random_range(-spec.noise..spec.noise)
            } else {
                0.0
            };
            let planted = z + jitter;
            let mut q = vec![0.0; d];
            let mut a = vec![0.0; d];
            match spec.signal {
                PlantedSignal::Query | PlantedSignal::ContextualQuery { .. } => {
                    q[0] = planted;
                    for v in q.iter_mut().skip(1) {
                        *v = rng.random_range(-0.1..0.1);
                    }
                    // signal-free variation, kept below the query values so
                    // max pooling over both sides preserves the signal
                    for v in a.iter_mut() {
                        *v = rng.random_range(-1.0..-0.8);
                    }
                }
                PlantedSignal::Answer => {
                    a[0] = planted;
                    for v in a.iter_mut().skip(1) {
                        *v = rng.random_range(-0.6..-0.4);
                    }
                    for v in q.iter_mut() {
                        *v = rng.random_range(-1.0..-0.8);
                    }
                }
            }
            pairs.push(
                EmbeddingPair::new(Mat::from_rows(&[q]).unwrap(), Mat::from_rows(&[a]).unwrap())
                    .unwrap(),
            );
        }

        let mut record =
            VideoRecord::new(id.clone(), (0..t).map(|j| format!("{id}_f{j:03}")).collect());
        record.annotations =
            Some(AnnotationSet::per_user_from_raw(&id, vec![target], (0.0, 1.0)).unwrap());
        record.validate().expect("planted record is valid");
        records.push(record);
        embeddings.insert(id, pairs);
    }
    (records, embeddings)
}
