//! k-fold cross-validation: train the aggregator on out-of-fold videos,
//! evaluate on the held-out fold, aggregate rank statistics.

use super::{evaluate_video, EvalError, EvalOptions};
use crate::aggregator::{predict, train, AggregatorConfig, AggregatorError, TrainItem};
use crate::backend::EmbeddingPair;
use crate::dataset::{FoldSplit, VideoRecord};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Default, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CrossValConfig {
    pub aggregator: AggregatorConfig,
    pub options: EvalOptions,
}

#[derive(Debug, Error)]
pub enum CrossValError {
    #[error("video {0}: no embeddings available")]
    MissingEmbeddings(String),
    #[error("video {0}: no annotations")]
    MissingAnnotations(String),
    #[error("video {0}: not present in the fold split")]
    MissingFold(String),
    #[error(transparent)]
    Aggregator(#[from] AggregatorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub video_id: String,
    pub fold: usize,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
}

/// Cross-validation outcome: per-video rows sorted by (fold, video id),
/// dataset means over the defined values, and a config fingerprint tying
/// the report to the exact settings and split that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean_tau: Option<f64>,
    pub mean_rho: Option<f64>,
    pub undefined_comparisons: usize,
    pub folds: usize,
    pub config_fingerprint: String,
}

impl EvalReport {
    pub fn from_rows(
        mut rows: Vec<EvalRow>,
        undefined_comparisons: usize,
        folds: usize,
        config_fingerprint: String,
    ) -> Self {
        rows.sort_by(|a, b| (a.fold, &a.video_id).cmp(&(b.fold, &b.video_id)));
        let taus: Vec<f64> = rows.iter().filter_map(|r| r.tau).collect();
        let rhos: Vec<f64> = rows.iter().filter_map(|r| r.rho).collect();
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        EvalReport {
            mean_tau: mean(&taus),
            mean_rho: mean(&rhos),
            rows,
            undefined_comparisons,
            folds,
            config_fingerprint,
        }
    }
}

/// Short hex digest over the serialized config plus the fold assignment.
pub fn fingerprint(config: &CrossValConfig, split: &FoldSplit) -> String {
    let mut hasher = Sha256::new();
    let config_json = serde_json::to_string(config).expect("config serializes");
    hasher.update(config_json.as_bytes());
    hasher.update(split.k.to_le_bytes());
    for (id, fold) in &split.assignments {
        hasher.update(id.as_bytes());
        hasher.update([0u8]);
        hasher.update(fold.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn train_item(
    record: &VideoRecord,
    embeddings: &BTreeMap<String, Vec<EmbeddingPair>>,
) -> Result<TrainItem, CrossValError> {
    let pairs = embeddings
        .get(&record.video_id)
        .ok_or_else(|| CrossValError::MissingEmbeddings(record.video_id.clone()))?;
    let target = record
        .regression_target()
        .ok_or_else(|| CrossValError::MissingAnnotations(record.video_id.clone()))?;
    Ok(TrainItem {
        pairs: pairs.clone(),
        target: target.to_vec(),
    })
}

/// Run the full protocol. Every video is evaluated exactly once, by the
/// model trained without its fold.
pub fn cross_validate(
    records: &[VideoRecord],
    embeddings: &BTreeMap<String, Vec<EmbeddingPair>>,
    split: &FoldSplit,
    config: &CrossValConfig,
) -> Result<EvalReport, CrossValError> {
    for record in records {
        if split.fold_of(&record.video_id).is_none() {
            return Err(CrossValError::MissingFold(record.video_id.clone()));
        }
    }

    let mut rows = Vec::with_capacity(records.len());
    let mut undefined = 0usize;
    for fold in 0..split.k {
        let train_set: Vec<TrainItem> = records
            .iter()
            .filter(|r| split.fold_of(&r.video_id) != Some(fold))
            .map(|r| train_item(r, embeddings))
            .collect::<Result<_, _>>()?;
        if train_set.is_empty() {
            return Err(CrossValError::Aggregator(AggregatorError::EmptyTrainSet));
        }
        let outcome = train(&train_set, &config.aggregator)?;

        for record in records
            .iter()
            .filter(|r| split.fold_of(&r.video_id) == Some(fold))
        {
            let pairs = embeddings
                .get(&record.video_id)
                .ok_or_else(|| CrossValError::MissingEmbeddings(record.video_id.clone()))?;
            let series = predict(pairs, &outcome.params, &config.aggregator, false)?;
            let eval = evaluate_video(record, &series, &config.options)?;
            undefined += eval.undefined_comparisons;
            rows.push(EvalRow {
                video_id: record.video_id.clone(),
                fold,
                tau: eval.tau,
                rho: eval.rho,
            });
        }
    }

    Ok(EvalReport::from_rows(
        rows,
        undefined,
        split.k,
        fingerprint(config, split),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{make_folds, AnnotationSet};
    use crate::mat::Mat;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Synthetic dataset with the target planted in the first query
    /// coordinate, in per-user-scores mode with one user.
    fn planted_dataset(
        n: usize,
        t: usize,
        d: usize,
        noise: f64,
        seed: u64,
    ) -> (Vec<VideoRecord>, BTreeMap<String, Vec<EmbeddingPair>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        let mut embeddings = BTreeMap::new();
        for i in 0..n {
            let id = format!("v{i:02}");
            // well-spread targets: a shuffled grid over [0, 1]
            let mut target: Vec<f64> = (0..t).map(|j| j as f64 / (t - 1) as f64).collect();
            use rand::seq::SliceRandom;
            target.shuffle(&mut rng);

            let mut pairs = Vec::with_capacity(t);
            for &y in &target {
                let mut q = vec![0.0; d];
                q[0] = y + rng.random_range(-noise..noise);
                for v in q.iter_mut().skip(1) {
                    *v = rng.random_range(-0.1..0.1);
                }
                let a = vec![-1.0; d];
                pairs.push(
                    EmbeddingPair::new(
                        Mat::from_rows(&[q]).unwrap(),
                        Mat::from_rows(&[a]).unwrap(),
                    )
                    .unwrap(),
                );
            }

            let mut record = VideoRecord::new(id.clone(), (0..t).map(|j| format!("{id}_f{j}")).collect());
            record.annotations =
                Some(AnnotationSet::per_user_from_raw(&id, vec![target], (0.0, 1.0)).unwrap());
            records.push(record);
            embeddings.insert(id, pairs);
        }
        (records, embeddings)
    }

    fn fast_config() -> CrossValConfig {
        let mut config = CrossValConfig::default();
        config.aggregator.projection_width = 16;
        config.aggregator.num_blocks = 1;
        config.aggregator.num_heads = 2;
        config.aggregator.learning_rate = 5e-3;
        config.aggregator.epochs = 60;
        config.aggregator.seed = 1;
        config
    }

    #[test]
    fn every_video_evaluated_exactly_once() {
        let (records, embeddings) = planted_dataset(10, 8, 8, 0.05, 3);
        let split = make_folds(&records, 5, 7).unwrap();
        let report = cross_validate(&records, &embeddings, &split, &fast_config()).unwrap();
        assert_eq!(report.rows.len(), 10);
        let mut ids: Vec<&str> = report.rows.iter().map(|r| r.video_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 10);
        for row in &report.rows {
            assert_eq!(split.fold_of(&row.video_id), Some(row.fold));
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let (records, embeddings) = planted_dataset(6, 6, 8, 0.05, 4);
        let split = make_folds(&records, 3, 2).unwrap();
        let mut config = fast_config();
        config.aggregator.epochs = 10;
        let a = cross_validate(&records, &embeddings, &split, &config).unwrap();
        let b = cross_validate(&records, &embeddings, &split, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planted_signal_reaches_high_held_out_tau() {
        let (records, embeddings) = planted_dataset(15, 16, 8, 0.05, 5);
        let split = make_folds(&records, 5, 11).unwrap();
        let report = cross_validate(&records, &embeddings, &split, &fast_config()).unwrap();
        let tau = report.mean_tau.unwrap();
        assert!(tau > 0.85, "mean held-out tau {tau}");
    }

    #[test]
    fn missing_embeddings_reported_by_id() {
        let (records, mut embeddings) = planted_dataset(4, 5, 8, 0.05, 6);
        embeddings.remove("v02");
        let split = make_folds(&records, 2, 0).unwrap();
        match cross_validate(&records, &embeddings, &split, &fast_config()) {
            Err(CrossValError::MissingEmbeddings(id)) => assert_eq!(id, "v02"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fingerprint_tracks_config_and_split() {
        let (records, _) = planted_dataset(4, 5, 8, 0.05, 6);
        let split_a = make_folds(&records, 2, 0).unwrap();
        let split_b = make_folds(&records, 2, 1).unwrap();
        let config = fast_config();
        assert_eq!(fingerprint(&config, &split_a), fingerprint(&config, &split_a));
        assert_ne!(fingerprint(&config, &split_a), fingerprint(&config, &split_b));
        let mut other = fast_config();
        other.aggregator.learning_rate = 9e-9;
        assert_ne!(fingerprint(&config, &split_a), fingerprint(&other, &split_a));
    }
}
