//! The trainable scoring head: per-frame pooling of query/answer
//! embeddings, an MLP projection to width M, self-attention blocks over the
//! whole video, and a linear score head, trained with MSE.

mod checkpoint;
mod net;
mod params;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, save_loss_history};
pub use params::{AggregatorParams, BlockParams, LayerNormParams, LinearParams};
pub use train::{train, TrainItem, TrainOutcome};

use crate::backend::EmbeddingPair;
use crate::mat::Mat;
use crate::series::ScoreSeries;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionalEncoding {
    None,
    Sinusoidal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    /// Self-attention blocks before the scalar head.
    Attention,
    /// Pooled embeddings go straight to the scalar head.
    MlpOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregatorConfig {
    /// Projection width M.
    pub projection_width: usize,
    pub num_blocks: usize,
    pub num_heads: usize,
    pub use_query: bool,
    pub use_answer: bool,
    pub positional_encoding: PositionalEncoding,
    pub head: HeadKind,
    /// Pool MLP with one hidden layer of width M; `false` collapses it to a
    /// single linear map.
    pub pool_hidden: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        AggregatorConfig {
            projection_width: 2048,
            num_blocks: 3,
            num_heads: 2,
            use_query: true,
            use_answer: true,
            positional_encoding: PositionalEncoding::None,
            head: HeadKind::Attention,
            pool_hidden: true,
            learning_rate: 1.19e-4,
            epochs: 200,
            seed: 0,
            weight_decay: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl AggregatorConfig {
    pub fn validate(&self) -> Result<(), AggregatorError> {
        if self.projection_width == 0 {
            return Err(AggregatorError::InvalidConfig(
                "projection width must be at least 1".into(),
            ));
        }
        if self.num_heads == 0 || self.projection_width % self.num_heads != 0 {
            return Err(AggregatorError::InvalidConfig(format!(
                "num_heads {} must divide projection width {}",
                self.num_heads, self.projection_width
            )));
        }
        if !self.use_query && !self.use_answer {
            return Err(AggregatorError::InvalidConfig(
                "at least one of use_query/use_answer must be set".into(),
            ));
        }
        if self.head == HeadKind::Attention && self.num_blocks == 0 {
            return Err(AggregatorError::InvalidConfig(
                "attention head needs at least one block".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum AggregatorError {
    #[error("invalid aggregator config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("predicted {predicted} scores but target has {target}")]
    LengthMismatch { predicted: usize, target: usize },
    #[error("non-finite {0} (training diverged?)")]
    NonFinite(&'static str),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, history: Vec<f64> },
}

/// Pool one frame: columnwise max over the concatenated (selected) query
/// and answer rows, then the pool MLP down to width M.
pub fn pool_embed(
    pair: &EmbeddingPair,
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<Vec<f64>, AggregatorError> {
    net::pool_forward(pair, params, config).map(|(y, _)| y)
}

/// Run the attention stack and scalar head over already-pooled rows.
pub fn forward(
    pooled: &Mat,
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<ScoreSeries, AggregatorError> {
    if pooled.rows() == 0 {
        return Err(AggregatorError::ShapeMismatch("empty sequence".into()));
    }
    let (scores, _) = net::stack_forward(pooled.clone(), params, config)?;
    Ok(ScoreSeries::new(scores))
}

/// Mean squared error over frames.
pub fn loss(predicted: &ScoreSeries, target: &[f64]) -> Result<f64, AggregatorError> {
    if predicted.len() != target.len() {
        return Err(AggregatorError::LengthMismatch {
            predicted: predicted.len(),
            target: target.len(),
        });
    }
    Ok(mse(predicted.values(), target))
}

pub(crate) fn mse(scores: &[f64], target: &[f64]) -> f64 {
    let t = scores.len() as f64;
    scores
        .iter()
        .zip(target)
        .map(|(s, y)| (s - y) * (s - y))
        .sum::<f64>()
        / t
}

/// Exact reverse-mode gradients of the batch-mean MSE loss with respect to
/// every parameter. Returns `(loss, gradients)`; the gradient container
/// shares the parameter layout.
pub fn backward(
    batch: &[TrainItem],
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<(f64, AggregatorParams), AggregatorError> {
    if batch.is_empty() {
        return Err(AggregatorError::EmptyTrainSet);
    }
    let mut grads = params.zeros_like();
    let mut total = 0.0;
    let b = batch.len() as f64;
    for item in batch {
        if item.pairs.len() != item.target.len() {
            return Err(AggregatorError::LengthMismatch {
                predicted: item.pairs.len(),
                target: item.target.len(),
            });
        }
        let (scores, cache) = net::video_forward(&item.pairs, params, config)?;
        total += mse(&scores, &item.target);
        let t = scores.len() as f64;
        let d_scores: Vec<f64> = scores
            .iter()
            .zip(&item.target)
            .map(|(s, y)| 2.0 * (s - y) / (t * b))
            .collect();
        net::video_backward(&d_scores, &cache, params, config, &mut grads);
    }
    if !grads.is_finite() {
        return Err(AggregatorError::NonFinite("gradient"));
    }
    Ok((total / b, grads))
}

/// Score a video from its embedding pairs. `normalize` min-max rescales for
/// reporting; rank metrics always run on raw scores.
pub fn predict(
    pairs: &[EmbeddingPair],
    params: &AggregatorParams,
    config: &AggregatorConfig,
    normalize: bool,
) -> Result<ScoreSeries, AggregatorError> {
    let (scores, _) = net::video_forward(pairs, params, config)?;
    let series = ScoreSeries::new(scores);
    Ok(if normalize { series.normalized() } else { series })
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use testing::{gradient_check, random_item, random_pair};

    fn small_config(m: usize, blocks: usize, heads: usize) -> AggregatorConfig {
        let mut cfg = AggregatorConfig::default();
        cfg.projection_width = m;
        cfg.num_blocks = blocks;
        cfg.num_heads = heads;
        cfg.seed = 11;
        cfg
    }

    fn pair_from(q: Vec<Vec<f64>>, a: Vec<Vec<f64>>) -> EmbeddingPair {
        EmbeddingPair::new(Mat::from_rows(&q).unwrap(), Mat::from_rows(&a).unwrap()).unwrap()
    }

    /// Identity pool: single linear map with W = I, b = 0 (requires D = M).
    fn identity_pool_params(cfg: &AggregatorConfig, d: usize) -> AggregatorParams {
        let mut params = AggregatorParams::init(cfg, d).unwrap();
        params.pool_out = None;
        let mut w = Mat::zeros(d, d);
        for i in 0..d {
            w.set(i, i, 1.0);
        }
        params.pool_in = LinearParams {
            w,
            b: vec![0.0; d],
        };
        params
    }

    #[test]
    fn pool_takes_columnwise_max_through_identity_mlp() {
        let mut cfg = small_config(2, 1, 1);
        cfg.pool_hidden = false;
        let params = identity_pool_params(&cfg, 2);
        let pair = pair_from(vec![vec![1.0, 5.0]], vec![vec![3.0, 2.0]]);
        let pooled = pool_embed(&pair, &params, &cfg).unwrap();
        assert_eq!(pooled, vec![3.0, 5.0]);
    }

    #[test]
    fn use_answer_false_pools_query_rows_only() {
        let mut cfg = small_config(2, 1, 1);
        cfg.pool_hidden = false;
        cfg.use_answer = false;
        let params = identity_pool_params(&cfg, 2);
        let pair = pair_from(vec![vec![1.0, 5.0]], vec![vec![3.0, 7.0]]);
        assert_eq!(pool_embed(&pair, &params, &cfg).unwrap(), vec![1.0, 5.0]);
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let cfg = small_config(4, 1, 1);
        let params = AggregatorParams::init(&cfg, 8).unwrap();
        let pair = pair_from(vec![vec![1.0, 2.0]], vec![vec![0.5, 0.0]]);
        assert!(matches!(
            pool_embed(&pair, &params, &cfg),
            Err(AggregatorError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn both_flags_false_rejected() {
        let mut cfg = small_config(4, 1, 1);
        cfg.use_query = false;
        cfg.use_answer = false;
        assert!(matches!(
            cfg.validate(),
            Err(AggregatorError::InvalidConfig(_))
        ));
    }

    #[test]
    fn forward_handles_single_frame() {
        let cfg = small_config(8, 2, 2);
        let params = AggregatorParams::init(&cfg, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pair = random_pair(&mut rng, 2, 1, 6);
        let series = predict(&[pair], &params, &cfg, false).unwrap();
        assert_eq!(series.len(), 1);
        assert!(series.values()[0].is_finite());
    }

    #[test]
    fn forward_is_permutation_equivariant_without_positions() {
        let cfg = small_config(8, 2, 2);
        let params = AggregatorParams::init(&cfg, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<EmbeddingPair> = (0..5).map(|_| random_pair(&mut rng, 2, 2, 6)).collect();
        let base = predict(&pairs, &params, &cfg, false).unwrap();

        let perm = [3usize, 0, 4, 1, 2];
        let permuted: Vec<EmbeddingPair> = perm.iter().map(|&i| pairs[i].clone()).collect();
        let out = predict(&permuted, &params, &cfg, false).unwrap();
        for (slot, &src) in perm.iter().enumerate() {
            assert!(
                (out.values()[slot] - base.values()[src]).abs() < 1e-12,
                "permutation equivariance violated"
            );
        }
    }

    #[test]
    fn positional_encoding_breaks_permutation_equivariance() {
        let mut cfg = small_config(8, 1, 2);
        cfg.positional_encoding = PositionalEncoding::Sinusoidal;
        let params = AggregatorParams::init(&cfg, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs: Vec<EmbeddingPair> = (0..4).map(|_| random_pair(&mut rng, 2, 2, 6)).collect();
        let base = predict(&pairs, &params, &cfg, false).unwrap();
        let mut reversed = pairs.clone();
        reversed.reverse();
        let out = predict(&reversed, &params, &cfg, false).unwrap();
        let mut back: Vec<f64> = out.values().to_vec();
        back.reverse();
        assert_ne!(base.values(), back.as_slice());
    }

    #[test]
    fn zero_head_weights_give_zero_scores() {
        let cfg = small_config(8, 1, 2);
        let mut params = AggregatorParams::init(&cfg, 6).unwrap();
        params.head = LinearParams {
            w: Mat::zeros(8, 1),
            b: vec![0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs: Vec<EmbeddingPair> = (0..3).map(|_| random_pair(&mut rng, 1, 1, 6)).collect();
        let series = predict(&pairs, &params, &cfg, false).unwrap();
        assert!(series.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_embeddings_give_constant_scores() {
        let cfg = small_config(8, 2, 2);
        let params = AggregatorParams::init(&cfg, 6).unwrap();
        let pair = pair_from(vec![vec![0.3; 6]], vec![vec![-0.2; 6]]);
        let pairs = vec![pair; 5];
        let series = predict(&pairs, &params, &cfg, false).unwrap();
        let first = series.values()[0];
        for &v in series.values() {
            assert!((v - first).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_examples() {
        assert_eq!(
            loss(&ScoreSeries::new(vec![0.3, 0.7]), &[0.3, 0.7]).unwrap(),
            0.0
        );
        assert_eq!(
            loss(&ScoreSeries::new(vec![0.0, 1.0]), &[1.0, 0.0]).unwrap(),
            1.0
        );
        assert_eq!(loss(&ScoreSeries::new(vec![0.5]), &[0.0]).unwrap(), 0.25);
        assert!(matches!(
            loss(&ScoreSeries::new(vec![0.5]), &[0.0, 1.0]),
            Err(AggregatorError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences_on_small_instance() {
        let mut cfg = small_config(8, 1, 1);
        cfg.seed = 21;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let batch = vec![random_item(&mut rng, 4, 8)];
        let params = AggregatorParams::init(&cfg, 8).unwrap();
        let worst = gradient_check(&batch, &params, &cfg, 1e-4);
        assert!(worst < 1e-3, "max relative error {worst}");
    }

    #[test]
    fn gradient_is_zero_at_exact_fit() {
        // With zero head weights the output is 0 everywhere; a zero target
        // then sits exactly at the quadratic minimum.
        let cfg = small_config(8, 1, 2);
        let mut params = AggregatorParams::init(&cfg, 6).unwrap();
        params.head = LinearParams {
            w: Mat::zeros(8, 1),
            b: vec![0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut item = random_item(&mut rng, 3, 6);
        item.target = vec![0.0; 3];
        let (l, grads) = backward(&[item], &params, &cfg).unwrap();
        assert_eq!(l, 0.0);
        assert!(grads.flatten().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn duplicating_a_video_keeps_batch_mean_gradients() {
        let cfg = small_config(8, 1, 2);
        let params = AggregatorParams::init(&cfg, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let item = random_item(&mut rng, 4, 6);
        let (l1, g1) = backward(std::slice::from_ref(&item), &params, &cfg).unwrap();
        let (l2, g2) = backward(&[item.clone(), item], &params, &cfg).unwrap();
        assert_eq!(l1, l2);
        let f1 = g1.flatten();
        let f2 = g2.flatten();
        for (a, b) in f1.iter().zip(&f2) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn predict_rejects_width_mismatch() {
        let cfg = small_config(8, 1, 2);
        let params = AggregatorParams::init(&cfg, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pairs = vec![random_pair(&mut rng, 1, 1, 32)];
        assert!(matches!(
            predict(&pairs, &params, &cfg, false),
            Err(AggregatorError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn normalized_prediction_spans_unit_interval() {
        let cfg = small_config(8, 1, 2);
        let params = AggregatorParams::init(&cfg, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pairs: Vec<EmbeddingPair> = (0..6).map(|_| random_pair(&mut rng, 2, 1, 6)).collect();
        let series = predict(&pairs, &params, &cfg, true).unwrap();
        let min = series.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = series
            .values()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
    }
}
