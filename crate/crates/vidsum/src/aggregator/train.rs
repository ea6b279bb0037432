//! Training loop: AdamW, batch size one video, per-epoch loss history.

use super::{backward, AggregatorConfig, AggregatorError, AggregatorParams};
use crate::backend::EmbeddingPair;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One training video: per-frame embedding pairs and the regression target.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub pairs: Vec<EmbeddingPair>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: AggregatorParams,
    /// Mean per-step loss for each epoch.
    pub history: Vec<f64>,
}

/// Decoupled weight decay Adam over the flattened parameter vector.
struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
}

impl AdamW {
    fn new(n: usize, config: &AggregatorConfig) -> Self {
        AdamW {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            weight_decay: config.weight_decay,
        }
    }

    fn update(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..theta.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            theta[i] -= self.lr * (mhat / (vhat.sqrt() + self.eps) + self.weight_decay * theta[i]);
        }
    }
}

/// Train on the given videos, one video per optimizer step. Deterministic
/// for a fixed seed: initialization and the per-epoch visit order both come
/// from the seeded generator.
pub fn train(
    items: &[TrainItem],
    config: &AggregatorConfig,
) -> Result<TrainOutcome, AggregatorError> {
    config.validate()?;
    if items.is_empty() {
        return Err(AggregatorError::EmptyTrainSet);
    }
    let d = items[0]
        .pairs
        .first()
        .ok_or_else(|| AggregatorError::ShapeMismatch("video has no frames".into()))?
        .hidden_width();
    for item in items {
        for pair in &item.pairs {
            if pair.hidden_width() != d {
                return Err(AggregatorError::ShapeMismatch(format!(
                    "mixed hidden widths {d} and {}",
                    pair.hidden_width()
                )));
            }
        }
    }

    let mut params = AggregatorParams::init(config, d)?;
    let mut theta = params.flatten();
    let mut opt = AdamW::new(theta.len(), config);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e3779b97f4a7c15);

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let batch = std::slice::from_ref(&items[i]);
            let (l, grads) = match backward(batch, &params, config) {
                Ok(ok) => ok,
                Err(AggregatorError::NonFinite(_)) => {
                    return Err(AggregatorError::Diverged { epoch, history })
                }
                Err(e) => return Err(e),
            };
            if !l.is_finite() {
                return Err(AggregatorError::Diverged { epoch, history });
            }
            epoch_loss += l;
            opt.update(&mut theta, &grads.flatten());
            params.load_flat(&theta);
        }
        history.push(epoch_loss / items.len() as f64);
    }

    Ok(TrainOutcome { params, history })
}
