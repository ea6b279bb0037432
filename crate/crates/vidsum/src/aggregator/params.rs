//! Trainable parameters: pool MLP, self-attention blocks, scalar head.

use super::{AggregatorConfig, AggregatorError, HeadKind};
use crate::mat::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FF_MULT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    /// `in x out`
    pub w: Mat,
    pub b: Vec<f64>,
}

impl LinearParams {
    fn init(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut w = Mat::zeros(fan_in, fan_out);
        for v in w.data_mut() {
            *v = rng.random_range(-bound..bound);
        }
        LinearParams {
            w,
            b: vec![0.0; fan_out],
        }
    }

    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        LinearParams {
            w: Mat::zeros(fan_in, fan_out),
            b: vec![0.0; fan_out],
        }
    }

    /// `x (T x in) -> x*w + b (T x out)`
    pub fn forward(&self, x: &Mat) -> Mat {
        let mut y = x.matmul(&self.w);
        y.add_row_broadcast(&self.b);
        y
    }

    pub fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.b.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += xi * self.w.get(i, j);
            }
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl LayerNormParams {
    fn init(width: usize) -> Self {
        LayerNormParams {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
        }
    }

    fn zeros(width: usize) -> Self {
        LayerNormParams {
            gamma: vec![0.0; width],
            beta: vec![0.0; width],
        }
    }
}

/// One pre-norm self-attention block: LN -> multi-head attention -> residual,
/// LN -> feed-forward -> residual.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln1: LayerNormParams,
    pub wq: LinearParams,
    pub wk: LinearParams,
    pub wv: LinearParams,
    pub wo: LinearParams,
    pub ln2: LayerNormParams,
    pub ff1: LinearParams,
    pub ff2: LinearParams,
}

impl BlockParams {
    fn init(rng: &mut ChaCha8Rng, m: usize) -> Self {
        BlockParams {
            ln1: LayerNormParams::init(m),
            wq: LinearParams::init(rng, m, m),
            wk: LinearParams::init(rng, m, m),
            wv: LinearParams::init(rng, m, m),
            wo: LinearParams::init(rng, m, m),
            ln2: LayerNormParams::init(m),
            ff1: LinearParams::init(rng, m, FF_MULT * m),
            ff2: LinearParams::init(rng, FF_MULT * m, m),
        }
    }

    fn zeros(m: usize) -> Self {
        BlockParams {
            ln1: LayerNormParams::zeros(m),
            wq: LinearParams::zeros(m, m),
            wk: LinearParams::zeros(m, m),
            wv: LinearParams::zeros(m, m),
            wo: LinearParams::zeros(m, m),
            ln2: LayerNormParams::zeros(m),
            ff1: LinearParams::zeros(m, FF_MULT * m),
            ff2: LinearParams::zeros(FF_MULT * m, m),
        }
    }
}

/// All weights of the aggregator. The same struct doubles as the gradient
/// container (see [`AggregatorParams::zeros_like`]).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorParams {
    /// Backend hidden width D the pool MLP expects.
    pub hidden_width: usize,
    pub pool_in: LinearParams,
    /// Second pool layer; `None` collapses the pool MLP to a single
    /// linear map.
    pub pool_out: Option<LinearParams>,
    pub blocks: Vec<BlockParams>,
    pub head: LinearParams,
}

impl AggregatorParams {
    /// Seeded initialization for inputs of hidden width `d`.
    pub fn init(config: &AggregatorConfig, d: usize) -> Result<Self, AggregatorError> {
        config.validate()?;
        if d == 0 {
            return Err(AggregatorError::ShapeMismatch(
                "hidden width must be at least 1".into(),
            ));
        }
        let m = config.projection_width;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let pool_in = LinearParams::init(&mut rng, d, m);
        let pool_out = config
            .pool_hidden
            .then(|| LinearParams::init(&mut rng, m, m));
        let blocks = match config.head {
            HeadKind::Attention => (0..config.num_blocks)
                .map(|_| BlockParams::init(&mut rng, m))
                .collect(),
            HeadKind::MlpOnly => Vec::new(),
        };
        let head = LinearParams::init(&mut rng, m, 1);
        Ok(AggregatorParams {
            hidden_width: d,
            pool_in,
            pool_out,
            blocks,
            head,
        })
    }

    /// A zero-filled clone with identical shapes, used for gradients.
    pub fn zeros_like(&self) -> Self {
        let m = self.pool_in.w.cols();
        AggregatorParams {
            hidden_width: self.hidden_width,
            pool_in: LinearParams::zeros(self.pool_in.w.rows(), m),
            pool_out: self.pool_out.as_ref().map(|_| LinearParams::zeros(m, m)),
            blocks: self.blocks.iter().map(|_| BlockParams::zeros(m)).collect(),
            head: LinearParams::zeros(m, 1),
        }
    }

    pub fn projection_width(&self) -> usize {
        self.pool_in.w.cols()
    }

    pub fn param_count(&self) -> usize {
        self.flatten().len()
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }

    /// All weights in a fixed order: pool layers, blocks in sequence
    /// (ln1, wq, wk, wv, wo, ln2, ff1, ff2), then the head.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let push_linear = |out: &mut Vec<f64>, l: &LinearParams| {
            out.extend_from_slice(l.w.data());
            out.extend_from_slice(&l.b);
        };
        push_linear(&mut out, &self.pool_in);
        if let Some(p) = &self.pool_out {
            push_linear(&mut out, p);
        }
        for block in &self.blocks {
            out.extend_from_slice(&block.ln1.gamma);
            out.extend_from_slice(&block.ln1.beta);
            push_linear(&mut out, &block.wq);
            push_linear(&mut out, &block.wk);
            push_linear(&mut out, &block.wv);
            push_linear(&mut out, &block.wo);
            out.extend_from_slice(&block.ln2.gamma);
            out.extend_from_slice(&block.ln2.beta);
            push_linear(&mut out, &block.ff1);
            push_linear(&mut out, &block.ff2);
        }
        push_linear(&mut out, &self.head);
        out
    }

    /// Inverse of [`flatten`]; panics if the length disagrees with the
    /// parameter shapes.
    pub fn load_flat(&mut self, flat: &[f64]) {
        let mut cursor = 0usize;
        let load_linear = |cursor: &mut usize, l: &mut LinearParams| {
            let n = l.w.data().len();
            l.w.data_mut().copy_from_slice(&flat[*cursor..*cursor + n]);
            *cursor += n;
            let n = l.b.len();
            l.b.copy_from_slice(&flat[*cursor..*cursor + n]);
            *cursor += n;
        };
        load_linear(&mut cursor, &mut self.pool_in);
        if let Some(p) = &mut self.pool_out {
            load_linear(&mut cursor, p);
        }
        for block in &mut self.blocks {
            let g = block.ln1.gamma.len();
            block.ln1.gamma.copy_from_slice(&flat[cursor..cursor + g]);
            cursor += g;
            block.ln1.beta.copy_from_slice(&flat[cursor..cursor + g]);
            cursor += g;
            load_linear(&mut cursor, &mut block.wq);
            load_linear(&mut cursor, &mut block.wk);
            load_linear(&mut cursor, &mut block.wv);
            load_linear(&mut cursor, &mut block.wo);
            block.ln2.gamma.copy_from_slice(&flat[cursor..cursor + g]);
            cursor += g;
            block.ln2.beta.copy_from_slice(&flat[cursor..cursor + g]);
            cursor += g;
            load_linear(&mut cursor, &mut block.ff1);
            load_linear(&mut cursor, &mut block.ff2);
        }
        load_linear(&mut cursor, &mut self.head);
        assert_eq!(cursor, flat.len(), "flat parameter length mismatch");
    }
}
