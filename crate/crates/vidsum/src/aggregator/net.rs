//! Forward and exact reverse-mode passes through pool MLP, attention
//! blocks, and the scalar head. Everything is f64 and loop-based; caches
//! hold exactly what the backward pass needs.

use super::params::{AggregatorParams, BlockParams, LayerNormParams, LinearParams};
use super::{AggregatorConfig, AggregatorError, HeadKind, PositionalEncoding};
use crate::backend::EmbeddingPair;
use crate::mat::Mat;

const LN_EPS: f64 = 1e-5;

pub(crate) fn gelu(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    const A: f64 = 0.044715;
    0.5 * x * (1.0 + (C * (x + A * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.797_884_560_802_865_4;
    const A: f64 = 0.044715;
    let u = C * (x + A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * A * x * x)
}

// ---------------------------------------------------------------------------
// pooling

pub(crate) struct PoolCache {
    m: Vec<f64>,
    z: Option<Vec<f64>>,
    h: Option<Vec<f64>>,
}

/// Columnwise max over the selected embedding rows, then the pool MLP.
pub(crate) fn pool_forward(
    pair: &EmbeddingPair,
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<(Vec<f64>, PoolCache), AggregatorError> {
    if pair.hidden_width() != params.hidden_width {
        return Err(AggregatorError::ShapeMismatch(format!(
            "embedding width {} but params expect {}",
            pair.hidden_width(),
            params.hidden_width
        )));
    }
    if !config.use_query && !config.use_answer {
        return Err(AggregatorError::InvalidConfig(
            "at least one of use_query/use_answer must be set".into(),
        ));
    }
    let d = params.hidden_width;
    let mut m = vec![f64::NEG_INFINITY; d];
    let mut take = |mat: &Mat| {
        for r in 0..mat.rows() {
            for (j, &v) in mat.row(r).iter().enumerate() {
                if v > m[j] {
                    m[j] = v;
                }
            }
        }
    };
    if config.use_query {
        take(pair.q());
    }
    if config.use_answer {
        take(pair.a());
    }

    match &params.pool_out {
        Some(out) => {
            let z = params.pool_in.forward_vec(&m);
            let h: Vec<f64> = z.iter().map(|&v| gelu(v)).collect();
            let y = out.forward_vec(&h);
            Ok((
                y,
                PoolCache {
                    m,
                    z: Some(z),
                    h: Some(h),
                },
            ))
        }
        None => {
            let y = params.pool_in.forward_vec(&m);
            Ok((y, PoolCache { m, z: None, h: None }))
        }
    }
}

/// Accumulate pool gradients for one frame. The max-pooled vector is a
/// constant input here, so nothing flows back into the embeddings.
fn pool_backward(
    dy: &[f64],
    cache: &PoolCache,
    params: &AggregatorParams,
    grads: &mut AggregatorParams,
) {
    fn outer_add(w: &mut Mat, x: &[f64], dy: &[f64]) {
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = w.row_mut(i);
            for (j, &d) in dy.iter().enumerate() {
                row[j] += xi * d;
            }
        }
    }
    fn matvec_t(w: &Mat, dy: &[f64]) -> Vec<f64> {
        // dx_i = sum_j w[i][j] * dy[j]
        (0..w.rows())
            .map(|i| w.row(i).iter().zip(dy).map(|(a, b)| a * b).sum())
            .collect()
    }

    match (&params.pool_out, &cache.z, &cache.h) {
        (Some(out), Some(z), Some(h)) => {
            outer_add(&mut grads.pool_out.as_mut().unwrap().w, h, dy);
            for (g, &d) in grads.pool_out.as_mut().unwrap().b.iter_mut().zip(dy) {
                *g += d;
            }
            let dh = matvec_t(&out.w, dy);
            let dz: Vec<f64> = dh
                .iter()
                .zip(z)
                .map(|(&dh, &z)| dh * gelu_grad(z))
                .collect();
            outer_add(&mut grads.pool_in.w, &cache.m, &dz);
            for (g, &d) in grads.pool_in.b.iter_mut().zip(&dz) {
                *g += d;
            }
        }
        _ => {
            outer_add(&mut grads.pool_in.w, &cache.m, dy);
            for (g, &d) in grads.pool_in.b.iter_mut().zip(dy) {
                *g += d;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// layer norm

pub(crate) struct LnCache {
    xhat: Mat,
    rstd: Vec<f64>,
}

fn ln_forward(x: &Mat, p: &LayerNormParams) -> (Mat, LnCache) {
    let (t, m) = (x.rows(), x.cols());
    let mut y = Mat::zeros(t, m);
    let mut xhat = Mat::zeros(t, m);
    let mut rstd = vec![0.0; t];
    for r in 0..t {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / m as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd[r] = rs;
        for c in 0..m {
            let nh = (row[c] - mean) * rs;
            xhat.set(r, c, nh);
            y.set(r, c, p.gamma[c] * nh + p.beta[c]);
        }
    }
    (y, LnCache { xhat, rstd })
}

fn ln_backward(
    dy: &Mat,
    cache: &LnCache,
    p: &LayerNormParams,
    gp: &mut LayerNormParams,
) -> Mat {
    let (t, m) = (dy.rows(), dy.cols());
    let mut dx = Mat::zeros(t, m);
    for r in 0..t {
        let dyr = dy.row(r);
        let xh = cache.xhat.row(r);
        for c in 0..m {
            gp.gamma[c] += dyr[c] * xh[c];
            gp.beta[c] += dyr[c];
        }
        let dxhat: Vec<f64> = (0..m).map(|c| dyr[c] * p.gamma[c]).collect();
        let s1 = dxhat.iter().sum::<f64>() / m as f64;
        let s2 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / m as f64;
        let rs = cache.rstd[r];
        for c in 0..m {
            dx.set(r, c, rs * (dxhat[c] - s1 - xh[c] * s2));
        }
    }
    dx
}

// ---------------------------------------------------------------------------
// attention block

pub(crate) struct BlockCache {
    ln1: LnCache,
    n1: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    /// Per-head softmax rows (T x T each).
    probs: Vec<Mat>,
    /// Concatenated head outputs before the output projection.
    att: Mat,
    ln2: LnCache,
    n2: Mat,
    z1: Mat,
    f1: Mat,
}

fn head_slice(x: &Mat, head: usize, dh: usize) -> Mat {
    let mut out = Mat::zeros(x.rows(), dh);
    for r in 0..x.rows() {
        let row = x.row(r);
        out.row_mut(r).copy_from_slice(&row[head * dh..(head + 1) * dh]);
    }
    out
}

fn head_unslice(target: &mut Mat, part: &Mat, head: usize, dh: usize) {
    for r in 0..target.rows() {
        target.row_mut(r)[head * dh..(head + 1) * dh].copy_from_slice(part.row(r));
    }
}

fn softmax_rows(x: &mut Mat) {
    for r in 0..x.rows() {
        let row = x.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

fn block_forward(x: &Mat, p: &BlockParams, heads: usize) -> (Mat, BlockCache) {
    let m = x.cols();
    let dh = m / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let (n1, ln1) = ln_forward(x, &p.ln1);
    let q = p.wq.forward(&n1);
    let k = p.wk.forward(&n1);
    let v = p.wv.forward(&n1);

    let mut att = Mat::zeros(x.rows(), m);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = head_slice(&q, h, dh);
        let kh = head_slice(&k, h, dh);
        let vh = head_slice(&v, h, dh);
        let mut scores = qh.matmul_nt(&kh);
        scores.scale(scale);
        softmax_rows(&mut scores);
        let oh = scores.matmul(&vh);
        head_unslice(&mut att, &oh, h, dh);
        probs.push(scores);
    }
    let att_out = p.wo.forward(&att);

    let mut x2 = x.clone();
    x2.add_assign(&att_out);

    let (n2, ln2) = ln_forward(&x2, &p.ln2);
    let z1 = p.ff1.forward(&n2);
    let mut f1 = z1.clone();
    for v in f1.data_mut() {
        *v = gelu(*v);
    }
    let f2 = p.ff2.forward(&f1);

    let mut out = x2.clone();
    out.add_assign(&f2);

    (
        out,
        BlockCache {
            ln1,
            n1,
            q,
            k,
            v,
            probs,
            att,
            ln2,
            n2,
            z1,
            f1,
        },
    )
}

/// dP -> dS for one softmax row set: `dS = (dP - rowsum(dP .* P)) .* P`.
fn softmax_backward(probs: &Mat, dprobs: &Mat) -> Mat {
    let mut ds = Mat::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        let p = probs.row(r);
        let dp = dprobs.row(r);
        let dot: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
        for c in 0..probs.cols() {
            ds.set(r, c, (dp[c] - dot) * p[c]);
        }
    }
    ds
}

/// Gradient of `linear.forward`: accumulates weight/bias grads, returns dx.
fn linear_backward(x: &Mat, dy: &Mat, p: &LinearParams, gp: &mut LinearParams) -> Mat {
    gp.w.add_assign(&x.matmul_tn(dy));
    for (c, g) in dy.column_sums().into_iter().enumerate() {
        gp.b[c] += g;
    }
    dy.matmul_nt(&p.w)
}

fn block_backward(
    d_out: &Mat,
    cache: &BlockCache,
    p: &BlockParams,
    heads: usize,
    grads: &mut BlockParams,
) -> Mat {
    let m = d_out.cols();
    let dh = m / heads;
    let scale = 1.0 / (dh as f64).sqrt();

    // out = x2 + f2
    let mut d_x2 = d_out.clone();
    let d_f2 = d_out;

    // f2 = ff2(f1), f1 = gelu(z1), z1 = ff1(n2)
    let d_f1 = linear_backward(&cache.f1, d_f2, &p.ff2, &mut grads.ff2);
    let mut d_z1 = d_f1;
    for (dv, &z) in d_z1.data_mut().iter_mut().zip(cache.z1.data()) {
        *dv *= gelu_grad(z);
    }
    let d_n2 = linear_backward(&cache.n2, &d_z1, &p.ff1, &mut grads.ff1);
    d_x2.add_assign(&ln_backward(&d_n2, &cache.ln2, &p.ln2, &mut grads.ln2));

    // x2 = x + att_out, att_out = wo(att)
    let mut d_x = d_x2.clone();
    let d_att = linear_backward(&cache.att, &d_x2, &p.wo, &mut grads.wo);

    let t = d_out.rows();
    let mut d_q = Mat::zeros(t, m);
    let mut d_k = Mat::zeros(t, m);
    let mut d_v = Mat::zeros(t, m);
    for h in 0..heads {
        let d_oh = head_slice(&d_att, h, dh);
        let vh = head_slice(&cache.v, h, dh);
        let qh = head_slice(&cache.q, h, dh);
        let kh = head_slice(&cache.k, h, dh);
        let probs = &cache.probs[h];

        // O = P * V
        let d_probs = d_oh.matmul_nt(&vh);
        let d_vh = probs.matmul_tn(&d_oh);
        // P = softmax(S), S = q k^T * scale
        let mut d_s = softmax_backward(probs, &d_probs);
        d_s.scale(scale);
        let d_qh = d_s.matmul(&kh);
        let d_kh = d_s.matmul_tn(&qh);

        head_unslice(&mut d_q, &d_qh, h, dh);
        head_unslice(&mut d_k, &d_kh, h, dh);
        head_unslice(&mut d_v, &d_vh, h, dh);
    }

    let mut d_n1 = linear_backward(&cache.n1, &d_q, &p.wq, &mut grads.wq);
    d_n1.add_assign(&linear_backward(&cache.n1, &d_k, &p.wk, &mut grads.wk));
    d_n1.add_assign(&linear_backward(&cache.n1, &d_v, &p.wv, &mut grads.wv));
    d_x.add_assign(&ln_backward(&d_n1, &cache.ln1, &p.ln1, &mut grads.ln1));
    d_x
}

// ---------------------------------------------------------------------------
// whole video

pub(crate) struct StackCache {
    blocks: Vec<BlockCache>,
    head_in: Mat,
}

pub(crate) struct VideoCache {
    pools: Vec<PoolCache>,
    stack: StackCache,
}

/// Sinusoidal positional encoding value for (position, feature).
fn sinusoid(t: usize, j: usize, m: usize) -> f64 {
    let i = (j / 2) as f64;
    let angle = t as f64 / 10000f64.powf(2.0 * i / m as f64);
    if j % 2 == 0 {
        angle.sin()
    } else {
        angle.cos()
    }
}

/// Add the positional signal (if configured), run the block stack (unless
/// the head is MLP-only), apply the scalar head.
pub(crate) fn stack_forward(
    mut x: Mat,
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<(Vec<f64>, StackCache), AggregatorError> {
    let t = x.rows();
    let m = x.cols();
    if m != params.projection_width() {
        return Err(AggregatorError::ShapeMismatch(format!(
            "pooled width {m} but params expect {}",
            params.projection_width()
        )));
    }

    if config.positional_encoding == PositionalEncoding::Sinusoidal {
        for r in 0..t {
            let row = x.row_mut(r);
            for (j, v) in row.iter_mut().enumerate() {
                *v += sinusoid(r, j, m);
            }
        }
    }

    let mut blocks = Vec::new();
    if config.head == HeadKind::Attention {
        for block in &params.blocks {
            let (next, cache) = block_forward(&x, block, config.num_heads);
            blocks.push(cache);
            x = next;
        }
    }

    let scores_mat = params.head.forward(&x);
    let scores: Vec<f64> = (0..t).map(|r| scores_mat.get(r, 0)).collect();
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(AggregatorError::NonFinite("forward scores"));
    }
    Ok((scores, StackCache { blocks, head_in: x }))
}

/// Pool every frame and run the block stack plus head. Returns raw scores
/// and the caches for a matching backward pass.
pub(crate) fn video_forward(
    pairs: &[EmbeddingPair],
    params: &AggregatorParams,
    config: &AggregatorConfig,
) -> Result<(Vec<f64>, VideoCache), AggregatorError> {
    if pairs.is_empty() {
        return Err(AggregatorError::ShapeMismatch("video has no frames".into()));
    }
    let t = pairs.len();
    let m = params.projection_width();

    let mut x = Mat::zeros(t, m);
    let mut pools = Vec::with_capacity(t);
    for (r, pair) in pairs.iter().enumerate() {
        let (y, cache) = pool_forward(pair, params, config)?;
        x.row_mut(r).copy_from_slice(&y);
        pools.push(cache);
    }

    let (scores, stack) = stack_forward(x, params, config)?;
    Ok((scores, VideoCache { pools, stack }))
}

/// Backward from per-frame score gradients, accumulating into `grads`.
pub(crate) fn video_backward(
    d_scores: &[f64],
    cache: &VideoCache,
    params: &AggregatorParams,
    config: &AggregatorConfig,
    grads: &mut AggregatorParams,
) {
    let t = d_scores.len();
    let mut d_s = Mat::zeros(t, 1);
    for (r, &d) in d_scores.iter().enumerate() {
        d_s.set(r, 0, d);
    }
    let mut d_x = linear_backward(&cache.stack.head_in, &d_s, &params.head, &mut grads.head);

    if config.head == HeadKind::Attention {
        for (block, (p, g)) in cache
            .stack
            .blocks
            .iter()
            .zip(params.blocks.iter().zip(grads.blocks.iter_mut()))
            .rev()
        {
            d_x = block_backward(&d_x, block, p, config.num_heads, g);
        }
    }

    // positional encoding is additive: gradient passes straight to the pools
    for (r, pool) in cache.pools.iter().enumerate() {
        pool_backward(d_x.row(r), pool, params, grads);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_grad_matches_finite_difference() {
        for &x in &[-3.0, -1.0, -0.1, 0.0, 0.2, 1.5, 4.0] {
            let eps = 1e-6;
            let fd = (gelu(x + eps) - gelu(x - eps)) / (2.0 * eps);
            assert!((gelu_grad(x) - fd).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut m = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 1.0]]).unwrap();
        softmax_rows(&mut m);
        for r in 0..2 {
            let s: f64 = m.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
