//! Kernel temporal segmentation: shot boundaries from a feature sequence.
//!
//! Segments [0, T-1] into contiguous shots minimizing the within-segment
//! kernel scatter, by dynamic programming over prefix sums of the Gram
//! matrix. The segment count is chosen by a penalized criterion:
//! `total_scatter(m) + penalty * (m - 1)`.

use crate::mat::Mat;
use thiserror::Error;

use super::ShotSegmentation;

#[derive(Debug, Error, PartialEq)]
pub enum KtsError {
    #[error("empty feature sequence")]
    Empty,
    #[error("feature dimension is zero")]
    ZeroDim,
    #[error("max_segments {max_segments} exceeds frame count {frames}")]
    TooManySegments { max_segments: usize, frames: usize },
    #[error("max_segments must be at least 1")]
    ZeroSegments,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KtsKernel {
    /// Dot-product kernel.
    Linear,
    /// `exp(-gamma * ||x - y||^2)`.
    Rbf { gamma: f64 },
}

impl KtsKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KtsKernel::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KtsKernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Segment with the default linear kernel.
pub fn kts_segment(
    features: &Mat,
    max_segments: usize,
    penalty: f64,
) -> Result<ShotSegmentation, KtsError> {
    kts_segment_with(features, max_segments, penalty, KtsKernel::Linear)
}

pub fn kts_segment_with(
    features: &Mat,
    max_segments: usize,
    penalty: f64,
    kernel: KtsKernel,
) -> Result<ShotSegmentation, KtsError> {
    let t = features.rows();
    if t == 0 {
        return Err(KtsError::Empty);
    }
    if features.cols() == 0 {
        return Err(KtsError::ZeroDim);
    }
    if max_segments == 0 {
        return Err(KtsError::ZeroSegments);
    }
    if max_segments > t {
        return Err(KtsError::TooManySegments {
            max_segments,
            frames: t,
        });
    }

    let (costs, back) = segment_dp(features, max_segments, kernel);

    // Penalized model selection over the exact per-count optima.
    let mut best_m = 1;
    let mut best_cost = costs[1] + penalty * 0.0;
    for (m, &c) in costs.iter().enumerate().skip(2) {
        let penalized = c + penalty * (m as f64 - 1.0);
        if penalized < best_cost {
            best_cost = penalized;
            best_m = m;
        }
    }

    // Backtrack segment ends for best_m segments over all t frames.
    let mut bounds = Vec::with_capacity(best_m);
    let mut end = t;
    for m in (1..=best_m).rev() {
        let start = back[m][end];
        bounds.push((start, end - 1));
        end = start;
    }
    bounds.reverse();
    Ok(ShotSegmentation { boundaries: bounds })
}

/// Exact DP: `costs[m]` is the minimal total scatter over partitions of all
/// frames into exactly m segments; `back[m][n]` the start of the last
/// segment in the optimal m-partition of the first n frames.
fn segment_dp(
    features: &Mat,
    max_segments: usize,
    kernel: KtsKernel,
) -> (Vec<f64>, Vec<Vec<usize>>) {
    let t = features.rows();

    // Gram prefix sums: block[i][j] = sum of K over [0,i) x [0,j).
    let mut block = vec![vec![0.0f64; t + 1]; t + 1];
    let mut diag = vec![0.0f64; t + 1];
    for i in 0..t {
        diag[i + 1] = diag[i] + kernel.eval(features.row(i), features.row(i));
        for j in 0..t {
            let k = kernel.eval(features.row(i), features.row(j));
            block[i + 1][j + 1] = k + block[i][j + 1] + block[i + 1][j] - block[i][j];
        }
    }
    // Scatter of the inclusive segment [a, b].
    let seg_cost = |a: usize, b: usize| -> f64 {
        let n = (b - a + 1) as f64;
        let bsum = block[b + 1][b + 1] - block[a][b + 1] - block[b + 1][a] + block[a][a];
        (diag[b + 1] - diag[a]) - bsum / n
    };

    let mut dp = vec![vec![f64::INFINITY; t + 1]; max_segments + 1];
    let mut back = vec![vec![0usize; t + 1]; max_segments + 1];
    for n in 1..=t {
        dp[1][n] = seg_cost(0, n - 1);
    }
    for m in 2..=max_segments {
        for n in m..=t {
            let mut best = f64::INFINITY;
            let mut arg = m - 1;
            for s in (m - 1)..n {
                let c = dp[m - 1][s] + seg_cost(s, n - 1);
                if c < best {
                    best = c;
                    arg = s;
                }
            }
            dp[m][n] = best;
            back[m][n] = arg;
        }
    }

    let costs: Vec<f64> = (0..=max_segments).map(|m| dp[m][t]).collect();
    (costs, back)
}
