//! Tie-aware rank correlation: Kendall's tau-b and Spearman's rho.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("length mismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    /// All values of one vector are tied: the coefficient is undefined.
    /// Callers exclude such videos from dataset means and report a warning.
    #[error("zero variance in {side} vector")]
    ZeroVariance { side: &'static str },
}

fn validate(x: &[f64], y: &[f64]) -> Result<(), RankError> {
    if x.len() != y.len() {
        return Err(RankError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(RankError::TooShort(x.len()));
    }
    for (i, v) in x.iter().chain(y.iter()).enumerate() {
        if !v.is_finite() {
            return Err(RankError::NonFinite(i % x.len()));
        }
    }
    Ok(())
}

/// Kendall's tau-b:
/// `tau = (P - Q) / sqrt((n0 - n1) * (n0 - n2))`
/// with `n0 = n(n-1)/2`, `n1`/`n2` the tied-pair counts in x/y and P/Q the
/// concordant/discordant pair counts. Computed in O(n log n) by sorting on
/// (x, y) and merge-counting discordant swaps on y.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, RankError> {
    validate(x, y)?;
    let n = x.len();

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].total_cmp(&x[b]).then_with(|| y[a].total_cmp(&y[b]))
    });

    // Tied pairs in x (n1) and jointly in x and y (n3).
    let mut n1: u64 = 0;
    let mut n3: u64 = 0;
    {
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && x[idx[j]] == x[idx[i]] {
                j += 1;
            }
            let t = (j - i) as u64;
            n1 += t * (t - 1) / 2;
            // joint ties within this x-group
            let mut k = i;
            while k < j {
                let mut m = k + 1;
                while m < j && y[idx[m]] == y[idx[k]] {
                    m += 1;
                }
                let u = (m - k) as u64;
                n3 += u * (u - 1) / 2;
                k = m;
            }
            i = j;
        }
    }

    // Discordant pairs: strict inversions of y in (x, y) order.
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let swaps = count_inversions(&mut ys);

    // Tied pairs in y (n2) from the now-sorted ys.
    let mut n2: u64 = 0;
    {
        let mut i = 0;
        while i < n {
            let mut j = i + 1;
            while j < n && ys[j] == ys[i] {
                j += 1;
            }
            let t = (j - i) as u64;
            n2 += t * (t - 1) / 2;
            i = j;
        }
    }

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    if n0 == n1 {
        return Err(RankError::ZeroVariance { side: "x" });
    }
    if n0 == n2 {
        return Err(RankError::ZeroVariance { side: "y" });
    }

    let num = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * swaps as i128;
    // sqrt of the product keeps perfect agreement exactly +/-1
    let den = (((n0 - n1) as u128 * (n0 - n2) as u128) as f64).sqrt();
    Ok(num as f64 / den)
}

/// Merge sort counting strict inversions (pairs i < j with v[i] > v[j]).
/// Equal values are not inversions. Sorts `v` in place as a side effect.
fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    let mut buf = v.to_vec();
    let mut swaps = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if v[i] <= v[j] {
                    buf[k] = v[i];
                    i += 1;
                } else {
                    // v[i] > v[j]: v[j] is smaller than everything left in [i, mid)
                    swaps += (mid - i) as u64;
                    buf[k] = v[j];
                    j += 1;
                }
                k += 1;
            }
            while i < mid {
                buf[k] = v[i];
                i += 1;
                k += 1;
            }
            while j < hi {
                buf[k] = v[j];
                j += 1;
                k += 1;
            }
            v[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo += 2 * width;
        }
        width *= 2;
    }
    swaps
}

/// Average ranks (1-based). Ties share the mean of the rank positions they
/// occupy, matching the standard treatment for Spearman's rho.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && v[idx[j]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0; // mean of positions i+1 ..= j
        for &k in &idx[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, RankError> {
    validate(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, RankError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(RankError::ZeroVariance { side: "x" });
    }
    if syy == 0.0 {
        return Err(RankError::ZeroVariance { side: "y" });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// O(n^2) pair-count oracle for tau-b.
    pub(crate) fn tau_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
        let n = x.len();
        let (mut p, mut q, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = x[i] - x[j];
                let dy = y[i] - y[j];
                if dx == 0.0 && dy == 0.0 {
                    continue;
                } else if dx == 0.0 {
                    tx += 1;
                } else if dy == 0.0 {
                    ty += 1;
                } else if dx * dy > 0.0 {
                    p += 1;
                } else {
                    q += 1;
                }
            }
        }
        let denx = (p + q + tx) as f64;
        let deny = (p + q + ty) as f64;
        if denx == 0.0 || deny == 0.0 {
            return None;
        }
        Some((p - q) as f64 / (denx.sqrt() * deny.sqrt()))
    }

    /// Rank-then-correlate oracle for rho with O(n^2) rank computation.
    pub(crate) fn rho_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
        fn naive_ranks(v: &[f64]) -> Vec<f64> {
            v.iter()
                .map(|&a| {
                    let less = v.iter().filter(|&&b| b < a).count() as f64;
                    let equal = v.iter().filter(|&&b| b == a).count() as f64;
                    less + (equal + 1.0) / 2.0
                })
                .collect()
        }
        let rx = naive_ranks(x);
        let ry = naive_ranks(y);
        pearson(&rx, &ry).ok()
    }

    #[test]
    fn identity_gives_one() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&v, &v).unwrap(), 1.0);
        assert_eq!(spearman_rho(&v, &v).unwrap(), 1.0);
    }

    #[test]
    fn reversal_gives_minus_one() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau(&x, &y).unwrap(), -1.0);
        assert_eq!(spearman_rho(&x, &y).unwrap(), -1.0);
    }

    #[test]
    fn single_swap_case() {
        // 5 concordant, 1 discordant pair -> tau = 4/6 = 2/3.
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let tau = kendall_tau(&x, &y).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
        // rho on the same data: d^2 = (0,1,1,0) -> 1 - 6*2/(4*15) = 0.8
        let rho = spearman_rho(&x, &y).unwrap();
        assert!((rho - 0.8).abs() < 1e-15);
    }

    #[test]
    fn tied_values_use_tau_b() {
        let x = [1.0, 1.0, 2.0];
        let y = [1.0, 2.0, 3.0];
        let tau = kendall_tau(&x, &y).unwrap();
        assert!((tau - 2.0 / 6.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_is_undefined() {
        let x = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        assert_eq!(
            kendall_tau(&x, &y).unwrap_err(),
            RankError::ZeroVariance { side: "x" }
        );
        assert_eq!(
            spearman_rho(&y, &x).unwrap_err(),
            RankError::ZeroVariance { side: "y" }
        );
    }

    #[test]
    fn short_and_mismatched_inputs_rejected() {
        assert_eq!(kendall_tau(&[1.0], &[1.0]).unwrap_err(), RankError::TooShort(1));
        assert_eq!(
            spearman_rho(&[1.0, 2.0], &[1.0]).unwrap_err(),
            RankError::LengthMismatch { x: 2, y: 1 }
        );
    }

    #[test]
    fn matches_oracles_on_random_vectors_with_ties() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(2..60);
            // Coarse grid to force plenty of ties.
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
            match (kendall_tau(&x, &y), tau_oracle(&x, &y)) {
                (Ok(t), Some(t0)) => assert!((t - t0).abs() < 1e-12, "tau {t} vs oracle {t0}"),
                (Err(RankError::ZeroVariance { .. }), None) => {}
                (a, b) => panic!("disagree: {a:?} vs {b:?}"),
            }
            match (spearman_rho(&x, &y), rho_oracle(&x, &y)) {
                (Ok(r), Some(r0)) => assert!((r - r0).abs() < 1e-12, "rho {r} vs oracle {r0}"),
                (Err(RankError::ZeroVariance { .. }), None) => {}
                (a, b) => panic!("disagree: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn invariant_under_strictly_increasing_transform() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let tx: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
            let tau = kendall_tau(&x, &y).unwrap();
            let tau_t = kendall_tau(&tx, &y).unwrap();
            assert!((tau - tau_t).abs() < 1e-12);
            let rho = spearman_rho(&x, &y).unwrap();
            let rho_t = spearman_rho(&tx, &y).unwrap();
            assert!((rho - rho_t).abs() < 1e-12);
        }
    }
}
