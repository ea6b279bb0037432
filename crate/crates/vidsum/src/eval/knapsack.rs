//! Exact 0/1 knapsack selection of summary shots.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KnapsackError {
    #[error("values ({values}) and lengths ({lengths}) differ in count")]
    CountMismatch { values: usize, lengths: usize },
    #[error("shot {index} has zero length")]
    ZeroLength { index: usize },
}

/// An exact solution: selected shot indices (ascending), their summed value
/// and total frame count.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution {
    pub selected: Vec<usize>,
    pub total_value: f64,
    pub total_frames: usize,
}

/// Maximize the summed shot value subject to `sum(lengths) <= budget_frames`,
/// by dynamic programming over suffixes. Among equal-value optima the
/// lexicographically smallest index set is returned.
pub fn knapsack_select(
    values: &[f64],
    lengths: &[usize],
    budget_frames: usize,
) -> Result<KnapsackSolution, KnapsackError> {
    if values.len() != lengths.len() {
        return Err(KnapsackError::CountMismatch {
            values: values.len(),
            lengths: lengths.len(),
        });
    }
    if let Some(index) = lengths.iter().position(|&l| l == 0) {
        return Err(KnapsackError::ZeroLength { index });
    }

    let n = values.len();
    // dp[i][c] = best value achievable with items i.. under capacity c.
    // Suffix orientation lets the reconstruction walk items in ascending
    // index order, greedily including whenever the optimum allows, which
    // yields the lexicographically smallest optimal index set.
    let width = budget_frames + 1;
    let mut dp = vec![0.0f64; (n + 1) * width];
    for i in (0..n).rev() {
        for c in 0..width {
            let skip = dp[(i + 1) * width + c];
            let mut best = skip;
            if lengths[i] <= c {
                let take = values[i] + dp[(i + 1) * width + (c - lengths[i])];
                if take > best {
                    best = take;
                }
            }
            dp[i * width + c] = best;
        }
    }

    let mut selected = Vec::new();
    let mut cap = budget_frames;
    for i in 0..n {
        let rest = dp[i * width + cap];
        if rest == 0.0 {
            // the empty completion is optimal and sorts before any set
            break;
        }
        if lengths[i] <= cap {
            let take = values[i] + dp[(i + 1) * width + (cap - lengths[i])];
            if take == rest {
                selected.push(i);
                cap -= lengths[i];
            }
        }
    }

    let total_frames = selected.iter().map(|&i| lengths[i]).sum();
    Ok(KnapsackSolution {
        total_value: dp[budget_frames],
        selected,
        total_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over all subsets, summing values in the same suffix
    /// association the DP uses so exact float comparison is meaningful.
    fn brute_force(values: &[f64], lengths: &[usize], budget: usize) -> (Vec<usize>, f64) {
        let n = values.len();
        let mut best_value = f64::NEG_INFINITY;
        let mut best_set: Option<Vec<usize>> = None;
        for mask in 0..(1u32 << n) {
            let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let frames: usize = set.iter().map(|&i| lengths[i]).sum();
            if frames > budget {
                continue;
            }
            let mut value = 0.0;
            for &i in set.iter().rev() {
                value += values[i];
            }
            let better = value > best_value
                || (value == best_value
                    && best_set.as_ref().map(|b| set < *b).unwrap_or(false));
            if better {
                best_value = value;
                best_set = Some(set);
            }
        }
        (best_set.unwrap_or_default(), best_value.max(0.0))
    }

    #[test]
    fn picks_best_pair_under_budget() {
        // Brute force over all 8 subsets confirms {0,1} with value 19.
        let sol = knapsack_select(&[10.0, 9.0, 1.0], &[2, 3, 4], 5).unwrap();
        assert_eq!(sol.selected, vec![0, 1]);
        assert_eq!(sol.total_value, 19.0);
        assert_eq!(sol.total_frames, 5);
    }

    #[test]
    fn loose_budget_selects_everything() {
        let sol = knapsack_select(&[1.0, 2.0, 3.0], &[4, 5, 6], 15).unwrap();
        assert_eq!(sol.selected, vec![0, 1, 2]);
    }

    #[test]
    fn zero_budget_selects_nothing() {
        let sol = knapsack_select(&[1.0, 2.0], &[1, 1], 0).unwrap();
        assert!(sol.selected.is_empty());
        assert_eq!(sol.total_value, 0.0);
    }

    #[test]
    fn zero_length_shot_rejected() {
        let err = knapsack_select(&[1.0], &[0], 3).unwrap_err();
        assert_eq!(err, KnapsackError::ZeroLength { index: 0 });
    }

    #[test]
    fn ties_break_to_lexicographically_smallest_set() {
        // {0} and {1,2} both reach value 10; {0} is smaller.
        let sol = knapsack_select(&[10.0, 4.0, 6.0], &[2, 1, 1], 2).unwrap();
        assert_eq!(sol.selected, vec![0]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(1..=12);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
            let lengths: Vec<usize> = (0..n).map(|_| rng.random_range(1..=6)).collect();
            let budget = rng.random_range(0..=20);
            let sol = knapsack_select(&values, &lengths, budget).unwrap();
            let (bf_set, bf_value) = brute_force(&values, &lengths, budget);
            assert_eq!(sol.total_value, bf_value);
            assert_eq!(sol.selected, bf_set, "values={values:?} lengths={lengths:?} budget={budget}");
        }
    }
}
