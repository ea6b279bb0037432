//! Seeded k-fold assignment.

use super::{DatasetError, VideoRecord};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// A k-fold partition of video ids. Every video appears exactly once and
/// fold sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn fold_of(&self, video_id: &str) -> Option<usize> {
        self.assignments.get(video_id).copied()
    }

    /// Video ids in fold `fold`, in sorted order.
    pub fn videos_in(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.k < 2 {
            return Err(DatasetError::FoldRange {
                k: self.k,
                videos: self.assignments.len(),
            });
        }
        if self.assignments.values().any(|&f| f >= self.k) {
            return Err(DatasetError::FoldRange {
                k: self.k,
                videos: self.assignments.len(),
            });
        }
        let sizes = self.fold_sizes();
        let min = sizes.iter().min().copied().unwrap_or(0);
        let max = sizes.iter().max().copied().unwrap_or(0);
        if max - min > 1 {
            return Err(DatasetError::Invariant {
                video_id: String::new(),
                field: "folds".into(),
                message: format!("unbalanced fold sizes {sizes:?}"),
            });
        }
        Ok(())
    }
}

/// Shuffle the sorted video ids with a seeded generator and deal them
/// round-robin. Deterministic for a fixed seed regardless of input order.
pub fn make_folds(
    records: &[VideoRecord],
    k: usize,
    seed: u64,
) -> Result<FoldSplit, DatasetError> {
    if k < 2 || k > records.len() {
        return Err(DatasetError::FoldRange {
            k,
            videos: records.len(),
        });
    }
    let mut ids: Vec<&str> = records.iter().map(|r| r.video_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != records.len() {
        return Err(DatasetError::Invariant {
            video_id: String::new(),
            field: "video_id".into(),
            message: "duplicate video ids".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let assignments = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect();
    Ok(FoldSplit { k, assignments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(n: usize) -> Vec<VideoRecord> {
        (0..n)
            .map(|i| VideoRecord::new(format!("v{i:02}"), vec![format!("v{i:02}_f0")]))
            .collect()
    }

    #[test]
    fn twenty_five_videos_give_five_folds_of_five() {
        let split = make_folds(&records(25), 5, 0).unwrap();
        assert_eq!(split.fold_sizes(), vec![5; 5]);
        split.validate().unwrap();
    }

    #[test]
    fn remainder_spreads_over_leading_folds() {
        let split = make_folds(&records(7), 5, 3).unwrap();
        let mut sizes = split.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 2, 2]);
    }

    #[test]
    fn same_seed_same_assignment() {
        let recs = records(12);
        assert_eq!(make_folds(&recs, 4, 9).unwrap(), make_folds(&recs, 4, 9).unwrap());
        assert_ne!(make_folds(&recs, 4, 9).unwrap(), make_folds(&recs, 4, 10).unwrap());
    }

    #[test]
    fn order_of_records_does_not_matter() {
        let mut recs = records(9);
        let a = make_folds(&recs, 3, 1).unwrap();
        recs.reverse();
        let b = make_folds(&recs, 3, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn k_out_of_range_rejected() {
        assert!(matches!(
            make_folds(&records(3), 1, 0),
            Err(DatasetError::FoldRange { .. })
        ));
        assert!(matches!(
            make_folds(&records(3), 4, 0),
            Err(DatasetError::FoldRange { .. })
        ));
    }
}
