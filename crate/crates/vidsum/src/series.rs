//! Frame-level importance score series.

/// A sequence of per-frame importance scores.
///
/// `normalized` marks a series that has been min-max rescaled for reporting
/// or plotting. Rank metrics are monotone-invariant, so evaluation always
/// runs on the raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    scores: Vec<f64>,
    normalized: bool,
}

impl ScoreSeries {
    pub fn new(scores: Vec<f64>) -> Self {
        ScoreSeries {
            scores,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.scores
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Min-max rescale into [0, 1]. A constant series maps to all 0.5 since
    /// it carries no ordering information.
    pub fn normalized(&self) -> ScoreSeries {
        let min = self.scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = self.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scores = if max > min {
            self.scores.iter().map(|s| (s - min) / (max - min)).collect()
        } else {
            vec![0.5; self.scores.len()]
        };
        ScoreSeries {
            scores,
            normalized: true,
        }
    }
}

impl From<Vec<f64>> for ScoreSeries {
    fn from(scores: Vec<f64>) -> Self {
        ScoreSeries::new(scores)
    }
}
