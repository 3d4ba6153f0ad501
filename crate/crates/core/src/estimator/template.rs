use rayon::prelude::*;

use super::AnglePrediction;
use crate::error::{invalid, Result};
use crate::features::{FeatureBatch, FeatureTensor};

/// Labelled feature vectors to search exhaustively.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub entries: FeatureBatch,
}

impl TemplateBank {
    pub fn new(entries: FeatureBatch) -> Result<Self> {
        if entries.is_empty() {
            return invalid("template bank is empty");
        }
        Ok(Self { entries })
    }

    /// Index and squared distance of the nearest entry; ties go to the
    /// lowest index.
    pub fn nearest(&self, query: &[f32]) -> Result<(usize, f64)> {
        if self.entries.is_empty() {
            return invalid("template bank is empty");
        }
        if query.len() != self.entries.sample_size() {
            return invalid("query shape does not match the bank");
        }
        let mut best = (0, f64::INFINITY);
        for i in 0..self.entries.count() {
            let d: f64 = self
                .entries
                .sample(i)
                .iter()
                .zip(query)
                .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
                .sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }

    pub fn match_slice(&self, query: &[f32]) -> Result<AnglePrediction> {
        let (i, _) = self.nearest(query)?;
        let (a, b) = self.entries.labels[i];
        Ok(AnglePrediction::from_angles(a, b))
    }

    /// Matches every sample of `queries`.
    pub fn match_batch(&self, queries: &FeatureBatch) -> Result<Vec<AnglePrediction>> {
        (0..queries.count())
            .into_par_iter()
            .map(|i| self.match_slice(queries.sample(i)))
            .collect()
    }
}

/// Angles of the bank entry nearest to `x` in Euclidean distance.
pub fn template_match(x: &FeatureTensor, bank: &TemplateBank) -> Result<AnglePrediction> {
    bank.match_slice(&x.to_f32())
}
