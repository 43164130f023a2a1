use std::collections::BTreeMap;

use crate::epiweek::Epiweek;
use crate::error::{Error, Result};
use crate::ingest::{Horizon, ModelId, Region};
use crate::scalar::Real;

/// Chronological key of one scored forecast.
pub type ScoreKey = (Epiweek, Region, Horizon);

/// Floored log scores per model, ordered by (issue week, region, target).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistory<T> {
    scores: BTreeMap<ModelId, BTreeMap<ScoreKey, T>>,
}

impl<T> Default for ScoreHistory<T> {
    fn default() -> Self {
        Self {
            scores: BTreeMap::new(),
        }
    }
}

impl<T: Real> ScoreHistory<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: ModelId, key: ScoreKey, log_score: T) -> Result<()> {
        let per_model = self.scores.entry(model.clone()).or_default();
        if per_model.contains_key(&key) {
            return Err(Error::DuplicateKey(format!("score for model {model} at {} {} {}", key.0, key.1, key.2)));
        }
        per_model.insert(key, log_score);
        Ok(())
    }

    pub fn models(&self) -> impl Iterator<Item = &ModelId> {
        self.scores.keys()
    }

    /// Scores for a model, chronologically.
    pub fn scores(&self, model: &ModelId) -> impl Iterator<Item = (&ScoreKey, T)> {
        self.scores.get(model).into_iter().flat_map(|m| m.iter().map(|(k, v)| (k, *v)))
    }

    /// Scores for a model whose key passes `keep`.
    pub fn window(&self, model: &ModelId, mut keep: impl FnMut(&ScoreKey) -> bool) -> Vec<(ScoreKey, T)> {
        self.scores(model).filter(|(k, _)| keep(k)).map(|(k, v)| (*k, v)).collect()
    }

    pub fn get(&self, model: &ModelId, key: &ScoreKey) -> Option<T> {
        self.scores.get(model).and_then(|m| m.get(key)).copied()
    }

    pub fn len(&self, model: &ModelId) -> usize {
        self.scores.get(model).map_or(0, BTreeMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.scores.values().all(BTreeMap::is_empty)
    }
}

/// Median; even counts average the two central order statistics.
pub fn median<T: Real>(values: &[T]) -> Result<T> {
    quantile(values, T::lit(0.5))
}

/// Median of floored log scores.
pub fn median_log_score<T: Real>(scores: &[T]) -> Result<T> {
    median(scores)
}

/// Linearly interpolated sample quantile (order statistic `q (n - 1)`).
pub fn quantile<T: Real>(values: &[T], q: T) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Empty("values for a quantile"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(T::cmp_total);
    let pos = q.max(T::zero()).min(T::one()) * T::from_usize_lossy(sorted.len() - 1);
    let lo = pos.floor().to_usize().unwrap_or(0);
    let hi = pos.ceil().to_usize().unwrap_or(0).min(sorted.len() - 1);
    let frac = pos - T::from_usize_lossy(lo);
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}
