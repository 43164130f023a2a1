use std::collections::BTreeSet;

use crate::ingest::ModelId;
use crate::matrix::SquareMatrix;
use crate::scalar::Real;
use crate::scoring::{ScoreHistory, ScoreKey};

/// Pairwise log-score correlations between models.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    pub models: Vec<ModelId>,
    pub values: SquareMatrix<T>,
    /// Pairs `(i, j)`, `i < j`, with fewer than two common scores.
    pub insufficient: Vec<(usize, usize)>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values.get(i, j)
    }

    pub fn dim(&self) -> usize {
        self.models.len()
    }
}

/// Pearson correlation, or `None` when fewer than two points or either side is constant.
pub fn pearson<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = T::from_usize_lossy(n);
    let mx = xs.iter().copied().sum::<T>() / nf;
    let my = ys.iter().copied().sum::<T>() / nf;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).max(-T::one()).min(T::one()))
}

/// Correlations of score series aligned on a shared key axis; `None` marks a
/// missing score. Pairs are compared on keys where both have a score.
pub fn correlation_from_aligned<T: Real>(models: Vec<ModelId>, series: &[Vec<Option<T>>]) -> CorrelationMatrix<T> {
    let n = models.len();
    assert_eq!(series.len(), n, "one series per model");
    let mut values = SquareMatrix::zeros(n);
    let mut insufficient = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        values.set(i, i, T::one());
        for j in (i + 1)..n {
            xs.clear();
            ys.clear();
            for (a, b) in series[i].iter().zip(&series[j]) {
                if let (Some(a), Some(b)) = (a, b) {
                    xs.push(*a);
                    ys.push(*b);
                }
            }
            if xs.len() < 2 {
                insufficient.push((i, j));
            }
            let r = pearson(&xs, &ys).unwrap_or_else(T::zero);
            values.set(i, j, r);
            values.set(j, i, r);
        }
    }
    CorrelationMatrix {
        models,
        values,
        insufficient,
    }
}

/// Correlation of log-score histories restricted to keys accepted by `window`.
pub fn logscore_correlation_matrix<T: Real>(
    history: &ScoreHistory<T>,
    models: &[ModelId],
    window: impl Fn(&ScoreKey) -> bool,
) -> CorrelationMatrix<T> {
    let keys: BTreeSet<ScoreKey> = models
        .iter()
        .flat_map(|m| history.scores(m).map(|(k, _)| *k))
        .filter(|k| window(k))
        .collect();
    let series: Vec<Vec<Option<T>>> = models
        .iter()
        .map(|m| keys.iter().map(|k| history.get(m, k)).collect())
        .collect();
    correlation_from_aligned(models.to_vec(), &series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epiweek::Epiweek;
    use crate::ingest::{Horizon, Region};

    fn history(series: &[(u32, &[f64])]) -> ScoreHistory<f64> {
        let mut h = ScoreHistory::new();
        let start = Epiweek::from_yyyyww(201740).unwrap();
        for (m, vals) in series {
            for (i, v) in vals.iter().enumerate() {
                let key = (start.add_weeks(i as i64).unwrap(), Region::Nat, Horizon::new(1).unwrap());
                h.insert(ModelId::from(*m), key, *v).unwrap();
            }
        }
        h
    }

    #[test]
    fn examples() {
        let y = [-1.0, -2.5, -0.5, -4.0, -3.0];
        let neg: Vec<f64> = y.iter().map(|v| -v - 7.0).collect();
        let flat = [-10.0; 5];
        let h = history(&[(1, &y), (2, &neg), (3, &flat)]);
        let models: Vec<ModelId> = (1..=3).map(ModelId::from).collect();
        let c = logscore_correlation_matrix(&h, &models, |_| true);
        assert_eq!(c.get(0, 0), 1.0);
        assert!((c.get(0, 1) + 1.0).abs() < 1e-12);
        assert_eq!(c.get(0, 2), 0.0);
        assert_eq!(c.get(2, 1), 0.0);
        assert!(c.insufficient.is_empty());
        assert!(c.values.is_symmetric(0.0));
    }

    #[test]
    fn sparse_overlap_is_flagged() {
        let h = history(&[(1, &[-1.0, -2.0, -3.0]), (2, &[-1.0])]);
        let models = vec![ModelId::from(1), ModelId::from(2), ModelId::from(9)];
        let c = logscore_correlation_matrix(&h, &models, |_| true);
        assert_eq!(c.insufficient, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(2, 2), 1.0);
    }

    #[test]
    fn window_restricts_keys() {
        let h = history(&[(1, &[-1.0, -2.0, -3.0, -1.0]), (2, &[-1.0, -2.0, -3.0, -9.0])]);
        let models = vec![ModelId::from(1), ModelId::from(2)];
        let cutoff = Epiweek::from_yyyyww(201743).unwrap();
        let c = logscore_correlation_matrix(&h, &models, |k| k.0 < cutoff);
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
    }
}
