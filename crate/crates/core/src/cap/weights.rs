//! Linear-pool weight estimation by EM on the simplex.
//!
//! Maximizes `sum_j ln sum_c w_c f_c(y_j)` (optionally plus a symmetric
//! Dirichlet log-prior) with the fixed-point update
//! `w_c <- max(0, sum_j r_jc + alpha - 1) / norm`, where `r_jc` are the
//! responsibilities under the current weights.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ingest::ModelId;
use crate::pmf::check_simplex;
use crate::scalar::Real;

/// Probability each pool member placed on the realized bin, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodMatrix<T> {
    columns: usize,
    rows: Vec<Vec<T>>,
}

impl<T: Real> LikelihoodMatrix<T> {
    pub fn new(columns: usize) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(columns: usize, rows: Vec<Vec<T>>) -> Result<Self> {
        let mut m = Self::new(columns);
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: Vec<T>) -> Result<()> {
        if row.len() != self.columns {
            return Err(Error::LengthMismatch {
                expected: self.columns,
                actual: row.len(),
            });
        }
        if let Some(v) = row.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Domain {
                value: v.as_f64(),
                domain: "[0, 1] bin probability",
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Weights labelled by the pool member they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    pub labels: Vec<String>,
    pub weights: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(labels: Vec<String>, weights: Vec<T>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                actual: weights.len(),
            });
        }
        check_simplex(&weights)?;
        Ok(Self { labels, weights })
    }

    pub fn equal(labels: Vec<String>) -> Self {
        let w = T::one() / T::from_usize_lossy(labels.len().max(1));
        let weights = vec![w; labels.len()];
        Self { labels, weights }
    }

    pub fn get(&self, label: &str) -> Option<T> {
        self.labels.iter().position(|l| l == label).map(|i| self.weights[i])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    /// Stop once no weight moves by more than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Keep the objective after every iteration in [`WeightFit::trace`].
    pub record_trace: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
            record_trace: false,
        }
    }
}

/// Result of an EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit<T> {
    pub weights: Vec<T>,
    /// Final log-likelihood plus log-prior (the log-likelihood when `alpha = 1`).
    pub objective: T,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
    /// Every observation had zero probability under every member.
    pub degenerate: bool,
    /// Observations dropped because every member gave them zero probability.
    pub dropped_rows: usize,
    /// Objective at the start and after each iteration, when requested.
    pub trace: Vec<T>,
}

/// Symmetric Dirichlet schedule `alpha_t = 1 + delta (T - t) / T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptivePriorParams<T> {
    /// 1-based week of the season.
    pub week: usize,
    /// Weeks in the season.
    pub season_weeks: usize,
    pub delta: T,
}

impl<T: Real> AdaptivePriorParams<T> {
    pub const DEFAULT_DELTA: f64 = 5.0;

    pub fn new(week: usize, season_weeks: usize, delta: T) -> Result<Self> {
        if week == 0 || season_weeks == 0 {
            return Err(Error::Domain {
                value: week as f64,
                domain: "week >= 1 in a non-empty season",
            });
        }
        if !(delta >= T::zero()) {
            return Err(Error::Domain {
                value: delta.as_f64(),
                domain: "delta >= 0",
            });
        }
        Ok(Self {
            week,
            season_weeks,
            delta,
        })
    }

    /// Concentration for this week; never below one.
    pub fn concentration(&self) -> T {
        let remaining = self.season_weeks.saturating_sub(self.week);
        T::one() + self.delta * T::from_usize_lossy(remaining) / T::from_usize_lossy(self.season_weeks)
    }
}

/// `sum_j ln sum_c w_c f_jc`.
pub fn log_likelihood<T: Real>(lik: &LikelihoodMatrix<T>, weights: &[T]) -> T {
    lik.rows
        .iter()
        .map(|row| row.iter().zip(weights).map(|(&f, &w)| f * w).sum::<T>().ln())
        .sum()
}

/// Log-likelihood plus `(alpha - 1) sum_c ln w_c`.
pub fn log_posterior<T: Real>(lik: &LikelihoodMatrix<T>, weights: &[T], alpha: T) -> T {
    let ll = log_likelihood(lik, weights);
    if alpha == T::one() {
        return ll;
    }
    ll + (alpha - T::one()) * weights.iter().map(|w| w.ln()).sum::<T>()
}

/// Penalized EM from `init` (equal weights when `None`).
pub fn fit_mixture_weights<T: Real>(
    lik: &LikelihoodMatrix<T>,
    alpha: T,
    init: Option<&[T]>,
    opts: EmOptions,
) -> Result<WeightFit<T>> {
    let k = lik.columns;
    if k == 0 {
        return Err(Error::Empty("pool members"));
    }
    if !(alpha >= T::one()) {
        return Err(Error::Domain {
            value: alpha.as_f64(),
            domain: "Dirichlet concentration >= 1",
        });
    }
    let equal = vec![T::one() / T::from_usize_lossy(k); k];
    let mut weights = match init {
        Some(w) => {
            if w.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    actual: w.len(),
                });
            }
            check_simplex(w)?;
            w.to_vec()
        }
        None => equal.clone(),
    };

    let informative = LikelihoodMatrix {
        columns: k,
        rows: lik
            .rows
            .iter()
            .filter(|r| r.iter().any(|&f| f > T::zero()))
            .cloned()
            .collect(),
    };
    let dropped_rows = lik.len() - informative.len();
    if informative.is_empty() && !lik.is_empty() {
        log::warn!("every observation has zero likelihood under every member; using equal weights");
        let ll = log_likelihood(lik, &equal);
        return Ok(WeightFit {
            weights: equal,
            objective: ll,
            log_likelihood: ll,
            iterations: 0,
            converged: false,
            degenerate: true,
            dropped_rows,
            trace: Vec::new(),
        });
    }

    let tol = T::lit(opts.tolerance);
    let shift = alpha - T::one();
    let mut objective = log_posterior(&informative, &weights, alpha);
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(objective);
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut counts = vec![T::zero(); k];
    while iterations < opts.max_iterations {
        counts.iter_mut().for_each(|c| *c = T::zero());
        for row in &informative.rows {
            let s: T = row.iter().zip(&weights).map(|(&f, &w)| f * w).sum();
            if s <= T::zero() {
                continue;
            }
            for ((c, &f), &w) in counts.iter_mut().zip(row).zip(&weights) {
                *c = *c + w * f / s;
            }
        }
        let raw: Vec<T> = counts.iter().map(|&c| (c + shift).max(T::zero())).collect();
        let total: T = raw.iter().copied().sum();
        let next: Vec<T> = if total > T::zero() {
            raw.iter().map(|&r| r / total).collect()
        } else {
            weights.clone()
        };
        let delta = next
            .iter()
            .zip(&weights)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        weights = next;
        iterations += 1;

        let updated = log_posterior(&informative, &weights, alpha);
        debug_assert!(
            updated >= objective - T::lit(1e-9) * (T::one() + objective.abs()),
            "EM objective decreased from {objective} to {updated}"
        );
        objective = updated;
        if opts.record_trace {
            trace.push(objective);
        }
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(WeightFit {
        log_likelihood: log_likelihood(&informative, &weights),
        weights,
        objective,
        iterations,
        converged,
        degenerate: false,
        dropped_rows,
        trace,
    })
}

/// Maximum-likelihood weights from equal starting weights. With no
/// observations the weights stay equal.
pub fn fit_static_weights<T: Real>(lik: &LikelihoodMatrix<T>) -> Result<WeightFit<T>> {
    fit_mixture_weights(lik, T::one(), None, EmOptions::default())
}

/// Dirichlet-penalized weights for week `prior.week`; equal weights in week one.
pub fn fit_adaptive_weights<T: Real>(lik: &LikelihoodMatrix<T>, prior: &AdaptivePriorParams<T>) -> Result<WeightFit<T>> {
    if prior.week == 1 {
        let k = lik.columns;
        if k == 0 {
            return Err(Error::Empty("pool members"));
        }
        let equal = vec![T::one() / T::from_usize_lossy(k); k];
        let ll = log_likelihood(lik, &equal);
        return Ok(WeightFit {
            objective: log_posterior(lik, &equal, prior.concentration()),
            log_likelihood: ll,
            weights: equal,
            iterations: 0,
            converged: true,
            degenerate: false,
            dropped_rows: 0,
            trace: Vec::new(),
        });
    }
    fit_mixture_weights(lik, prior.concentration(), None, EmOptions::default())
}

/// Rows of `f_c(y)` for `members`, keeping only observations where every
/// member submitted a forecast.
pub fn likelihood_rows<T: Real>(members: &[&ModelId], past: &[BTreeMap<ModelId, T>]) -> LikelihoodMatrix<T> {
    let rows = past
        .iter()
        .filter_map(|outcome| members.iter().map(|m| outcome.get(*m).copied()).collect::<Option<Vec<T>>>())
        .collect();
    LikelihoodMatrix {
        columns: members.len(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn traced() -> EmOptions {
        EmOptions {
            record_trace: true,
            ..EmOptions::default()
        }
    }

    fn assert_monotone(trace: &[f64]) {
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "objective fell {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn one_model() {
        let lik = LikelihoodMatrix::from_rows(1, vec![vec![0.3], vec![0.01]]).unwrap();
        assert_eq!(fit_static_weights(&lik).unwrap().weights, vec![1.0]);
    }

    #[test]
    fn dominant_model_takes_all_weight() {
        let lik = LikelihoodMatrix::from_rows(2, vec![vec![1.0, 0.0]; 6]).unwrap();
        let fit = fit_mixture_weights(&lik, 1.0, None, traced()).unwrap();
        assert!(fit.weights[0] >= 0.999);
        assert!(fit.converged);
        assert!(fit.iterations <= 10_000);
        assert_monotone(&fit.trace);
        // hand iteration: w_A <- mean_j (w_A * 1) / (w_A * 1) = 1 after one step
        assert_eq!(fit.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn duplicated_models_stay_symmetric() {
        let rows: Vec<Vec<f64>> = [0.2, 0.05, 0.4, 0.1].iter().map(|&f| vec![f, f]).collect();
        let lik = LikelihoodMatrix::from_rows(2, rows).unwrap();
        let fit = fit_static_weights(&lik).unwrap();
        assert_eq!(fit.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn no_data_gives_equal_weights() {
        let lik = LikelihoodMatrix::<f64>::new(3);
        let fit = fit_static_weights(&lik).unwrap();
        for w in fit.weights {
            assert_relative_eq!(w, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn degenerate_likelihood_is_flagged() {
        let lik = LikelihoodMatrix::from_rows(2, vec![vec![0.0, 0.0]; 3]).unwrap();
        let fit = fit_static_weights(&lik).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn adaptive_week_one_is_uniform() {
        let lik = LikelihoodMatrix::from_rows(4, vec![vec![0.9, 0.0, 0.1, 0.0]]).unwrap();
        let prior = AdaptivePriorParams::new(1, 33, 5.0).unwrap();
        assert_eq!(fit_adaptive_weights(&lik, &prior).unwrap().weights, vec![0.25; 4]);
    }

    #[test]
    fn strong_prior_pulls_to_uniform() {
        let lik = LikelihoodMatrix::from_rows(2, vec![vec![1.0f64, 0.0]; 6]).unwrap();
        let fit = fit_mixture_weights(&lik, 1e9, None, traced()).unwrap();
        assert!((fit.weights[0] - 0.5).abs() < 1e-6);
        assert_monotone(&fit.trace);
    }

    #[test]
    fn flat_prior_matches_static() {
        let lik = LikelihoodMatrix::from_rows(2, vec![vec![1.0, 0.0]; 6]).unwrap();
        let map = fit_mixture_weights(&lik, 1.0, None, EmOptions::default()).unwrap();
        let mle = fit_static_weights(&lik).unwrap();
        assert_eq!(map.weights, mle.weights);
        let prior = AdaptivePriorParams::new(33, 33, 5.0).unwrap();
        assert_eq!(prior.concentration(), 1.0);
        assert_eq!(fit_adaptive_weights(&lik, &prior).unwrap().weights, mle.weights);
    }

    #[test]
    fn concentration_schedule() {
        let p = AdaptivePriorParams::new(1, 33, 5.0f64).unwrap();
        assert_relative_eq!(p.concentration(), 1.0 + 5.0 * 32.0 / 33.0, epsilon = 1e-12);
        let late = AdaptivePriorParams::new(40, 33, 5.0f64).unwrap();
        assert_eq!(late.concentration(), 1.0);
        assert!(AdaptivePriorParams::new(0, 33, 5.0f64).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let lik = LikelihoodMatrix::from_rows(2, vec![vec![0.5, 0.2]]).unwrap();
        assert!(fit_mixture_weights(&lik, 0.5, None, EmOptions::default()).is_err());
        assert!(fit_mixture_weights(&lik, 1.0, Some(&[0.7, 0.7]), EmOptions::default()).is_err());
        assert!(LikelihoodMatrix::from_rows(2, vec![vec![0.5]]).is_err());
        assert!(LikelihoodMatrix::from_rows(1, vec![vec![1.5]]).is_err());
    }

    #[test]
    fn rows_require_every_member() {
        let a = ModelId::from(1);
        let b = ModelId::from(2);
        let past = vec![
            BTreeMap::from([(a.clone(), 0.5), (b.clone(), 0.25)]),
            BTreeMap::from([(a.clone(), 0.1)]),
        ];
        let lik = likelihood_rows(&[&a, &b], &past);
        assert_eq!(lik.rows(), &[vec![0.5, 0.25]]);
        assert_eq!(likelihood_rows(&[&a], &past).len(), 2);
    }

    proptest! {
        #[test]
        fn em_is_monotone_and_on_simplex(
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 1..20),
            alpha in 1.0f64..6.0,
        ) {
            let lik = LikelihoodMatrix::from_rows(3, rows).unwrap();
            let fit = fit_mixture_weights(&lik, alpha, None, traced()).unwrap();
            let total: f64 = fit.weights.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(fit.weights.iter().all(|w| *w >= 0.0));
            for w in fit.trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()));
            }
        }
    }
}
