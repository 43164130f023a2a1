use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use rayon::prelude::*;

use crate::cap::{fit_mixture_weights, log_likelihood, EmOptions, LikelihoodMatrix};
use crate::error::{Error, Result};
use crate::grid::LAST_BIN_START;
use crate::pmf::BinnedPmf;
use crate::scalar::Real;

/// One EM run from a random start.
#[derive(Debug, Clone, PartialEq)]
pub struct Restart<T> {
    pub index: usize,
    pub initial: Vec<T>,
    pub weights: Vec<T>,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport<T> {
    pub restarts: Vec<Restart<T>>,
    /// Standard deviation of each converged weight across restarts.
    pub weight_sd: Vec<T>,
    /// Largest minus smallest final log-likelihood.
    pub likelihood_spread: T,
    pub degenerate: bool,
}

/// Probability each model gave the realized value, one row per observation.
pub fn likelihood_from_observations<T: Real>(observations: &[(Vec<BinnedPmf<T>>, T)]) -> Result<LikelihoodMatrix<T>> {
    let k = observations.first().map_or(0, |(p, _)| p.len());
    let mut lik = LikelihoodMatrix::new(k);
    for (pmfs, truth) in observations {
        lik.push_row(pmfs.iter().map(|p| p.mass_at(*truth)).collect::<Result<Vec<T>>>()?)?;
    }
    Ok(lik)
}

fn dirichlet_one<T: Real>(rng: &mut ChaCha8Rng, k: usize) -> Vec<T> {
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let mut w: Vec<T> = draws.iter().map(|d| T::lit(d / total)).collect();
    // put any rounding residue on the largest entry so the start is on the simplex
    let residue = T::one() - w.iter().copied().sum::<T>();
    if let Some(max) = w.iter_mut().max_by(|a, b| a.cmp_total(b)) {
        *max = *max + residue;
    }
    w
}

fn sd<T: Real>(values: &[T]) -> T {
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    (values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n).sqrt()
}

/// Fits the maximum-likelihood pool from `n_restarts` uniform random starts
/// on the simplex drawn with `seed`.
pub fn restart_dispersion<T: Real>(lik: &LikelihoodMatrix<T>, n_restarts: usize, seed: u64) -> Result<RestartReport<T>> {
    if n_restarts < 2 {
        return Err(Error::Domain {
            value: n_restarts as f64,
            domain: "at least two restarts",
        });
    }
    if lik.columns() == 0 {
        return Err(Error::Empty("pool members"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<T>> = (0..n_restarts).map(|_| dirichlet_one(&mut rng, lik.columns())).collect();
    let fits: Vec<Result<(Vec<T>, crate::cap::WeightFit<T>)>> = starts
        .into_par_iter()
        .map(|init| fit_mixture_weights(lik, T::one(), Some(&init), EmOptions::default()).map(|f| (init, f)))
        .collect();
    let mut restarts = Vec::with_capacity(n_restarts);
    let mut degenerate = false;
    for (index, fit) in fits.into_iter().enumerate() {
        let (initial, fit) = fit?;
        degenerate |= fit.degenerate;
        restarts.push(Restart {
            index,
            initial,
            log_likelihood: log_likelihood(lik, &fit.weights),
            weights: fit.weights,
            iterations: fit.iterations,
            converged: fit.converged,
        });
    }
    let weight_sd = (0..lik.columns())
        .map(|c| sd(&restarts.iter().map(|r| r.weights[c]).collect::<Vec<T>>()))
        .collect();
    let lls: Vec<T> = restarts.iter().map(|r| r.log_likelihood).collect();
    let hi = lls.iter().copied().fold(T::neg_infinity(), T::max);
    let lo = lls.iter().copied().fold(T::infinity(), T::min);
    let likelihood_spread = if degenerate || !(hi - lo).is_finite() { T::zero() } else { hi - lo };
    Ok(RestartReport {
        restarts,
        weight_sd,
        likelihood_spread,
        degenerate,
    })
}

/// Built-in fixtures for the restart and likelihood-surface diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demo {
    /// Two copies of the same forecast.
    Duplicated,
    /// Two non-overlapping forecasts with every truth inside the first one's support.
    Disjoint,
    /// Two partly overlapping forecasts.
    Overlapping,
    /// Two near-duplicates and one distinct forecast.
    Triple,
}

impl FromStr for Demo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duplicated" => Ok(Demo::Duplicated),
            "disjoint" => Ok(Demo::Disjoint),
            "overlapping" => Ok(Demo::Overlapping),
            "triple" => Ok(Demo::Triple),
            other => Err(Error::Config(format!(
                "unknown demo {other:?} (expected duplicated, disjoint, overlapping or triple)"
            ))),
        }
    }
}

/// Forecasts and truths for a [`Demo`]; truths are drawn from the first
/// model's generating normal.
pub fn demo_observations<T: Real>(demo: Demo, n_obs: usize, seed: u64) -> Result<Vec<(Vec<BinnedPmf<T>>, T)>> {
    let specs: &[(f64, f64)] = match demo {
        Demo::Duplicated => &[(2.0, 0.5), (2.0, 0.5)],
        Demo::Disjoint => &[(2.0, 0.2), (8.0, 0.2)],
        Demo::Overlapping => &[(2.0, 0.5), (2.5, 0.5)],
        Demo::Triple => &[(2.0, 0.5), (2.1, 0.5), (3.0, 0.5)],
    };
    let pmfs: Vec<BinnedPmf<T>> = specs
        .iter()
        .map(|&(m, s)| BinnedPmf::discretized_normal(m, s))
        .collect::<Result<_>>()?;
    let (mean, sd) = specs[0];
    let truth_dist = Normal::new(mean, sd).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_obs);
    while out.len() < n_obs {
        let y: f64 = truth_dist.sample(&mut rng);
        let y = (y * 10.0).round() / 10.0;
        if !(0.0..LAST_BIN_START).contains(&y) {
            continue;
        }
        // keep draws that the disjoint demo's first model actually covers
        if matches!(demo, Demo::Disjoint) && pmfs[0].mass_at(T::lit(y))? < T::lit(1e-6) {
            continue;
        }
        out.push((pmfs.clone(), T::lit(y)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicated_models_are_not_identifiable() {
        let obs = demo_observations::<f64>(Demo::Duplicated, 30, 1).unwrap();
        let lik = likelihood_from_observations(&obs).unwrap();
        let report = restart_dispersion(&lik, 100, 7).unwrap();
        assert_eq!(report.restarts.len(), 100);
        assert!(report.likelihood_spread < 1e-6);
        assert!(report.weight_sd[0] > 0.1);
        for r in &report.restarts {
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn disjoint_models_have_unique_optimum() {
        let obs = demo_observations::<f64>(Demo::Disjoint, 30, 1).unwrap();
        let lik = likelihood_from_observations(&obs).unwrap();
        let report = restart_dispersion(&lik, 50, 3).unwrap();
        for r in &report.restarts {
            assert!(r.weights[0] > 0.999, "{:?}", r.weights);
        }
        assert!(report.weight_sd[0] < 1e-3);
    }

    #[test]
    fn seeded_runs_repeat() {
        let obs = demo_observations::<f64>(Demo::Overlapping, 20, 5).unwrap();
        let lik = likelihood_from_observations(&obs).unwrap();
        assert_eq!(restart_dispersion(&lik, 2, 9).unwrap(), restart_dispersion(&lik, 2, 9).unwrap());
        assert!(restart_dispersion(&lik, 1, 9).is_err());
    }

    #[test]
    fn degenerate_is_flagged() {
        let lik = LikelihoodMatrix::from_rows(2, vec![vec![0.0, 0.0]]).unwrap();
        assert!(restart_dispersion(&lik, 3, 0).unwrap().degenerate);
    }
}
