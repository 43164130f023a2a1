use std::collections::BTreeMap;

use crate::error::Result;
use crate::ingest::ModelId;
use crate::pmf::{linear_pool, BinnedPmf};
use crate::scalar::Real;

use super::entropy::percent_entropy;
use super::weights::{
    fit_adaptive_weights, fit_static_weights, likelihood_rows, AdaptivePriorParams, WeightFit, WeightVector,
};

/// Linear pool of component forecasts with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledForecast<T> {
    pub weights: WeightVector<T>,
    pub pmf: BinnedPmf<T>,
    pub entropy: T,
    /// Weights fell back to equal because no observation had positive likelihood.
    pub degenerate: bool,
}

fn pool<T: Real>(current: &BTreeMap<ModelId, BinnedPmf<T>>, fit: Option<WeightFit<T>>) -> Result<Option<PooledForecast<T>>> {
    if current.is_empty() {
        return Ok(None);
    }
    let labels: Vec<String> = current.keys().map(|m| m.as_str().to_owned()).collect();
    let (weights, degenerate) = match fit {
        Some(f) => (WeightVector::new(labels, f.weights)?, f.degenerate),
        None => (WeightVector::equal(labels), false),
    };
    let pmfs: Vec<&BinnedPmf<T>> = current.values().collect();
    let pmf = linear_pool(&pmfs, &weights.weights)?;
    Ok(Some(PooledForecast {
        entropy: percent_entropy(&weights.weights),
        weights,
        pmf,
        degenerate,
    }))
}

/// Equal-weight pool of every submitted forecast; `None` when nothing was submitted.
pub fn equal_ensemble<T: Real>(current: &BTreeMap<ModelId, BinnedPmf<T>>) -> Result<Option<PooledForecast<T>>> {
    pool(current, None)
}

/// Maximum-likelihood pool fit on prior-season outcomes.
///
/// Each entry of `past` maps models to the probability they placed on the
/// realized bin; only outcomes covering every submitting model are used.
pub fn static_ensemble<T: Real>(
    current: &BTreeMap<ModelId, BinnedPmf<T>>,
    past: &[BTreeMap<ModelId, T>],
) -> Result<Option<PooledForecast<T>>> {
    if current.is_empty() {
        return Ok(None);
    }
    let members: Vec<&ModelId> = current.keys().collect();
    let fit = fit_static_weights(&likelihood_rows(&members, past))?;
    pool(current, Some(fit))
}

/// Dirichlet-penalized pool fit on this season's outcomes so far.
pub fn adaptive_ensemble<T: Real>(
    current: &BTreeMap<ModelId, BinnedPmf<T>>,
    past: &[BTreeMap<ModelId, T>],
    prior: &AdaptivePriorParams<T>,
) -> Result<Option<PooledForecast<T>>> {
    if current.is_empty() {
        return Ok(None);
    }
    let members: Vec<&ModelId> = current.keys().collect();
    let fit = fit_adaptive_weights(&likelihood_rows(&members, past), prior)?;
    pool(current, Some(fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn current() -> BTreeMap<ModelId, BinnedPmf<f64>> {
        BTreeMap::from([
            (ModelId::from(1), BinnedPmf::point_mass(3)),
            (ModelId::from(2), BinnedPmf::point_mass(7)),
        ])
    }

    #[test]
    fn equal_pool_of_two() {
        let p = equal_ensemble(&current()).unwrap().unwrap();
        assert_eq!(p.pmf.mass(3), 0.5);
        assert_eq!(p.pmf.mass(7), 0.5);
        assert_eq!(p.entropy, 1.0);
        assert!(equal_ensemble::<f64>(&BTreeMap::new()).unwrap().is_none());
    }

    #[test]
    fn first_season_static_is_equal() {
        let p = static_ensemble(&current(), &[]).unwrap().unwrap();
        assert_eq!(p.weights.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn static_follows_likelihood() {
        let a = ModelId::from(1);
        let b = ModelId::from(2);
        let past = vec![BTreeMap::from([(a.clone(), 1.0), (b.clone(), 0.0)]); 4];
        let p = static_ensemble(&current(), &past).unwrap().unwrap();
        assert!(p.weights.get("1").unwrap() >= 0.999);
        assert!(p.entropy < 0.01);
    }

    #[test]
    fn adaptive_week_one_is_equal() {
        let a = ModelId::from(1);
        let past = vec![BTreeMap::from([(a, 1.0), (ModelId::from(2), 0.0)])];
        let prior = AdaptivePriorParams::new(1, 33, 5.0).unwrap();
        let p = adaptive_ensemble(&current(), &past, &prior).unwrap().unwrap();
        assert_eq!(p.weights.weights, vec![0.5, 0.5]);
    }
}
