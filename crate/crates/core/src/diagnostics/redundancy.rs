use std::collections::BTreeMap;

use crate::cap::{log_likelihood, LikelihoodMatrix};
use crate::error::{Error, Result};
use crate::ingest::ModelId;
use crate::matrix::SquareMatrix;
use crate::pmf::{mixture_variance, BinnedPmf, MixtureComponent};
use crate::scalar::Real;
use crate::scoring::kl_divergence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceKlPoint<T> {
    pub mean_a: T,
    pub mean_b: T,
    /// Closed-form Gaussian KL `(mean_a - mean_b)^2 / (2 sigma^2)`.
    pub kl: T,
    /// KL between the two normals discretized onto the bin grid.
    pub kl_binned: T,
    pub variance: T,
}

/// Two-component mixture variance against the KL between the components as
/// the second mean moves along `means_b`.
pub fn variance_vs_kl_curve<T: Real>(mean_a: T, means_b: &[T], sigma: T, weight: T) -> Result<Vec<VarianceKlPoint<T>>> {
    if !(sigma > T::zero()) {
        return Err(Error::Domain {
            value: sigma.as_f64(),
            domain: "sigma > 0",
        });
    }
    let var = sigma * sigma;
    let pa = BinnedPmf::<T>::discretized_normal(mean_a.as_f64(), sigma.as_f64())?;
    means_b
        .iter()
        .map(|&mean_b| {
            let d = mean_a - mean_b;
            let pb = BinnedPmf::<T>::discretized_normal(mean_b.as_f64(), sigma.as_f64())?;
            let variance = mixture_variance(&[
                MixtureComponent::new(mean_a, var, weight)?,
                MixtureComponent::new(mean_b, var, T::one() - weight)?,
            ])?;
            Ok(VarianceKlPoint {
                mean_a,
                mean_b,
                kl: d * d / (T::lit(2.0) * var),
                kl_binned: kl_divergence(&pa, &pb),
                variance,
            })
        })
        .collect()
}

/// Symmetrized KL between models averaged over the cells where both forecast.
/// Pairs that never co-occur are zero.
pub fn mean_pairwise_kl<T: Real>(models: &[ModelId], cells: &[BTreeMap<ModelId, BinnedPmf<T>>]) -> SquareMatrix<T> {
    let n = models.len();
    let mut sum = SquareMatrix::<T>::zeros(n);
    let mut count = vec![vec![0usize; n]; n];
    let half = T::lit(0.5);
    for cell in cells {
        for i in 0..n {
            let Some(p) = cell.get(&models[i]) else { continue };
            for j in (i + 1)..n {
                let Some(q) = cell.get(&models[j]) else { continue };
                let v = half * (kl_divergence(p, q) + kl_divergence(q, p));
                sum.set(i, j, sum.get(i, j) + v);
                count[i][j] += 1;
            }
        }
    }
    SquareMatrix::from_fn(n, |i, j| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b || count[a][b] == 0 {
            T::zero()
        } else {
            sum.get(a, b) / T::from_usize_lossy(count[a][b])
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint<T> {
    pub weights: Vec<T>,
    pub log_likelihood: T,
}

/// Log-likelihood of a three-member pool at every simplex point whose
/// coordinates are multiples of `1 / steps`.
pub fn likelihood_surface<T: Real>(lik: &LikelihoodMatrix<T>, steps: usize) -> Result<Vec<SurfacePoint<T>>> {
    if lik.columns() != 3 {
        return Err(Error::LengthMismatch {
            expected: 3,
            actual: lik.columns(),
        });
    }
    if steps == 0 {
        return Err(Error::Domain {
            value: 0.0,
            domain: "steps >= 1",
        });
    }
    let s = T::from_usize_lossy(steps);
    let mut out = Vec::new();
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let k = steps - i - j;
            let w = vec![
                T::from_usize_lossy(i) / s,
                T::from_usize_lossy(j) / s,
                T::from_usize_lossy(k) / s,
            ];
            out.push(SurfacePoint {
                log_likelihood: log_likelihood(lik, &w),
                weights: w,
            });
        }
    }
    Ok(out)
}
