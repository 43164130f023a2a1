//! Binned probability mass functions and mixture arithmetic.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::grid::{bin_index, BinGrid, NUM_BINS};
use crate::scalar::Real;

/// Probability mass over the 131 ILI bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPmf<T> {
    probs: Vec<T>,
}

impl<T: Real> BinnedPmf<T> {
    /// Validates and normalizes raw bin masses.
    ///
    /// Raw totals in `[0.9, 1.1]` are rescaled to one; totals already within
    /// `T::EXACT_TOL` of one are kept verbatim so that re-reading a written
    /// pmf reproduces it bit for bit.
    pub fn normalize(raw: Vec<T>) -> Result<Self> {
        if raw.len() != NUM_BINS {
            return Err(Error::LengthMismatch {
                expected: NUM_BINS,
                actual: raw.len(),
            });
        }
        if let Some((i, p)) = raw.iter().enumerate().find(|(_, p)| !(**p >= T::zero()) || !p.is_finite()) {
            return Err(Error::MalformedForecast(format!("bin {i} has mass {p}")));
        }
        let total: T = raw.iter().copied().sum();
        if !(total >= T::lit(0.9) && total <= T::lit(1.1)) {
            return Err(Error::MalformedForecast(format!(
                "bin masses sum to {total}, outside [0.9, 1.1]"
            )));
        }
        if (total - T::one()).abs() <= T::lit(T::EXACT_TOL) {
            return Ok(Self { probs: raw });
        }
        Ok(Self {
            probs: raw.into_iter().map(|p| p / total).collect(),
        })
    }

    /// Wraps masses that are known to be a valid pmf (checked in debug builds).
    pub fn from_probs_unchecked(probs: Vec<T>) -> Self {
        debug_assert_eq!(probs.len(), NUM_BINS);
        debug_assert!(
            (probs.iter().copied().sum::<T>() - T::one()).abs() <= T::lit(T::UNIT_TOL),
            "pmf total drifted from one"
        );
        Self { probs }
    }

    pub fn uniform() -> Self {
        let p = T::one() / T::from_usize_lossy(NUM_BINS);
        Self {
            probs: vec![p; NUM_BINS],
        }
    }

    /// All mass in one bin.
    pub fn point_mass(bin: usize) -> Self {
        assert!(bin < NUM_BINS, "bin {bin} out of range");
        let mut probs = vec![T::zero(); NUM_BINS];
        probs[bin] = T::one();
        Self { probs }
    }

    /// Normal(mean, sd) discretized by CDF differencing over the bin edges.
    /// Mass below 0 is folded into bin 0 and mass above 13 into bin 130.
    pub fn discretized_normal(mean: f64, sd: f64) -> Result<Self> {
        let normal = Normal::new(mean, sd).map_err(|_| Error::Domain {
            value: sd,
            domain: "finite mean and sd > 0",
        })?;
        let mut probs = Vec::with_capacity(NUM_BINS);
        let mut prev = 0.0;
        for bin in 0..NUM_BINS {
            let cdf = if bin + 1 == NUM_BINS {
                1.0
            } else {
                normal.cdf(BinGrid::upper::<f64>(bin))
            };
            probs.push(T::lit(cdf - prev));
            prev = cdf;
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    pub fn mass(&self, bin: usize) -> T {
        self.probs[bin]
    }

    /// Mass assigned to the bin containing `ili`.
    pub fn mass_at(&self, ili: T) -> Result<T> {
        Ok(self.probs[bin_index(ili)?])
    }

    /// Mass of bins `0..=bin`.
    pub fn cdf_through(&self, bin: usize) -> T {
        self.probs[..=bin].iter().copied().sum()
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }

    /// Mean of the pmf using bin midpoints (the last bin uses 13.05).
    pub fn mean(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| p * (BinGrid::lower::<T>(i) + T::lit(0.05)))
            .sum()
    }
}

/// Normalizes raw bin masses into a [`BinnedPmf`].
pub fn normalize_pmf<T: Real>(raw: Vec<T>) -> Result<BinnedPmf<T>> {
    BinnedPmf::normalize(raw)
}

/// Checks that `weights` is non-negative and sums to one within `T::SIMPLEX_TOL`.
pub fn check_simplex<T: Real>(weights: &[T]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Empty("weight vector"));
    }
    let total: T = weights.iter().copied().sum();
    if weights.iter().any(|w| !(*w >= T::zero())) || (total - T::one()).abs() > T::lit(T::SIMPLEX_TOL) {
        return Err(Error::OffSimplex { total: total.as_f64() });
    }
    Ok(())
}

/// Linear opinion pool: bin `b` of the result is `sum_c weights[c] * pmfs[c][b]`.
pub fn linear_pool<T: Real>(pmfs: &[&BinnedPmf<T>], weights: &[T]) -> Result<BinnedPmf<T>> {
    if pmfs.is_empty() {
        return Err(Error::Empty("pool members"));
    }
    if pmfs.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: pmfs.len(),
            actual: weights.len(),
        });
    }
    check_simplex(weights)?;
    let mut probs = vec![T::zero(); NUM_BINS];
    for (pmf, &w) in pmfs.iter().zip(weights) {
        for (out, &p) in probs.iter_mut().zip(pmf.probs()) {
            *out = *out + w * p;
        }
    }
    Ok(BinnedPmf { probs })
}

/// Linear pool with weight `1 / n` on each member.
pub fn equal_pool<T: Real>(pmfs: &[&BinnedPmf<T>]) -> Result<BinnedPmf<T>> {
    if pmfs.is_empty() {
        return Err(Error::Empty("pool members"));
    }
    let w = T::one() / T::from_usize_lossy(pmfs.len());
    linear_pool(pmfs, &vec![w; pmfs.len()])
}

/// One component of a mixture, summarized by its first two moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent<T> {
    pub mean: T,
    pub variance: T,
    pub weight: T,
}

impl<T: Real> MixtureComponent<T> {
    pub fn new(mean: T, variance: T, weight: T) -> Result<Self> {
        if !(variance >= T::zero()) {
            return Err(Error::Domain {
                value: variance.as_f64(),
                domain: "variance >= 0",
            });
        }
        if !(weight >= T::zero()) {
            return Err(Error::Domain {
                value: weight.as_f64(),
                domain: "weight >= 0",
            });
        }
        Ok(Self { mean, variance, weight })
    }
}

/// Variance of a mixture: `sum w s^2 + sum w m^2 - (sum w m)^2`.
pub fn mixture_variance<T: Real>(components: &[MixtureComponent<T>]) -> Result<T> {
    if components.is_empty() {
        return Err(Error::Empty("mixture components"));
    }
    let weights: Vec<T> = components.iter().map(|c| c.weight).collect();
    check_simplex(&weights)?;
    let within: T = components.iter().map(|c| c.weight * c.variance).sum();
    let second: T = components.iter().map(|c| c.weight * c.mean * c.mean).sum();
    let first: T = components.iter().map(|c| c.weight * c.mean).sum();
    Ok(within + second - first * first)
}
