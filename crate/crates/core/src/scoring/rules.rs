use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::bin_index;
use crate::ingest::ForecastKey;
use crate::pmf::BinnedPmf;
use crate::scalar::Real;

/// Log scores below this are clamped to it.
pub const LOG_SCORE_FLOOR: f64 = -10.0;
/// Brier thresholds run 0.0, 0.1, ..., 10.0 percent ILI.
pub const NUM_THRESHOLDS: usize = 101;
pub const BRIER_STEP: f64 = 0.1;

/// Which event the Brier indicator encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BrierConvention {
    /// `[F(x) - 1(t <= x)]^2`: the forecast CDF against "truth at or below x".
    #[default]
    Standard,
    /// `[F(x) - 1(x < t)]^2`, the reversed event orientation.
    PaperPrinted,
}

/// `ln p[bin(truth)]`, floored at -10 (a zero-mass bin also scores -10).
pub fn log_score<T: Real>(pmf: &BinnedPmf<T>, truth: T) -> Result<T> {
    let p = pmf.mass(bin_index(truth)?);
    let floor = T::lit(LOG_SCORE_FLOOR);
    if p <= T::zero() {
        return Ok(floor);
    }
    Ok(p.ln().max(floor))
}

/// Cumulative mass through the truth's bin, inclusive.
pub fn pit_value<T: Real>(pmf: &BinnedPmf<T>, truth: T) -> Result<T> {
    let cdf = pmf.cdf_through(bin_index(truth)?);
    Ok(cdf.min(T::one()))
}

/// Index `k` of threshold `k / 10`, or an error when `x` is off the grid.
fn threshold_index<T: Real>(x: T) -> Result<usize> {
    let scaled = x.as_f64() / BRIER_STEP;
    let k = scaled.round();
    let tol = if T::EXACT_TOL < 1e-9 { 1e-9 } else { 1e-5 };
    if !(0.0..=(NUM_THRESHOLDS - 1) as f64).contains(&k) || (scaled - k).abs() > tol {
        return Err(Error::OffGridThreshold(x.as_f64()));
    }
    Ok(k as usize)
}

/// Brier thresholds `0.0..=10.0` by `0.1`.
pub fn brier_thresholds<T: Real>() -> Vec<T> {
    (0..NUM_THRESHOLDS)
        .map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(10))
        .collect()
}

fn brier_at<T: Real>(cdf_below: T, truth: T, x: T, convention: BrierConvention) -> T {
    let event = match convention {
        BrierConvention::Standard => truth <= x,
        BrierConvention::PaperPrinted => x < truth,
    };
    let indicator = if event { T::one() } else { T::zero() };
    let d = cdf_below - indicator;
    d * d
}

/// `[F(x) - 1(event)]^2` where `F(x)` is the mass of every bin whose upper edge is at most `x`.
pub fn brier_score<T: Real>(pmf: &BinnedPmf<T>, truth: T, x: T, convention: BrierConvention) -> Result<T> {
    bin_index(truth)?;
    let k = threshold_index(x)?;
    let cdf: T = pmf.probs()[..k].iter().copied().sum();
    Ok(brier_at(cdf.min(T::one()), truth, x, convention))
}

/// Brier score at each of the 101 thresholds.
pub fn brier_curve<T: Real>(pmf: &BinnedPmf<T>, truth: T, convention: BrierConvention) -> Result<Vec<T>> {
    bin_index(truth)?;
    let mut out = Vec::with_capacity(NUM_THRESHOLDS);
    let mut cdf = T::zero();
    for (k, x) in brier_thresholds::<T>().into_iter().enumerate() {
        if k > 0 {
            cdf = cdf + pmf.mass(k - 1);
        }
        out.push(brier_at(cdf.min(T::one()), truth, x, convention));
    }
    Ok(out)
}

/// Riemann sum of the Brier curve with step 0.1.
pub fn brier_integral<T: Real>(pmf: &BinnedPmf<T>, truth: T, convention: BrierConvention) -> Result<T> {
    let curve = brier_curve(pmf, truth, convention)?;
    Ok(curve.into_iter().sum::<T>() * T::lit(BRIER_STEP))
}

/// Scores attached to one forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord<T> {
    pub key: ForecastKey,
    pub log_score: T,
    pub pit: T,
    pub brier_integral: T,
}

pub fn score_forecast<T: Real>(
    key: ForecastKey,
    pmf: &BinnedPmf<T>,
    truth: T,
    convention: BrierConvention,
) -> Result<ScoreRecord<T>> {
    Ok(ScoreRecord {
        key,
        log_score: log_score(pmf, truth)?,
        pit: pit_value(pmf, truth)?,
        brier_integral: brier_integral(pmf, truth, convention)?,
    })
}
