//! The fixed percent-ILI bin grid.
//!
//! Bins `0..130` are `[0.1 i, 0.1 (i + 1))`; bin 130 is the closed interval
//! `[13.0, 100.0]`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of bins in the grid.
pub const NUM_BINS: usize = 131;
/// Number of bins per percentage point below the open-ended last bin.
pub const BINS_PER_UNIT: usize = 10;
/// Lower edge of the last, wide bin.
pub const LAST_BIN_START: f64 = 13.0;
/// Upper edge of the last bin.
pub const MAX_ILI: f64 = 100.0;

/// Canonical bin grid. Zero-sized; all methods are associated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BinGrid;

impl BinGrid {
    /// Edge `i` for `i` in `0..=131`. Edges below 13 are `i / 10` computed in
    /// the scalar type so that the decimal literal `2.3` and edge 23 agree.
    pub fn edge<T: Real>(i: usize) -> T {
        assert!(i <= NUM_BINS, "edge index {i} out of range");
        if i == NUM_BINS {
            T::lit(MAX_ILI)
        } else {
            T::from_usize_lossy(i) / T::from_usize_lossy(BINS_PER_UNIT)
        }
    }

    /// All 132 edges in ascending order.
    pub fn edges<T: Real>() -> Vec<T> {
        (0..=NUM_BINS).map(Self::edge).collect()
    }

    /// Lower edge of bin `i`.
    pub fn lower<T: Real>(bin: usize) -> T {
        Self::edge(bin)
    }

    /// Upper edge of bin `i`.
    pub fn upper<T: Real>(bin: usize) -> T {
        Self::edge(bin + 1)
    }
}

/// Bin holding `ili` percent: `min(floor(10 ili), 130)`, evaluated against
/// the grid edges so that `bin_index(edge(i)) == i` holds exactly.
pub fn bin_index<T: Real>(ili: T) -> Result<usize> {
    if !(ili >= T::zero() && ili <= T::lit(MAX_ILI)) {
        return Err(Error::Domain {
            value: ili.as_f64(),
            domain: "[0, 100] percent ILI",
        });
    }
    let last = NUM_BINS - 1;
    if ili >= BinGrid::edge::<T>(last) {
        return Ok(last);
    }
    let scaled = (ili * T::from_usize_lossy(BINS_PER_UNIT)).floor();
    let mut i = scaled.to_usize().unwrap_or(0).min(last - 1);
    // floor(10 x) can land one bin off when x is not representable exactly
    if ili < BinGrid::edge::<T>(i) {
        i -= 1;
    } else if ili >= BinGrid::edge::<T>(i + 1) {
        i += 1;
    }
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(bin_index(0.0_f64).unwrap(), 0);
        assert_eq!(bin_index(13.0_f64).unwrap(), 130);
        assert_eq!(bin_index(6.55_f64).unwrap(), 65);
        assert_eq!(bin_index(100.0_f64).unwrap(), 130);
        assert_eq!(bin_index(12.99_f64).unwrap(), 129);
    }

    #[test]
    fn decimal_literals_hit_their_own_bin() {
        // 2.3 * 10 rounds to 22.999..., which a bare floor would misplace.
        assert_eq!(bin_index(2.3_f64).unwrap(), 23);
        assert_eq!(bin_index(2.3_f32).unwrap(), 23);
        for i in 0..130 {
            let literal: f64 = format!("{}.{}", i / 10, i % 10).parse().unwrap();
            assert_eq!(bin_index(literal).unwrap(), i, "literal {literal}");
        }
    }

    #[test]
    fn out_of_domain() {
        assert!(bin_index(-0.01_f64).is_err());
        assert!(bin_index(100.01_f64).is_err());
        assert!(bin_index(f64::NAN).is_err());
    }

    #[test]
    fn edges_shape() {
        let e = BinGrid::edges::<f64>();
        assert_eq!(e.len(), NUM_BINS + 1);
        assert_eq!(e[0], 0.0);
        assert_eq!(e[130], 13.0);
        assert_eq!(e[131], 100.0);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
        for (i, &edge) in e.iter().enumerate().take(NUM_BINS) {
            assert_eq!(bin_index(edge).unwrap(), i);
        }
    }
}
