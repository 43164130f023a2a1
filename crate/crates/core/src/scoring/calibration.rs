use crate::error::{Error, Result};
use crate::scalar::Real;

/// Area between the empirical CDF of `pits` and the identity on `[0, 1]`.
///
/// The empirical CDF is a step function with a jump at every observation, so
/// the area is integrated exactly piece by piece between consecutive sorted
/// observations. Zero means perfectly uniform PIT values.
pub fn pit_calibration_auc<T: Real>(pits: &[T]) -> Result<T> {
    if pits.is_empty() {
        return Err(Error::Empty("PIT values"));
    }
    if let Some(p) = pits.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
        return Err(Error::Domain {
            value: p.as_f64(),
            domain: "[0, 1] PIT value",
        });
    }
    let mut sorted = pits.to_vec();
    sorted.sort_by(T::cmp_total);
    let n = T::from_usize_lossy(sorted.len());
    let half = T::lit(0.5);
    let mut area = T::zero();
    let mut left = T::zero();
    let mut count = 0usize;
    let mut i = 0;
    loop {
        while i < sorted.len() && sorted[i] <= left {
            count += 1;
            i += 1;
        }
        let right = if i < sorted.len() { sorted[i] } else { T::one() };
        let level = T::from_usize_lossy(count) / n;
        area = area + segment_area(left, right, level, half);
        if i >= sorted.len() {
            break;
        }
        left = right;
    }
    Ok(area)
}

/// `integral_a^b |c - x| dx`.
fn segment_area<T: Real>(a: T, b: T, c: T, half: T) -> T {
    if b <= a {
        return T::zero();
    }
    if c <= a {
        half * ((b - c) * (b - c) - (a - c) * (a - c))
    } else if c >= b {
        half * ((c - a) * (c - a) - (c - b) * (c - b))
    } else {
        half * ((c - a) * (c - a) + (b - c) * (b - c))
    }
}

/// Empirical CDF of `values` evaluated at each point of `grid`.
pub fn empirical_cdf<T: Real>(values: &[T], grid: &[T]) -> Vec<T> {
    let mut sorted = values.to_vec();
    sorted.sort_by(T::cmp_total);
    let n = T::from_usize_lossy(sorted.len().max(1));
    grid.iter()
        .map(|x| T::from_usize_lossy(sorted.partition_point(|v| v <= x)) / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Midpoint-rule integral of |F_n(x) - x| on a fine grid.
    fn brute_auc(pits: &[f64]) -> f64 {
        let m = 200_000;
        (0..m)
            .map(|i| {
                let x = (i as f64 + 0.5) / m as f64;
                let f = pits.iter().filter(|p| **p <= x).count() as f64 / pits.len() as f64;
                (f - x).abs() / m as f64
            })
            .sum()
    }

    #[test]
    fn examples() {
        assert_relative_eq!(pit_calibration_auc(&[0.0f64; 10]).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(pit_calibration_auc(&[0.5f64; 7]).unwrap(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(pit_calibration_auc(&[1.0f64; 3]).unwrap(), 0.5, epsilon = 1e-12);
        let small: Vec<f64> = (1..=10).map(|k| k as f64 / 11.0).collect();
        let large: Vec<f64> = (1..=1000).map(|k| k as f64 / 1001.0).collect();
        let a_small = pit_calibration_auc(&small).unwrap();
        let a_large = pit_calibration_auc(&large).unwrap();
        assert!(a_large < a_small);
        assert!(a_large < 1e-3);
        assert!(pit_calibration_auc::<f64>(&[]).is_err());
        assert!(pit_calibration_auc(&[1.5f64]).is_err());
    }

    #[test]
    fn matches_brute_force_integration() {
        for pits in [
            vec![0.1, 0.2, 0.2, 0.9],
            vec![0.33, 0.01, 0.75, 0.5, 0.5, 0.99],
            vec![0.0, 1.0],
        ] {
            let exact = pit_calibration_auc(&pits).unwrap();
            assert_relative_eq!(exact, brute_auc(&pits), epsilon = 1e-5);
        }
    }

    #[test]
    fn ecdf() {
        let grid = [0.0, 0.25, 0.5, 1.0];
        assert_eq!(empirical_cdf(&[0.5, 0.1, 0.9, 0.25], &grid), vec![0.0, 0.5, 0.75, 1.0]);
    }
}
