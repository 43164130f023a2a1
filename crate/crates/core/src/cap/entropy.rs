use crate::scalar::Real;

/// Entropy of `weights` divided by `ln K`; one when `K = 1`.
pub fn percent_entropy<T: Real>(weights: &[T]) -> T {
    let k = weights.len();
    assert!(k >= 1, "percent entropy of an empty weight vector");
    if k == 1 {
        return T::one();
    }
    let h: T = weights
        .iter()
        .filter(|w| **w > T::zero())
        .map(|&w| -w * w.ln())
        .sum();
    (h / T::from_usize_lossy(k).ln()).max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn examples() {
        assert_relative_eq!(percent_entropy(&[0.125f64; 8]), 1.0, epsilon = 1e-12);
        assert_eq!(percent_entropy(&[0.0f64, 1.0, 0.0, 0.0]), 0.0);
        let expected = 1.5 * 2f64.ln() / 3f64.ln();
        assert_relative_eq!(percent_entropy(&[0.5f64, 0.25, 0.25]), expected, epsilon = 1e-12);
        assert!((expected - 0.946).abs() < 1e-3);
        assert_eq!(percent_entropy(&[1.0f32]), 1.0);
    }
}
