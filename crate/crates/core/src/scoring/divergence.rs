use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::pmf::BinnedPmf;
use crate::scalar::Real;

/// Mass added to every bin of both arguments before computing KL.
pub const KL_SMOOTHING: f64 = 1e-10;

/// `KL(p || q)` after adding [`KL_SMOOTHING`] to every bin and renormalizing.
pub fn kl_divergence<T: Real>(p: &BinnedPmf<T>, q: &BinnedPmf<T>) -> T {
    kl_divergence_with(p, q, T::lit(KL_SMOOTHING))
}

/// `KL(p || q)` with an explicit smoothing mass; `eps = 0` gives the raw divergence.
pub fn kl_divergence_with<T: Real>(p: &BinnedPmf<T>, q: &BinnedPmf<T>, eps: T) -> T {
    let n = T::from_usize_lossy(p.probs().len());
    let zp = p.total() + eps * n;
    let zq = q.total() + eps * n;
    let mut kl = T::zero();
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        let a = (a + eps) / zp;
        let b = (b + eps) / zq;
        if a > T::zero() {
            kl = kl + a * (a / b).ln();
        }
    }
    kl.max(T::zero())
}

/// Symmetrized KL between every pair: `(KL(i||j) + KL(j||i)) / 2`, zero diagonal.
pub fn pairwise_kl_matrix<T: Real>(pmfs: &[&BinnedPmf<T>]) -> Result<SquareMatrix<T>> {
    if pmfs.len() < 2 {
        return Err(Error::Empty("at least two pmfs for a KL matrix"));
    }
    let n = pmfs.len();
    let mut m = SquareMatrix::zeros(n);
    let half = T::lit(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = half * (kl_divergence(pmfs[i], pmfs[j]) + kl_divergence(pmfs[j], pmfs[i]));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::NUM_BINS;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Composite Simpson integral of `N(m1,1) ln(N(m1,1)/N(m2,1))` over [-12, 14].
    fn gaussian_kl_quadrature(m1: f64, m2: f64) -> f64 {
        let pdf = |x: f64, m: f64| (-(x - m).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let (a, b, n) = (-12.0, 14.0, 20_000);
        let h = (b - a) / n as f64;
        let f = |x: f64| pdf(x, m1) * (pdf(x, m1) / pdf(x, m2)).ln();
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn identical_is_zero() {
        let p = BinnedPmf::<f64>::discretized_normal(2.0, 0.7).unwrap();
        assert_eq!(kl_divergence(&p, &p), 0.0);
    }

    #[test]
    fn smoothed_point_masses() {
        let p = BinnedPmf::<f64>::point_mass(3);
        let q = BinnedPmf::<f64>::point_mass(4);
        let eps = KL_SMOOTHING;
        let expected = ((1.0 + eps) / eps).ln() / (1.0 + NUM_BINS as f64 * eps);
        assert_relative_eq!(kl_divergence(&p, &q), expected, max_relative = 1e-9);
        assert!((kl_divergence(&p, &q) - 23.025_850_9).abs() < 1e-5);
    }

    #[test]
    fn gaussian_pair_matches_quadrature() {
        let p = BinnedPmf::<f64>::discretized_normal(0.75, 1.0).unwrap();
        let q = BinnedPmf::<f64>::discretized_normal(0.80, 1.0).unwrap();
        let oracle = gaussian_kl_quadrature(0.75, 0.80);
        assert_relative_eq!(oracle, 0.05f64.powi(2) / 2.0, epsilon = 1e-9);
        let discrete = kl_divergence(&p, &q);
        assert!(discrete > 0.0);
        assert!((discrete - oracle).abs() < 1e-3, "discrete {discrete} vs {oracle}");
    }

    #[test]
    fn matrix_orders_by_mean_gap() {
        let a = BinnedPmf::<f64>::discretized_normal(2.75, 1.0).unwrap();
        let b = BinnedPmf::<f64>::discretized_normal(3.0, 1.0).unwrap();
        let c = BinnedPmf::<f64>::discretized_normal(3.5, 1.0).unwrap();
        let m = pairwise_kl_matrix(&[&a, &b, &c]).unwrap();
        assert!(m.is_symmetric(0.0));
        assert_eq!((m.get(0, 0), m.get(1, 1), m.get(2, 2)), (0.0, 0.0, 0.0));
        // squared gaps: (a,b) 0.0625 < (b,c) 0.25 < (a,c) 0.5625
        assert!(m.get(0, 1) < m.get(1, 2));
        assert!(m.get(1, 2) < m.get(0, 2));
        let oracle_ac = gaussian_kl_quadrature(2.75, 3.5);
        assert!((m.get(0, 2) - oracle_ac).abs() < 1e-2);
        let same = pairwise_kl_matrix(&[&a, &a, &a]).unwrap();
        assert_eq!(same, SquareMatrix::zeros(3));
        assert!(pairwise_kl_matrix(&[&a]).is_err());
    }

    proptest! {
        #[test]
        fn kl_is_non_negative(v in proptest::collection::vec(0.0f64..1.0, NUM_BINS), w in proptest::collection::vec(0.0f64..1.0, NUM_BINS)) {
            let norm = |x: Vec<f64>| {
                let s: f64 = x.iter().sum::<f64>().max(1e-12);
                BinnedPmf::from_probs_unchecked(x.into_iter().map(|y| y / s).collect())
            };
            let (p, q) = (norm(v), norm(w));
            prop_assert!(kl_divergence(&p, &q) >= 0.0);
        }
    }
}
