use crate::error::{Error, Result};
use crate::scalar::Real;

/// Threshold used in the first week of a season.
pub const INITIAL_PHI: f64 = 0.5;

/// `0.00, 0.05, ..., 0.95`.
pub fn default_phi_grid<T: Real>() -> Vec<T> {
    (0..20).map(|i| T::lit(i as f64 / 20.0)).collect()
}

/// Candidate with the highest average log score; ties go to the smaller
/// candidate.
///
/// `average_score(phi)` returns the mean ensemble log score over past weeks
/// with observed truth, or `None` if nothing can be scored yet. Week one,
/// and any week where no candidate can be scored, returns [`INITIAL_PHI`].
pub fn select_phi<T: Real>(
    candidates: &[T],
    week_index: usize,
    mut average_score: impl FnMut(T) -> Result<Option<T>>,
) -> Result<T> {
    if candidates.is_empty() {
        return Err(Error::Empty("phi candidate grid"));
    }
    if week_index <= 1 {
        return Ok(T::lit(INITIAL_PHI));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| a.cmp_total(b));
    sorted.dedup();
    let mut best: Option<(T, T)> = None;
    for phi in sorted {
        if let Some(score) = average_score(phi)? {
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((phi, score));
            }
        }
    }
    Ok(best.map_or_else(|| T::lit(INITIAL_PHI), |(phi, _)| phi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn week_one_uses_initial_threshold() {
        let phi = select_phi(&[0.1f64, 0.9], 1, |_| panic!("not evaluated")).unwrap();
        assert_eq!(phi, 0.5);
    }

    #[test]
    fn single_candidate() {
        assert_eq!(select_phi(&[0.7f64], 5, |_| Ok(Some(-3.0))).unwrap(), 0.7);
    }

    #[test]
    fn best_score_and_ties() {
        let score = |phi: f64| Ok(Some(if phi < 0.3 { -2.0 } else { -1.0 }));
        assert_eq!(select_phi(&[0.9, 0.2, 0.4], 3, score).unwrap(), 0.4);
        assert_eq!(select_phi(&[0.9, 0.4, 0.2], 3, |_| Ok(Some(-1.0))).unwrap(), 0.2);
    }

    #[test]
    fn nothing_scoreable() {
        assert_eq!(select_phi(&[0.1f64, 0.2], 4, |_| Ok(None)).unwrap(), 0.5);
        assert!(select_phi::<f64>(&[], 4, |_| Ok(None)).is_err());
    }

    #[test]
    fn grid() {
        let g: Vec<f64> = default_phi_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.0);
        assert!((g[19] - 0.95).abs() < 1e-15);
    }
}
