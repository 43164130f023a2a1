use std::collections::BTreeMap;

use crate::epiweek::{Epiweek, Season};
use crate::error::Result;
use crate::ingest::{Horizon, Region, TruthTable};
use crate::scalar::Real;

/// Cluster count and weight entropy of one CAP run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryInput<T> {
    pub region: Region,
    pub target: Horizon,
    pub issue_week: Epiweek,
    pub cluster_count: usize,
    pub entropy: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    /// Issue week minus peak week.
    pub weeks_from_peak: i64,
    pub mean_clusters: T,
    pub mean_entropy: T,
    pub n: usize,
}

/// Week of the season's largest truth value for a region, earliest on ties.
pub fn peak_week<T: Real>(truth: &TruthTable<T>, region: Region, season: Season) -> Option<Epiweek> {
    let mut best: Option<(Epiweek, T)> = None;
    for week in season.weeks() {
        if let Some(v) = truth.get(region, week) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((week, v));
            }
        }
    }
    best.map(|(w, _)| w)
}

/// Averages cluster counts and entropies over runs at the same offset from
/// their region's seasonal peak. Runs whose region and season have no truth
/// are skipped.
pub fn cluster_trajectory<T: Real>(runs: &[TrajectoryInput<T>], truth: &TruthTable<T>) -> Result<Vec<TrajectoryPoint<T>>> {
    let mut peaks: BTreeMap<(Region, Season), Option<Epiweek>> = BTreeMap::new();
    let mut acc: BTreeMap<i64, (T, T, usize)> = BTreeMap::new();
    for run in runs {
        let Some(season) = run.issue_week.season() else {
            log::warn!("run at {} lies outside any season; skipped", run.issue_week);
            continue;
        };
        let peak = *peaks.entry((run.region, season)).or_insert_with(|| {
            let p = peak_week(truth, run.region, season);
            if p.is_none() {
                log::warn!("no truth for {} in season {season}; stratum skipped", run.region);
            }
            p
        });
        let Some(peak) = peak else { continue };
        let offset = peak.weeks_until(run.issue_week)?;
        let e = acc.entry(offset).or_insert((T::zero(), T::zero(), 0));
        e.0 = e.0 + T::from_usize_lossy(run.cluster_count);
        e.1 = e.1 + run.entropy;
        e.2 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(weeks_from_peak, (k, h, n))| {
            let nf = T::from_usize_lossy(n);
            TrajectoryPoint {
                weeks_from_peak,
                mean_clusters: k / nf,
                mean_entropy: h / nf,
                n,
            }
        })
        .collect())
}
