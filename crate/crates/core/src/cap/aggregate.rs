use std::collections::BTreeMap;

use crate::ingest::ModelId;
use crate::pmf::BinnedPmf;
use crate::scalar::Real;
use crate::scoring::{median, ScoreHistory, ScoreKey};

/// Representative forecast of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterForecast<T> {
    pub cluster_id: usize,
    /// Member whose forecast represents the cluster. When the best-ranked
    /// member did not submit this is the substitute; when nobody submitted it
    /// is the nominal leader.
    pub leader: ModelId,
    pub substituted: bool,
    /// Absent exactly when every member is missing this week.
    pub pmf: Option<BinnedPmf<T>>,
    pub members_missing: Vec<ModelId>,
}

/// Median past log score of each model with at least one score in `window`.
pub fn leader_medians<T: Real>(
    history: &ScoreHistory<T>,
    models: &[ModelId],
    window: impl Fn(&ScoreKey) -> bool,
) -> BTreeMap<ModelId, T> {
    models
        .iter()
        .filter_map(|m| {
            let scores: Vec<T> = history.window(m, &window).into_iter().map(|(_, v)| v).collect();
            median(&scores).ok().map(|med| (m.clone(), med))
        })
        .collect()
}

/// Members ordered best first: higher median, then lower id. Members without
/// a median rank last.
pub fn rank_members<T: Real>(members: &[ModelId], medians: &BTreeMap<ModelId, T>) -> Vec<ModelId> {
    let mut ranked = members.to_vec();
    ranked.sort_by(|a, b| {
        let ma = medians.get(a).copied().unwrap_or_else(T::neg_infinity);
        let mb = medians.get(b).copied().unwrap_or_else(T::neg_infinity);
        mb.cmp_total(&ma).then_with(|| a.cmp(b))
    });
    ranked
}

/// Follow-the-leader aggregation with fallback to the next-ranked submitter.
pub fn aggregate_cluster<T: Real>(
    cluster_id: usize,
    members: &[ModelId],
    medians: &BTreeMap<ModelId, T>,
    current: &BTreeMap<ModelId, BinnedPmf<T>>,
) -> ClusterForecast<T> {
    assert!(!members.is_empty(), "clusters are non-empty");
    let ranked = rank_members(members, medians);
    let members_missing: Vec<ModelId> = {
        let mut m: Vec<ModelId> = members.iter().filter(|m| !current.contains_key(*m)).cloned().collect();
        m.sort();
        m
    };
    match ranked.iter().enumerate().find_map(|(i, m)| current.get(m).map(|p| (i, m, p))) {
        Some((i, m, pmf)) => ClusterForecast {
            cluster_id,
            leader: m.clone(),
            substituted: i > 0,
            pmf: Some(pmf.clone()),
            members_missing,
        },
        None => ClusterForecast {
            cluster_id,
            leader: ranked[0].clone(),
            substituted: false,
            pmf: None,
            members_missing,
        },
    }
}
