use std::collections::BTreeMap;

use crate::epiweek::Epiweek;
use crate::error::{Error, Result};
use crate::ingest::{Horizon, ModelId, Region};
use crate::pmf::{linear_pool, BinnedPmf};
use crate::scalar::Real;
use crate::scoring::{ScoreHistory, ScoreKey};

use super::aggregate::{aggregate_cluster, leader_medians, rank_members, ClusterForecast};
use super::clustering::{cluster_models, Clustering};
use super::correlation::{logscore_correlation_matrix, CorrelationMatrix};
use super::entropy::percent_entropy;
use super::weights::{fit_adaptive_weights, AdaptivePriorParams, LikelihoodMatrix, WeightVector};

/// Probability each model placed on the realized bin for one past forecast.
pub type PastOutcome<T> = BTreeMap<ModelId, T>;

/// How cluster forecasts are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pooling<T> {
    Equal,
    Adaptive { delta: T },
}

/// Everything visible for one (region, target) at one issue week.
#[derive(Debug, Clone)]
pub struct StratumSnapshot<'a, T> {
    pub region: Region,
    pub target: Horizon,
    pub issue_week: Epiweek,
    /// 1-based week of the season.
    pub week_index: usize,
    pub season_weeks: usize,
    /// Models to cluster, ascending.
    pub models: Vec<ModelId>,
    /// Scores from every stratum and week; only this stratum's scores whose
    /// truth is observed by `issue_week` are read.
    pub history: &'a ScoreHistory<T>,
    pub current: BTreeMap<ModelId, BinnedPmf<T>>,
    /// This season's scoreable past forecasts, oldest first.
    pub past: Vec<PastOutcome<T>>,
}

impl<T: Real> StratumSnapshot<'_, T> {
    /// True for score keys in this stratum whose truth was observed by the issue week.
    pub fn visible(&self, key: &ScoreKey) -> bool {
        key.1 == self.region
            && key.2 == self.target
            && key
                .0
                .add_weeks(i64::from(self.target.weeks()))
                .is_ok_and(|w| w <= self.issue_week)
    }
}

/// Output of one CAP step.
#[derive(Debug, Clone, PartialEq)]
pub struct CapRun<T> {
    pub phi: T,
    pub clustering: Clustering<T>,
    pub cluster_forecasts: Vec<ClusterForecast<T>>,
    /// Weights over clusters with a forecast, labelled by cluster id.
    pub weights: Option<WeightVector<T>>,
    pub entropy: Option<T>,
    /// `None` when no model submitted.
    pub pooled: Option<BinnedPmf<T>>,
    pub degenerate: bool,
    /// Likelihood rows used for adaptive pooling.
    pub training_rows: usize,
}

impl<T: Real> CapRun<T> {
    pub fn cluster_count(&self) -> usize {
        self.clustering.len()
    }
}

/// Correlations and leader medians for one snapshot, shared by every candidate threshold.
#[derive(Debug, Clone)]
pub struct CapContext<'s, 'a, T> {
    snapshot: &'s StratumSnapshot<'a, T>,
    correlation: CorrelationMatrix<T>,
    medians: BTreeMap<ModelId, T>,
}

impl<'s, 'a, T: Real> CapContext<'s, 'a, T> {
    pub fn new(snapshot: &'s StratumSnapshot<'a, T>) -> Self {
        let window = |k: &ScoreKey| snapshot.visible(k);
        Self {
            correlation: logscore_correlation_matrix(snapshot.history, &snapshot.models, window),
            medians: leader_medians(snapshot.history, &snapshot.models, window),
            snapshot,
        }
    }

    pub fn correlation(&self) -> &CorrelationMatrix<T> {
        &self.correlation
    }

    pub fn medians(&self) -> &BTreeMap<ModelId, T> {
        &self.medians
    }

    /// Clustering at `phi`; every model is a singleton in week one.
    pub fn cluster(&self, phi: T) -> Clustering<T> {
        if self.snapshot.week_index <= 1 {
            return Clustering {
                clusters: self.snapshot.models.iter().map(|m| vec![m.clone()]).collect(),
                phi,
            };
        }
        cluster_models(&self.correlation, phi)
    }

    pub fn run(&self, phi: T, pooling: Pooling<T>) -> Result<CapRun<T>> {
        self.run_clustering(self.cluster(phi), pooling)
    }

    pub fn run_clustering(&self, clustering: Clustering<T>, pooling: Pooling<T>) -> Result<CapRun<T>> {
        let snap = self.snapshot;
        let cluster_forecasts: Vec<ClusterForecast<T>> = clustering
            .clusters
            .iter()
            .enumerate()
            .map(|(i, members)| aggregate_cluster(i, members, &self.medians, &snap.current))
            .collect();
        let present: Vec<&ClusterForecast<T>> = cluster_forecasts.iter().filter(|c| c.pmf.is_some()).collect();
        if present.is_empty() {
            return Ok(CapRun {
                phi: clustering.phi,
                clustering,
                cluster_forecasts,
                weights: None,
                entropy: None,
                pooled: None,
                degenerate: false,
                training_rows: 0,
            });
        }
        let labels: Vec<String> = present.iter().map(|c| c.cluster_id.to_string()).collect();
        let (weights, degenerate, training_rows) = match pooling {
            Pooling::Equal => (WeightVector::equal(labels), false, 0),
            Pooling::Adaptive { delta } => {
                let lik = self.cluster_likelihood(&clustering, &present)?;
                let prior = AdaptivePriorParams::new(snap.week_index, snap.season_weeks, delta)?;
                let fit = fit_adaptive_weights(&lik, &prior)?;
                (WeightVector::new(labels, fit.weights)?, fit.degenerate, lik.len())
            }
        };
        let pmfs: Vec<&BinnedPmf<T>> = present.iter().filter_map(|c| c.pmf.as_ref()).collect();
        let pooled = linear_pool(&pmfs, &weights.weights)?;
        Ok(CapRun {
            phi: clustering.phi,
            entropy: Some(percent_entropy(&weights.weights)),
            clustering,
            cluster_forecasts,
            weights: Some(weights),
            pooled: Some(pooled),
            degenerate,
            training_rows,
        })
    }

    /// Past truth mass of each present cluster, taken from its best-ranked
    /// member that forecast that week. Weeks where some cluster had no
    /// forecasting member are skipped.
    fn cluster_likelihood(
        &self,
        clustering: &Clustering<T>,
        present: &[&ClusterForecast<T>],
    ) -> Result<LikelihoodMatrix<T>> {
        let ranked: Vec<Vec<ModelId>> = present
            .iter()
            .map(|c| rank_members(&clustering.clusters[c.cluster_id], &self.medians))
            .collect();
        let mut lik = LikelihoodMatrix::new(present.len());
        for outcome in &self.snapshot.past {
            let row: Option<Vec<T>> = ranked
                .iter()
                .map(|members| members.iter().find_map(|m| outcome.get(m).copied()))
                .collect();
            if let Some(row) = row {
                lik.push_row(row)?;
            }
        }
        Ok(lik)
    }
}

/// Cluster, aggregate and pool one stratum at threshold `phi`.
pub fn cap_forecast<T: Real>(snapshot: &StratumSnapshot<'_, T>, phi: T, pooling: Pooling<T>) -> Result<CapRun<T>> {
    if !(phi >= T::zero()) {
        return Err(Error::Domain {
            value: phi.as_f64(),
            domain: "phi >= 0",
        });
    }
    CapContext::new(snapshot).run(phi, pooling)
}
