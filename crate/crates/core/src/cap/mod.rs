//! Cluster-Aggregate-Pool ensembles and the non-clustered comparators.
//!
//! Component models are clustered by the correlation of their past log
//! scores, each cluster is represented by its best-scoring member, and the
//! cluster forecasts are combined in a linear pool.

mod aggregate;
mod clustering;
mod comparators;
mod correlation;
mod entropy;
mod phi;
mod pipeline;
mod weights;

pub use aggregate::{aggregate_cluster, leader_medians, rank_members, ClusterForecast};
pub use clustering::{cluster_models, Clustering};
pub use comparators::{adaptive_ensemble, equal_ensemble, static_ensemble, PooledForecast};
pub use correlation::{correlation_from_aligned, logscore_correlation_matrix, pearson, CorrelationMatrix};
pub use entropy::percent_entropy;
pub use phi::{default_phi_grid, select_phi, INITIAL_PHI};
pub use pipeline::{cap_forecast, CapContext, CapRun, PastOutcome, Pooling, StratumSnapshot};
pub use weights::{
    fit_adaptive_weights, fit_mixture_weights, fit_static_weights, likelihood_rows, log_likelihood, log_posterior,
    AdaptivePriorParams, EmOptions, LikelihoodMatrix, WeightFit, WeightVector,
};
