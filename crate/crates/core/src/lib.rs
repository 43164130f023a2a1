//! Cluster-Aggregate-Pool (CAP) ensembles for binned influenza-like-illness
//! forecasts, with comparator ensembles, proper scoring rules, redundancy
//! diagnostics and a season-replay harness.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which the harness uses throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cap;
pub mod diagnostics;
pub mod epiweek;
pub mod error;
pub mod grid;
pub mod harness;
pub mod ingest;
pub mod matrix;
pub mod pmf;
pub mod scalar;
pub mod scoring;
pub mod synthetic;

pub use epiweek::{Epiweek, Season};
pub use error::{Error, Result};
pub use ingest::{ForecastKey, Horizon, ModelId, Region};
pub use scalar::Real;

pub type Pmf = pmf::BinnedPmf<f64>;
pub type PmfF32 = pmf::BinnedPmf<f32>;
pub type MixtureComponent = pmf::MixtureComponent<f64>;
pub type ForecastPanel = ingest::ForecastPanel<f64>;
pub type ForecastDataset = ingest::ForecastDataset<f64>;
pub type TruthTable = ingest::TruthTable<f64>;
pub type ScoreHistory = scoring::ScoreHistory<f64>;
pub type ScoreRecord = scoring::ScoreRecord<f64>;
pub type Clustering = cap::Clustering<f64>;
pub type ClusterForecast = cap::ClusterForecast<f64>;
pub type CorrelationMatrix = cap::CorrelationMatrix<f64>;
pub type WeightVector = cap::WeightVector<f64>;
pub type WeightFit = cap::WeightFit<f64>;
pub type LikelihoodMatrix = cap::LikelihoodMatrix<f64>;
pub type AdaptivePriorParams = cap::AdaptivePriorParams<f64>;
pub type CapRun = cap::CapRun<f64>;
pub type RestartReport = diagnostics::RestartReport<f64>;
pub type TrajectoryPoint = diagnostics::TrajectoryPoint<f64>;
