//! Redundancy and identifiability analyses, and cluster-count trajectories.

mod redundancy;
mod restarts;
mod trajectory;

pub use redundancy::{likelihood_surface, mean_pairwise_kl, variance_vs_kl_curve, SurfacePoint, VarianceKlPoint};
pub use restarts::{demo_observations, likelihood_from_observations, restart_dispersion, Demo, Restart, RestartReport};
pub use trajectory::{cluster_trajectory, peak_week, TrajectoryInput, TrajectoryPoint};
