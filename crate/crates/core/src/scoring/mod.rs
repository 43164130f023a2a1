//! Forecast evaluation: log score, PIT, Brier, calibration area, divergences.

mod calibration;
mod divergence;
mod history;
mod rules;

pub use calibration::{empirical_cdf, pit_calibration_auc};
pub use divergence::{kl_divergence, kl_divergence_with, pairwise_kl_matrix, KL_SMOOTHING};
pub use history::{median, median_log_score, quantile, ScoreHistory, ScoreKey};
pub use rules::{
    brier_curve, brier_integral, brier_score, brier_thresholds, log_score, pit_value, score_forecast, BrierConvention,
    ScoreRecord, BRIER_STEP, LOG_SCORE_FLOOR, NUM_THRESHOLDS,
};
