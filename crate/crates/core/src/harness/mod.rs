//! Season replay, run-directory artifacts and reports.

mod artifacts;
mod config;
mod raw;
mod replay;
mod report;

pub use artifacts::{
    read_json, write_atomic, write_json, ClusterEntry, PhiScore, RunDir, RunStatus, ScoreEntry, StratumRun,
    WeekArtifact, WeightEntry,
};
pub use config::{RunConfig, Variant};
pub use raw::{convert_flusight_dir, flusight_issue_week, truth_from_states};
pub use replay::{load_dataset, replay, replay_config, write_panels, ReplayOptions, ReplaySummary};
pub use report::{emit_report, load_artifacts, phi_trace, ReportBundle, SummaryRow};
