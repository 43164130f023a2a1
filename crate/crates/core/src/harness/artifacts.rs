use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::epiweek::{Epiweek, Season};
use crate::error::{Error, Result};
use crate::ingest::{Horizon, ModelId, Region};

use super::config::Variant;

/// Layout of a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.cfg")
    }

    pub fn panel_dir(&self) -> PathBuf {
        self.root.join("panel")
    }

    pub fn panel_csv(&self, season: Season) -> PathBuf {
        self.panel_dir().join(format!("season-{}.csv", season.0))
    }

    pub fn panel_sidecar(&self, season: Season) -> PathBuf {
        self.panel_dir().join(format!("season-{}.json", season.0))
    }

    pub fn truth(&self) -> PathBuf {
        self.panel_dir().join("truth.csv")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn season_dir(&self, variant: Variant, season: Season) -> PathBuf {
        self.runs_dir().join(variant.name()).join(season.0.to_string())
    }

    pub fn week_json(&self, variant: Variant, season: Season, week: Epiweek) -> PathBuf {
        self.season_dir(variant, season).join(format!("week-{}.json", week.yyyyww()))
    }

    pub fn week_csv(&self, variant: Variant, season: Season, week: Epiweek) -> PathBuf {
        self.season_dir(variant, season).join(format!("week-{}.csv", week.yyyyww()))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    /// Every week artifact under `runs/`, sorted by path.
    pub fn week_artifacts(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let runs = self.runs_dir();
        if !runs.is_dir() {
            return Ok(out);
        }
        for variant in sorted_entries(&runs)? {
            for season in sorted_entries(&variant)? {
                for file in sorted_entries(&season)? {
                    let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    if name.starts_with("week-") && name.ends_with(".json") {
                        out.push(file);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    let bytes = fs::read(path).map_err(|e| Error::Run(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Everything one variant produced at one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekArtifact {
    pub variant: Variant,
    pub season: Season,
    pub week: Epiweek,
    /// 1-based week of the season; absent for the scoring-only weeks after it.
    pub week_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub phi_scores: Vec<PhiScore>,
    pub strata: Vec<StratumRun>,
    /// Ensembles whose target week is this week, scored against its truth.
    pub scores: Vec<ScoreEntry>,
}

/// Mean past log score of one threshold candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiScore {
    pub phi: f64,
    pub mean_log_score: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    /// No model submitted, so there is no ensemble forecast.
    NoEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRun {
    pub region: Region,
    pub target: Horizon,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub clusters: Vec<ClusterEntry>,
    pub weights: Vec<WeightEntry>,
    pub entropy: Option<f64>,
    /// Clusters with a forecast this week (CAP variants).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cluster_count: Option<usize>,
    pub degenerate: bool,
    pub training_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub id: usize,
    pub members: Vec<ModelId>,
    pub leader: ModelId,
    pub substituted: bool,
    pub has_forecast: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub label: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub region: Region,
    pub target: Horizon,
    pub issue_week: Epiweek,
    pub target_week: Epiweek,
    pub truth: f64,
    pub log_score: f64,
    pub pit: f64,
    pub brier_integral: f64,
    /// Brier score at thresholds 0.0, 0.1, ..., 10.0.
    pub brier: Vec<f64>,
}
