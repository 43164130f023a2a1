use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use crate::diagnostics::{cluster_trajectory, peak_week, TrajectoryInput};
use crate::error::{Error, Result};
use crate::ingest::{parse_truth_csv, Horizon, Region, TruthTable};
use crate::scoring::{brier_thresholds, empirical_cdf, pit_calibration_auc, quantile};

use super::artifacts::{read_json, write_atomic, RunDir, RunStatus, ScoreEntry, WeekArtifact};
use super::config::Variant;

const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Scalar summaries of one variant over one group of forecasts.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub group: String,
    pub n: usize,
    pub mean_log_score: f64,
    /// PIT calibration area averaged over (region, target) strata.
    pub pit_auc: f64,
    pub mean_brier_integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
    pub summary: Vec<SummaryRow>,
}

/// Every week artifact of a run directory, in path order.
pub fn load_artifacts(run: &RunDir) -> Result<Vec<WeekArtifact>> {
    run.week_artifacts()?.iter().map(|p| read_json(p)).collect()
}

fn load_truth(run: &RunDir) -> Result<TruthTable<f64>> {
    let path = run.truth();
    let file = fs::File::open(&path).map_err(|e| Error::Run(format!("cannot read {}: {e}", path.display())))?;
    parse_truth_csv(file)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

struct Scored<'a> {
    season: i32,
    entry: &'a ScoreEntry,
}

fn groups<'a, 'b>(rows: &'b [Scored<'a>]) -> Vec<(String, Vec<&'b Scored<'a>>)> {
    let mut out = vec![("all".to_string(), rows.iter().collect::<Vec<_>>())];
    let targets: BTreeSet<Horizon> = rows.iter().map(|r| r.entry.target).collect();
    for h in targets {
        out.push((format!("target-{h}"), rows.iter().filter(|r| r.entry.target == h).collect()));
    }
    out
}

struct Table {
    name: &'static str,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(name: &'static str, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { name, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    fn finish(self, run: &RunDir) -> Result<PathBuf> {
        let bytes = self.writer.into_inner().map_err(|e| Error::Run(e.to_string()))?;
        let path = run.reports_dir().join(self.name);
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// Writes the report tables under `reports/` from the run's artifacts.
///
/// Reads artifacts only; running it again yields the same files.
pub fn emit_report(run: &RunDir) -> Result<ReportBundle> {
    let artifacts = load_artifacts(run)?;
    if artifacts.is_empty() {
        return Err(Error::Run(format!("no run artifacts under {}", run.root().display())));
    }
    let truth = load_truth(run)?;
    let mut by_variant: BTreeMap<Variant, Vec<Scored<'_>>> = BTreeMap::new();
    for a in &artifacts {
        for entry in &a.scores {
            by_variant.entry(a.variant).or_default().push(Scored {
                season: a.season.0,
                entry,
            });
        }
    }
    if by_variant.is_empty() {
        return Err(Error::Run("no scored weeks in the run directory".into()));
    }
    for rows in by_variant.values_mut() {
        rows.sort_by_key(|r| (r.entry.issue_week, r.entry.region, r.entry.target));
    }

    let mut scores = Table::new(
        "scores.csv",
        &["variant", "season", "region", "target", "issue_week", "target_week", "truth", "log_score", "pit", "brier_integral"],
    )?;
    let mut quantiles = Table::new("logscore_quantiles.csv", &["variant", "group", "n", "q10", "q25", "q50", "q75", "q90"])?;
    let mut pit = Table::new("pit_cdf.csv", &["variant", "group", "x", "cdf"])?;
    let mut brier = Table::new("brier_by_threshold.csv", &["variant", "group", "threshold", "n", "mean_brier"])?;
    let mut by_peak = Table::new(
        "logscore_by_peak.csv",
        &["variant", "group", "weeks_from_peak", "n", "mean_log_score", "median_log_score"],
    )?;
    let mut summary_table = Table::new(
        "summary.csv",
        &["variant", "group", "n", "mean_log_score", "pit_auc", "mean_brier_integral"],
    )?;
    let pit_grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let thresholds: Vec<f64> = brier_thresholds();
    let mut summary = Vec::new();

    for (&variant, rows) in &by_variant {
        let v = variant.name().to_string();
        for r in rows {
            let e = r.entry;
            scores.row(&[
                v.clone(),
                r.season.to_string(),
                e.region.to_string(),
                e.target.to_string(),
                e.issue_week.to_string(),
                e.target_week.to_string(),
                e.truth.to_string(),
                e.log_score.to_string(),
                e.pit.to_string(),
                e.brier_integral.to_string(),
            ])?;
        }
        for (group, members) in groups(rows) {
            let n = members.len();
            let logs: Vec<f64> = members.iter().map(|r| r.entry.log_score).collect();
            let mut q = vec![v.clone(), group.clone(), n.to_string()];
            for p in QUANTILES {
                q.push(quantile(&logs, p)?.to_string());
            }
            quantiles.row(&q)?;

            let pits: Vec<f64> = members.iter().map(|r| r.entry.pit).collect();
            for (x, c) in pit_grid.iter().zip(empirical_cdf(&pits, &pit_grid)) {
                pit.row(&[v.clone(), group.clone(), x.to_string(), c.to_string()])?;
            }

            for (i, x) in thresholds.iter().enumerate() {
                let m = mean(members.iter().map(|r| r.entry.brier[i]));
                brier.row(&[v.clone(), group.clone(), format!("{x:.1}"), n.to_string(), m.to_string()])?;
            }

            let mut offsets: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
            for r in &members {
                let e = r.entry;
                let Some(season) = e.issue_week.season() else { continue };
                if let Some(peak) = peak_week(&truth, e.region, season) {
                    offsets.entry(peak.weeks_until(e.target_week)?).or_default().push(e.log_score);
                }
            }
            for (offset, vals) in offsets {
                by_peak.row(&[
                    v.clone(),
                    group.clone(),
                    offset.to_string(),
                    vals.len().to_string(),
                    mean(vals.iter().copied()).to_string(),
                    quantile(&vals, 0.5)?.to_string(),
                ])?;
            }

            let mut strata: BTreeMap<(Region, Horizon), Vec<f64>> = BTreeMap::new();
            for r in &members {
                strata.entry((r.entry.region, r.entry.target)).or_default().push(r.entry.pit);
            }
            let aucs = strata.values().map(|p| pit_calibration_auc(p)).collect::<Result<Vec<f64>>>()?;
            let row = SummaryRow {
                variant,
                group: group.clone(),
                n,
                mean_log_score: mean(logs.iter().copied()),
                pit_auc: mean(aucs),
                mean_brier_integral: mean(members.iter().map(|r| r.entry.brier_integral)),
            };
            summary_table.row(&[
                v.clone(),
                group,
                n.to_string(),
                row.mean_log_score.to_string(),
                row.pit_auc.to_string(),
                row.mean_brier_integral.to_string(),
            ])?;
            summary.push(row);
        }
    }

    let mut files = vec![
        scores.finish(run)?,
        quantiles.finish(run)?,
        pit.finish(run)?,
        brier.finish(run)?,
        by_peak.finish(run)?,
        summary_table.finish(run)?,
    ];

    let mut trajectory = Table::new("trajectory.csv", &["variant", "weeks_from_peak", "n", "mean_clusters", "mean_entropy"])?;
    let mut any_cap = false;
    for variant in Variant::ALL.into_iter().filter(|v| v.is_cap()) {
        let inputs: Vec<TrajectoryInput<f64>> = artifacts
            .iter()
            .filter(|a| a.variant == variant)
            .flat_map(|a| {
                a.strata.iter().filter(|s| s.status == RunStatus::Ok).filter_map(move |s| {
                    Some(TrajectoryInput {
                        region: s.region,
                        target: s.target,
                        issue_week: a.week,
                        cluster_count: s.cluster_count?,
                        entropy: s.entropy?,
                    })
                })
            })
            .collect();
        if inputs.is_empty() {
            continue;
        }
        any_cap = true;
        for p in cluster_trajectory(&inputs, &truth)? {
            trajectory.row(&[
                variant.name().to_string(),
                p.weeks_from_peak.to_string(),
                p.n.to_string(),
                p.mean_clusters.to_string(),
                p.mean_entropy.to_string(),
            ])?;
        }
    }
    if any_cap {
        files.push(trajectory.finish(run)?);
    }
    Ok(ReportBundle { files, summary })
}

/// Weekly threshold, clusters and leaders of every CAP run, as CSV.
pub fn phi_trace<W: Write>(run: &RunDir, out: W) -> Result<usize> {
    let artifacts = load_artifacts(run)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "variant",
        "season",
        "week",
        "phi",
        "region",
        "target",
        "cluster_count",
        "clusters",
        "leaders",
        "entropy",
    ])?;
    let mut rows = 0;
    for a in artifacts.iter().filter(|a| a.variant.is_cap() && a.week_index.is_some()) {
        let phi = a.phi.map(|p| p.to_string()).unwrap_or_default();
        for s in &a.strata {
            let clusters: Vec<String> = s
                .clusters
                .iter()
                .map(|c| c.members.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                .collect();
            let leaders: Vec<String> = s
                .clusters
                .iter()
                .filter(|c| c.has_forecast)
                .map(|c| c.leader.to_string())
                .collect();
            w.write_record([
                a.variant.name().to_string(),
                a.season.to_string(),
                a.week.to_string(),
                phi.clone(),
                s.region.to_string(),
                s.target.to_string(),
                s.cluster_count.map(|c| c.to_string()).unwrap_or_default(),
                clusters.join("|"),
                leaders.join("|"),
                s.entropy.map(|e| e.to_string()).unwrap_or_default(),
            ])?;
            rows += 1;
        }
    }
    w.flush()?;
    if rows == 0 {
        return Err(Error::Run(format!("no CAP artifacts under {}", run.root().display())));
    }
    Ok(rows)
}
