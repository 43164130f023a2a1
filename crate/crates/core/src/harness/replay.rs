use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cap::{
    adaptive_ensemble, equal_ensemble, static_ensemble, AdaptivePriorParams, CapContext, CapRun, Clustering,
    PastOutcome, Pooling, PooledForecast, StratumSnapshot,
};
use crate::epiweek::{Epiweek, Season};
use crate::error::{Error, Result};
use crate::ingest::{
    parse_component_csv, parse_truth_csv, write_component_csv, write_truth_csv, CellKey, ForecastDataset, ForecastKey,
    ForecastPanel, Horizon, ModelId, Region,
};
use crate::pmf::BinnedPmf;
use crate::scoring::{brier_curve, brier_integral, log_score, pit_value, ScoreHistory};

use super::artifacts::{
    read_json, write_atomic, write_json, ClusterEntry, PhiScore, RunDir, RunStatus, ScoreEntry, StratumRun,
    WeekArtifact, WeightEntry,
};
use super::config::{RunConfig, Variant};

/// Weeks after a season's last issue week in which its forecasts are still scored.
const SCORING_TAIL: i64 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Stop once every variant has finished this week, as if interrupted.
    pub stop_after: Option<Epiweek>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub weeks_computed: usize,
    pub weeks_reused: usize,
}

fn has_forecast_header(path: &Path) -> bool {
    let Ok(file) = fs::File::open(path) else { return false };
    let mut first = String::new();
    let _ = std::io::BufRead::read_line(&mut std::io::BufReader::new(file), &mut first);
    let keep = first.trim_start_matches('\u{feff}').starts_with("region,target,model_id,issue_epiweek");
    if !keep {
        log::debug!("skipping {}: not a forecast file", path.display());
    }
    keep
}

/// Forecast files at `path`: the file itself, or every forecast CSV in a directory.
fn csv_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .filter(|p| has_forecast_header(p))
            .collect();
        files.sort();
        Ok(files)
    } else if path.is_file() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(Error::Missing(format!("forecast path {}", path.display())))
    }
}

/// Reads every forecast file and the truth table named by `config`.
pub fn load_dataset(config: &RunConfig) -> Result<ForecastDataset<f64>> {
    let mut files = Vec::new();
    for p in &config.forecasts {
        files.extend(csv_files(p)?);
    }
    let fragments: Vec<ForecastPanel<f64>> = files
        .par_iter()
        .map(|f| {
            let file = fs::File::open(f)?;
            parse_component_csv(file).map_err(|e| Error::Run(format!("{}: {e}", f.display())))
        })
        .collect::<Result<_>>()?;
    let truth_file = fs::File::open(&config.truth)
        .map_err(|e| Error::Missing(format!("truth file {}: {e}", config.truth.display())))?;
    let truth = parse_truth_csv(truth_file).map_err(|e| Error::Run(format!("{}: {e}", config.truth.display())))?;
    let mut merged = ForecastPanel::new();
    for f in fragments {
        merged.merge(f)?;
    }
    Ok(ForecastDataset::new(merged, truth))
}

/// Persists each configured season's panel with its sidecar, and the truth table.
pub fn write_panels(dataset: &ForecastDataset<f64>, seasons: &[Season], run: &RunDir) -> Result<()> {
    for &season in seasons {
        let mut csv = Vec::new();
        write_component_csv(&dataset.season_panel(season), &mut csv)?;
        write_atomic(&run.panel_csv(season), &csv)?;
        write_json(&run.panel_sidecar(season), &dataset.sidecar(season))?;
    }
    let mut truth = Vec::new();
    write_truth_csv(dataset.truth(), &mut truth)?;
    write_atomic(&run.truth(), &truth)
}

fn variant_id(variant: Variant) -> ModelId {
    ModelId::new(variant.name()).expect("variant names are valid ids")
}

/// Visible inputs for every stratum, built once per replay.
struct Replayer<'a> {
    config: &'a RunConfig,
    dataset: &'a ForecastDataset<f64>,
    strata: Vec<(Region, Horizon)>,
    histories: BTreeMap<(Region, Horizon), ScoreHistory<f64>>,
}

type PhiCache = HashMap<(usize, usize), Vec<Option<f64>>>;

impl<'a> Replayer<'a> {
    fn new(config: &'a RunConfig, dataset: &'a ForecastDataset<f64>) -> Result<Self> {
        let targets: BTreeSet<Horizon> = config.targets.iter().copied().collect();
        let strata: Vec<(Region, Horizon)> = dataset
            .strata()
            .into_iter()
            .filter(|(r, h)| targets.contains(h) && config.regions.as_ref().is_none_or(|rs| rs.contains(r)))
            .collect();
        if strata.is_empty() {
            return Err(Error::Run("no forecasts match the configured regions and targets".into()));
        }
        let mut histories: BTreeMap<(Region, Horizon), ScoreHistory<f64>> = BTreeMap::new();
        for (cell, models) in dataset.cells() {
            let Some(truth) = dataset.truth().get(cell.region, cell.target_week()?) else {
                continue;
            };
            let h = histories.entry((cell.region, cell.target)).or_default();
            for (m, pmf) in models {
                h.insert(m.clone(), (cell.issue_week, cell.region, cell.target), log_score(pmf, truth)?)?;
            }
        }
        Ok(Self {
            config,
            dataset,
            strata,
            histories,
        })
    }

    fn submitted(&self, region: Region, target: Horizon, issue_week: Epiweek) -> Option<&BTreeMap<ModelId, BinnedPmf<f64>>> {
        self.dataset.submitted(&CellKey {
            region,
            target,
            issue_week,
        })
    }

    fn outcome(&self, region: Region, target: Horizon, issue: Epiweek, as_of: Epiweek) -> Result<Option<PastOutcome<f64>>> {
        let tw = issue.add_weeks(i64::from(target.weeks()))?;
        if tw > as_of {
            return Ok(None);
        }
        let (Some(truth), Some(subs)) = (
            self.dataset.truth().get_visible(region, tw, as_of),
            self.submitted(region, target, issue),
        ) else {
            return Ok(None);
        };
        Ok(Some(
            subs.iter()
                .map(|(m, p)| p.mass_at(truth).map(|v| (m.clone(), v)))
                .collect::<Result<_>>()?,
        ))
    }

    /// Inputs visible at week `idx` (1-based) of `season` for one stratum.
    fn snapshot(&self, stratum: usize, season: Season, idx: usize) -> Result<StratumSnapshot<'_, f64>> {
        let (region, target) = self.strata[stratum];
        let weeks = season.weeks();
        let week = weeks[idx - 1];
        let history = self.histories.get(&(region, target));
        let current = self.submitted(region, target, week).cloned().unwrap_or_default();
        let mut past = Vec::new();
        for &u in &weeks[..idx - 1] {
            if let Some(o) = self.outcome(region, target, u, week)? {
                past.push(o);
            }
        }
        let mut snap = StratumSnapshot {
            region,
            target,
            issue_week: week,
            week_index: idx,
            season_weeks: weeks.len(),
            models: Vec::new(),
            history: history.unwrap_or(&EMPTY_HISTORY),
            current,
            past,
        };
        let mut models: BTreeSet<ModelId> = snap.current.keys().cloned().collect();
        for m in snap.history.models() {
            if snap.history.scores(m).any(|(k, _)| snap.visible(k)) {
                models.insert(m.clone());
            }
        }
        snap.models = models.into_iter().collect();
        Ok(snap)
    }

    /// Outcomes from before `season` for the static ensemble.
    fn prior_outcomes(&self, stratum: usize, season: Season) -> Result<Vec<PastOutcome<f64>>> {
        let (region, target) = self.strata[stratum];
        let start = season.first_week();
        let mut out = Vec::new();
        for (cell, _) in self.dataset.cells() {
            if cell.region != region || cell.target != target || cell.issue_week >= start {
                continue;
            }
            if cell.target_week()? >= start {
                continue;
            }
            if let Some(o) = self.outcome(region, target, cell.issue_week, start)? {
                out.push(o);
            }
        }
        Ok(out)
    }

    fn pooling(&self, variant: Variant) -> Pooling<f64> {
        match variant {
            Variant::CapAdaptive => Pooling::Adaptive {
                delta: self.config.prior_delta,
            },
            _ => Pooling::Equal,
        }
    }

    /// Log score of every threshold candidate for the CAP forecast of one
    /// stratum at past week `idx`.
    fn candidate_scores(&self, variant: Variant, season: Season, stratum: usize, idx: usize, truth: f64) -> Result<Vec<Option<f64>>> {
        let snap = self.snapshot(stratum, season, idx)?;
        let ctx = CapContext::new(&snap);
        let pooling = self.pooling(variant);
        let mut out = Vec::with_capacity(self.config.phi_grid.len());
        let mut last: Option<(Clustering<f64>, Option<f64>)> = None;
        for &phi in &self.config.phi_grid {
            let clustering = ctx.cluster(phi);
            if let Some((prev, score)) = &last {
                if prev.clusters == clustering.clusters {
                    out.push(*score);
                    continue;
                }
            }
            let run = ctx.run_clustering(clustering.clone(), pooling)?;
            let score = run.pooled.as_ref().map(|p| log_score(p, truth)).transpose()?;
            out.push(score);
            last = Some((clustering, score));
        }
        Ok(out)
    }

    /// Threshold for week `idx`, with the mean past score of each candidate.
    fn choose_phi(&self, variant: Variant, season: Season, idx: usize, cache: &mut PhiCache) -> Result<(f64, Vec<PhiScore>)> {
        if let Some(phi) = self.config.phi_override {
            return Ok((phi, Vec::new()));
        }
        let weeks = season.weeks();
        let week = weeks[idx - 1];
        let mut needed = Vec::new();
        for s in 1..idx {
            for (si, &(region, target)) in self.strata.iter().enumerate() {
                let tw = weeks[s - 1].add_weeks(i64::from(target.weeks()))?;
                if tw > week {
                    continue;
                }
                if let Some(truth) = self.dataset.truth().get_visible(region, tw, week) {
                    needed.push((si, s, truth));
                }
            }
        }
        let missing: Vec<(usize, usize, f64)> = needed.iter().copied().filter(|(si, s, _)| !cache.contains_key(&(*si, *s))).collect();
        let computed = missing
            .par_iter()
            .map(|&(si, s, truth)| self.candidate_scores(variant, season, si, s, truth).map(|v| ((si, s), v)))
            .collect::<Result<Vec<_>>>()?;
        cache.extend(computed);

        let mut scores = Vec::with_capacity(self.config.phi_grid.len());
        for (c, &phi) in self.config.phi_grid.iter().enumerate() {
            let vals: Vec<f64> = needed.iter().filter_map(|(si, s, _)| cache[&(*si, *s)][c]).collect();
            let mean = if vals.is_empty() {
                None
            } else {
                Some(vals.iter().sum::<f64>() / vals.len() as f64)
            };
            scores.push(PhiScore {
                phi,
                mean_log_score: mean,
                n: vals.len(),
            });
        }
        let phi = crate::cap::select_phi(&self.config.phi_grid, idx, |phi| {
            Ok(scores.iter().find(|p| p.phi == phi).and_then(|p| p.mean_log_score))
        })?;
        if idx <= 1 {
            scores.clear();
        }
        Ok((phi, scores))
    }

    fn cap_run(&self, variant: Variant, season: Season, stratum: usize, idx: usize, phi: f64) -> Result<(StratumRun, Option<BinnedPmf<f64>>)> {
        let snap = self.snapshot(stratum, season, idx)?;
        let run = CapContext::new(&snap).run(phi, self.pooling(variant))?;
        let (region, target) = self.strata[stratum];
        Ok((cap_entry(region, target, &run), run.pooled))
    }

    fn comparator_run(
        &self,
        variant: Variant,
        season: Season,
        stratum: usize,
        idx: usize,
        prior: &[PastOutcome<f64>],
    ) -> Result<(StratumRun, Option<BinnedPmf<f64>>)> {
        let (region, target) = self.strata[stratum];
        let pooled = match variant {
            Variant::Equal => {
                let week = season.weeks()[idx - 1];
                let current = self.submitted(region, target, week).cloned().unwrap_or_default();
                equal_ensemble(&current)?
            }
            Variant::Static => {
                let week = season.weeks()[idx - 1];
                let current = self.submitted(region, target, week).cloned().unwrap_or_default();
                static_ensemble(&current, prior)?
            }
            Variant::Adaptive => {
                let snap = self.snapshot(stratum, season, idx)?;
                let params = AdaptivePriorParams::new(idx, snap.season_weeks, self.config.prior_delta)?;
                adaptive_ensemble(&snap.current, &snap.past, &params)?
            }
            Variant::CapEqual | Variant::CapAdaptive => unreachable!("CAP variants handled separately"),
        };
        let training_rows = match variant {
            Variant::Static => prior.len(),
            _ => 0,
        };
        Ok((comparator_entry(region, target, pooled.as_ref(), training_rows), pooled.map(|p| p.pmf)))
    }

    fn scores_at(&self, week: Epiweek, season: Season, pooled: &BTreeMap<CellKey, BinnedPmf<f64>>) -> Result<Vec<ScoreEntry>> {
        let mut out = Vec::new();
        for &(region, target) in &self.strata {
            let issue = week.add_weeks(-i64::from(target.weeks()))?;
            if !season.contains(issue) {
                continue;
            }
            let key = CellKey {
                region,
                target,
                issue_week: issue,
            };
            let (Some(pmf), Some(truth)) = (pooled.get(&key), self.dataset.truth().get(region, week)) else {
                continue;
            };
            let convention = self.config.brier_convention;
            out.push(ScoreEntry {
                region,
                target,
                issue_week: issue,
                target_week: week,
                truth,
                log_score: log_score(pmf, truth)?,
                pit: pit_value(pmf, truth)?,
                brier_integral: brier_integral(pmf, truth, convention)?,
                brier: brier_curve(pmf, truth, convention)?,
            });
        }
        Ok(out)
    }
}

static EMPTY_HISTORY: std::sync::LazyLock<ScoreHistory<f64>> = std::sync::LazyLock::new(ScoreHistory::new);

fn cap_entry(region: Region, target: Horizon, run: &CapRun<f64>) -> StratumRun {
    let clusters = run
        .cluster_forecasts
        .iter()
        .map(|c| ClusterEntry {
            id: c.cluster_id,
            members: run.clustering.clusters[c.cluster_id].clone(),
            leader: c.leader.clone(),
            substituted: c.substituted,
            has_forecast: c.pmf.is_some(),
        })
        .collect();
    let weights = run
        .weights
        .as_ref()
        .map(|w| {
            w.labels
                .iter()
                .zip(&w.weights)
                .map(|(l, &v)| WeightEntry {
                    label: l.clone(),
                    weight: v,
                })
                .collect()
        })
        .unwrap_or_default();
    StratumRun {
        region,
        target,
        status: if run.pooled.is_some() { RunStatus::Ok } else { RunStatus::NoEnsemble },
        clusters,
        weights,
        entropy: run.entropy,
        cluster_count: Some(run.cluster_forecasts.iter().filter(|c| c.pmf.is_some()).count()),
        degenerate: run.degenerate,
        training_rows: run.training_rows,
    }
}

fn comparator_entry(region: Region, target: Horizon, pooled: Option<&PooledForecast<f64>>, training_rows: usize) -> StratumRun {
    match pooled {
        None => StratumRun {
            region,
            target,
            status: RunStatus::NoEnsemble,
            clusters: Vec::new(),
            weights: Vec::new(),
            entropy: None,
            cluster_count: None,
            degenerate: false,
            training_rows,
        },
        Some(p) => StratumRun {
            region,
            target,
            status: RunStatus::Ok,
            clusters: Vec::new(),
            weights: p
                .weights
                .labels
                .iter()
                .zip(&p.weights.weights)
                .map(|(l, &v)| WeightEntry {
                    label: l.clone(),
                    weight: v,
                })
                .collect(),
            entropy: Some(p.entropy),
            cluster_count: None,
            degenerate: p.degenerate,
            training_rows,
        },
    }
}

fn load_pooled(path: &Path, pooled: &mut BTreeMap<CellKey, BinnedPmf<f64>>) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let panel: ForecastPanel<f64> = parse_component_csv(fs::File::open(path)?)?;
    for (k, pmf) in panel.into_entries().0 {
        pooled.insert(
            CellKey {
                region: k.region,
                target: k.target,
                issue_week: k.issue_week,
            },
            pmf,
        );
    }
    Ok(())
}

fn check_run_dir(config: &RunConfig, run: &RunDir) -> Result<()> {
    let canonical = config.to_canonical_string();
    let path = run.config();
    if path.exists() {
        let existing = fs::read_to_string(&path)?;
        if existing != canonical {
            return Err(Error::Run(format!(
                "{} was created with a different configuration",
                run.root().display()
            )));
        }
    } else {
        write_atomic(&path, canonical.as_bytes())?;
    }
    Ok(())
}

/// Replays every configured season week by week.
///
/// At each issue week a variant sees only forecasts issued that week or
/// earlier and truth observed by then. Each finished week is written to disk
/// before the next starts, and weeks already on disk are reused, so an
/// interrupted run can be resumed by calling this again.
pub fn replay(config: &RunConfig, dataset: &ForecastDataset<f64>, run: &RunDir, opts: ReplayOptions) -> Result<ReplaySummary> {
    config.validate()?;
    let available = dataset.seasons();
    let mut seasons = config.seasons.clone();
    seasons.sort();
    seasons.dedup();
    if let Some(s) = seasons.iter().find(|s| !available.contains(s)) {
        return Err(Error::Run(format!("season {s} has no forecasts in the panel")));
    }
    if let Some((region, week)) = dataset.truth().first_out_of_order() {
        return Err(Error::Run(format!("truth for {region} at {week} is out of chronological order")));
    }
    check_run_dir(config, run)?;
    write_panels(dataset, &seasons, run)?;
    let replayer = Replayer::new(config, dataset)?;
    let mut summary = ReplaySummary::default();

    for season in seasons {
        let weeks = season.weeks();
        let mut pooled: BTreeMap<Variant, BTreeMap<CellKey, BinnedPmf<f64>>> = BTreeMap::new();
        let mut caches: BTreeMap<Variant, PhiCache> = BTreeMap::new();
        let mut prior: Option<Vec<Vec<PastOutcome<f64>>>> = None;
        let tail: Vec<Epiweek> = (1..=SCORING_TAIL)
            .map(|k| season.last_week().add_weeks(k))
            .collect::<Result<_>>()?;
        let schedule = weeks.iter().enumerate().map(|(i, w)| (Some(i + 1), *w)).chain(tail.into_iter().map(|w| (None, w)));
        for (idx, week) in schedule {
            for &variant in &config.variants {
                let json = run.week_json(variant, season, week);
                let csv = run.week_csv(variant, season, week);
                let state = pooled.entry(variant).or_default();
                if json.exists() {
                    let _: WeekArtifact = read_json(&json)?;
                    load_pooled(&csv, state)?;
                    summary.weeks_reused += 1;
                    continue;
                }
                let mut artifact = WeekArtifact {
                    variant,
                    season,
                    week,
                    week_index: idx,
                    phi: None,
                    phi_scores: Vec::new(),
                    strata: Vec::new(),
                    scores: Vec::new(),
                };
                let mut rows = ForecastPanel::new();
                if let Some(idx) = idx {
                    let results: Vec<(StratumRun, Option<BinnedPmf<f64>>)> = if variant.is_cap() {
                        let cache = caches.entry(variant).or_default();
                        let (phi, phi_scores) = replayer.choose_phi(variant, season, idx, cache)?;
                        artifact.phi = Some(phi);
                        artifact.phi_scores = phi_scores;
                        (0..replayer.strata.len())
                            .into_par_iter()
                            .map(|si| replayer.cap_run(variant, season, si, idx, phi))
                            .collect::<Result<_>>()?
                    } else {
                        if variant == Variant::Static && prior.is_none() {
                            prior = Some(
                                (0..replayer.strata.len())
                                    .into_par_iter()
                                    .map(|si| replayer.prior_outcomes(si, season))
                                    .collect::<Result<_>>()?,
                            );
                        }
                        let no_prior = Vec::new();
                        (0..replayer.strata.len())
                            .into_par_iter()
                            .map(|si| {
                                let p = prior.as_ref().map_or(&no_prior, |p| &p[si]);
                                replayer.comparator_run(variant, season, si, idx, p)
                            })
                            .collect::<Result<_>>()?
                    };
                    for (entry, pmf) in results {
                        if let Some(pmf) = pmf {
                            let key = ForecastKey {
                                region: entry.region,
                                target: entry.target,
                                model_id: variant_id(variant),
                                issue_week: week,
                            };
                            rows.insert(key.clone(), pmf.clone())?;
                            state.insert(
                                CellKey {
                                    region: entry.region,
                                    target: entry.target,
                                    issue_week: week,
                                },
                                pmf,
                            );
                        }
                        artifact.strata.push(entry);
                    }
                }
                artifact.scores = replayer.scores_at(week, season, state)?;
                if idx.is_some() {
                    let mut bytes = Vec::new();
                    write_component_csv(&rows, &mut bytes)?;
                    write_atomic(&csv, &bytes)?;
                }
                write_json(&json, &artifact)?;
                summary.weeks_computed += 1;
                log::info!("{variant} {season} week {week}: {} strata, {} scores", artifact.strata.len(), artifact.scores.len());
            }
            if opts.stop_after == Some(week) {
                return Ok(summary);
            }
        }
    }
    Ok(summary)
}

/// Loads the dataset named by `config` and replays it into `out`.
pub fn replay_config(config: &RunConfig, out: &Path, opts: ReplayOptions) -> Result<ReplaySummary> {
    let dataset = load_dataset(config)?;
    replay(config, &dataset, &RunDir::new(out), opts)
}
