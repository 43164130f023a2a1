use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::epiweek::{Epiweek, Season};
use crate::error::{Error, Result};
use crate::pmf::BinnedPmf;
use crate::scalar::Real;

use super::forecasts::ForecastPanel;
use super::keys::{ForecastKey, Horizon, ModelId, Region};
use super::truth::TruthTable;

/// One (region, target, issue week) cell of the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub region: Region,
    pub target: Horizon,
    pub issue_week: Epiweek,
}

impl CellKey {
    pub fn target_week(&self) -> Result<Epiweek> {
        self.issue_week.add_weeks(self.target.weeks() as i64)
    }
}

/// Everything known about a cell: submitted pmfs, absent models, realized truth.
#[derive(Debug, Clone)]
pub struct CellView<'a, T> {
    pub key: CellKey,
    pub available: Vec<(&'a ModelId, &'a BinnedPmf<T>)>,
    pub missing: Vec<&'a ModelId>,
    pub target_week: Epiweek,
    /// `None` when the target week has not been observed.
    pub truth: Option<T>,
}

/// Aligned forecasts and truth across seasons.
#[derive(Debug, Clone)]
pub struct ForecastDataset<T> {
    cells: BTreeMap<CellKey, BTreeMap<ModelId, BinnedPmf<T>>>,
    roster: BTreeSet<ModelId>,
    truth: TruthTable<T>,
}

/// Merges parsed fragments and attaches the truth table.
pub fn assemble_panel<T: Real>(fragments: Vec<ForecastPanel<T>>, truth: TruthTable<T>) -> Result<ForecastDataset<T>> {
    let mut merged = ForecastPanel::new();
    for f in fragments {
        merged.merge(f)?;
    }
    Ok(ForecastDataset::new(merged, truth))
}

impl<T: Real> ForecastDataset<T> {
    pub fn new(panel: ForecastPanel<T>, truth: TruthTable<T>) -> Self {
        let (entries, roster) = panel.into_entries();
        let mut cells: BTreeMap<CellKey, BTreeMap<ModelId, BinnedPmf<T>>> = BTreeMap::new();
        for (k, pmf) in entries {
            let cell = CellKey {
                region: k.region,
                target: k.target,
                issue_week: k.issue_week,
            };
            cells.entry(cell).or_default().insert(k.model_id, pmf);
        }
        Self { cells, roster, truth }
    }

    pub fn roster(&self) -> &BTreeSet<ModelId> {
        &self.roster
    }

    pub fn truth(&self) -> &TruthTable<T> {
        &self.truth
    }

    /// Submitted pmfs for a cell, keyed by model; empty when nobody submitted.
    pub fn submitted(&self, key: &CellKey) -> Option<&BTreeMap<ModelId, BinnedPmf<T>>> {
        self.cells.get(key)
    }

    pub fn forecast(&self, key: &CellKey, model: &ModelId) -> Option<&BinnedPmf<T>> {
        self.cells.get(key).and_then(|m| m.get(model))
    }

    /// Available and missing models plus realized truth for a cell.
    /// `|available| + |missing|` always equals the roster size.
    pub fn cell(&self, key: CellKey) -> Result<CellView<'_, T>> {
        let submitted = self.cells.get(&key);
        let mut available = Vec::new();
        let mut missing = Vec::new();
        for model in &self.roster {
            match submitted.and_then(|m| m.get_key_value(model)) {
                Some((id, pmf)) => available.push((id, pmf)),
                None => missing.push(model),
            }
        }
        let target_week = key.target_week()?;
        Ok(CellView {
            key,
            available,
            missing,
            target_week,
            truth: self.truth.get(key.region, target_week),
        })
    }

    /// (region, target) strata with at least one forecast.
    pub fn strata(&self) -> BTreeSet<(Region, Horizon)> {
        self.cells.keys().map(|k| (k.region, k.target)).collect()
    }

    /// Seasons with at least one forecast issued in-season.
    pub fn seasons(&self) -> BTreeSet<Season> {
        self.cells.keys().filter_map(|k| k.issue_week.season()).collect()
    }

    /// Issue weeks with at least one forecast for the stratum, ascending.
    pub fn issue_weeks(&self, region: Region, target: Horizon) -> Vec<Epiweek> {
        self.cells
            .keys()
            .filter(|k| k.region == region && k.target == target)
            .map(|k| k.issue_week)
            .collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &BTreeMap<ModelId, BinnedPmf<T>>)> {
        self.cells.iter()
    }

    /// Overwrites or inserts a single forecast.
    pub fn set_forecast(&mut self, key: CellKey, model: ModelId, pmf: BinnedPmf<T>) {
        self.roster.insert(model.clone());
        self.cells.entry(key).or_default().insert(model, pmf);
    }

    /// Drops a single forecast, leaving the model on the roster.
    pub fn remove_forecast(&mut self, key: &CellKey, model: &ModelId) -> Option<BinnedPmf<T>> {
        let cell = self.cells.get_mut(key)?;
        let out = cell.remove(model);
        if cell.is_empty() {
            self.cells.remove(key);
        }
        out
    }

    pub fn truth_mut(&mut self) -> &mut TruthTable<T> {
        &mut self.truth
    }

    /// Forecasts issued during `season`, as a panel carrying the full roster.
    pub fn season_panel(&self, season: Season) -> ForecastPanel<T> {
        let mut panel = ForecastPanel::new();
        for model in &self.roster {
            panel.register_model(model.clone());
        }
        for (cell, models) in self.cells.iter().filter(|(k, _)| season.contains(k.issue_week)) {
            for (model, pmf) in models {
                let key = ForecastKey {
                    region: cell.region,
                    target: cell.target,
                    model_id: model.clone(),
                    issue_week: cell.issue_week,
                };
                panel.insert(key, pmf.clone()).expect("cells hold unique keys");
            }
        }
        panel
    }

    /// Roster and missing models for every in-season week of each stratum.
    pub fn sidecar(&self, season: Season) -> PanelSidecar {
        let strata: BTreeSet<(Region, Horizon)> = self
            .cells
            .keys()
            .filter(|k| season.contains(k.issue_week))
            .map(|k| (k.region, k.target))
            .collect();
        let mut missing = Vec::new();
        for (region, target) in strata {
            for issue_week in season.weeks() {
                let key = CellKey {
                    region,
                    target,
                    issue_week,
                };
                let submitted = self.cells.get(&key);
                let absent: Vec<ModelId> = self
                    .roster
                    .iter()
                    .filter(|m| submitted.is_none_or(|s| !s.contains_key(*m)))
                    .cloned()
                    .collect();
                if !absent.is_empty() {
                    missing.push(MissingCell {
                        region,
                        target,
                        issue_week,
                        models: absent,
                    });
                }
            }
        }
        PanelSidecar {
            season,
            roster: self.roster.iter().cloned().collect(),
            missing,
        }
    }
}

/// JSON sidecar persisted next to each season's panel CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSidecar {
    pub season: Season,
    pub roster: Vec<ModelId>,
    pub missing: Vec<MissingCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingCell {
    pub region: Region,
    pub target: Horizon,
    pub issue_week: Epiweek,
    pub models: Vec<ModelId>,
}

impl PanelSidecar {
    pub fn check_against(&self, dataset_roster: &BTreeSet<ModelId>) -> Result<()> {
        let mine: BTreeSet<&ModelId> = self.roster.iter().collect();
        if mine != dataset_roster.iter().collect() {
            return Err(Error::Run("panel roster differs from sidecar".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_component_csv, write_component_csv};

    fn ew(code: u32) -> Epiweek {
        Epiweek::from_yyyyww(code).unwrap()
    }

    fn h(n: u8) -> Horizon {
        Horizon::new(n).unwrap()
    }

    fn panel_with(models: &[u32], weeks: &[u32], skip: &[(u32, u32)]) -> ForecastPanel<f64> {
        let mut p = ForecastPanel::new();
        for &m in models {
            p.register_model(ModelId::from(m));
            for &w in weeks {
                if skip.contains(&(m, w)) {
                    continue;
                }
                let key = ForecastKey {
                    region: Region::Nat,
                    target: h(1),
                    model_id: ModelId::from(m),
                    issue_week: ew(w),
                };
                p.insert(key, BinnedPmf::discretized_normal(1.0 + m as f64 / 10.0, 0.5).unwrap())
                    .unwrap();
            }
        }
        p
    }

    #[test]
    fn missing_model_is_reported() {
        let models: Vec<u32> = (1..=27).collect();
        let panel = panel_with(&models, &[201752, 201801], &[(4, 201801)]);
        let ds = assemble_panel(vec![panel], TruthTable::new()).unwrap();
        let cell = ds
            .cell(CellKey {
                region: Region::Nat,
                target: h(1),
                issue_week: ew(201801),
            })
            .unwrap();
        let missing: Vec<&str> = cell.missing.iter().map(|m| m.as_str()).collect();
        assert_eq!(missing, ["4"]);
        assert_eq!(cell.available.len() + cell.missing.len(), 27);
        assert_eq!(cell.truth, None);
    }

    #[test]
    fn target_week_and_truth_alignment() {
        let panel = panel_with(&[1], &[201040], &[]);
        let mut truth = TruthTable::new();
        truth.insert(Region::Nat, ew(201041), 1.4).unwrap();
        let ds = assemble_panel(vec![panel], truth).unwrap();
        let cell = ds
            .cell(CellKey {
                region: Region::Nat,
                target: h(1),
                issue_week: ew(201040),
            })
            .unwrap();
        assert_eq!(cell.truth, Some(1.4));
        let four = CellKey {
            region: Region::Nat,
            target: h(4),
            issue_week: ew(201040),
        };
        assert_eq!(four.target_week().unwrap(), ew(201044));
        assert_eq!(ds.cell(four).unwrap().truth, None);
    }

    #[test]
    fn duplicate_across_fragments_is_rejected() {
        let a = panel_with(&[1], &[201040], &[]);
        let b = panel_with(&[1], &[201040], &[]);
        assert!(assemble_panel(vec![a, b], TruthTable::<f64>::new()).is_err());
    }

    #[test]
    fn season_panel_round_trips_bit_exactly() {
        let panel = panel_with(&[1, 2, 3], &[201040, 201041, 201120, 201140], &[(2, 201041)]);
        let ds = assemble_panel(vec![panel], TruthTable::new()).unwrap();
        let season = ds.season_panel(Season(2010));
        assert_eq!(season.len(), 8);
        let mut buf = Vec::new();
        write_component_csv(&season, &mut buf).unwrap();
        let back: ForecastPanel<f64> = parse_component_csv(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        write_component_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
        for ((k1, p1), (k2, p2)) in season.entries().zip(back.entries()) {
            assert_eq!(k1, k2);
            let b1: Vec<u64> = p1.probs().iter().map(|x| x.to_bits()).collect();
            let b2: Vec<u64> = p2.probs().iter().map(|x| x.to_bits()).collect();
            assert_eq!(b1, b2);
        }
        let side = ds.sidecar(Season(2010));
        assert_eq!(side.roster.len(), 3);
        let m = side.missing.iter().find(|c| c.issue_week == ew(201041)).unwrap();
        assert_eq!(m.models, vec![ModelId::from(2)]);
        // weeks without any submission list the whole roster
        let empty = side.missing.iter().find(|c| c.issue_week == ew(201050)).unwrap();
        assert_eq!(empty.models.len(), 3);
    }
}
