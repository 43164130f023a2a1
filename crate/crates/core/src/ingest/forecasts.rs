use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::epiweek::Epiweek;
use crate::error::{Error, Result};
use crate::grid::{bin_index, NUM_BINS};
use crate::pmf::{normalize_pmf, BinnedPmf};
use crate::scalar::Real;

use super::keys::{ForecastKey, Horizon, ModelId, Region};

const KEY_COLUMNS: [&str; 4] = ["region", "target", "model_id", "issue_epiweek"];

/// Component forecasts keyed by (region, target, model, issue week).
///
/// A key absent from `entries` is a missing forecast; nothing is imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPanel<T> {
    entries: BTreeMap<ForecastKey, BinnedPmf<T>>,
    roster: BTreeSet<ModelId>,
}

impl<T> Default for ForecastPanel<T> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            roster: BTreeSet::new(),
        }
    }
}

impl<T: Real> ForecastPanel<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a forecast; a second pmf for the same key is an error.
    pub fn insert(&mut self, key: ForecastKey, pmf: BinnedPmf<T>) -> Result<()> {
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateKey(key.to_string()));
        }
        self.roster.insert(key.model_id.clone());
        self.entries.insert(key, pmf);
        Ok(())
    }

    /// Moves every entry of `other` into `self`, rejecting duplicates.
    pub fn merge(&mut self, other: ForecastPanel<T>) -> Result<()> {
        for (k, v) in other.entries {
            self.insert(k, v)?;
        }
        self.roster.extend(other.roster);
        Ok(())
    }

    /// Adds a model to the roster without any forecasts.
    pub fn register_model(&mut self, model: ModelId) {
        self.roster.insert(model);
    }

    pub fn get(&self, key: &ForecastKey) -> Option<&BinnedPmf<T>> {
        self.entries.get(key)
    }

    pub fn is_missing(&self, key: &ForecastKey) -> bool {
        !self.entries.contains_key(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ForecastKey, &BinnedPmf<T>)> {
        self.entries.iter()
    }

    pub fn roster(&self) -> &BTreeSet<ModelId> {
        &self.roster
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only the entries for which `keep` returns true. The roster is unchanged.
    pub fn retain(&mut self, mut keep: impl FnMut(&ForecastKey) -> bool) {
        self.entries.retain(|k, _| keep(k));
    }

    pub(crate) fn into_entries(self) -> (BTreeMap<ForecastKey, BinnedPmf<T>>, BTreeSet<ModelId>) {
        (self.entries, self.roster)
    }
}

fn parse_err(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

/// Parses the canonical wide format: `region,target,model_id,issue_epiweek`
/// followed by 131 bin columns. Every row is normalized; row order is irrelevant.
pub fn parse_component_csv<T: Real, R: Read>(reader: R) -> Result<ForecastPanel<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != KEY_COLUMNS.len() + NUM_BINS {
        return Err(parse_err(
            1,
            format!("expected {} columns, header has {}", KEY_COLUMNS.len() + NUM_BINS, headers.len()),
        ));
    }
    for (i, name) in KEY_COLUMNS.iter().enumerate() {
        if !headers[i].eq_ignore_ascii_case(name) {
            return Err(parse_err(1, format!("column {} should be `{name}`, found `{}`", i + 1, &headers[i])));
        }
    }
    let mut panel = ForecastPanel::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        let region: Region = record[0].parse().map_err(|e: Error| parse_err(row, e.to_string()))?;
        let target: Horizon = record[1].parse().map_err(|e: Error| parse_err(row, e.to_string()))?;
        let model_id: ModelId = record[2].parse().map_err(|e: Error| parse_err(row, e.to_string()))?;
        let issue_week: Epiweek = record[3].parse().map_err(|e: Error| parse_err(row, e.to_string()))?;
        let raw = record
            .iter()
            .skip(KEY_COLUMNS.len())
            .enumerate()
            .map(|(b, field)| {
                field
                    .parse::<T>()
                    .map_err(|_| parse_err(row, format!("bin {} is not a number: `{field}`", b + 1)))
            })
            .collect::<Result<Vec<T>>>()?;
        let pmf = normalize_pmf(raw).map_err(|e| parse_err(row, e.to_string()))?;
        let key = ForecastKey {
            region,
            target,
            model_id,
            issue_week,
        };
        panel.insert(key, pmf).map_err(|e| parse_err(row, e.to_string()))?;
    }
    Ok(panel)
}

/// Writes the canonical wide format, one row per forecast in key order.
/// Values use the shortest representation that parses back to the same bits.
pub fn write_component_csv<T: Real, W: Write>(panel: &ForecastPanel<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=NUM_BINS).map(|b| format!("bin_{b}")));
    wtr.write_record(&header)?;
    for (key, pmf) in panel.entries() {
        let mut row = vec![
            key.region.to_string(),
            key.target.to_string(),
            key.model_id.to_string(),
            key.issue_week.to_string(),
        ];
        row.extend(pmf.probs().iter().map(|p| p.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Converts one submission in the archive's per-bin long format
/// (`Location,Target,Type,Unit,Bin_start_incl,Bin_end_notincl,Value`).
///
/// Model id and issue week come from the submission's file name, so they are
/// passed in. Rows for season-level targets and point forecasts are skipped.
pub fn convert_flusight_long<T: Real, R: Read>(
    reader: R,
    model_id: &ModelId,
    issue_week: Epiweek,
) -> Result<ForecastPanel<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))
    };
    let (loc, tgt, typ, start, value) = (col("Location")?, col("Target")?, col("Type")?, col("Bin_start_incl")?, col("Value")?);

    let mut bins: BTreeMap<(Region, Horizon), Vec<Option<T>>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        let target = &record[tgt];
        if !target.ends_with("wk ahead") || !record[typ].eq_ignore_ascii_case("Bin") {
            continue;
        }
        let region: Region = record[loc].parse().map_err(|e: Error| parse_err(row, e.to_string()))?;
        let horizon: Horizon = target.parse().map_err(|e: Error| parse_err(row, e.to_string()))?;
        let lower: T = record[start]
            .parse()
            .map_err(|_| parse_err(row, format!("bad bin start `{}`", &record[start])))?;
        let bin = bin_index(lower).map_err(|e| parse_err(row, e.to_string()))?;
        let mass: T = record[value]
            .parse()
            .map_err(|_| parse_err(row, format!("bad value `{}`", &record[value])))?;
        let slot = &mut bins.entry((region, horizon)).or_insert_with(|| vec![None; NUM_BINS])[bin];
        if slot.is_some() {
            return Err(parse_err(row, format!("bin starting at {lower} repeated")));
        }
        *slot = Some(mass);
    }

    let mut panel = ForecastPanel::new();
    for ((region, target), slots) in bins {
        let raw = slots
            .into_iter()
            .enumerate()
            .map(|(b, m)| m.ok_or_else(|| Error::MalformedForecast(format!("{region} {target} wk ahead lacks bin {b}"))))
            .collect::<Result<Vec<T>>>()?;
        let key = ForecastKey {
            region,
            target,
            model_id: model_id.clone(),
            issue_week,
        };
        panel.insert(key, normalize_pmf(raw)?)?;
    }
    panel.register_model(model_id.clone());
    Ok(panel)
}
