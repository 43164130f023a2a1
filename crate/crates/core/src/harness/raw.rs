use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::epiweek::Epiweek;
use crate::error::{Error, Result};
use crate::ingest::{compute_wili, convert_flusight_long, ForecastPanel, ModelId, Region, StatePopulationTable, TruthTable};

/// Issue week encoded in an archive file name such as `EW42-2016-Team.csv`.
pub fn flusight_issue_week(file_name: &str) -> Option<Epiweek> {
    let upper = file_name.to_ascii_uppercase();
    let rest = &file_name[upper.find("EW")? + 2..];
    let (week, rest) = rest.split_once('-')?;
    let year = rest.get(..4)?;
    Epiweek::new(year.parse().ok()?, week.parse().ok()?).ok()
}

/// Converts an archive laid out as `<dir>/<model>/EWww-YYYY-*.csv`; the
/// subdirectory name is the model id.
pub fn convert_flusight_dir(dir: &Path) -> Result<ForecastPanel<f64>> {
    let mut models: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    models.sort_by_key(|e| e.file_name());
    let mut panel = ForecastPanel::new();
    for model_dir in models.into_iter().filter(|e| e.path().is_dir()) {
        let model = ModelId::new(model_dir.file_name().to_string_lossy().into_owned())?;
        panel.register_model(model.clone());
        let mut files: Vec<_> = fs::read_dir(model_dir.path())?.collect::<std::io::Result<Vec<_>>>()?;
        files.sort_by_key(|e| e.file_name());
        for f in files {
            let name = f.file_name().to_string_lossy().into_owned();
            if !name.to_ascii_lowercase().ends_with(".csv") {
                continue;
            }
            let Some(week) = flusight_issue_week(&name) else {
                log::warn!("skipping {}: no EWww-YYYY in the name", f.path().display());
                continue;
            };
            let part = convert_flusight_long(fs::File::open(f.path())?, &model, week)
                .map_err(|e| Error::Run(format!("{}: {e}", f.path().display())))?;
            panel.merge(part)?;
        }
    }
    Ok(panel)
}

/// Regional wILI from `state,epiweek,ili` rows. Weeks where a region lacks
/// some state are skipped.
pub fn truth_from_states<R: Read>(state_ili: R, pops: &StatePopulationTable) -> Result<TruthTable<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(state_ili);
    let mut by_week: BTreeMap<Epiweek, BTreeMap<String, f64>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                row,
                message: "expected state,epiweek,ili".into(),
            });
        }
        let week: Epiweek = rec[1].parse().map_err(|e: Error| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let ili: f64 = rec[2].parse().map_err(|_| Error::Parse {
            row,
            message: format!("bad ILI value `{}`", &rec[2]),
        })?;
        by_week.entry(week).or_default().insert(rec[0].to_string(), ili);
    }
    let regions: Vec<Region> = Region::all().into_iter().filter(|r| !pops.states_in(*r).is_empty()).collect();
    let mut truth = TruthTable::new();
    for (week, states) in &by_week {
        for &region in &regions {
            match compute_wili(states, pops, region) {
                Ok(v) => truth.insert(region, *week, v)?,
                Err(e) => log::warn!("no wILI for {region} at {week}: {e}"),
            }
        }
    }
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        assert_eq!(flusight_issue_week("EW42-2016-Delphi.csv"), Epiweek::from_yyyyww(201642).ok());
        assert_eq!(flusight_issue_week("ew01-2017-x.csv"), Epiweek::from_yyyyww(201701).ok());
        assert_eq!(flusight_issue_week("forecast.csv"), None);
    }

    #[test]
    fn state_truth() {
        let mut pops = StatePopulationTable::new();
        pops.insert("A", Region::Hhs(1), 1e6).unwrap();
        pops.insert("B", Region::Hhs(1), 3e6).unwrap();
        let text = "state,epiweek,ili\nA,201740,2.0\nB,201740,4.0\nA,201741,1.0\n";
        let t = truth_from_states(text.as_bytes(), &pops).unwrap();
        let w = Epiweek::from_yyyyww(201740).unwrap();
        assert!((t.get(Region::Hhs(1), w).unwrap() - 3.5).abs() < 1e-12);
        assert!((t.get(Region::Nat, w).unwrap() - 3.5).abs() < 1e-12);
        assert_eq!(t.len(), 2);
    }
}
