//! Writes the small synthetic fixture used by the README and the acceptance
//! tests: `cargo run -p cap-core --example make_fixture -- fixtures/small`.

use std::fs;
use std::path::PathBuf;

use cap_core::ingest::write_truth_csv;
use cap_core::synthetic::{generate, SyntheticSpec};

fn trim(p: f64) -> String {
    let s = format!("{p:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() { "0".into() } else { s.into() }
}

fn main() -> cap_core::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/small".into()));
    fs::create_dir_all(&dir)?;
    let data = generate::<f64>(&SyntheticSpec::small(2024))?;

    let mut w = csv::Writer::from_path(dir.join("forecasts.csv"))?;
    let mut header: Vec<String> = ["region", "target", "model_id", "issue_epiweek"].map(String::from).to_vec();
    header.extend((1..=131).map(|i| format!("bin_{i}")));
    w.write_record(&header)?;
    for (key, pmf) in data.panel.entries() {
        let mut row = vec![
            key.region.to_string(),
            key.target.to_string(),
            key.model_id.to_string(),
            key.issue_week.to_string(),
        ];
        row.extend(pmf.probs().iter().map(|&p| trim(p)));
        w.write_record(&row)?;
    }
    w.flush()?;

    write_truth_csv(&data.truth, fs::File::create(dir.join("truth.csv"))?)?;
    fs::write(
        dir.join("run.cfg"),
        "# Two synthetic seasons, national region, 1 and 2 week ahead targets.\n\
         forecasts = forecasts.csv\n\
         truth = truth.csv\n\
         seasons = 2016/2017, 2017/2018\n\
         targets = 1, 2\n\
         variants = cap-equal, cap-adaptive, equal, static, adaptive\n\
         prior_delta = 5.0\n\
         seed = 7\n",
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}
