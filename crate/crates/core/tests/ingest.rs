use std::collections::BTreeSet;

use cap_core::ingest::{assemble_panel, ForecastPanel};
use cap_core::synthetic::{generate, SyntheticSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn assembled_cells_never_invent_forecasts(seed in 0u64..1000, missing in 0.0f64..0.9) {
        let mut spec = SyntheticSpec::small(seed);
        spec.seasons.truncate(1);
        spec.missing_prob = missing;
        let data = generate::<f64>(&spec).unwrap();
        // split into one fragment per model, as separate files would arrive
        let mut fragments: Vec<ForecastPanel<f64>> = Vec::new();
        for model in data.panel.roster() {
            let mut f = ForecastPanel::new();
            f.register_model(model.clone());
            for (k, p) in data.panel.entries().filter(|(k, _)| &k.model_id == model) {
                f.insert(k.clone(), p.clone()).unwrap();
            }
            fragments.push(f);
        }
        let dataset = assemble_panel(fragments, data.truth.clone()).unwrap();
        let roster = dataset.roster().len();
        prop_assert_eq!(roster, spec.model_count());
        let mut seen = 0;
        for (key, _) in dataset.cells() {
            let view = dataset.cell(*key).unwrap();
            prop_assert_eq!(view.available.len() + view.missing.len(), roster);
            let avail: BTreeSet<_> = view.available.iter().map(|(m, _)| *m).collect();
            prop_assert!(view.missing.iter().all(|m| !avail.contains(m)));
            for (m, p) in &view.available {
                let k = cap_core::ForecastKey { region: key.region, target: key.target, model_id: (*m).clone(), issue_week: key.issue_week };
                prop_assert_eq!(data.panel.get(&k), Some(*p));
                seen += 1;
            }
        }
        prop_assert_eq!(seen, data.panel.len());
    }
}
