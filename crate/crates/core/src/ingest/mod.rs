//! Forecast and truth ingestion.

mod forecasts;
mod keys;
mod panel;
mod truth;
mod wili;

pub use forecasts::{convert_flusight_long, parse_component_csv, write_component_csv, ForecastPanel};
pub use keys::{ForecastKey, Horizon, ModelId, Region};
pub use panel::{assemble_panel, CellKey, CellView, ForecastDataset, MissingCell, PanelSidecar};
pub use truth::{parse_truth_csv, write_truth_csv, TruthTable};
pub use wili::{compute_wili, parse_population_csv, StatePopulationTable};
