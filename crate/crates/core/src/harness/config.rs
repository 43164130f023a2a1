use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cap::default_phi_grid;
use crate::epiweek::Season;
use crate::error::{Error, Result};
use crate::ingest::{Horizon, Region};
use crate::scoring::BrierConvention;

/// An ensemble method replayed by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    CapEqual,
    CapAdaptive,
    Equal,
    Static,
    Adaptive,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::CapEqual,
        Variant::CapAdaptive,
        Variant::Equal,
        Variant::Static,
        Variant::Adaptive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::CapEqual => "cap-equal",
            Variant::CapAdaptive => "cap-adaptive",
            Variant::Equal => "equal",
            Variant::Static => "static",
            Variant::Adaptive => "adaptive",
        }
    }

    pub fn is_cap(self) -> bool {
        matches!(self, Variant::CapEqual | Variant::CapAdaptive)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// Replay settings, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Canonical forecast CSV files, or directories of them.
    pub forecasts: Vec<PathBuf>,
    pub truth: PathBuf,
    pub seasons: Vec<Season>,
    pub targets: Vec<Horizon>,
    /// `None` replays every region present in the forecasts.
    pub regions: Option<Vec<Region>>,
    pub variants: Vec<Variant>,
    pub phi_grid: Vec<f64>,
    /// Skip threshold selection and use this value every week.
    pub phi_override: Option<f64>,
    pub prior_delta: f64,
    pub seed: u64,
    pub brier_convention: BrierConvention,
}

const KEYS: [&str; 11] = [
    "forecasts",
    "truth",
    "seasons",
    "targets",
    "regions",
    "variants",
    "phi_grid",
    "phi_override",
    "prior_delta",
    "seed",
    "brier_convention",
];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn bad(key: &str, value: &str, why: impl fmt::Display) -> Error {
    Error::Config(format!("invalid value {value:?} for {key}: {why}"))
}

fn number(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|e| bad(key, value, e))?;
    if !v.is_finite() {
        return Err(bad(key, value, "not finite"));
    }
    Ok(v)
}

impl RunConfig {
    /// Defaults for everything except data paths and seasons.
    pub fn new(forecasts: Vec<PathBuf>, truth: PathBuf, seasons: Vec<Season>) -> Self {
        Self {
            forecasts,
            truth,
            seasons,
            targets: Horizon::all(),
            regions: None,
            variants: Variant::ALL.to_vec(),
            phi_grid: default_phi_grid(),
            phi_override: None,
            prior_delta: 5.0,
            seed: 0,
            brier_convention: BrierConvention::Standard,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut forecasts = None;
        let mut truth = None;
        let mut seasons = None;
        let mut cfg = Self::new(Vec::new(), PathBuf::new(), Vec::new());
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", n + 1)));
            }
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {}: {key} set twice", n + 1)));
            }
            seen.push(key);
            let path = |p: &str| {
                let p = Path::new(p);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base.join(p)
                }
            };
            match key {
                "forecasts" => forecasts = Some(list(value).map(path).collect::<Vec<_>>()),
                "truth" => truth = Some(path(value)),
                "seasons" => {
                    seasons = Some(
                        list(value)
                            .map(|s| s.parse::<Season>().map_err(|e| bad(key, s, e)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "targets" => {
                    cfg.targets = list(value)
                        .map(|s| s.parse::<Horizon>().map_err(|e| bad(key, s, e)))
                        .collect::<Result<Vec<_>>>()?
                }
                "regions" => {
                    cfg.regions = if value == "all" {
                        None
                    } else {
                        Some(
                            list(value)
                                .map(|s| s.parse::<Region>().map_err(|e| bad(key, s, e)))
                                .collect::<Result<Vec<_>>>()?,
                        )
                    }
                }
                "variants" => {
                    cfg.variants = list(value)
                        .map(|s| s.parse::<Variant>().map_err(|e| bad(key, s, e)))
                        .collect::<Result<Vec<_>>>()?
                }
                "phi_grid" => {
                    cfg.phi_grid = if value == "default" {
                        default_phi_grid()
                    } else {
                        list(value).map(|s| number(key, s)).collect::<Result<Vec<_>>>()?
                    }
                }
                "phi_override" => cfg.phi_override = Some(number(key, value)?),
                "prior_delta" => cfg.prior_delta = number(key, value)?,
                "seed" => cfg.seed = value.parse().map_err(|e| bad(key, value, e))?,
                "brier_convention" => {
                    cfg.brier_convention = match value {
                        "standard" => BrierConvention::Standard,
                        "paper-printed" => BrierConvention::PaperPrinted,
                        _ => return Err(bad(key, value, "expected standard or paper-printed")),
                    }
                }
                _ => unreachable!("key checked above"),
            }
        }
        cfg.forecasts = forecasts.ok_or_else(|| Error::Config("missing key forecasts".into()))?;
        cfg.truth = truth.ok_or_else(|| Error::Config("missing key truth".into()))?;
        cfg.seasons = seasons.ok_or_else(|| Error::Config("missing key seasons".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.forecasts.is_empty() {
            return Err(Error::Config("forecasts lists no paths".into()));
        }
        if self.seasons.is_empty() {
            return Err(Error::Config("seasons is empty".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("targets is empty".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("at least one variant is required".into()));
        }
        if self.phi_grid.is_empty() {
            return Err(Error::Config("phi_grid is empty".into()));
        }
        if let Some(p) = self.phi_grid.iter().chain(&self.phi_override).find(|p| **p < 0.0) {
            return Err(Error::Config(format!("phi must be non-negative, got {p}")));
        }
        if !(self.prior_delta >= 0.0) {
            return Err(Error::Config(format!("prior_delta must be non-negative, got {}", self.prior_delta)));
        }
        Ok(())
    }

    /// Normalized text form; parsing it yields the same configuration.
    pub fn to_canonical_string(&self) -> String {
        let join = |items: Vec<String>| items.join(", ");
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line(
            "forecasts",
            join(self.forecasts.iter().map(|p| p.display().to_string()).collect()),
        );
        line("truth", self.truth.display().to_string());
        let mut seasons = self.seasons.clone();
        seasons.sort();
        seasons.dedup();
        line("seasons", join(seasons.iter().map(|s| s.0.to_string()).collect()));
        line("targets", join(self.targets.iter().map(|h| h.weeks().to_string()).collect()));
        line(
            "regions",
            match &self.regions {
                None => "all".into(),
                Some(r) => join(r.iter().map(ToString::to_string).collect()),
            },
        );
        line("variants", join(self.variants.iter().map(|v| v.name().to_string()).collect()));
        line("phi_grid", join(self.phi_grid.iter().map(|p| p.to_string()).collect()));
        if let Some(p) = self.phi_override {
            line("phi_override", p.to_string());
        }
        line("prior_delta", self.prior_delta.to_string());
        line("seed", self.seed.to_string());
        line(
            "brier_convention",
            match self.brier_convention {
                BrierConvention::Standard => "standard".into(),
                BrierConvention::PaperPrinted => "paper-printed".into(),
            },
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "\
# replay
forecasts = data/forecasts.csv, more
truth = /abs/truth.csv   # observed
seasons = 2016/2017, 2017
targets = 1, 2
regions = Nat, HHS3
variants = cap-equal, equal
phi_grid = 0.1, 0.5
phi_override = 1.0
prior_delta = 2.5
seed = 9
brier_convention = paper-printed
";
        let cfg = RunConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(cfg.forecasts, vec![PathBuf::from("/base/data/forecasts.csv"), PathBuf::from("/base/more")]);
        assert_eq!(cfg.truth, PathBuf::from("/abs/truth.csv"));
        assert_eq!(cfg.seasons, vec![Season(2016), Season(2017)]);
        assert_eq!(cfg.regions, Some(vec![Region::Nat, Region::Hhs(3)]));
        assert_eq!(cfg.variants, vec![Variant::CapEqual, Variant::Equal]);
        assert_eq!(cfg.phi_override, Some(1.0));
        assert_eq!(cfg.brier_convention, BrierConvention::PaperPrinted);
        let again = RunConfig::parse(&cfg.to_canonical_string(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::parse("forecasts = f\ntruth = t\nseasons = 2017\n", Path::new("/")).unwrap();
        assert_eq!(cfg.variants.len(), 5);
        assert_eq!(cfg.targets.len(), 4);
        assert_eq!(cfg.phi_grid.len(), 20);
        assert_eq!(cfg.prior_delta, 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        let base = "forecasts = f\ntruth = t\nseasons = 2017\n";
        for extra in [
            "colour = blue\n",
            "variants = best\n",
            "targets = 5\n",
            "phi_override = -1\n",
            "seed = x\n",
            "no equals sign\n",
            "seasons = 2018\n",
        ] {
            let err = RunConfig::parse(&format!("{base}{extra}"), Path::new("/")).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{extra}: {err}");
        }
        assert!(RunConfig::parse("truth = t\nseasons = 2017\n", Path::new("/")).is_err());
    }
}
