use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::epiweek::Epiweek;
use crate::error::{Error, Result};

/// HHS region or the US national aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Hhs(u8),
    Nat,
}

impl Region {
    /// HHS1..HHS10 followed by Nat.
    pub fn all() -> Vec<Region> {
        (1..=10).map(Region::Hhs).chain(std::iter::once(Region::Nat)).collect()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Hhs(n) => write!(f, "HHS{n}"),
            Region::Nat => f.write_str("Nat"),
        }
    }
}

impl FromStr for Region {
    type Err = Error;

    /// Accepts `HHS3`, `hhs3`, `HHS Region 3`, `Nat` and `US National`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        if lower == "nat" || lower == "us national" || lower == "us" {
            return Ok(Region::Nat);
        }
        let digits = lower
            .strip_prefix("hhs region")
            .or_else(|| lower.strip_prefix("hhs"))
            .map(str::trim);
        match digits.and_then(|d| d.parse::<u8>().ok()) {
            Some(n) if (1..=10).contains(&n) => Ok(Region::Hhs(n)),
            _ => Err(Error::Config(format!("unknown region `{t}`"))),
        }
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Forecast horizon in weeks ahead, 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Horizon(u8);

impl Horizon {
    pub fn new(weeks: u8) -> Result<Self> {
        if (1..=4).contains(&weeks) {
            Ok(Self(weeks))
        } else {
            Err(Error::Config(format!("unknown target `{weeks}` (expected 1..=4)")))
        }
    }

    pub fn weeks(self) -> u8 {
        self.0
    }

    pub fn all() -> Vec<Horizon> {
        (1..=4).map(Horizon).collect()
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Horizon {
    type Err = Error;

    /// Accepts `2` or the archive's `2 wk ahead`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let head = t.strip_suffix("wk ahead").map(str::trim).unwrap_or(t);
        head.parse::<u8>()
            .map_err(|_| Error::Config(format!("unknown target `{t}`")))
            .and_then(Horizon::new)
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Horizon::new(u8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Opaque component model identifier.
///
/// Ordered numerically when both ids are integers, so `2 < 10`; integer ids
/// sort before non-numeric ones, which sort lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelId(String);

impl ModelId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let trimmed = id.trim();
        if trimmed.is_empty() || trimmed.contains([',', '|', ';', '\n']) {
            return Err(Error::Config(format!("invalid model id `{id}`")));
        }
        Ok(Self(trimmed.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<u64> {
        self.0.parse().ok()
    }
}

impl Ord for ModelId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for ModelId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::new(s)
    }
}

impl From<u32> for ModelId {
    fn from(n: u32) -> Self {
        ModelId(n.to_string())
    }
}

/// Identifies one component forecast.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ForecastKey {
    pub region: Region,
    pub target: Horizon,
    pub model_id: ModelId,
    pub issue_week: Epiweek,
}

impl ForecastKey {
    /// Week whose ILI the forecast predicts.
    pub fn target_week(&self) -> Result<Epiweek> {
        self.issue_week.add_weeks(self.target.weeks() as i64)
    }
}

impl fmt::Display for ForecastKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, model {}, {})", self.region, self.target, self.model_id, self.issue_week)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_tokens() {
        assert_eq!("HHS3".parse::<Region>().unwrap(), Region::Hhs(3));
        assert_eq!("HHS Region 10".parse::<Region>().unwrap(), Region::Hhs(10));
        assert_eq!("US National".parse::<Region>().unwrap(), Region::Nat);
        assert_eq!("Nat".parse::<Region>().unwrap(), Region::Nat);
        assert!("HHS11".parse::<Region>().is_err());
        assert!("Mars".parse::<Region>().is_err());
        assert_eq!(Region::all().len(), 11);
        assert_eq!(Region::Hhs(10).to_string(), "HHS10");
    }

    #[test]
    fn horizon_tokens() {
        assert_eq!("3".parse::<Horizon>().unwrap().weeks(), 3);
        assert_eq!("2 wk ahead".parse::<Horizon>().unwrap().weeks(), 2);
        assert!("5".parse::<Horizon>().is_err());
        assert!("0".parse::<Horizon>().is_err());
    }

    #[test]
    fn model_id_order() {
        let mut ids: Vec<ModelId> = ["10", "2", "CU-BMA", "1", "Delphi-BR"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        ids.sort();
        let names: Vec<&str> = ids.iter().map(ModelId::as_str).collect();
        assert_eq!(names, ["1", "2", "10", "CU-BMA", "Delphi-BR"]);
        assert!(ModelId::new("a,b").is_err());
        assert!(ModelId::new("  ").is_err());
    }
}
