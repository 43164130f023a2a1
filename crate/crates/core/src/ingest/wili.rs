use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::keys::Region;

/// Resident counts and HHS membership per state, for one season.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatePopulationTable {
    population: BTreeMap<String, f64>,
    region_of: BTreeMap<String, Region>,
}

impl StatePopulationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, state: impl Into<String>, region: Region, population: f64) -> Result<()> {
        let state = state.into();
        if !(population >= 0.0 && population.is_finite()) {
            return Err(Error::Domain {
                value: population,
                domain: "population >= 0",
            });
        }
        if self.population.contains_key(&state) {
            return Err(Error::DuplicateKey(format!("state {state}")));
        }
        self.population.insert(state.clone(), population);
        self.region_of.insert(state, region);
        Ok(())
    }

    /// States belonging to `region`, in name order.
    pub fn states_in(&self, region: Region) -> Vec<&str> {
        self.region_of
            .iter()
            .filter(|(_, r)| region == Region::Nat || **r == region)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// Population share of each state of `region`; shares sum to one.
    pub fn weights(&self, region: Region) -> Result<Vec<(&str, f64)>> {
        let states = self.states_in(region);
        if states.is_empty() {
            return Err(Error::Missing(format!("no states mapped to {region}")));
        }
        let total: f64 = states.iter().map(|s| self.population[*s]).sum();
        if total <= 0.0 {
            return Err(Error::Domain {
                value: total,
                domain: "positive regional population",
            });
        }
        Ok(states.into_iter().map(|s| (s, self.population[s] / total)).collect())
    }
}

/// Parses `state,region,population` rows.
pub fn parse_population_csv<R: Read>(reader: R) -> Result<StatePopulationTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut table = StatePopulationTable::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Parse {
                row,
                message: "expected state,region,population".into(),
            });
        }
        let wrap = |e: Error| Error::Parse {
            row,
            message: e.to_string(),
        };
        let region: Region = record[1].parse().map_err(wrap)?;
        let pop: f64 = record[2].parse().map_err(|_| Error::Parse {
            row,
            message: format!("population `{}` is not a number", &record[2]),
        })?;
        table.insert(&record[0], region, pop).map_err(wrap)?;
    }
    Ok(table)
}

/// Population-weighted ILI for `region`: `sum_s (pop_s / sum pop) * ILI_s`.
/// `Nat` aggregates every state in the table.
pub fn compute_wili<T: Real>(state_ili: &BTreeMap<String, T>, pops: &StatePopulationTable, region: Region) -> Result<T> {
    let mut total = T::zero();
    for (state, w) in pops.weights(region)? {
        let ili = state_ili
            .get(state)
            .ok_or_else(|| Error::Missing(format!("ILI for state {state}")))?;
        total = total + T::lit(w) * *ili;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ili(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(s, v)| (s.to_string(), *v)).collect()
    }

    #[test]
    fn examples() {
        let mut pops = StatePopulationTable::new();
        pops.insert("ME", Region::Hhs(1), 1.3e6).unwrap();
        assert_eq!(compute_wili(&ili(&[("ME", 3.0)]), &pops, Region::Hhs(1)).unwrap(), 3.0);

        let mut pops = StatePopulationTable::new();
        pops.insert("A", Region::Hhs(2), 1e6).unwrap();
        pops.insert("B", Region::Hhs(2), 3e6).unwrap();
        pops.insert("C", Region::Hhs(3), 5e6).unwrap();
        assert_relative_eq!(
            compute_wili(&ili(&[("A", 2.0), ("B", 4.0)]), &pops, Region::Hhs(2)).unwrap(),
            3.5,
            epsilon = 1e-15
        );
        let c = 1.7;
        assert_relative_eq!(
            compute_wili(&ili(&[("A", c), ("B", c), ("C", c)]), &pops, Region::Nat).unwrap(),
            c,
            epsilon = 1e-15
        );
    }

    #[test]
    fn errors() {
        let mut pops = StatePopulationTable::new();
        pops.insert("A", Region::Hhs(2), 1e6).unwrap();
        pops.insert("B", Region::Hhs(2), 3e6).unwrap();
        assert!(matches!(compute_wili(&ili(&[("A", 2.0)]), &pops, Region::Hhs(2)), Err(Error::Missing(_))));
        let mut zero = StatePopulationTable::new();
        zero.insert("Z", Region::Hhs(4), 0.0).unwrap();
        assert!(compute_wili(&ili(&[("Z", 2.0)]), &zero, Region::Hhs(4)).is_err());
        assert!(compute_wili(&ili(&[("A", 2.0)]), &pops, Region::Hhs(9)).is_err());
    }

    #[test]
    fn parses_population_file() {
        let t = parse_population_csv("state,region,population\nA,HHS1,10\nB,HHS1,30\n".as_bytes()).unwrap();
        let w = t.weights(Region::Hhs(1)).unwrap();
        assert_eq!(w, vec![("A", 0.25), ("B", 0.75)]);
        assert!(parse_population_csv("state,region,population\nA,HHS1,x\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn wili_is_a_convex_combination(vals in proptest::collection::vec((0.0f64..20.0, 1.0f64..1e7), 1..8)) {
            let mut pops = StatePopulationTable::new();
            let mut map = BTreeMap::new();
            for (i, (v, p)) in vals.iter().enumerate() {
                pops.insert(format!("S{i}"), Region::Hhs(5), *p).unwrap();
                map.insert(format!("S{i}"), *v);
            }
            let w = compute_wili(&map, &pops, Region::Hhs(5)).unwrap();
            let lo = vals.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
            let hi = vals.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(w >= lo - 1e-12 && w <= hi + 1e-12);
        }
    }
}
