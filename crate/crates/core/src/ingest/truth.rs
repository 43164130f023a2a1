use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::epiweek::Epiweek;
use crate::error::{Error, Result};
use crate::grid::MAX_ILI;
use crate::scalar::Real;

use super::keys::Region;

/// Observed wILI per (region, week). Values lie in `[0, 100]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable<T> {
    values: BTreeMap<(Region, Epiweek), T>,
    /// Insertion order, kept to detect files that are not chronological.
    order: Vec<(Region, Epiweek)>,
}

impl<T> Default for TruthTable<T> {
    fn default() -> Self {
        Self {
            values: BTreeMap::new(),
            order: Vec::new(),
        }
    }
}

impl<T: Real> TruthTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, region: Region, week: Epiweek, wili: T) -> Result<()> {
        if !(wili >= T::zero() && wili <= T::lit(MAX_ILI)) {
            return Err(Error::Domain {
                value: wili.as_f64(),
                domain: "[0, 100] percent ILI",
            });
        }
        if self.values.contains_key(&(region, week)) {
            return Err(Error::DuplicateKey(format!("truth ({region}, {week})")));
        }
        self.values.insert((region, week), wili);
        self.order.push((region, week));
        Ok(())
    }

    pub fn get(&self, region: Region, week: Epiweek) -> Option<T> {
        self.values.get(&(region, week)).copied()
    }

    /// Truth for `week` only if it has been observed by `as_of`.
    pub fn get_visible(&self, region: Region, week: Epiweek, as_of: Epiweek) -> Option<T> {
        if week <= as_of {
            self.get(region, week)
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Region, Epiweek, T)> + '_ {
        self.values.iter().map(|(&(r, w), &v)| (r, w, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First row, in file order, whose week precedes an earlier row of the same region.
    pub fn first_out_of_order(&self) -> Option<(Region, Epiweek)> {
        let mut last: BTreeMap<Region, Epiweek> = BTreeMap::new();
        for &(region, week) in &self.order {
            if let Some(prev) = last.get(&region) {
                if week < *prev {
                    return Some((region, week));
                }
            }
            last.insert(region, week);
        }
        None
    }

    /// Sets an existing value; used to build perturbed fixtures.
    pub fn replace(&mut self, region: Region, week: Epiweek, wili: T) -> Result<()> {
        match self.values.get_mut(&(region, week)) {
            Some(v) => {
                *v = wili;
                Ok(())
            }
            None => Err(Error::Missing(format!("truth ({region}, {week})"))),
        }
    }
}

/// Parses `region,epiweek,wili` rows.
pub fn parse_truth_csv<T: Real, R: Read>(reader: R) -> Result<TruthTable<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["region", "epiweek", "wili"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(Error::Parse {
            row: 1,
            message: "header must be `region,epiweek,wili`".into(),
        });
    }
    let mut table = TruthTable::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let wrap = |e: Error| Error::Parse {
            row,
            message: e.to_string(),
        };
        let record = record.map_err(|e| wrap(e.into()))?;
        let region: Region = record[0].parse().map_err(wrap)?;
        let week: Epiweek = record[1].parse().map_err(wrap)?;
        let wili: T = record[2].parse().map_err(|_| Error::Parse {
            row,
            message: format!("wili `{}` is not a number", &record[2]),
        })?;
        table.insert(region, week, wili).map_err(wrap)?;
    }
    Ok(table)
}

/// Writes `region,epiweek,wili` rows ordered by region then week.
pub fn write_truth_csv<T: Real, W: Write>(table: &TruthTable<T>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["region", "epiweek", "wili"])?;
    for (region, week, v) in table.iter() {
        wtr.write_record([region.to_string(), week.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows() {
        let t: TruthTable<f64> = parse_truth_csv("region,epiweek,wili\nNat,201743,2.3\n".as_bytes()).unwrap();
        assert_eq!(t.get(Region::Nat, Epiweek::from_yyyyww(201743).unwrap()), Some(2.3));
    }

    #[test]
    fn rejects_duplicates_and_range() {
        let dup = "region,epiweek,wili\nNat,201743,2.3\nNat,201743,2.4\n";
        assert!(matches!(parse_truth_csv::<f64, _>(dup.as_bytes()), Err(Error::Parse { row: 3, .. })));
        let neg = "region,epiweek,wili\nHHS3,201801,-1.0\n";
        match parse_truth_csv::<f64, _>(neg.as_bytes()) {
            Err(Error::Parse { row: 2, message }) => assert!(message.contains("outside the domain")),
            other => panic!("{other:?}"),
        }
        let bad_week = "region,epiweek,wili\nHHS3,201899,1.0\n";
        assert!(parse_truth_csv::<f64, _>(bad_week.as_bytes()).is_err());
    }

    #[test]
    fn detects_out_of_order_rows() {
        let t: TruthTable<f64> =
            parse_truth_csv("region,epiweek,wili\nNat,201801,2.0\nHHS1,201740,1.0\nNat,201752,2.1\n".as_bytes()).unwrap();
        assert_eq!(t.first_out_of_order(), Some((Region::Nat, Epiweek::from_yyyyww(201752).unwrap())));
        let ok: TruthTable<f64> = parse_truth_csv("region,epiweek,wili\nNat,201751,2.0\nNat,201752,2.1\n".as_bytes()).unwrap();
        assert_eq!(ok.first_out_of_order(), None);
    }

    #[test]
    fn write_then_parse_is_identity() {
        let t: TruthTable<f64> =
            parse_truth_csv("region,epiweek,wili\nNat,201751,2.0\nHHS4,201752,0.1234567890123\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_truth_csv(&t, &mut buf).unwrap();
        let back: TruthTable<f64> = parse_truth_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, t.values);
    }
}
