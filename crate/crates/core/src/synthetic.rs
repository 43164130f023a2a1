//! Seeded synthetic seasons: a smooth epidemic curve per region and season,
//! noisy observed wILI, and families of component models whose errors are
//! shared within a family.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::epiweek::{Epiweek, Season};
use crate::error::{Error, Result};
use crate::ingest::{ForecastKey, ForecastPanel, Horizon, ModelId, Region, TruthTable};
use crate::pmf::BinnedPmf;
use crate::scalar::Real;

/// A group of models sharing a forecast error process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub members: usize,
    /// Constant offset added to every member's mean.
    pub bias: f64,
    /// Standard deviation of the error shared by all members at a forecast.
    pub shock_sd: f64,
    /// Standard deviation of each member's own error.
    pub jitter_sd: f64,
    /// Predictive standard deviation at one week ahead.
    pub sd: f64,
}

impl FamilySpec {
    /// A model forecasting the exact generating distribution of the truth.
    pub fn calibrated(noise_sd: f64) -> Self {
        Self {
            members: 1,
            bias: 0.0,
            shock_sd: 0.0,
            jitter_sd: 0.0,
            sd: noise_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seasons: Vec<Season>,
    pub regions: Vec<Region>,
    pub targets: Vec<Horizon>,
    pub families: Vec<FamilySpec>,
    /// Probability that any single forecast is withheld.
    pub missing_prob: f64,
    /// Observation noise around the epidemic curve.
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Five models in three families, two seasons, one region, two targets.
    pub fn small(seed: u64) -> Self {
        Self {
            seasons: vec![Season(2016), Season(2017)],
            regions: vec![Region::Nat],
            targets: vec![Horizon::new(1).expect("valid"), Horizon::new(2).expect("valid")],
            families: vec![
                FamilySpec {
                    members: 2,
                    bias: 0.3,
                    shock_sd: 0.4,
                    jitter_sd: 0.05,
                    sd: 0.5,
                },
                FamilySpec {
                    members: 2,
                    bias: -0.2,
                    shock_sd: 0.4,
                    jitter_sd: 0.05,
                    sd: 0.6,
                },
                FamilySpec::calibrated(0.3),
            ],
            missing_prob: 0.1,
            noise_sd: 0.3,
            seed,
        }
    }

    pub fn model_count(&self) -> usize {
        self.families.iter().map(|f| f.members).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData<T> {
    pub panel: ForecastPanel<T>,
    pub truth: TruthTable<T>,
    /// Family index of each model.
    pub family_of: BTreeMap<ModelId, usize>,
}

#[derive(Debug, Clone, Copy)]
struct Curve {
    base: f64,
    amplitude: f64,
    peak: f64,
    width: f64,
}

impl Curve {
    fn at(&self, offset: f64) -> f64 {
        self.base + self.amplitude * (-((offset - self.peak) / self.width).powi(2)).exp()
    }
}

fn normal(sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sd).map_err(|e| Error::Config(format!("invalid standard deviation {sd}: {e}")))
}

/// Generates the dataset described by `spec`. Truth runs from the first
/// season's first week to four weeks past the last season's final week.
pub fn generate<T: Real>(spec: &SyntheticSpec) -> Result<SyntheticData<T>> {
    if spec.seasons.is_empty() || spec.regions.is_empty() || spec.targets.is_empty() || spec.model_count() == 0 {
        return Err(Error::Empty("synthetic seasons, regions, targets and models"));
    }
    if !(0.0..=1.0).contains(&spec.missing_prob) {
        return Err(Error::Domain {
            value: spec.missing_prob,
            domain: "missing probability in [0, 1]",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seasons = spec.seasons.clone();
    seasons.sort();
    seasons.dedup();

    let mut curves: BTreeMap<(Region, Season), Curve> = BTreeMap::new();
    for &season in &seasons {
        for &region in &spec.regions {
            let curve = Curve {
                base: rng.random_range(0.8..1.5),
                amplitude: rng.random_range(2.0..6.0),
                peak: rng.random_range(10.0..22.0),
                width: rng.random_range(3.0..6.0),
            };
            curves.insert((region, season), curve);
        }
    }
    let latent = |region: Region, week: Epiweek| -> Result<f64> {
        let season = Season(if week.week() >= 40 { week.year() } else { week.year() - 1 });
        let curve = curves
            .get(&(region, season))
            .or_else(|| curves.get(&(region, seasons[0])))
            .expect("curve for every region");
        Ok(curve.at(season.first_week().weeks_until(week)? as f64))
    };

    let noise = normal(spec.noise_sd)?;
    let first = seasons[0].first_week();
    let last = seasons[seasons.len() - 1].last_week().add_weeks(4)?;
    let mut truth = TruthTable::new();
    let mut week = first;
    while week <= last {
        for &region in &spec.regions {
            let y = (latent(region, week)? + noise.sample(&mut rng)).clamp(0.0, 99.9);
            let y = (y * 10.0).floor() / 10.0;
            truth.insert(region, week, T::lit(y))?;
        }
        week = week.add_weeks(1)?;
    }

    let mut family_of = BTreeMap::new();
    let mut models: Vec<(ModelId, usize)> = Vec::new();
    let mut next_id = 1u32;
    for (f, fam) in spec.families.iter().enumerate() {
        for _ in 0..fam.members {
            let id = ModelId::from(next_id);
            next_id += 1;
            family_of.insert(id.clone(), f);
            models.push((id, f));
        }
    }
    let shocks: Vec<Normal<f64>> = spec.families.iter().map(|f| normal(f.shock_sd)).collect::<Result<_>>()?;
    let jitters: Vec<Normal<f64>> = spec.families.iter().map(|f| normal(f.jitter_sd)).collect::<Result<_>>()?;

    let mut panel = ForecastPanel::new();
    for (m, _) in &models {
        panel.register_model(m.clone());
    }
    for &season in &seasons {
        for issue in season.weeks() {
            for &region in &spec.regions {
                for &target in &spec.targets {
                    let target_week = issue.add_weeks(i64::from(target.weeks()))?;
                    let center = latent(region, target_week)?;
                    let family_shock: Vec<f64> = shocks.iter().map(|d| d.sample(&mut rng)).collect();
                    for (model, f) in &models {
                        let fam = spec.families[*f];
                        let mean = center + fam.bias + family_shock[*f] + jitters[*f].sample(&mut rng);
                        let sd = fam.sd * (1.0 + 0.25 * f64::from(target.weeks() - 1));
                        let withheld = rng.random_bool(spec.missing_prob);
                        if withheld {
                            continue;
                        }
                        let key = ForecastKey {
                            region,
                            target,
                            model_id: model.clone(),
                            issue_week: issue,
                        };
                        panel.insert(key, BinnedPmf::discretized_normal(mean, sd)?)?;
                    }
                }
            }
        }
    }
    Ok(SyntheticData {
        panel,
        truth,
        family_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_shaped() {
        let spec = SyntheticSpec::small(11);
        let a = generate::<f64>(&spec).unwrap();
        let b = generate::<f64>(&spec).unwrap();
        assert_eq!(a.panel, b.panel);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.panel.roster().len(), 5);
        let slots = 2 * 33 * 2 * 5;
        assert!(a.panel.len() < slots && a.panel.len() > slots * 8 / 10);
        assert_eq!(a.truth.first_out_of_order(), None);
        let last = Season(2017).last_week().add_weeks(4).unwrap();
        assert!(a.truth.get(Region::Nat, last).is_some());
    }

    #[test]
    fn no_missingness() {
        let mut spec = SyntheticSpec::small(3);
        spec.missing_prob = 0.0;
        let d = generate::<f64>(&spec).unwrap();
        assert_eq!(d.panel.len(), 2 * 33 * 2 * 5);
    }
}
