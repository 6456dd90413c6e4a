//! Nomination-sampled data generation.
//!
//! Every replicate draws from its own ChaCha8 stream selected by
//! `(seed, stream_id)`, so replicates can be generated in any order or in
//! parallel and still reproduce exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::mixture::{Component, ComponentParams, MixtureParams, SetSize};
use crate::{Error, Result};

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Where the moments used to standardise Y in the Dell–Clutter score come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Standardization {
    /// Mean and variance of the generating mixture.
    #[default]
    Population,
    /// Mean and variance of all candidate units drawn for the sample.
    Sample,
}

/// Dell–Clutter judgement ranking: Q = ρ·Ỹ + √(1−ρ²)·E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingModel {
    pub rho: f64,
    #[serde(default)]
    pub standardization: Standardization,
}

impl RankingModel {
    pub fn new(rho: f64) -> Result<Self> {
        let m = Self {
            rho,
            standardization: Standardization::Population,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn perfect() -> Self {
        Self {
            rho: 1.0,
            standardization: Standardization::Population,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [0,1], got {}",
                self.rho
            )));
        }
        Ok(())
    }

    fn noise_scale(&self) -> f64 {
        (1.0 - self.rho * self.rho).max(0.0).sqrt()
    }
}

/// Anything that yields labelled unit draws.
pub trait UnitSource {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Component);
}

/// A pure component draw carries a fixed label.
#[derive(Debug, Clone, Copy)]
pub struct Pure {
    pub params: ComponentParams,
    pub label: Component,
}

impl UnitSource for Pure {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Component) {
        let z: f64 = rng.sample(StandardNormal);
        (self.params.mu + self.params.sigma * z, self.label)
    }
}

impl UnitSource for MixtureParams {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Component) {
        let u: f64 = rng.random();
        let (c, label) = if u < self.pi {
            (&self.comp1, Component::First)
        } else {
            (&self.comp2, Component::Second)
        };
        let z: f64 = rng.sample(StandardNormal);
        (c.mu + c.sigma * z, label)
    }
}

/// Draws `k` units and returns the largest with its component. Ties keep the first.
pub fn draw_ns_max<S: UnitSource, R: Rng + ?Sized>(
    source: &S,
    k: SetSize,
    rng: &mut R,
) -> (f64, Component) {
    let mut best = source.draw(rng);
    for _ in 1..k.get() {
        let cand = source.draw(rng);
        if cand.0 > best.0 {
            best = cand;
        }
    }
    best
}

/// Nominates the unit with the largest Dell–Clutter score among `k` mixture draws,
/// standardising with the population moments of `source`.
pub fn draw_ns_max_dell_clutter<R: Rng + ?Sized>(
    source: &MixtureParams,
    k: SetSize,
    ranking: &RankingModel,
    rng: &mut R,
) -> (f64, Component) {
    let mean = source.mean();
    let sd = source.variance().sqrt().max(f64::MIN_POSITIVE);
    dell_clutter_select(source, k, ranking, mean, sd, rng)
}

fn dell_clutter_select<R: Rng + ?Sized>(
    source: &MixtureParams,
    k: SetSize,
    ranking: &RankingModel,
    mean: f64,
    sd: f64,
    rng: &mut R,
) -> (f64, Component) {
    let noise = ranking.noise_scale();
    let mut best: Option<(f64, f64, Component)> = None;
    for _ in 0..k.get() {
        let (y, c) = source.draw(rng);
        let e: f64 = rng.sample(StandardNormal);
        let q = ranking.rho * (y - mean) / sd + noise * e;
        if best.is_none_or(|(bq, _, _)| q > bq) {
            best = Some((q, y, c));
        }
    }
    let (_, y, c) = best.expect("k >= 1");
    (y, c)
}

/// The three NS sample groups used by FSC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FscDataset {
    pub labeled1: Vec<f64>,
    pub labeled2: Vec<f64>,
    pub unlabeled: Vec<f64>,
    pub k: SetSize,
    /// Component of each nominated unlabeled unit, when known.
    pub truth: Option<Vec<Component>>,
}

impl FscDataset {
    pub fn new(
        labeled1: Vec<f64>,
        labeled2: Vec<f64>,
        unlabeled: Vec<f64>,
        k: SetSize,
        truth: Option<Vec<Component>>,
    ) -> Result<Self> {
        let d = Self {
            labeled1,
            labeled2,
            unlabeled,
            k,
            truth,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.len() == 0 {
            return Err(Error::InsufficientData(
                "all sample groups are empty".into(),
            ));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.unlabeled.len() {
                return Err(Error::InvalidParameter(format!(
                    "truth has {} labels for {} unlabeled values",
                    t.len(),
                    self.unlabeled.len()
                )));
            }
        }
        if self.pooled().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite observation".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labeled1.len() + self.labeled2.len() + self.unlabeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pooled(&self) -> impl Iterator<Item = f64> + '_ {
        self.labeled1
            .iter()
            .chain(&self.labeled2)
            .chain(&self.unlabeled)
            .copied()
    }

    pub fn labeled(&self, which: Component) -> &[f64] {
        match which {
            Component::First => &self.labeled1,
            Component::Second => &self.labeled2,
        }
    }

    /// Same observations with a different declared set size.
    pub fn with_set_size(&self, k: SetSize) -> Self {
        Self { k, ..self.clone() }
    }
}

/// Sample-group sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSizes {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
}

/// Labeled groups are nominated under perfect ranking from the pure components;
/// the unlabeled group is nominated from the mixture under `ranking`.
pub fn generate_dataset(
    psi: &MixtureParams,
    k: SetSize,
    sizes: GroupSizes,
    ranking: &RankingModel,
    seed: RngSeed,
) -> Result<FscDataset> {
    psi.validate()?;
    ranking.validate()?;
    if sizes.n1 + sizes.n2 + sizes.n3 == 0 {
        return Err(Error::InsufficientData("all group sizes are zero".into()));
    }
    let mut rng = seed.rng();
    let src1 = Pure {
        params: psi.comp1,
        label: Component::First,
    };
    let src2 = Pure {
        params: psi.comp2,
        label: Component::Second,
    };
    let labeled1 = (0..sizes.n1)
        .map(|_| draw_ns_max(&src1, k, &mut rng).0)
        .collect();
    let labeled2 = (0..sizes.n2)
        .map(|_| draw_ns_max(&src2, k, &mut rng).0)
        .collect();

    let (unlabeled, truth): (Vec<f64>, Vec<Component>) = match ranking.standardization {
        Standardization::Population => (0..sizes.n3)
            .map(|_| draw_ns_max_dell_clutter(psi, k, ranking, &mut rng))
            .unzip(),
        Standardization::Sample => sample_standardized(psi, k, sizes.n3, ranking, &mut rng),
    };
    FscDataset::new(labeled1, labeled2, unlabeled, k, Some(truth))
}

fn sample_standardized<R: Rng + ?Sized>(
    psi: &MixtureParams,
    k: SetSize,
    n3: usize,
    ranking: &RankingModel,
    rng: &mut R,
) -> (Vec<f64>, Vec<Component>) {
    let kk = k.get() as usize;
    let units: Vec<(f64, Component)> = (0..n3 * kk).map(|_| psi.draw(rng)).collect();
    let n = units.len().max(1) as f64;
    let mean = units.iter().map(|u| u.0).sum::<f64>() / n;
    let var = units.iter().map(|u| (u.0 - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt().max(f64::MIN_POSITIVE);
    let noise = ranking.noise_scale();
    units
        .chunks(kk)
        .map(|set| {
            let mut best: Option<(f64, f64, Component)> = None;
            for &(y, c) in set {
                let e: f64 = rng.sample(StandardNormal);
                let q = ranking.rho * (y - mean) / sd + noise * e;
                if best.is_none_or(|(bq, _, _)| q > bq) {
                    best = Some((q, y, c));
                }
            }
            let (_, y, c) = best.expect("nonempty set");
            (y, c)
        })
        .unzip()
}
