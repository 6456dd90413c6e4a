//! Two-component normal mixtures observed through nomination sampling.
//!
//! A nominated observation is the maximum of a set of `k` i.i.d. mixture draws, so
//! its density is `g_k(x) = k f(x) F(x)^(k-1)`. All log-likelihoods here are
//! computed in log space; the cdf factors use [`normal::std_log_cdf`], which stays
//! finite far into the left tail.

use serde::{Deserialize, Serialize};

use crate::normal::{self, log_add_exp};
use crate::{Error, Result};

/// Smallest admissible component standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Location and scale of one normal component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentParams {
    pub mu: f64,
    pub sigma: f64,
}

impl ComponentParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let p = Self { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub const fn standard() -> Self {
        Self {
            mu: 0.0,
            sigma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite, got {}",
                self.mu
            )));
        }
        if !self.sigma.is_finite() || self.sigma < SIGMA_FLOOR {
            return Err(Error::Degenerate(format!(
                "sigma {} below floor {SIGMA_FLOOR:e}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        normal::pdf(x, self.mu, self.sigma)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal::cdf(x, self.mu, self.sigma)
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        normal::log_pdf(x, self.mu, self.sigma)
    }

    pub fn log_cdf(&self, x: f64) -> f64 {
        normal::log_cdf(x, self.mu, self.sigma)
    }
}

/// ψ = (π, θ₁, θ₂) for `π f₁ + (1 − π) f₂`.
///
/// The closed interval `[0, 1]` is accepted for `pi` so that the single-component
/// limits can be evaluated; the fitters keep their iterates strictly inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub pi: f64,
    pub comp1: ComponentParams,
    pub comp2: ComponentParams,
}

impl MixtureParams {
    pub fn new(pi: f64, comp1: ComponentParams, comp2: ComponentParams) -> Result<Self> {
        let p = Self { pi, comp1, comp2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pi) {
            return Err(Error::InvalidParameter(format!(
                "pi must lie in [0,1], got {}",
                self.pi
            )));
        }
        self.comp1.validate()?;
        self.comp2.validate()
    }

    pub fn component(&self, which: Component) -> &ComponentParams {
        match which {
            Component::First => &self.comp1,
            Component::Second => &self.comp2,
        }
    }

    /// Population mean of one mixture draw.
    pub fn mean(&self) -> f64 {
        self.pi * self.comp1.mu + (1.0 - self.pi) * self.comp2.mu
    }

    /// Population variance of one mixture draw.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let second = self.pi * (self.comp1.sigma.powi(2) + self.comp1.mu.powi(2))
            + (1.0 - self.pi) * (self.comp2.sigma.powi(2) + self.comp2.mu.powi(2));
        (second - m * m).max(0.0)
    }

    /// (ln π, ln(1 − π))
    pub fn ln_pi(&self) -> (f64, f64) {
        (self.pi.ln(), (1.0 - self.pi).ln())
    }

    /// ln f(x; ψ)
    pub fn log_pdf(&self, x: f64) -> f64 {
        let (a, b) = self.ln_pi();
        log_add_exp(a + self.comp1.log_pdf(x), b + self.comp2.log_pdf(x))
    }

    /// ln F(x; ψ)
    pub fn log_cdf(&self, x: f64) -> f64 {
        let (a, b) = self.ln_pi();
        log_add_exp(a + self.comp1.log_cdf(x), b + self.comp2.log_cdf(x))
    }
}

/// (ε, δ, τ) of `(1 − ε) N(0, 1) + ε N(δ, τ²)`; the background is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RareEventParams {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
}

impl RareEventParams {
    pub fn new(epsilon: f64, delta: f64, tau: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.to_mixture().validate()
    }

    /// Mixture layout with the N(0,1) background as component 1 and the rare
    /// signal as component 2, so `pi = 1 − ε`.
    pub fn to_mixture(&self) -> MixtureParams {
        MixtureParams {
            pi: 1.0 - self.epsilon,
            comp1: ComponentParams::standard(),
            comp2: ComponentParams {
                mu: self.delta,
                sigma: self.tau,
            },
        }
    }

    /// Inverse of [`RareEventParams::to_mixture`]; ignores component 1.
    pub fn from_mixture(psi: &MixtureParams) -> Self {
        Self {
            epsilon: 1.0 - psi.pi,
            delta: psi.comp2.mu,
            tau: psi.comp2.sigma,
        }
    }
}

/// Mixture component label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    First,
    Second,
}

impl Component {
    pub fn index(self) -> u8 {
        match self {
            Component::First => 1,
            Component::Second => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Component::First),
            2 => Some(Component::Second),
            _ => None,
        }
    }
}

/// Number of units per nomination set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetSize(u32);

impl SetSize {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "set size must be at least 1".into(),
            ));
        }
        Ok(Self(k))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// k − 1, the number of unmeasured units per set.
    pub fn others(self) -> f64 {
        (self.0 - 1) as f64
    }
}

pub fn normal_pdf(x: f64, p: &ComponentParams) -> f64 {
    p.pdf(x)
}

pub fn normal_cdf(x: f64, p: &ComponentParams) -> f64 {
    p.cdf(x)
}

pub fn mixture_pdf(x: f64, psi: &MixtureParams) -> f64 {
    psi.pi * psi.comp1.pdf(x) + (1.0 - psi.pi) * psi.comp2.pdf(x)
}

pub fn mixture_cdf(x: f64, psi: &MixtureParams) -> f64 {
    psi.pi * psi.comp1.cdf(x) + (1.0 - psi.pi) * psi.comp2.cdf(x)
}

/// Density of the maximum of `k` mixture draws.
pub fn ns_density(x: f64, psi: &MixtureParams, k: SetSize) -> f64 {
    if k.get() == 1 {
        return mixture_pdf(x, psi);
    }
    k.as_f64() * mixture_pdf(x, psi) * mixture_cdf(x, psi).powi(k.get() as i32 - 1)
}

/// ln g_k(x; ψ)
pub fn log_ns_density(x: f64, psi: &MixtureParams, k: SetSize) -> f64 {
    let density = psi.log_pdf(x);
    if k.get() == 1 {
        return density;
    }
    k.as_f64().ln() + density + k.others() * psi.log_cdf(x)
}

fn check_data(data: &[f64], psi: &MixtureParams) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    psi.validate()
}

/// Correct NS log-likelihood ℓ_C(ψ) = Σ ln g_k(xᵢ; ψ).
pub fn log_ns_likelihood(data: &[f64], psi: &MixtureParams, k: SetSize) -> Result<f64> {
    check_data(data, psi)?;
    Ok(data.iter().map(|&x| log_ns_density(x, psi, k)).sum())
}

/// Per-observation term of the single-indicator objective:
/// ln k + ln[π^k f₁F₁^(k−1) + (1−π)^k f₂F₂^(k−1)].
pub fn log_improper_density(x: f64, psi: &MixtureParams, k: SetSize) -> f64 {
    let kf = k.as_f64();
    let (a, b) = psi.ln_pi();
    let pure1 = kf * a + psi.comp1.log_pdf(x) + k.others() * psi.comp1.log_cdf(x);
    let pure2 = kf * b + psi.comp2.log_pdf(x) + k.others() * psi.comp2.log_cdf(x);
    kf.ln() + log_add_exp(pure1, pure2)
}

/// Misspecified objective ℓ_W(ψ) from the single-indicator augmentation,
/// including the additive n·ln k so that it coincides with ℓ_C at k = 1.
pub fn log_improper_likelihood(data: &[f64], psi: &MixtureParams, k: SetSize) -> Result<f64> {
    check_data(data, psi)?;
    if k.get() == 1 {
        return log_ns_likelihood(data, psi, k);
    }
    Ok(data.iter().map(|&x| log_improper_density(x, psi, k)).sum())
}

/// Complete-data factor of the latent pair (Z, V) summed over its support:
/// Σ_z Σ_v C(k−1, v) π^(z+v) (1−π)^(k−z−v) f₁^z f₂^(1−z) F₁^v F₂^(k−1−v), times k.
pub fn latent_pair_marginal(x: f64, psi: &MixtureParams, k: SetSize) -> f64 {
    let m = k.get() as i32 - 1;
    let (p, q) = (psi.pi, 1.0 - psi.pi);
    let (f1, f2) = (psi.comp1.pdf(x), psi.comp2.pdf(x));
    let (c1, c2) = (psi.comp1.cdf(x), psi.comp2.cdf(x));
    let mut total = 0.0;
    for z in 0..=1 {
        let head = if z == 1 { p * f1 } else { q * f2 };
        let mut binom = 1.0;
        for v in 0..=m {
            if v > 0 {
                binom *= (m - v + 1) as f64 / v as f64;
            }
            total += head * binom * (p * c1).powi(v) * (q * c2).powi(m - v);
        }
    }
    k.as_f64() * total
}

/// Marginal of the single-indicator augmentation: k[π^k f₁F₁^(k−1) + (1−π)^k f₂F₂^(k−1)].
pub fn single_indicator_marginal(x: f64, psi: &MixtureParams, k: SetSize) -> f64 {
    let m = k.get() as i32 - 1;
    let kf = k.as_f64();
    kf * (psi.pi.powi(m + 1) * psi.comp1.pdf(x) * psi.comp1.cdf(x).powi(m)
        + (1.0 - psi.pi).powi(m + 1) * psi.comp2.pdf(x) * psi.comp2.cdf(x).powi(m))
}
